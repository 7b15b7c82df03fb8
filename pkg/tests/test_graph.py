from __future__ import annotations

import numpy as np
import pytest

from twostage.graph import (GraphError, LatticeSpec, build_lattice, cycle_graph, from_adjacency,
                            half_line_sites, parse_adjacency, path_graph, read_adjacency, star_graph)


def test_box_path():
    g = build_lattice(LatticeSpec(1, 2, 1, "box"))
    assert g.n == 5
    assert g.max_degree == 2
    assert g.adjacency == ((1,), (0, 2), (1, 3), (2, 4), (3,))


def test_torus_cycle():
    g = build_lattice(LatticeSpec(1, 2, 1, "torus"))
    assert g.n == 5
    assert set(g.degrees.tolist()) == {2}
    assert g.adj(0) == (1, 4)


def test_torus_2d_moore():
    g = build_lattice(LatticeSpec(2, 3, 1, "torus"))
    assert g.n == 49
    assert set(g.degrees.tolist()) == {8}


def test_range_two_box():
    g = build_lattice(LatticeSpec(1, 3, 2, "box"))
    assert g.adj(g.center()) == (1, 2, 4, 5)
    assert g.max_degree == 4


def test_labels_row_major_and_center():
    g = build_lattice(LatticeSpec(2, 1, 1, "box"))
    assert g.labels[:3].tolist() == [[-1, -1], [-1, 0], [-1, 1]]
    assert g.labels[g.center()].tolist() == [0, 0]
    assert g.index_of((1, -1)) == 6


def test_single_site_lattice():
    g = build_lattice(LatticeSpec(1, 0, 1, "box"))
    assert g.n == 1
    assert g.max_degree == 0


def test_site_budget():
    with pytest.raises(GraphError):
        build_lattice(LatticeSpec(2, 100, 1, "box"), site_budget=1000)


@pytest.mark.parametrize("kwargs", [dict(dimension=0), dict(half_extent=-1), dict(range=0),
                                    dict(boundary="sphere")])
def test_spec_validation(kwargs):
    base = dict(dimension=1, half_extent=2, range=1, boundary="box")
    base.update(kwargs)
    with pytest.raises(GraphError):
        LatticeSpec(**base)


def test_from_adjacency_ok():
    g = from_adjacency([[1], [0]])
    assert g.n == 2
    assert g.max_degree == 1


def test_from_adjacency_self_loop():
    with pytest.raises(GraphError, match="self-loop"):
        from_adjacency([[1], [0, 1]])


def test_from_adjacency_asymmetric():
    with pytest.raises(GraphError, match="symmetric|asymmetric"):
        from_adjacency([[1], []])


def test_from_adjacency_out_of_range():
    with pytest.raises(GraphError):
        from_adjacency([[2], [0]])


def test_half_line():
    g = build_lattice(LatticeSpec(1, 2, 1, "box"))
    assert sorted(g.labels[half_line_sites(g)].ravel().tolist()) == [-2, -1, 0]
    g0 = build_lattice(LatticeSpec(1, 0, 1, "box"))
    assert list(half_line_sites(g0)) == [0]
    with pytest.raises(GraphError):
        half_line_sites(from_adjacency([[1], [0]]))


def test_small_builders():
    assert path_graph(3).adjacency == ((1,), (0, 2), (1,))
    assert cycle_graph(4).degrees.tolist() == [2, 2, 2, 2]
    s = star_graph(3)
    assert s.degrees.tolist() == [3, 1, 1, 1]


def test_directed_edges_both_ways():
    edges = path_graph(3).directed_edges()
    assert sorted(map(tuple, np.asarray(edges).tolist())) == [(0, 1), (1, 0), (1, 2), (2, 1)]


def test_text_round_trip(tmp_path):
    g = cycle_graph(5)
    path = tmp_path / "g.txt"
    path.write_text(g.to_text())
    assert read_adjacency(path).adjacency == g.adjacency
    assert parse_adjacency(g.to_text()).adjacency == g.adjacency


def test_sup_distance_and_boundary():
    g = build_lattice(LatticeSpec(1, 3, 1, "box"))
    assert g.sup_distance(g.center()).tolist() == [3, 2, 1, 0, 1, 2, 3]
    assert g.boundary_sites().tolist() == [True, False, False, False, False, False, True]
    t = build_lattice(LatticeSpec(1, 3, 1, "torus"))
    assert t.sup_distance(0).tolist() == [0, 1, 2, 3, 3, 2, 1]
    assert not t.boundary_sites().any()
