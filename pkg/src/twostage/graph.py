"""Finite graphs for the process: lattice boxes, tori and explicit adjacency lists."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_SITE_BUDGET = 2_000_000


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeSpec:
    """Sites are integer vectors in [-L, L]^d; neighbours lie within sup-norm distance r."""

    dimension: int = 1
    half_extent: int = 10
    range: int = 1
    boundary: str = "box"

    def __post_init__(self):
        if self.dimension < 1:
            raise GraphError("dimension must be >= 1")
        if self.half_extent < 0:
            raise GraphError("half_extent must be >= 0")
        if self.range < 1:
            raise GraphError("range must be >= 1")
        if self.boundary not in ("box", "torus"):
            raise GraphError(f"unknown boundary {self.boundary!r}; use 'box' or 'torus'")

    @property
    def side(self) -> int:
        return 2 * self.half_extent + 1

    def with_boundary(self, boundary: str) -> "LatticeSpec":
        return LatticeSpec(self.dimension, self.half_extent, self.range, boundary)


@dataclass(frozen=True, eq=False)
class FiniteGraph:
    """Immutable undirected graph on sites ``0..n-1``.

    ``labels`` holds integer coordinates (shape ``(n, d)``) for lattice-built
    graphs and is ``None`` otherwise.  ``neighbors`` is the adjacency padded
    with ``-1`` to width ``max_degree``; the simulation kernels read it.
    """

    adjacency: tuple[tuple[int, ...], ...]
    labels: np.ndarray | None = None
    lattice: LatticeSpec | None = None
    neighbors: np.ndarray = field(init=False, repr=False)
    degrees: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.adjacency)
        degrees = np.array([len(a) for a in self.adjacency], dtype=np.int64)
        width = int(degrees.max()) if n else 0
        nbrs = np.full((n, max(width, 1)), -1, dtype=np.int64)
        for x, adj in enumerate(self.adjacency):
            nbrs[x, : len(adj)] = adj
        nbrs.flags.writeable = False
        degrees.flags.writeable = False
        object.__setattr__(self, "neighbors", nbrs)
        object.__setattr__(self, "degrees", degrees)
        if self.labels is not None:
            self.labels.flags.writeable = False

    @property
    def n(self) -> int:
        return len(self.adjacency)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    def adj(self, x: int) -> tuple[int, ...]:
        return self.adjacency[x]

    def directed_edges(self) -> np.ndarray:
        """All ordered pairs ``(y, x)`` with ``x`` adjacent to ``y``, sorted by ``(y, x)``."""
        pairs = [(y, x) for y, adj in enumerate(self.adjacency) for x in adj]
        return np.array(pairs, dtype=np.int64).reshape(-1, 2)

    def index_of(self, coords: Sequence[int]) -> int:
        if self.lattice is None:
            raise GraphError("graph has no coordinate labels")
        return _row_major(tuple(coords), self.lattice)

    def center(self) -> int:
        """Site at the coordinate origin for lattices, site 0 otherwise."""
        if self.lattice is None:
            return 0
        return self.index_of((0,) * self.lattice.dimension)

    def sup_distance(self, x: int) -> np.ndarray:
        """Sup-norm distance from site ``x`` to every site (periodic on a torus)."""
        if self.labels is None:
            raise GraphError("graph has no coordinate labels")
        diff = np.abs(self.labels - self.labels[x])
        if self.lattice.boundary == "torus":
            diff = np.minimum(diff, self.lattice.side - diff)
        return diff.max(axis=1)

    def boundary_sites(self) -> np.ndarray:
        """Boolean mask of sites on the outer face of a box (all False on a torus)."""
        if self.labels is None:
            raise GraphError("graph has no coordinate labels")
        if self.lattice.boundary == "torus":
            return np.zeros(self.n, dtype=bool)
        return (np.abs(self.labels) == self.lattice.half_extent).any(axis=1)

    def to_text(self) -> str:
        lines = [f"n={self.n}"]
        lines += [" ".join(str(y) for y in adj) for adj in self.adjacency]
        return "\n".join(lines) + "\n"

    def describe(self) -> dict:
        out = {"n": self.n, "max_degree": self.max_degree}
        if self.lattice is not None:
            lat = self.lattice
            out.update(dimension=lat.dimension, half_extent=lat.half_extent,
                       range=lat.range, boundary=lat.boundary)
        return out


def _row_major(coords: tuple[int, ...], spec: LatticeSpec) -> int:
    idx = 0
    for c in coords:
        if not -spec.half_extent <= c <= spec.half_extent:
            raise GraphError(f"coordinate {coords} outside the lattice")
        idx = idx * spec.side + (c + spec.half_extent)
    return idx


def build_lattice(spec: LatticeSpec, site_budget: int = DEFAULT_SITE_BUDGET) -> FiniteGraph:
    """Lattice box or torus with the sup-norm neighbourhood ``0 < |y - x| <= r``.

    Sites are indexed row-major over coordinates, last coordinate fastest.
    """
    d, L, r, side = spec.dimension, spec.half_extent, spec.range, spec.side
    if d * side**d > site_budget:
        raise GraphError(f"lattice with {side}^{d} sites exceeds the site budget {site_budget}")
    torus = spec.boundary == "torus"
    if torus and r >= side:
        raise GraphError(f"range {r} wraps onto itself on a torus of side {side}")

    coords = np.array(list(itertools.product(range(-L, L + 1), repeat=d)), dtype=np.int64)
    offsets = [o for o in itertools.product(range(-r, r + 1), repeat=d) if any(o)]
    adjacency = []
    for x in coords:
        nbrs = set()
        for o in offsets:
            y = x + o
            if torus:
                y = (y + L) % side - L
            elif np.any(np.abs(y) > L):
                continue
            nbrs.add(_row_major(tuple(int(c) for c in y), spec))
        adjacency.append(tuple(sorted(nbrs)))
    return FiniteGraph(tuple(adjacency), labels=coords, lattice=spec)


def from_adjacency(lists: Sequence[Sequence[int]]) -> FiniteGraph:
    """Validate per-site neighbour lists and wrap them as a graph."""
    n = len(lists)
    adjacency = []
    for x, adj in enumerate(lists):
        adj = [int(y) for y in adj]
        if x in adj:
            raise GraphError(f"self-loop at site {x}")
        if len(set(adj)) != len(adj):
            raise GraphError(f"duplicate neighbour in the list of site {x}")
        for y in adj:
            if not 0 <= y < n:
                raise GraphError(f"site {x} lists out-of-range neighbour {y}")
        adjacency.append(tuple(sorted(adj)))
    for x, adj in enumerate(adjacency):
        for y in adj:
            if x not in adjacency[y]:
                raise GraphError(f"asymmetric adjacency: {x} lists {y} but {y} does not list {x}")
    return FiniteGraph(tuple(adjacency))


def parse_adjacency(text: str) -> FiniteGraph:
    lines = [ln.strip() for ln in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    if not lines or not lines[0].startswith("n="):
        raise GraphError("adjacency text must start with a header line 'n=<count>'")
    n = int(lines[0][2:])
    body = lines[1:]
    body += [""] * (n - len(body))
    if len(body) != n:
        raise GraphError(f"header declares {n} sites but {len(body)} lines follow")
    return from_adjacency([[int(tok) for tok in ln.split()] for ln in body])


def read_adjacency(path: str | Path) -> FiniteGraph:
    return parse_adjacency(Path(path).read_text())


def half_line_sites(graph: FiniteGraph) -> np.ndarray:
    """Indices of sites with coordinate <= 0 on a one-dimensional lattice."""
    if graph.labels is None:
        raise GraphError("graph has no coordinate labels")
    if graph.labels.shape[1] != 1:
        raise GraphError("half-line sites need a one-dimensional lattice")
    return np.flatnonzero(graph.labels[:, 0] <= 0)


def path_graph(n: int) -> FiniteGraph:
    return from_adjacency([[y for y in (x - 1, x + 1) if 0 <= y < n] for x in range(n)])


def cycle_graph(n: int) -> FiniteGraph:
    if n < 3:
        raise GraphError("a cycle needs at least 3 sites")
    return from_adjacency([[(x - 1) % n, (x + 1) % n] for x in range(n)])


def star_graph(leaves: int) -> FiniteGraph:
    """Site 0 is the centre, sites ``1..leaves`` hang off it."""
    return from_adjacency([list(range(1, leaves + 1))] + [[0] for _ in range(leaves)])
