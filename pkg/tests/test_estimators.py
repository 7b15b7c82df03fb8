from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from twostage.estimators import (BisectionConfig, NoSurvivalError, SurvivalSpec,
                                 branching_offspring_bound_check, cluster_width, complete_convergence_check,
                                 critical_lambda, duality_density_check, edge_speed, gamma_lower_bound,
                                 offspring_expectation_mc, phase_diagram, survival_probability, upper_density)
from twostage.graph import LatticeSpec
from twostage.graphical import Params
from twostage.montecarlo import chunk_seeds, mean_estimate, proportion, run_chunks, sub_seed

SMALL = SurvivalSpec(LatticeSpec(1, 20, 1, "box"), t_max=20.0, replicates=400)
TORUS = SMALL.replace(lattice=LatticeSpec(1, 20, 1, "torus"), initial="all_mature")


# --- bookkeeping --------------------------------------------------------------

def test_chunk_seeds_cover_range():
    chunks = chunk_seeds(7, "x", 1001, 250)
    assert [(a, b) for a, b, _ in chunks] == [(0, 250), (250, 500), (500, 750), (750, 1000), (1000, 1001)]


def _draw(reps, ss):
    return np.random.default_rng(ss).random(reps)


def test_run_chunks_independent_of_workers():
    one = np.concatenate(run_chunks(_draw, 1000, 3, "t", workers=1))
    two = np.concatenate(run_chunks(_draw, 1000, 3, "t", workers=2))
    np.testing.assert_array_equal(one, two)
    assert sub_seed(3, "a") != sub_seed(3, "b")


def test_proportion_and_mean():
    est = proportion(0, 100)
    assert est.mean == 0.0 and est.ci_low == 0.0 and est.ci_high > 0
    est = proportion(50, 100)
    assert est.std_error == pytest.approx(0.05)
    assert est.ci_low < 0.5 < est.ci_high
    m = mean_estimate([1.0, 2.0, 3.0])
    assert m.mean == 2.0 and m.std_error == pytest.approx(1 / math.sqrt(3))


# --- survival and the gamma bound ---------------------------------------------------

def test_gamma_lower_bound():
    assert gamma_lower_bound(2) == Fraction(1, 3)
    assert gamma_lower_bound(4) == Fraction(1, 7)
    assert gamma_lower_bound(1) == 1


def test_survival_lambda_zero():
    est = survival_probability(SMALL, Params(0.0, 2.0, 0.0), 1)
    assert est.mean == 0.0 and est.std_error == 0.0


def test_survival_sterile():
    spec = SurvivalSpec(LatticeSpec(1, 50, 1, "box"), t_max=200.0, replicates=1000)
    est = survival_probability(spec, Params(5.0, 0.0, 0.0), 2)
    assert not est.excludes(0.0)


def test_survival_deterministic_across_workers():
    p = Params(3.0, 4.0, 0.0)
    spec = SMALL.replace(replicates=1000)
    assert survival_probability(spec, p, 9, workers=1) == survival_probability(spec, p, 9, workers=2)


def test_survival_monotone_in_lambda():
    ests = [survival_probability(SMALL, Params(lam, 4.0, 0.0), 5).mean for lam in (1.0, 3.0, 6.0)]
    assert ests[0] <= ests[1] <= ests[2]


def test_initial_selectors():
    g = SMALL.graph()
    assert int(SMALL.replace(initial="half_line").initial_configuration(g).states.sum()) == 2 * 21
    with pytest.raises(ValueError):
        SMALL.replace(initial="bogus").initial_configuration(g)
    with pytest.raises(ValueError):
        SMALL.replace(t_max=0.0)


# --- offspring -------------------------------------------------------------

def test_offspring_identity_small():
    res = offspring_expectation_mc(20_000, 3)
    assert abs(res.mean.mean - 1.0) <= 3 * math.sqrt(2 / 20_000)
    assert abs(res.p_zero.mean - 0.5) <= 3 * math.sqrt(0.25 / 20_000)


def test_branching_bound():
    res = branching_offspring_bound_check(Params(5.0, 1.0, 0.0), 2, 20_000, 4)
    assert res.bound == pytest.approx(2.0)
    assert res.offspring.mean <= res.bound + 3 * res.offspring.std_error
    assert res.within_bound
    assert abs(res.maturation.mean - 0.5) <= 3 * res.maturation.std_error


def test_branching_bound_gamma_zero():
    res = branching_offspring_bound_check(Params(5.0, 0.0, 0.0), 2, 2000, 4)
    assert res.bound == 0.0
    assert res.offspring.mean == 0.0 and res.maturation.mean == 0.0


# --- critical value --------------------------------------------------------------

def test_critical_no_survival_below_gamma_bound():
    cfg = BisectionConfig(replicates=200, max_replicates=200, lam_ceiling=20.0)
    with pytest.raises(NoSurvivalError):
        critical_lambda(0.2, 0.0, SurvivalSpec(LatticeSpec(1, 30, 1, "box"), t_max=30.0), cfg, 1)


def test_critical_bracket_contract():
    cfg = BisectionConfig(replicates=200, max_replicates=800, tol=0.2)
    spec = SurvivalSpec(LatticeSpec(1, 30, 1, "box"), t_max=30.0)
    br = critical_lambda(math.inf, 0.0, spec, cfg, 2)
    assert br.lam_lo < br.lam_hi
    assert br.est_hi.ci_low > cfg.theta
    if br.est_lo is not None:
        assert br.est_lo.ci_high < cfg.theta
    assert br.converged == (br.width <= cfg.tol)


# --- edge speed and clusters ---------------------------------------------------

def test_edge_speed_lambda_zero_negative():
    res = edge_speed(Params(0.0, 1.0, 0.0), 30, 10.0, 200, 1)
    assert res.speed.mean < 0 and res.speed.ci_high < 0


def test_edge_speed_symmetry():
    p = Params(6.0, 6.0, 0.0)
    right = edge_speed(p, 60, 10.0, 300, 1, side="right")
    left = edge_speed(p, 60, 10.0, 300, 2, side="left")
    sigma = math.hypot(right.speed.std_error, left.speed.std_error)
    # the left edge moves the other way: l_t / t tends to minus the right-edge speed
    assert abs(right.speed.mean + left.speed.mean) <= 3 * sigma


def test_cluster_width_lambda_zero():
    stats = cluster_width(Params(0.0, 1.0, 0.0), 10, 50.0, 200, 1)
    assert np.all(stats.widths == 0)
    assert stats.truncation_fraction == 0.0


def test_cluster_width_subcritical():
    stats = cluster_width(Params(0.5, 4.0, 0.0), 100, 200.0, 1000, 3)
    assert stats.truncation_fraction < 0.01
    assert stats.mean_width.mean < 5


# --- densities --------------------------------------------------------------

def test_density_lambda_zero():
    spec = TORUS.replace(t_max=10.0, replicates=2000)
    res = upper_density(Params(0.0, 1.0, 0.0), spec, 1)
    # the origin's initial 2 survives with probability e^-10
    assert res.active.mean <= 0.005


def test_density_nonincreasing_in_time():
    p = Params(4.0, 4.0, 0.0)
    short = upper_density(p, TORUS.replace(t_max=2.0, replicates=2000), 1).active
    long = upper_density(p, TORUS.replace(t_max=20.0, replicates=2000), 2).active
    assert long.mean <= short.mean + 3 * math.hypot(short.std_error, long.std_error)


def test_duality_density_lambda_zero():
    rep = duality_density_check(Params(0.0, 1.0, 0.0), TORUS, SMALL, 1)
    assert rep.forward_density.mean == rep.dual_survival.mean == 0.0
    assert rep.agree and rep.exchanged_agree


def test_convergence_lambda_zero():
    rep = complete_convergence_check(Params(0.0, 1.0, 0.0), SMALL, TORUS, 1)
    assert rep.p.mean == rep.s.mean == rep.nu.mean == 0.0
    assert rep.passes


def test_convergence_subcritical():
    rep = complete_convergence_check(Params(0.5, 4.0, 0.0), SMALL, TORUS, 1)
    assert rep.p.mean == rep.s.mean == 0.0
    assert rep.nu.mean <= 0.01


# --- phase diagram --------------------------------------------------------------

def test_phase_diagram_shape_and_row():
    lams, gammas = [1.0, 3.0, 5.0], [0.2, 4.0]
    pts = phase_diagram(0.0, lams, gammas, SMALL, TORUS, 1)
    assert [(p.gamma, p.lam) for p in pts] == [(g, l) for g in gammas for l in lams]
    assert all(p.survival.mean <= 0.05 for p in pts if p.gamma == 0.2)
    row = [p.survival for p in pts if p.gamma == 4.0]
    for a, b in zip(row, row[1:]):
        assert b.mean >= a.mean - 3 * math.hypot(a.std_error, b.std_error)
