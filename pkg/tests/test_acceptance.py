"""Acceptance checks at their stated sizes and tolerances.

Every check uses a master seed fixed before the run.  The criterion
number, verdict and the numbers behind it are listed in the terminal
summary.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from conftest import report
from twostage import ctmc
from twostage.checks import additivity_trials, coupling_trials
from twostage.cli import main
from twostage.configuration import Configuration
from twostage.estimators import (BisectionConfig, SurvivalSpec, branching_offspring_bound_check,
                                 complete_convergence_check, critical_lambda, duality_density_check,
                                 edge_speed, offspring_expectation_mc)
from twostage.graph import LatticeSpec, path_graph
from twostage.graphical import Params, batch_graphical

SEED = 20240601


def _csv_rows(path):
    return [l for l in path.read_text().splitlines() if not l.startswith("#")]


# 1 ---------------------------------------------------------------------------

def test_duality_exactness(tmp_path, capsys):
    start = time.perf_counter()
    rc = main(["--seed", str(SEED), "duality-test", "--trials", "10000", "--horizon", "2",
               "--out", str(tmp_path)])
    elapsed = time.perf_counter() - start
    out = capsys.readouterr().out
    ok = rc == 0 and "violations: 0" in out and elapsed < 60
    report(1, ok, f"10^4 trials, {out.strip()}, exit {rc}, {elapsed:.1f} s")
    assert "violations: 0" in out
    assert rc == 0
    assert elapsed < 60


# 2 ---------------------------------------------------------------------------

@pytest.mark.parametrize("dual", [False, True], ids=["forward", "dual"])
def test_additivity_and_attractiveness(dual):
    add, order = additivity_trials(10_000, SEED, dual=dual)
    ok = add.violations == 0 and order.violations == 0
    report(2, ok, f"{'dual' if dual else 'forward'}: additivity {add.violations}/{add.trials}, "
                  f"order {order.violations}/{order.trials} violations")
    assert add.violations == 0
    assert order.violations == 0


# 3 ---------------------------------------------------------------------------

@pytest.mark.parametrize("which", ["lambda", "gamma", "delta"])
def test_monotone_coupling(which):
    fwd = coupling_trials(2000, SEED, which, dual=False)
    dual = coupling_trials(2000, SEED, which, dual=True)
    ok = fwd.violations == 0 and dual.violations == 0
    report(3, ok, f"{which} up: forward {fwd.violations}/2000, dual {dual.violations}/2000 violations")
    assert fwd.violations == 0
    assert dual.violations == 0


# 4 ---------------------------------------------------------------------------

ORACLE_CASES = [
    (Params(1.0, 1.0, 0.0), "210"),
    (Params(2.0, 0.5, 1.0), "210"),
    (Params(0.5, 3.0, 0.2), "021"),
    (Params(4.0, 2.0, 1.5), "102"),
    (Params(3.0, 0.0, 0.7), "222"),
    (Params.contact(2.5, 0.5), "202"),
]


@pytest.mark.parametrize("which", ["forward", "dual"])
def test_oracle_equivalence(which):
    g = path_graph(3)
    n = 100_000
    worst = 0.0
    failures = []
    for i, (params, init) in enumerate(ORACLE_CASES):
        c0 = Configuration(init)
        rng_g = np.random.default_rng(np.random.SeedSequence(SEED, spawn_key=(4, i, 0)))
        rng_c = np.random.default_rng(np.random.SeedSequence(SEED, spawn_key=(4, i, 1)))
        graphical = batch_graphical(g, params, c0, 1.0, n, rng_g, dual=which == "dual")
        oracle, _ = ctmc.batch_run(g, params, c0, which, 1.0, n, rng_c)
        for site in range(3):
            for s in (0, 1, 2):
                p = float(np.mean(graphical[:, site] == s))
                q = float(np.mean(oracle[:, site] == s))
                sigma = math.sqrt((p * (1 - p) + q * (1 - q)) / n)
                z = abs(p - q) / sigma if sigma > 0 else (0.0 if p == q else math.inf)
                worst = max(worst, z)
                if z > 3:
                    failures.append((i, site, s, p, q, round(z, 2)))
    report(4, not failures, f"{which}: {len(ORACLE_CASES)} parameter sets x 9 cells, "
                            f"max |diff|/sigma = {worst:.2f}, cells over 3 sigma: {failures}")
    assert not failures


# 5 ---------------------------------------------------------------------------

def test_gamma_star_bound(tmp_path):
    rc = main(["--seed", str(SEED), "survival", "--lambda", "50", "--gamma", "0.25", "--delta", "0",
               "-L", "50", "--t-max", "50", "--replicates", "1000", "--out", str(tmp_path)])
    header, row = _csv_rows(tmp_path / "survival.csv")
    frac = float(dict(zip(header.split(","), row.split(",")))["survival_mean"])
    ok = rc == 0 and frac <= 0.01
    report(5, ok, f"lambda=50, gamma=0.25: surviving fraction {frac:.4f} (limit 0.01)")
    assert rc == 0
    assert frac <= 0.01


# 6 ---------------------------------------------------------------------------

def test_offspring_identity():
    res = offspring_expectation_mc(100_000, SEED)
    m, p0 = res.mean.mean, res.p_zero.mean
    ok = 0.98 <= m <= 1.02 and abs(p0 - 0.5) <= 0.01
    report(6, ok, f"mean {m:.4f} (window [0.98, 1.02]), P(N=0) {p0:.4f} (window 0.5 +- 0.01)")
    assert 0.98 <= m <= 1.02
    assert abs(p0 - 0.5) <= 0.01


# 7 ---------------------------------------------------------------------------

def test_maturation_probability():
    n = 100_000
    res = branching_offspring_bound_check(Params(1.0, 1.0, 0.0), 2, n, SEED)
    sigma = math.sqrt(0.25 / n)
    frac = res.maturation.mean
    ok = abs(frac - 0.5) <= 3 * sigma
    report(7, ok, f"maturation fraction {frac:.4f}, target 0.5 +- {3 * sigma:.4f}")
    assert abs(frac - 0.5) <= 3 * sigma


# 8 ---------------------------------------------------------------------------

def test_edge_speed_sign():
    fast = edge_speed(Params(10.0, 10.0, 0.0), 200, 100.0, 1000, SEED, level=0.99)
    slow = edge_speed(Params(0.3, 10.0, 0.0), 200, 100.0, 1000, SEED + 1, level=0.99)
    a, b = fast.speed, slow.speed
    ok = a.mean > 0 and a.ci_low > 0 and b.mean < 0 and b.ci_high < 0
    report(8, ok, f"lambda=10: alpha {a.mean:.4f} CI [{a.ci_low:.4f}, {a.ci_high:.4f}] "
                  f"(truncated {fast.truncated_fraction:.3f}); lambda=0.3: alpha {b.mean:.4f} "
                  f"CI [{b.ci_low:.4f}, {b.ci_high:.4f}]")
    assert a.mean > 0 and a.ci_low > 0
    assert b.mean < 0 and b.ci_high < 0


# 9 ---------------------------------------------------------------------------

def test_critical_value_ordering():
    spec = SurvivalSpec(LatticeSpec(1, 100, 1, "box"), t_max=200.0)
    cfg = BisectionConfig(theta=0.05)
    brackets = {}
    for label, gamma in (("gamma=1", 1.0), ("gamma=4", 4.0), ("contact", math.inf)):
        brackets[label] = critical_lambda(gamma, 0.0, spec, cfg, SEED)
    b1, b4, bc = brackets["gamma=1"], brackets["gamma=4"], brackets["contact"]
    ordered = (b1.lam_lo >= b4.lam_lo >= bc.lam_lo) and (b1.lam_hi >= b4.lam_hi >= bc.lam_hi)
    disjoint = b1.lam_lo >= b4.lam_hi and b4.lam_lo >= bc.lam_hi
    text = ", ".join(f"{k} [{b.lam_lo:.3f}, {b.lam_hi:.3f}]" for k, b in brackets.items())
    report(9, ordered, f"{text}; ordered {ordered}, non-overlapping {disjoint}")
    assert ordered


# 10 --------------------------------------------------------------------------

def test_duality_density_identity():
    params = Params(4.0, 4.0, 0.0)
    density = SurvivalSpec(LatticeSpec(1, 100, 1, "torus"), t_max=100.0, replicates=10_000,
                           initial="all_mature")
    survival = SurvivalSpec(LatticeSpec(1, 100, 1, "box"), t_max=100.0, replicates=10_000)
    rep = duality_density_check(params, density, survival, SEED)
    ok = rep.agree and rep.exchanged_agree
    report(10, ok, f"forward density {rep.forward_density.mean:.4f} vs dual survival "
                   f"{rep.dual_survival.mean:.4f} (3 sigma {3 * rep.sigma:.4f}); dual density "
                   f"{rep.dual_density.mean:.4f} vs forward survival {rep.forward_survival.mean:.4f} "
                   f"(3 sigma {3 * rep.exchanged_sigma:.4f})")
    assert abs(rep.forward_density.mean - rep.dual_survival.mean) <= 3 * rep.sigma
    assert abs(rep.dual_density.mean - rep.forward_survival.mean) <= 3 * rep.exchanged_sigma


# 11 --------------------------------------------------------------------------

def test_complete_convergence():
    params = Params(4.0, 4.0, 0.0)
    survival = SurvivalSpec(LatticeSpec(1, 100, 1, "box"), t_max=100.0, replicates=10_000)
    density = SurvivalSpec(LatticeSpec(1, 100, 1, "torus"), t_max=100.0, replicates=10_000,
                           initial="all_mature")
    rep = complete_convergence_check(params, survival, density, SEED)
    report(11, rep.passes, f"p {rep.p.mean:.4f}, s {rep.s.mean:.4f}, nu {rep.nu.mean:.4f}, "
                           f"|p - s nu| {abs(rep.discrepancy):.4f}, 3 sigma {3 * rep.sigma:.4f}")
    assert abs(rep.discrepancy) <= 3 * rep.sigma


# 12 --------------------------------------------------------------------------

REPRO_COMMANDS = {
    "duality-test": ["duality-test", "--trials", "10000"],
    "survival": ["survival", "--lambda", "50", "--gamma", "0.25", "--delta", "0", "-L", "50",
                 "--t-max", "50", "--replicates", "1000"],
    "offspring": ["offspring", "--offspring-replicates", "100000", "--gamma", "1"],
    "phase-diagram": ["phase-diagram", "-L", "20", "--t-max", "20", "--replicates", "300"],
}


@pytest.mark.parametrize("name", list(REPRO_COMMANDS))
def test_reproducible_csv(tmp_path, name):
    outputs = {}
    for workers in (1, 4, 8):
        out = tmp_path / f"w{workers}"
        rc = main(["--seed", str(SEED), "--workers", str(workers), "--out", str(out)] + REPRO_COMMANDS[name])
        assert rc == 0
        outputs[workers] = (out / f"{name}.csv").read_bytes()
    same = outputs[1] == outputs[4] == outputs[8]
    report(12, same, f"{name}: CSV byte-identical for workers 1, 4, 8: {same}")
    assert same
