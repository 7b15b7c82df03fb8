"""Randomised pathwise checks on small graphs: duality, additivity, monotone couplings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .configuration import Configuration, compatible, join, leq
from .graph import FiniteGraph, cycle_graph, path_graph, star_graph
from .graphical import Params, coupled_pair, evolve_dual, evolve_forward, sample_events


@dataclass(frozen=True)
class TrialCounts:
    trials: int
    violations: int
    examples: tuple = ()


def random_small_graph(rng: np.random.Generator, max_sites: int = 5) -> FiniteGraph:
    """A path, cycle or star on at most ``max_sites`` sites."""
    n = int(rng.integers(1, max_sites + 1))
    kind = int(rng.integers(3))
    if n >= 3 and kind == 1:
        return cycle_graph(n)
    if n >= 2 and kind == 2:
        return star_graph(n - 1)
    return path_graph(n)


def random_params(rng: np.random.Generator) -> Params:
    return Params(float(rng.uniform(0, 5)), float(rng.uniform(0, 5)), float(rng.uniform(0, 2)))


def random_configuration(rng: np.random.Generator, n: int, contact: bool = False) -> Configuration:
    if contact:
        return Configuration(2 * rng.integers(0, 2, n))
    return Configuration(rng.integers(0, 3, n))


def duality_trials(trials: int, seed: int, horizon: float = 2.0, max_sites: int = 5,
                   keep: int = 5) -> TrialCounts:
    """Count event sets where ``xi_t ~ zeta_0`` and ``zeta_t ~ xi_0`` disagree."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(11,)))
    bad = []
    violations = 0
    for _ in range(trials):
        graph = random_small_graph(rng, max_sites)
        params = random_params(rng)
        events = sample_events(graph, params, horizon, rng)
        t = float(rng.uniform(0, horizon))
        xi0 = random_configuration(rng, graph.n)
        zeta0 = random_configuration(rng, graph.n)
        lhs = compatible(evolve_forward(xi0, events, t).final, zeta0)
        rhs = compatible(xi0, evolve_dual(zeta0, events, t).final)
        if lhs != rhs:
            violations += 1
            if len(bad) < keep:
                bad.append((graph.adjacency, params, str(xi0), str(zeta0), t))
    return TrialCounts(trials, violations, tuple(bad))


def additivity_trials(trials: int, seed: int, dual: bool = False, horizon: float = 2.0,
                      max_sites: int = 5) -> tuple[TrialCounts, TrialCounts]:
    """Violations of ``E(a v b) = E(a) v E(b)`` and of order preservation on shared events."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(12, int(dual))))
    evolve = evolve_dual if dual else evolve_forward
    add_bad = order_bad = 0
    for _ in range(trials):
        graph = random_small_graph(rng, max_sites)
        events = sample_events(graph, random_params(rng), horizon, rng)
        t = float(rng.uniform(0, horizon))
        a = random_configuration(rng, graph.n)
        b = random_configuration(rng, graph.n)
        fa, fb = evolve(a, events, t).final, evolve(b, events, t).final
        fab = evolve(join(a, b), events, t).final
        add_bad += fab != join(fa, fb)
        # a <= a v b, so the image of a must stay below the image of a v b
        order_bad += not leq(fa, fab)
    return TrialCounts(trials, add_bad), TrialCounts(trials, order_bad)


def coupling_trials(trials: int, seed: int, which: str, dual: bool = False, horizon: float = 2.0,
                    max_sites: int = 5) -> TrialCounts:
    """Superposition couplings: more transmission or maturation events give larger
    configurations, more juvenile deaths smaller ones (for the dual as well)."""
    if which not in ("lambda", "gamma", "delta"):
        raise ValueError("which must be 'lambda', 'gamma' or 'delta'")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(13, int(dual), len(which))))
    evolve = evolve_dual if dual else evolve_forward
    bad = 0
    for _ in range(trials):
        graph = random_small_graph(rng, max_sites)
        low = random_params(rng)
        bump = float(rng.uniform(0, 3))
        key = {"lambda": "lam"}.get(which, which)
        high = low.replace(**{key: getattr(low, key) + bump})
        ev_low, ev_high = coupled_pair(graph, low, high, horizon, int(rng.integers(2**63)))
        t = float(rng.uniform(0, horizon))
        c0 = random_configuration(rng, graph.n)
        f_low = evolve(c0, ev_low, t).final
        f_high = evolve(c0, ev_high, t).final
        ok = leq(f_high, f_low) if which == "delta" else leq(f_low, f_high)
        bad += not ok
    return TrialCounts(trials, bad)
