"""Direct continuous-time Markov chain simulation (Gillespie's direct method).

Independent of the graphical representation: it works from the rate tables
alone and serves as a distributional cross-check.

Forward rates at a site x, with n2(x) the number of mature neighbours::

    0 -> 1  lam * n2      (contact mode: 0 -> 2)
    1 -> 2  gamma
    1 -> 0  1 + delta
    2 -> 0  1

Dual (on-off) rates::

    0 -> 1  lam * n2      (contact mode: 0 -> 2)
    1 -> 2  gamma
    2 -> 1  delta
    1, 2 -> 0  1

In contact mode the dual collapses 1 and 2 into a single active state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .configuration import Configuration
from .graph import FiniteGraph
from .graphical import Params, Trajectory

WHICH = ("forward", "dual")


@njit(cache=True)
def _site_transitions(s, n2, lam, gamma, delta, contact, dual):
    """Up to two enabled transitions at a site: ``(rate1, to1, rate2, to2)``."""
    if s == 0:
        return lam * n2, 2 if contact else 1, 0.0, 0
    if contact:
        return 1.0, 0, 0.0, 0
    if s == 1:
        if dual:
            return gamma, 2, 1.0, 0
        return gamma, 2, 1.0 + delta, 0
    if dual:
        return delta, 1, 1.0, 0
    return 1.0, 0, 0.0, 0


@njit(cache=True)
def _mature_counts(nbr, deg, state):
    n = state.size
    n2 = np.zeros(n, dtype=np.int64)
    for x in range(n):
        for k in range(deg[x]):
            if state[nbr[x, k]] == 2:
                n2[x] += 1
    return n2


@njit(cache=True)
def _site_rate(x, state, n2, lam, gamma, delta, contact, dual):
    r1, _, r2, _ = _site_transitions(state[x], n2[x], lam, gamma, delta, contact, dual)
    return r1 + r2


@njit(cache=True)
def _ctmc_run(nbr, deg, state, lam, gamma, delta, contact, dual, t_max, rng, record, debug):
    n = state.size
    n2 = _mature_counts(nbr, deg, state)
    rates = np.empty(n)
    for x in range(n):
        rates[x] = _site_rate(x, state, n2, lam, gamma, delta, contact, dual)
    cap = 64 if record else 1
    rec_t = np.empty(cap)
    rec_x = np.empty(cap, dtype=np.int64)
    rec_o = np.empty(cap, dtype=np.int8)
    rec_n = np.empty(cap, dtype=np.int8)
    m = 0
    t = 0.0
    absorbed = False
    while True:
        total = rates.sum()
        if total <= 0.0:
            absorbed = True
            break
        dt = rng.exponential(1.0) / total
        if t + dt > t_max:
            break
        t += dt
        u = rng.random() * total
        x = -1
        acc = 0.0
        prev = 0.0
        for y in range(n):
            if rates[y] > 0.0:
                x = y
                prev = acc
                acc += rates[y]
                if u < acc:
                    break
        acc = prev
        r1, to1, r2, to2 = _site_transitions(state[x], n2[x], lam, gamma, delta, contact, dual)
        new = to1 if (u - acc) < r1 or r2 == 0.0 else to2
        old = state[x]
        state[x] = new
        if old == 2 or new == 2:
            step = 1 if new == 2 else -1
            for k in range(deg[x]):
                y = nbr[x, k]
                n2[y] += step
                rates[y] = _site_rate(y, state, n2, lam, gamma, delta, contact, dual)
        rates[x] = _site_rate(x, state, n2, lam, gamma, delta, contact, dual)
        if debug:
            fresh = _mature_counts(nbr, deg, state)
            for y in range(n):
                if fresh[y] != n2[y]:
                    raise AssertionError("incremental mature-neighbour count diverged")
        if record:
            if m == rec_t.size:
                rec_t = np.concatenate((rec_t, np.empty(m)))
                rec_x = np.concatenate((rec_x, np.empty(m, dtype=np.int64)))
                rec_o = np.concatenate((rec_o, np.empty(m, dtype=np.int8)))
                rec_n = np.concatenate((rec_n, np.empty(m, dtype=np.int8)))
            rec_t[m] = t
            rec_x[m] = x
            rec_o[m] = old
            rec_n[m] = new
            m += 1
    return t, absorbed, rec_t[:m], rec_x[:m], rec_o[:m], rec_n[:m]


@njit(cache=True)
def _ctmc_batch(nbr, deg, init, lam, gamma, delta, contact, dual, t_max, reps, rng):
    finals = np.empty((reps, init.size), dtype=np.int8)
    ext = np.full(reps, np.nan)
    for r in range(reps):
        state = init.copy()
        t, absorbed, _, _, _, _ = _ctmc_run(nbr, deg, state, lam, gamma, delta, contact, dual,
                                            t_max, rng, False, False)
        finals[r] = state
        if absorbed:
            ext[r] = t
    return finals, ext


def _args(graph: FiniteGraph, params: Params, which: str):
    if which not in WHICH:
        raise ValueError(f"which must be one of {WHICH}, got {which!r}")
    return (float(params.lam), float(params.maturation_rate), float(params.delta),
            bool(params.contact_mode), which == "dual")


def _validate(graph: FiniteGraph, params: Params, c: Configuration) -> None:
    if len(c) != graph.n:
        raise ValueError("configuration length does not match the graph")
    if params.contact_mode and np.any(c.states == 1):
        raise ValueError("contact_mode configurations use states 0 and 2 only")


def transition_rates(graph: FiniteGraph, params: Params, c: Configuration, which: str = "forward"):
    """Enabled transitions as a list of ``(site, new_state, rate)`` with positive rate."""
    _validate(graph, params, c)
    lam, gamma, delta, contact, dual = _args(graph, params, which)
    n2 = _mature_counts(graph.neighbors, graph.degrees, c.states)
    out = []
    for x in range(graph.n):
        r1, to1, r2, to2 = _site_transitions(c.states[x], n2[x], lam, gamma, delta, contact, dual)
        if r1 > 0:
            out.append((x, int(to1), float(r1)))
        if r2 > 0:
            out.append((x, int(to2), float(r2)))
    return out


def total_rate(graph: FiniteGraph, params: Params, c: Configuration, which: str = "forward") -> float:
    return float(sum(r for _, _, r in transition_rates(graph, params, c, which)))


def step(graph: FiniteGraph, params: Params, c: Configuration, which: str, rng) -> tuple[float, Configuration]:
    """One jump: an exponential waiting time and the configuration after it."""
    trans = transition_rates(graph, params, c, which)
    rates = np.array([r for _, _, r in trans])
    total = rates.sum() if trans else 0.0
    if total <= 0:
        raise ValueError("step called on an absorbing configuration")
    wait = rng.exponential(1.0 / total)
    i = rng.choice(len(trans), p=rates / total)
    x, new, _ = trans[i]
    return float(wait), c.replace(x, new)


@dataclass(frozen=True)
class RunResult:
    final: Configuration
    extinction_time: float | None
    trajectory: Trajectory | None = None

    @property
    def absorbed(self) -> bool:
        return self.extinction_time is not None


def run(graph: FiniteGraph, params: Params, xi0: Configuration, which: str, t_max: float, rng,
        record: bool = False, debug: bool = False) -> RunResult:
    """Iterate jumps until absorption or until the next jump would pass ``t_max``.

    ``debug`` recomputes the mature-neighbour counts from scratch after every
    jump and fails loudly if the incremental bookkeeping drifted.
    """
    _validate(graph, params, xi0)
    state = xi0.states.copy()
    t, absorbed, rt, rx, ro, rn = _ctmc_run(graph.neighbors, graph.degrees, state,
                                            *_args(graph, params, which), float(t_max), rng,
                                            record, debug)
    final = Configuration(state)
    traj = Trajectory(xi0, final, rt.copy(), rx.copy(), ro.copy(), rn.copy(), which, float(t_max)) if record else None
    return RunResult(final, float(t) if absorbed else None, traj)


def batch_run(graph: FiniteGraph, params: Params, c0: Configuration, which: str, t_max: float,
              reps: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Final states (``reps x n``) and extinction times (NaN where not absorbed)."""
    _validate(graph, params, c0)
    return _ctmc_batch(graph.neighbors, graph.degrees, c0.states.copy(),
                       *_args(graph, params, which), float(t_max), int(reps), rng)
