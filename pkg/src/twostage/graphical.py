"""Graphical representation: Poisson event streams on a finite spacetime graph.

The forward process runs up through the sampled events; the dual on-off
process reads the same events backwards from time ``t`` to 0.  Event kinds:

    DEATH           rate 1 per site, kills 1's and 2's
    JUVENILE_DEATH  rate delta per site, kills 1's only
    MATURATION      rate gamma per site, turns a 1 into a 2
    TRANSMISSION    rate lambda per directed edge (y -> x)

Besides the materialised :class:`EventSet` path there is an active-set fast
path (:func:`simulate_active` and :func:`batch_active`) that only generates
events on streams attached to currently active sites.  Streams elsewhere
cannot change the state, so the two paths have the same law; the fast path
is what the Monte Carlo estimators use on large lattices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterator

import numpy as np
from numba import njit

from .configuration import Configuration, compatible
from .graph import FiniteGraph

DEATH, JUVENILE_DEATH, MATURATION, TRANSMISSION = 0, 1, 2, 3
KIND_NAMES = ("death", "juvenile_death", "maturation", "transmission")

DEFAULT_EVENT_CAP = 50_000_000


@dataclass(frozen=True)
class Params:
    """Transmission rate ``lam``, maturation rate ``gamma``, extra juvenile death rate ``delta``.

    ``gamma = inf`` (equivalently ``contact_mode=True``) is the classical
    contact process: births produce mature sites directly.
    """

    lam: float
    gamma: float
    delta: float = 0.0
    contact_mode: bool = False

    def __post_init__(self):
        if self.contact_mode and math.isfinite(self.gamma):
            raise ValueError("contact_mode excludes a finite gamma")
        if math.isinf(self.gamma):
            object.__setattr__(self, "contact_mode", True)
        for name in ("lam", "delta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")
        if math.isnan(self.gamma) or self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")

    @classmethod
    def contact(cls, lam: float, delta: float = 0.0) -> "Params":
        return cls(lam, math.inf, delta)

    @property
    def maturation_rate(self) -> float:
        return 0.0 if self.contact_mode else self.gamma

    def replace(self, **kw) -> "Params":
        cur = {"lam": self.lam, "gamma": self.gamma, "delta": self.delta}
        cur.update(kw)
        return Params(**cur)

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "gamma": "inf" if self.contact_mode else self.gamma,
                "delta": self.delta, "contact_mode": self.contact_mode}


def _check_contact_states(params: Params, c: Configuration) -> None:
    if params.contact_mode and np.any(c.states == 1):
        raise ValueError("contact_mode configurations use states 0 and 2 only")


# --------------------------------------------------------------------------
# Event sets


@dataclass(frozen=True, eq=False)
class EventSet:
    """Sampled events on ``(0, horizon)``, globally sorted.

    Ties in time are broken by (kind, stream index); within the arrays the
    order is the replay order.  For TRANSMISSION events ``site`` is the
    receiving site x and ``source`` the transmitting site y; for the other
    kinds ``source`` is -1.
    """

    horizon: float
    params: Params
    n_sites: int
    times: np.ndarray
    kinds: np.ndarray
    sites: np.ndarray
    sources: np.ndarray
    seed: object = None

    def __post_init__(self):
        for arr in (self.times, self.kinds, self.sites, self.sources):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return self.times.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventSet):
            return NotImplemented
        return (self.horizon == other.horizon and self.params == other.params
                and all(np.array_equal(a, b) for a, b in zip(self._arrays(), other._arrays())))

    def _arrays(self):
        return self.times, self.kinds, self.sites, self.sources

    def stream(self, kind: int, site: int, source: int = -1) -> np.ndarray:
        """Event times of one stream; transmission streams are keyed by ``(source, site)``."""
        mask = (self.kinds == kind) & (self.sites == site)
        if kind == TRANSMISSION:
            mask &= self.sources == source
        return self.times[mask]

    def counts(self) -> dict[str, int]:
        return {name: int(np.sum(self.kinds == k)) for k, name in enumerate(KIND_NAMES)}

    def restricted(self, t: float) -> "EventSet":
        keep = self.times <= t
        return EventSet(t, self.params, self.n_sites, self.times[keep], self.kinds[keep],
                        self.sites[keep], self.sources[keep], self.seed)


def expected_event_count(graph: FiniteGraph, params: Params, T: float) -> float:
    per_site = 1.0 + params.delta + params.maturation_rate
    return T * (graph.n * per_site + int(graph.degrees.sum()) * params.lam)


@njit(cache=True)
def _sample_streams(rng, n, esrc, edst, lam, gamma, delta, T):
    n_edges = esrc.size
    rates = (1.0, delta, gamma)
    n_streams = 3 * n + n_edges
    counts = np.zeros(n_streams, dtype=np.int64)
    for k in range(3):
        if rates[k] > 0.0:
            for x in range(n):
                counts[k * n + x] = rng.poisson(rates[k] * T)
    if lam > 0.0:
        for e in range(n_edges):
            counts[3 * n + e] = rng.poisson(lam * T)
    total = counts.sum()
    times = np.empty(total)
    kinds = np.empty(total, dtype=np.int8)
    sites = np.empty(total, dtype=np.int64)
    sources = np.empty(total, dtype=np.int64)
    j = 0
    for s in range(n_streams):
        if s < 3 * n:
            kind = s // n
            site = s % n
            src = -1
        else:
            kind = 3
            site = edst[s - 3 * n]
            src = esrc[s - 3 * n]
        for _ in range(counts[s]):
            u = rng.random()
            while u == 0.0:
                u = rng.random()
            times[j] = u * T
            kinds[j] = kind
            sites[j] = site
            sources[j] = src
            j += 1
    order = np.argsort(times, kind="mergesort")
    return times[order], kinds[order], sites[order], sources[order]


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_events(graph: FiniteGraph, params: Params, T: float, seed,
                  event_cap: float = DEFAULT_EVENT_CAP) -> EventSet:
    """Independent Poisson streams per site and per directed edge on ``(0, T)``.

    A deterministic function of ``(graph, params, T, seed)``.
    """
    if not T > 0:
        raise ValueError("horizon T must be positive")
    expected = expected_event_count(graph, params, T)
    if expected > event_cap:
        raise ValueError(f"expected {expected:.3g} events exceeds the cap {event_cap:.3g}")
    edges = graph.directed_edges()
    rng = _as_generator(seed)
    times, kinds, sites, sources = _sample_streams(
        rng, graph.n, edges[:, 0].copy(), edges[:, 1].copy(),
        float(params.lam), float(params.maturation_rate), float(params.delta), float(T))
    return EventSet(float(T), params, graph.n, times, kinds, sites, sources,
                    seed if not isinstance(seed, np.random.Generator) else None)


def superpose(base: EventSet, extra: EventSet, params: Params) -> EventSet:
    """Union of two event sets on the same graph and horizon, relabelled with ``params``."""
    if base.n_sites != extra.n_sites or base.horizon != extra.horizon:
        raise ValueError("event sets live on different graphs or horizons")
    times = np.concatenate([base.times, extra.times])
    kinds = np.concatenate([base.kinds, extra.kinds])
    sites = np.concatenate([base.sites, extra.sites])
    sources = np.concatenate([base.sources, extra.sources])
    order = np.lexsort((sites, sources, kinds, times))
    return EventSet(base.horizon, params, base.n_sites, times[order], kinds[order],
                    sites[order], sources[order], (base.seed, extra.seed))


def coupled_pair(graph: FiniteGraph, low: Params, high: Params, T: float, seed) -> tuple[EventSet, EventSet]:
    """Event sets for ``low`` and ``high`` where the second contains the first.

    ``high`` must dominate ``low`` in each of lambda, gamma and delta; the
    surplus rates are sampled as extra streams and superposed.
    """
    if low.contact_mode or high.contact_mode:
        raise ValueError("coupling is defined for finite gamma")
    diff = Params(high.lam - low.lam, high.gamma - low.gamma, high.delta - low.delta)
    ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    s_base, s_extra = ss.spawn(2)
    base = sample_events(graph, low, T, np.random.default_rng(s_base))
    extra = _sample_optional(graph, diff, T, np.random.default_rng(s_extra))
    return base, superpose(base, extra, high)


def _sample_optional(graph, params, T, rng):
    # zero-rate params still produce the rate-1 deaths; drop them for the surplus
    ev = sample_events(graph, params, T, rng)
    keep = ev.kinds != DEATH
    return EventSet(T, params, graph.n, ev.times[keep], ev.kinds[keep], ev.sites[keep],
                    ev.sources[keep], None)


# --------------------------------------------------------------------------
# Evolution over a materialised event set


@njit(cache=True)
def _evolve_forward(state, times, kinds, sites, sources, t, contact, rec_t, rec_x, rec_old, rec_new):
    m = 0
    birth = 2 if contact else 1
    for i in range(times.size):
        if times[i] > t:
            break
        k = kinds[i]
        x = sites[i]
        old = state[x]
        new = old
        if k == 0:
            new = 0
        elif k == 1:
            if old == 1:
                new = 0
        elif k == 2:
            if old == 1:
                new = 2
        else:
            if old == 0 and state[sources[i]] == 2:
                new = birth
        if new != old:
            state[x] = new
            rec_t[m] = times[i]
            rec_x[m] = x
            rec_old[m] = old
            rec_new[m] = new
            m += 1
    return m


@njit(cache=True)
def _evolve_dual(state, times, kinds, sites, sources, t, contact, rec_t, rec_x, rec_old, rec_new):
    m = 0
    last = times.size - 1
    while last >= 0 and times[last] > t:
        last -= 1
    for i in range(last, -1, -1):
        k = kinds[i]
        x = sites[i]
        target = x
        old = state[x]
        new = old
        if k == 0:
            new = 0
        elif k == 1:
            if old == 2 and not contact:
                new = 1
        elif k == 2:
            if old == 1:
                new = 2
        else:
            # forward y -> x becomes dual x -> y
            if old == 2:
                target = sources[i]
                old = state[target]
                if contact:
                    new = 2
                else:
                    new = max(old, 1)
        if new != old:
            state[target] = new
            rec_t[m] = t - times[i]
            rec_x[m] = target
            rec_old[m] = old
            rec_new[m] = new
            m += 1
    return m


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Applied changes, in order, from ``initial`` to ``final``.

    For a dual trajectory the recorded times are dual times ``s = t - u``,
    where ``u`` is the forward timestamp of the event.
    """

    initial: Configuration
    final: Configuration
    times: np.ndarray
    sites: np.ndarray
    old: np.ndarray
    new: np.ndarray
    direction: str = "forward"
    t: float = 0.0

    def __len__(self) -> int:
        return self.times.size

    def changes(self) -> Iterator[tuple[float, int, int, int]]:
        for t, x, a, b in zip(self.times, self.sites, self.old, self.new):
            yield float(t), int(x), int(a), int(b)

    def replay(self) -> Configuration:
        arr = self.initial.states.copy()
        for _, x, a, b in self.changes():
            if arr[x] != a:
                raise ValueError(f"change at site {x} expects state {a}, found {arr[x]}")
            arr[x] = b
        return Configuration(arr)


def _check_window(events: EventSet, t: float) -> None:
    if t > events.horizon:
        raise ValueError(f"time {t} exceeds the event horizon {events.horizon}")
    if t < 0:
        raise ValueError("time must be nonnegative")


def _run(kernel, c0: Configuration, events: EventSet, t: float, direction: str) -> Trajectory:
    _check_window(events, t)
    if len(c0) != events.n_sites:
        raise ValueError("configuration length does not match the event set")
    _check_contact_states(events.params, c0)
    state = c0.states.copy()
    size = len(events)
    rec_t = np.empty(size)
    rec_x = np.empty(size, dtype=np.int64)
    rec_old = np.empty(size, dtype=np.int8)
    rec_new = np.empty(size, dtype=np.int8)
    m = kernel(state, events.times, events.kinds, events.sites, events.sources, float(t),
               events.params.contact_mode, rec_t, rec_x, rec_old, rec_new)
    return Trajectory(c0, Configuration(state), rec_t[:m].copy(), rec_x[:m].copy(),
                      rec_old[:m].copy(), rec_new[:m].copy(), direction, float(t))


def evolve_forward(xi0: Configuration, events: EventSet, t: float) -> Trajectory:
    """Run the two-stage process up the event set from time 0 to ``t``."""
    return _run(_evolve_forward, xi0, events, t, "forward")


def evolve_dual(zeta0: Configuration, events: EventSet, t: float) -> Trajectory:
    """Run the on-off dual down the event set from time ``t`` to 0."""
    return _run(_evolve_dual, zeta0, events, t, "dual")


def check_duality(xi0: Configuration, zeta0: Configuration, events: EventSet, t: float) -> bool:
    """Whether ``xi_t ~ zeta_0`` agrees with ``zeta_t ~ xi_0`` on this event set."""
    forward = evolve_forward(xi0, events, t).final
    dual = evolve_dual(zeta0, events, t).final
    return compatible(forward, zeta0) == compatible(xi0, dual)


def write_trajectory_jsonl(fh: IO[str], traj: Trajectory | None, graph: FiniteGraph,
                           params: Params, seed, extra: dict | None = None) -> None:
    """Header records for params, graph and seed, then one record per change."""
    header = {"record": "params", **params.as_dict()}
    if extra:
        header.update(extra)
    fh.write(json.dumps(header) + "\n")
    fh.write(json.dumps({"record": "graph", **graph.describe()}) + "\n")
    fh.write(json.dumps({"record": "seed", "seed": seed}) + "\n")
    if traj is None:
        return
    for t, x, a, b in traj.changes():
        fh.write(json.dumps({"t": t, "site": x, "from": a, "to": b}) + "\n")


# --------------------------------------------------------------------------
# Active-set fast path


@njit(cache=True)
def _active_run(nbr, deg, lam, gamma, delta, contact, dual, state, t_max, rng,
                score, flag, pos, active):
    """Evolve ``state`` in place; return (end time, alive, max score ever, flag hit)."""
    n = state.size
    width = nbr.shape[1]
    d_eff = 0.0 if contact else delta
    g_eff = 0.0 if contact else gamma
    base = 1.0 + d_eff + g_eff
    b = base + width * lam
    birth = 2 if contact else 1
    cnt = 0
    best = -np.inf
    hit = False
    for x in range(n):
        pos[x] = -1
        if state[x] != 0:
            pos[x] = cnt
            active[cnt] = x
            cnt += 1
            if score[x] > best:
                best = score[x]
            if flag[x]:
                hit = True
    t = 0.0
    while cnt > 0:
        t += rng.exponential(1.0) / (cnt * b)
        if t > t_max:
            break
        u = rng.random() * cnt
        i = int(u)
        if i >= cnt:
            i = cnt - 1
        v = (u - i) * b
        x = active[i]
        s = state[x]
        kill = False
        if v < 1.0:
            kill = True
        elif v < 1.0 + d_eff:
            if dual:
                if s == 2:
                    state[x] = 1
            elif s == 1:
                kill = True
        elif v < base:
            if s == 1:
                state[x] = 2
        else:
            k = int((v - base) / lam)
            if k < deg[x] and s == 2:
                y = nbr[x, k]
                if state[y] == 0:
                    state[y] = birth
                    pos[y] = cnt
                    active[cnt] = y
                    cnt += 1
                    if score[y] > best:
                        best = score[y]
                    if flag[y]:
                        hit = True
        if kill:
            state[x] = 0
            j = pos[x]
            last = active[cnt - 1]
            active[j] = last
            pos[last] = j
            pos[x] = -1
            cnt -= 1
    if cnt == 0:
        return t, False, best, hit
    return t_max, True, best, hit


@njit(cache=True)
def _active_batch(nbr, deg, lam, gamma, delta, contact, dual, init, reps, t_max, rng,
                  score, flag, probe):
    n = init.size
    alive = np.zeros(reps, dtype=np.bool_)
    t_end = np.zeros(reps)
    best = np.zeros(reps)
    hit = np.zeros(reps, dtype=np.bool_)
    final_best = np.full(reps, -np.inf)
    probe_state = np.zeros(reps, dtype=np.int8)
    state = np.empty(n, dtype=np.int8)
    pos = np.empty(n, dtype=np.int64)
    active = np.empty(n, dtype=np.int64)
    for r in range(reps):
        state[:] = init
        te, al, bs, ht = _active_run(nbr, deg, lam, gamma, delta, contact, dual, state,
                                     t_max, rng, score, flag, pos, active)
        alive[r] = al
        t_end[r] = te
        best[r] = bs
        hit[r] = ht
        if probe >= 0:
            probe_state[r] = state[probe]
        if al:
            fb = -np.inf
            for x in range(n):
                if state[x] != 0 and score[x] > fb:
                    fb = score[x]
            final_best[r] = fb
    return alive, t_end, best, hit, final_best, probe_state


@dataclass(frozen=True)
class ActiveRun:
    final: Configuration
    extinction_time: float | None
    max_score: float
    flag_hit: bool

    @property
    def survived(self) -> bool:
        return self.extinction_time is None


@dataclass(frozen=True)
class BatchResult:
    """Per-replicate summaries from :func:`batch_active`.

    ``max_score`` is the largest ``score`` over every site ever active,
    ``final_max_score`` the largest over sites active at the end (``-inf`` if
    extinct), ``flag_hit`` whether a flagged site was ever active and
    ``probe_state`` the final state of the probe site.
    """

    alive: np.ndarray
    end_time: np.ndarray
    max_score: np.ndarray
    flag_hit: np.ndarray
    final_max_score: np.ndarray
    probe_state: np.ndarray = field(repr=False)

    @classmethod
    def concat(cls, parts: list["BatchResult"]) -> "BatchResult":
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in cls.__dataclass_fields__))


def _kernel_args(graph: FiniteGraph, params: Params):
    return (graph.neighbors, graph.degrees, float(params.lam), float(params.maturation_rate),
            float(params.delta), bool(params.contact_mode))


def _score_flag(graph, score, flag):
    score = np.zeros(graph.n) if score is None else np.asarray(score, dtype=np.float64)
    flag = np.zeros(graph.n, dtype=np.bool_) if flag is None else np.asarray(flag, dtype=np.bool_)
    return score, flag


def simulate_active(graph: FiniteGraph, params: Params, c0: Configuration, t_max: float, rng,
                    dual: bool = False, score=None, flag=None) -> ActiveRun:
    """One run of the forward process (or the dual) via the active-set sampler."""
    _check_contact_states(params, c0)
    score, flag = _score_flag(graph, score, flag)
    state = c0.states.copy()
    pos = np.empty(graph.n, dtype=np.int64)
    active = np.empty(graph.n, dtype=np.int64)
    t, alive, best, hit = _active_run(*_kernel_args(graph, params), dual, state, float(t_max),
                                      _as_generator(rng), score, flag, pos, active)
    return ActiveRun(Configuration(state), None if alive else float(t), float(best), bool(hit))


def batch_active(graph: FiniteGraph, params: Params, c0: Configuration, t_max: float, reps: int,
                 rng, dual: bool = False, score=None, flag=None, probe: int = -1) -> BatchResult:
    """``reps`` independent runs from ``c0`` sharing one generator."""
    _check_contact_states(params, c0)
    score, flag = _score_flag(graph, score, flag)
    out = _active_batch(*_kernel_args(graph, params), dual, c0.states.copy(), int(reps),
                        float(t_max), _as_generator(rng), score, flag, int(probe))
    return BatchResult(*out)


@njit(cache=True)
def _graphical_batch(nbr_src, nbr_dst, n, lam, gamma, delta, contact, dual, init, reps, t, rng):
    finals = np.empty((reps, n), dtype=np.int8)
    for r in range(reps):
        times, kinds, sites, sources = _sample_streams(rng, n, nbr_src, nbr_dst, lam, gamma, delta, t)
        state = init.copy()
        size = times.size
        rec_t = np.empty(size)
        rec_x = np.empty(size, dtype=np.int64)
        rec_o = np.empty(size, dtype=np.int8)
        rec_n = np.empty(size, dtype=np.int8)
        if dual:
            _evolve_dual(state, times, kinds, sites, sources, t, contact, rec_t, rec_x, rec_o, rec_n)
        else:
            _evolve_forward(state, times, kinds, sites, sources, t, contact, rec_t, rec_x, rec_o, rec_n)
        finals[r] = state
    return finals


def batch_graphical(graph: FiniteGraph, params: Params, c0: Configuration, t: float, reps: int,
                    rng, dual: bool = False) -> np.ndarray:
    """Final states (``reps x n``) from fresh materialised event sets on ``(0, t)``."""
    _check_contact_states(params, c0)
    edges = graph.directed_edges()
    return _graphical_batch(edges[:, 0].copy(), edges[:, 1].copy(), graph.n, float(params.lam),
                            float(params.maturation_rate), float(params.delta),
                            bool(params.contact_mode), dual, c0.states.copy(), int(reps),
                            float(t), _as_generator(rng))
