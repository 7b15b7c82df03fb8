"""Monte Carlo estimators for survival, critical values, edge speed and invariant density.

All infinite-time statements are replaced by finite proxies on finite
lattices.  "Survives" means "some site active at ``t_max``"; a finite
``t_max`` biases survival up, a free-boundary box biases it down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from numba import njit

from .configuration import Configuration, all_mature, from_sites, single_site
from .graph import FiniteGraph, LatticeSpec, build_lattice, half_line_sites
from .graphical import BatchResult, Params, batch_active
from .montecarlo import Estimate, mean_estimate, proportion, run_chunks, sub_seed

DEFAULT_THETA = 0.05


class NoSurvivalError(RuntimeError):
    """No transmission rate up to the ceiling gave survival above the threshold."""


@dataclass(frozen=True)
class SurvivalSpec:
    """Where and how long to run.

    ``initial`` is ``"center"`` (one mature site at the origin),
    ``"half_line"`` (mature sites at coordinates <= 0, 1-d only),
    ``"all_mature"`` or an explicit :class:`Configuration`.
    """

    lattice: LatticeSpec = LatticeSpec(1, 50, 1, "box")
    t_max: float = 50.0
    replicates: int = 1000
    initial: str | Configuration = "center"
    level: float = 0.95

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")

    def graph(self) -> FiniteGraph:
        return build_lattice(self.lattice)

    def initial_configuration(self, graph: FiniteGraph) -> Configuration:
        init = self.initial
        if isinstance(init, Configuration):
            if len(init) != graph.n:
                raise ValueError("initial configuration does not fit the lattice")
            return init
        if init == "center":
            return single_site(graph, graph.center())
        if init == "half_line":
            return from_sites(graph, half_line_sites(graph))
        if init == "all_mature":
            return all_mature(graph)
        raise ValueError(f"unknown initial selector {init!r}")

    def replace(self, **kw) -> "SurvivalSpec":
        cur = dict(lattice=self.lattice, t_max=self.t_max, replicates=self.replicates,
                   initial=self.initial, level=self.level)
        cur.update(kw)
        return SurvivalSpec(**cur)


def _chunk(reps, ss, graph, params, c0, t_max, dual, score, flag, probe):
    return batch_active(graph, params, c0, t_max, reps, np.random.default_rng(ss),
                        dual=dual, score=score, flag=flag, probe=probe)


def run_replicates(graph: FiniteGraph, params: Params, c0: Configuration, t_max: float,
                   replicates: int, seed: int, tag: str, workers: int = 1, dual: bool = False,
                   score=None, flag=None, probe: int = -1) -> BatchResult:
    parts = run_chunks(_chunk, replicates, seed, tag, workers, graph=graph, params=params, c0=c0,
                       t_max=float(t_max), dual=dual, score=score, flag=flag, probe=probe)
    return BatchResult.concat(parts)


# --------------------------------------------------------------------------
# Survival and the maturation-rate bound


def survival_probability(spec: SurvivalSpec, params: Params, seed: int, dual: bool = False,
                         workers: int = 1) -> Estimate:
    """Fraction of runs with an active site at ``spec.t_max``."""
    graph = spec.graph()
    c0 = spec.initial_configuration(graph)
    res = run_replicates(graph, params, c0, spec.t_max, spec.replicates, seed,
                         "dual-survival" if dual else "survival", workers, dual=dual)
    return proportion(int(res.alive.sum()), spec.replicates, spec.level)


def gamma_lower_bound(max_degree: int) -> Fraction:
    """Maturation rate below which the process dies out for every lambda: 1/(2M - 1)."""
    if max_degree < 1:
        raise ValueError("max degree must be >= 1")
    return Fraction(1, 2 * max_degree - 1)


@dataclass(frozen=True)
class OffspringResult:
    mean: Estimate
    p_zero: Estimate
    counts: np.ndarray = field(repr=False)


def offspring_expectation_mc(replicates: int, seed: int) -> OffspringResult:
    """Sample ``N_X`` with ``N`` a unit-rate Poisson process and ``X ~ Exp(1)`` independent.

    ``P(N_X = k) = 2^-(k+1)``, so the mean is 1 and the variance 2.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    x = rng.exponential(1.0, replicates)
    n = rng.poisson(x)
    return OffspringResult(mean_estimate(n), proportion(int(np.sum(n == 0)), replicates),
                           np.bincount(n))


@njit(cache=True)
def _star_offspring(rng, m, lam, gamma, delta, reps):
    births = np.zeros(reps, dtype=np.int64)
    matured = np.zeros(reps, dtype=np.bool_)
    leaves = np.zeros(m, dtype=np.int8)
    for r in range(reps):
        leaves[:] = 0
        centre = 1
        while centre != 0:
            vacant = 0
            juv = 0
            act = 0
            for k in range(m):
                if leaves[k] == 0:
                    vacant += 1
                else:
                    act += 1
                    if leaves[k] == 1:
                        juv += 1
            c_death = 1.0 + (delta if centre == 1 else 0.0)
            c_mat = gamma if centre == 1 else 0.0
            c_birth = lam * vacant if centre == 2 else 0.0
            l_death = act + delta * juv
            l_mat = gamma * juv
            total = c_death + c_mat + c_birth + l_death + l_mat
            u = rng.random() * total
            if u < c_death:
                centre = 0
            elif u < c_death + c_mat:
                centre = 2
                matured[r] = True
            elif u < c_death + c_mat + c_birth:
                j = int((u - c_death - c_mat) / lam)
                for k in range(m):
                    if leaves[k] == 0:
                        if j == 0:
                            leaves[k] = 1
                            break
                        j -= 1
                births[r] += 1
            else:
                v = u - c_death - c_mat - c_birth
                for k in range(m):
                    s = leaves[k]
                    if s == 0:
                        continue
                    rd = 1.0 + (delta if s == 1 else 0.0)
                    rm = gamma if s == 1 else 0.0
                    if v < rd:
                        leaves[k] = 0
                        break
                    v -= rd
                    if v < rm:
                        leaves[k] = 2
                        break
                    v -= rm
    return births, matured


@dataclass(frozen=True)
class BranchingCheck:
    offspring: Estimate
    bound: float
    within_bound: bool
    maturation: Estimate
    maturation_target: float


def branching_offspring_bound_check(params: Params, max_degree: int, replicates: int,
                                    seed: int) -> BranchingCheck:
    """Offspring of one juvenile at the centre of a star with ``max_degree`` leaves.

    A birth counts when the transmission originates at the centre, up to the
    death of the initial occupant.  Compared with ``2M / (1 + 1/gamma)``.
    """
    if params.contact_mode:
        raise ValueError("the offspring bound needs a finite gamma")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    births, matured = _star_offspring(rng, int(max_degree), float(params.lam),
                                      float(params.gamma), float(params.delta), int(replicates))
    est = mean_estimate(births)
    g = params.gamma
    bound = 0.0 if g == 0 else 2 * max_degree / (1 + 1 / g)
    mat = proportion(int(matured.sum()), replicates)
    return BranchingCheck(est, bound, est.mean <= bound + 3 * est.std_error, mat, g / (1 + g))


# --------------------------------------------------------------------------
# Critical transmission rate


@dataclass(frozen=True)
class BisectionConfig:
    theta: float = DEFAULT_THETA
    level: float = 0.95
    replicates: int = 400
    max_replicates: int = 3200
    lam_start: float = 1.0
    lam_ceiling: float = 100.0
    tol: float = 0.05
    max_iter: int = 20


@dataclass(frozen=True)
class CriticalBracket:
    """Survival is CI-below theta at ``lam_lo`` and CI-above at ``lam_hi``."""

    lam_lo: float
    lam_hi: float
    est_lo: Estimate | None
    est_hi: Estimate
    iterations: int
    converged: bool
    band: tuple[float, float] | None = None
    probes: tuple = ()

    @property
    def ambiguous(self) -> bool:
        return self.band is not None

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lam_lo + self.lam_hi)

    @property
    def width(self) -> float:
        return self.lam_hi - self.lam_lo


def critical_lambda(gamma: float, delta: float, template: SurvivalSpec, config: BisectionConfig,
                    seed: int, workers: int = 1) -> CriticalBracket:
    """Bracket the rate at which single-site survival to ``t_max`` crosses ``theta``.

    Every probe uses the same replicate seeds (common random numbers).  A
    probe whose interval contains ``theta`` is rerun with doubled replicates
    up to ``max_replicates``; probes still undecided mark an ambiguous
    ``band`` inside the bracket, and the search keeps narrowing the gaps on
    either side of it.
    """
    theta = config.theta
    probes: list[tuple[float, Estimate]] = []

    def probe(lam: float) -> tuple[str, Estimate]:
        reps = config.replicates
        while True:
            spec = template.replace(replicates=reps, level=config.level, initial="center")
            est = survival_probability(spec, Params(lam, gamma, delta), seed, workers=workers)
            probes.append((lam, est))
            if est.ci_high < theta:
                return "below", est
            if est.ci_low > theta:
                return "above", est
            if reps >= config.max_replicates:
                return "ambiguous", est
            reps = min(2 * reps, config.max_replicates)

    lo, est_lo = 0.0, None
    lam = config.lam_start
    while True:
        verdict, est = probe(lam)
        if verdict == "above":
            hi, est_hi = lam, est
            break
        if verdict == "below":
            lo, est_lo = lam, est
        if lam >= config.lam_ceiling:
            raise NoSurvivalError(f"no survival up to lambda ceiling {config.lam_ceiling} "
                                  f"(gamma={gamma}, delta={delta})")
        lam = min(2 * lam, config.lam_ceiling)

    # Probes whose interval straddles theta form a band [band_lo, band_hi];
    # each side of the band is then narrowed separately.
    it = 0
    band_lo = band_hi = None
    while it < config.max_iter:
        if band_lo is None:
            if hi - lo <= config.tol:
                break
            mid = 0.5 * (lo + hi)
        elif band_lo - lo > config.tol:
            mid = 0.5 * (lo + band_lo)
        elif hi - band_hi > config.tol:
            mid = 0.5 * (band_hi + hi)
        else:
            break
        it += 1
        verdict, est = probe(mid)
        if verdict == "below":
            lo, est_lo = mid, est
        elif verdict == "above":
            hi, est_hi = mid, est
        else:
            band_lo = mid if band_lo is None else min(band_lo, mid)
            band_hi = mid if band_hi is None else max(band_hi, mid)
    band = None if band_lo is None else (band_lo, band_hi)
    return CriticalBracket(lo, hi, est_lo, est_hi, it, hi - lo <= config.tol, band, tuple(probes))


# --------------------------------------------------------------------------
# Edge speed and cluster width


@dataclass(frozen=True)
class EdgeSpeedResult:
    speed: Estimate
    truncated_fraction: float
    empty_fraction: float
    side: str
    values: np.ndarray = field(repr=False)


def edge_speed(params: Params, L: int, t_max: float, replicates: int, seed: int,
               side: str = "right", level: float = 0.99, range_: int = 1,
               workers: int = 1) -> EdgeSpeedResult:
    """Speed of the right edge of the process started from mature sites on ``x <= 0``.

    ``side="left"`` mirrors it: the left edge started from ``x >= 0``.  An
    empty configuration puts the edge at ``-L`` (right) or ``+L`` (left) and
    is counted in ``empty_fraction``; replicates whose edge ever reaches the
    far wall are counted in ``truncated_fraction``.
    """
    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    graph = build_lattice(LatticeSpec(1, L, range_, "box"))
    coord = graph.labels[:, 0].astype(np.float64)
    if side == "right":
        c0 = from_sites(graph, half_line_sites(graph))
        score, flag = coord, coord == L
    else:
        c0 = from_sites(graph, np.flatnonzero(coord >= 0))
        score, flag = -coord, coord == -L
    res = run_replicates(graph, params, c0, t_max, replicates, seed, f"edge-{side}", workers,
                         score=score, flag=flag)
    edge = np.where(res.alive, res.final_max_score, -float(L))
    values = edge / t_max if side == "right" else -edge / t_max
    return EdgeSpeedResult(mean_estimate(values, level), float(res.flag_hit.mean()),
                           float(1 - res.alive.mean()), side, values)


@dataclass(frozen=True)
class ClusterStats:
    """Per-replicate cluster widths and lifetimes from a single mature site.

    Replicates that touched the box wall (spatial) or were still alive at
    ``t_max`` (temporal) are truncated and left out of ``mean_width``.
    """

    widths: np.ndarray
    lifetimes: np.ndarray
    spatial_truncated: np.ndarray
    temporal_truncated: np.ndarray

    @property
    def truncated(self) -> np.ndarray:
        return self.spatial_truncated | self.temporal_truncated

    @property
    def truncation_fraction(self) -> float:
        return float(self.truncated.mean())

    @property
    def mean_width(self) -> Estimate | None:
        ok = self.widths[~self.truncated]
        return mean_estimate(ok) if ok.size else None


def cluster_width(params: Params, L: int, t_max: float, replicates: int, seed: int,
                  dimension: int = 1, range_: int = 1, workers: int = 1) -> ClusterStats:
    graph = build_lattice(LatticeSpec(dimension, L, range_, "box"))
    origin = graph.center()
    res = run_replicates(graph, params, single_site(graph, origin), t_max, replicates, seed,
                         "cluster", workers, score=graph.sup_distance(origin).astype(np.float64),
                         flag=graph.boundary_sites())
    return ClusterStats(res.max_score.astype(np.int64), res.end_time, res.flag_hit, res.alive)


# --------------------------------------------------------------------------
# Upper invariant density, duality identity, complete convergence


@dataclass(frozen=True)
class DensityResult:
    active: Estimate
    mature: Estimate


def upper_density(params: Params, spec: SurvivalSpec, seed: int, dual: bool = False,
                  workers: int = 1) -> DensityResult:
    """Probability the origin is active at ``t_max`` starting from all sites mature."""
    graph = spec.graph()
    res = run_replicates(graph, params, all_mature(graph), spec.t_max, spec.replicates, seed,
                         "dual-density" if dual else "density", workers, dual=dual,
                         probe=graph.center())
    n = spec.replicates
    return DensityResult(proportion(int(np.sum(res.probe_state != 0)), n, spec.level),
                         proportion(int(np.sum(res.probe_state == 2)), n, spec.level))


def _combined(a: Estimate, b: Estimate) -> float:
    return math.hypot(a.std_error, b.std_error)


@dataclass(frozen=True)
class DualityDensityReport:
    forward_density: Estimate
    dual_survival: Estimate
    agree: bool
    dual_density: Estimate
    forward_survival: Estimate
    exchanged_agree: bool

    @property
    def sigma(self) -> float:
        return _combined(self.forward_density, self.dual_survival)

    @property
    def exchanged_sigma(self) -> float:
        return _combined(self.dual_density, self.forward_survival)


def duality_density_check(params: Params, density_spec: SurvivalSpec, survival_spec: SurvivalSpec,
                          seed: int, workers: int = 1) -> DualityDensityReport:
    """Forward density at the origin against single-site survival of the dual, and vice versa."""
    surv = survival_spec.replace(initial="center")
    fd = upper_density(params, density_spec, sub_seed(seed, "fd"), workers=workers).active
    ds = survival_probability(surv, params, sub_seed(seed, "ds"), dual=True, workers=workers)
    dd = upper_density(params, density_spec, sub_seed(seed, "dd"), dual=True, workers=workers).active
    fs = survival_probability(surv, params, sub_seed(seed, "fs"), workers=workers)
    return DualityDensityReport(fd, ds, abs(fd.mean - ds.mean) <= 3 * _combined(fd, ds),
                                dd, fs, abs(dd.mean - fs.mean) <= 3 * _combined(dd, fs))


@dataclass(frozen=True)
class ConvergenceReport:
    """``p`` = P(origin active), ``s`` = P(alive), ``nu`` = upper density, all at ``t_max``.

    ``sigma`` is the standard error of ``p - s * nu``; ``p`` and ``s`` share
    runs, so it comes from the per-run differences ``A - nu * S``.
    """

    p: Estimate
    s: Estimate
    nu: Estimate
    sigma: float

    @property
    def product(self) -> float:
        return self.s.mean * self.nu.mean

    @property
    def discrepancy(self) -> float:
        return self.p.mean - self.product

    @property
    def passes(self) -> bool:
        return abs(self.discrepancy) <= 3 * self.sigma


def complete_convergence_check(params: Params, survival_spec: SurvivalSpec,
                               density_spec: SurvivalSpec, seed: int,
                               workers: int = 1) -> ConvergenceReport:
    graph = survival_spec.graph()
    origin = graph.center()
    res = run_replicates(graph, params, single_site(graph, origin), survival_spec.t_max,
                         survival_spec.replicates, sub_seed(seed, "single"), "convergence",
                         workers, probe=origin)
    a = (res.probe_state != 0).astype(np.float64)
    s = res.alive.astype(np.float64)
    n = a.size
    nu = upper_density(params, density_spec, sub_seed(seed, "nu"), workers=workers).active
    z = a - nu.mean * s
    var = (z.var(ddof=1) / n if n > 1 else 0.0) + (s.mean() * nu.std_error) ** 2
    level = survival_spec.level
    return ConvergenceReport(proportion(int(a.sum()), n, level), proportion(int(s.sum()), n, level),
                             nu, math.sqrt(var))


# --------------------------------------------------------------------------
# Phase diagram


@dataclass(frozen=True)
class PhasePoint:
    lam: float
    gamma: float
    delta: float
    survival: Estimate
    density: Estimate
    edge_speed: Estimate | None = None
    theta: float = DEFAULT_THETA

    @property
    def boundary_band(self) -> bool:
        """Survival interval straddles the detection threshold."""
        return self.survival.ci_low <= self.theta <= self.survival.ci_high


def phase_diagram(delta: float, lambdas: Sequence[float], gammas: Sequence[float],
                  survival_spec: SurvivalSpec, density_spec: SurvivalSpec, seed: int,
                  theta: float = DEFAULT_THETA, with_edge_speed: bool = False,
                  workers: int = 1) -> list[PhasePoint]:
    """Survival and density on the grid, row-major in ``(gamma, lambda)``.

    All grid points reuse the same replicate seeds, which keeps the
    estimates smooth across the grid.
    """
    surv = survival_spec.replace(initial="center")
    points = []
    for g in gammas:
        for lam in lambdas:
            params = Params(float(lam), float(g), float(delta))
            s = survival_probability(surv, params, sub_seed(seed, "survival"), workers=workers)
            d = upper_density(params, density_spec, sub_seed(seed, "density"), workers=workers).active
            e = None
            if with_edge_speed:
                e = edge_speed(params, survival_spec.lattice.half_extent, survival_spec.t_max,
                               survival_spec.replicates, sub_seed(seed, "edge"),
                               range_=survival_spec.lattice.range, workers=workers).speed
            points.append(PhasePoint(float(lam), float(g), float(delta), s, d, e, theta))
    return points
