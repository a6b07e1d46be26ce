"""Estimators for the complete-graph chain and distribution distances.

Every estimator reports raw counts next to the point estimate so the
numbers can be re-analysed (e.g. with exact binomial intervals). Confidence
half-widths use the normal approximation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from statistics import NormalDist

import numpy as np

from .chains import drive, drive_general, micro_batch
from .errors import BadParameter
from .graph import complete_graph
from .oracle import ProbabilityVector, align
from .rng import derive_seed

Z99 = NormalDist().inv_cdf(0.995)


def tv_distance(p: ProbabilityVector, q: ProbabilityVector) -> float:
    _, a, b = align(p, q)
    return float(0.5 * np.abs(a - b).sum())


def _binomial(count: int, trials: int) -> tuple[float, float]:
    p = count / trials
    return p, math.sqrt(p * (1 - p) / trials)


@dataclass
class DriftPoint:
    density: float
    k: int
    trials: int
    mean: float
    half_width: float
    sum_dxi: int
    sum_dxi_sq: int

    @property
    def lower(self):
        return self.mean - self.half_width

    @property
    def upper(self):
        return self.mean + self.half_width


def one_step_jumps(N: int, k: int, trials: int, seed: int, workers: int = 1) -> np.ndarray:
    """``xi_1 - k`` for ``trials`` independent macro steps from ``k``."""
    if not 0 <= k <= N - 1:
        raise BadParameter(f"k={k} outside 0..{N - 1}")
    runs = micro_batch(N, k + 1, 1, seed, trials, workers=workers)
    return runs["x"] - k


def drift_profile(N: int, grid, trials: int, seed: int, workers: int = 1) -> list[DriftPoint]:
    """Mean one-step change of the macro chain at ``k = floor(rho N)`` per density.

    Grid point ``i`` uses seed ``derive_seed(seed, i)``.
    """
    if trials < 100:
        raise BadParameter("drift_profile needs at least 100 trials per point")
    out = []
    for i, rho in enumerate(grid):
        if not 0 <= rho < 1:
            raise BadParameter(f"density {rho} outside [0, 1)")
        k = min(int(math.floor(rho * N)), N - 1)
        d = one_step_jumps(N, k, trials, derive_seed(seed, i), workers)
        mean = float(d.mean())
        sd = float(d.std(ddof=1))
        out.append(DriftPoint(float(rho), k, trials, mean, Z99 * sd / math.sqrt(trials),
                              int(d.sum()), int((d * d).sum())))
    return out


@dataclass
class EventRate:
    events: int
    trials: int
    probability: float
    std_error: float
    k: int
    params: dict = field(default_factory=dict)


def mass_exit_probability(N: int, gamma: float, delta: float, trials: int, seed: int,
                          workers: int = 1) -> EventRate:
    """Fraction of steps from ``k = ceil(gamma N)`` ending at ``xi_1 <= k - delta N``."""
    if not (0.5 < gamma < 1 and 0 < delta < gamma - 0.5):
        raise BadParameter("need 1/2 < gamma < 1 and 0 < delta < gamma - 1/2")
    k = min(math.ceil(gamma * N), N - 1)
    xi1 = one_step_jumps(N, k, trials, seed, workers) + k
    events = int((xi1 <= k - delta * N).sum())
    p, se = _binomial(events, trials)
    return EventRate(events, trials, p, se, k, {"N": N, "gamma": gamma, "delta": delta, "seed": seed})


def long_jump_probability(N: int, gamma: float, beta: float, trials: int, seed: int,
                          workers: int = 1) -> EventRate:
    """Fraction of steps from ``k = ceil(gamma N)`` ending below ``beta N``."""
    if not 0 < beta < gamma < 0.5:
        raise BadParameter("need 0 < beta < gamma < 1/2")
    k = math.ceil(gamma * N)
    xi1 = one_step_jumps(N, k, trials, seed, workers) + k
    events = int((xi1 < beta * N).sum())
    p, se = _binomial(events, trials)
    return EventRate(events, trials, p, se, k, {"N": N, "gamma": gamma, "beta": beta, "seed": seed})


@dataclass
class Survival:
    n: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    trials: int

    def log_linear_fit(self, n_min: int = 0, min_count: int = 30) -> tuple[float, float, int, int]:
        """Least-squares slope and intercept of ``log P(tau0 > n)``.

        Fit range: ``n >= n_min`` while at least ``min_count`` runs survive.
        Returns ``(slope, intercept, n_lo, n_hi)``.
        """
        ok = (self.n >= n_min) & (self.at_risk >= min_count)
        if ok.sum() < 2:
            raise BadParameter("fewer than two points in the fit range")
        x = self.n[ok].astype(float)
        slope, icpt = np.polyfit(x, np.log(self.survival[ok]), 1)
        return float(slope), float(icpt), int(x[0]), int(x[-1])


def tau0_tail(N: int, k: int, j: int, horizon: int, trials: int, seed: int, workers: int = 1) -> Survival:
    """Empirical ``P(tau0 > n)`` for ``n = 0..horizon`` from micro state ``(k, j)``."""
    if not 0 <= j <= k <= N - 1:
        raise BadParameter("need 0 <= j <= k <= N - 1")
    tau = micro_batch(N, k, j, seed, trials, workers=workers)["tau0"]
    n = np.arange(horizon + 1)
    counts = np.bincount(np.minimum(tau, horizon + 1), minlength=horizon + 2)
    # survivors beyond n: runs with tau0 > n
    above = trials - np.cumsum(counts)[: horizon + 1]
    return Survival(n, above / trials, above, trials)


def stabilization_time_bound(k: int, N: int, j: int) -> float:
    """Start of the range where the exponential tail bound applies: ``4 j / (1 - 2 k/N)``."""
    gamma = k / N
    return 4 * j / (1 - 2 * gamma)


@dataclass
class GeometricDomination:
    support: np.ndarray
    empirical_cdf: np.ndarray
    geometric_cdf: np.ndarray
    std_error: np.ndarray
    worst_margin: float
    trials: int

    def dominated(self, n_se: float = 4.0) -> bool:
        return bool((self.empirical_cdf + n_se * self.std_error >= self.geometric_cdf).all())


def geometric_domination(N: int, k: int, trials: int, seed: int, p: float = 2 / 3,
                         workers: int = 1) -> GeometricDomination:
    """Compare the CDF of ``2 - dxi`` to the Geometric(``p``) CDF on ``{1, 2, ...}``.

    Stochastic domination by the geometric means the empirical CDF lies on
    or above the geometric one at every integer.
    """
    v = 2 - one_step_jumps(N, k, trials, seed, workers)
    top = max(int(v.max()), 1) + 2
    m = np.arange(1, top + 1)
    counts = np.bincount(v, minlength=top + 1)
    F = np.cumsum(counts)[1:top + 1] / trials
    G = 1 - (1 - p) ** m
    se = np.sqrt(np.maximum(F * (1 - F), 1.0 / trials) / trials)
    margin = float(((F - G) / se).min())
    return GeometricDomination(m, F, G, se, margin, trials)


@dataclass
class Concentration:
    N: int
    eps: float
    escape_fraction: dict
    mean_density: dict
    recorded: int
    seeds: dict

    def to_json(self):
        return asdict(self)


def concentration_check(N: int, steps: int, burnin: int, eps: float, seed: int,
                        record_every: int = 1) -> Concentration:
    """Escape fraction from ``[(1/2 - eps) N, (1/2 + eps) N]`` from both extreme starts.

    Start ``k0 = 0`` uses ``derive_seed(seed, 0)``, ``k0 = N - 1`` uses
    ``derive_seed(seed, 1)``.
    """
    if not 0 < eps <= 0.5:
        raise BadParameter("eps must lie in (0, 1/2]")
    lo, hi = (0.5 - eps) * N, (0.5 + eps) * N
    esc, dens, seeds = {}, {}, {}
    recorded = 0
    for i, k0 in enumerate((0, N - 1)):
        s = derive_seed(seed, i)
        tr = drive(N, k0, steps, burnin, record_every, s)
        xi = tr.xi
        esc[k0] = float(((xi < lo) | (xi > hi)).mean()) if len(xi) else 0.0
        dens[k0] = float(xi.mean() / N) if len(xi) else float("nan")
        seeds[k0] = s
        recorded = len(xi)
    return Concentration(N, eps, esc, dens, recorded, seeds)


def generic_k_density(N: int, k: int, steps: int, burnin: int, seed: int, record_every: int = 10) -> dict:
    """Exploratory: mean density of the threshold-``k`` driven chain on ``complete_graph(N)``.

    Driven through the general-graph path from the empty configuration;
    the reference value ``(k - 1) / 2`` is an unproven conjecture.
    """
    g = complete_graph(N)
    tr, _ = drive_general(g, k, np.zeros(g.n_vertices, dtype=np.int64), steps, burnin, record_every, seed)
    mean = float(tr.xi.mean() / N)
    return {"N": N, "k": k, "steps": steps, "burnin": burnin, "seed": seed,
            "mean_density": mean, "conjectured": (k - 1) / 2, "exploratory": True,
            "recorded": int(len(tr.xi))}
