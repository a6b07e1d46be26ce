"""Named verification checks, shared by ``sandpile verify`` and the test-suite.

Each check returns a :class:`CheckResult` whose JSON form is
``{test, parameters, statistic, threshold, pass, seed, ...}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .chains import macro_batch_general, micro_batch
from .dynamics import Config, InstructionStream, OrderPolicy, stabilize
from .graph import GraphTopology, build_graph, complete_graph, small_suite
from .oracle import (
    ProbabilityVector,
    count_law,
    macro_count_law,
    micro_absorption_distribution,
    sampler_distribution,
    stationary_distribution,
    transition_matrix,
)
from .rng import derive_seed
from .sampler import sample_batch
from .stats import (
    concentration_check,
    drift_profile,
    generic_k_density,
    geometric_domination,
    long_jump_probability,
    tau0_tail,
    tv_distance,
)


@dataclass
class CheckResult:
    test: str
    parameters: dict
    statistic: float
    threshold: object
    passed: bool
    seed: int | None = None
    details: dict = field(default_factory=dict)
    exploratory: bool = False

    def to_json(self) -> dict:
        out = {
            "test": self.test,
            "parameters": self.parameters,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "pass": bool(self.passed),
            "seed": self.seed,
        }
        if self.details:
            out["details"] = self.details
        if self.exploratory:
            out["exploratory"] = True
        return out

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        if self.exploratory:
            tag += " (exploratory)"
        return f"[{tag}] {self.test}: statistic={self.statistic!r} threshold={self.threshold!r}"


def dumps(results) -> str:
    return json.dumps([r.to_json() for r in results], sort_keys=True, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def suite(name: str, k: int = 2) -> list[GraphTopology]:
    if name == "small":
        return small_suite(3 if k == 2 else 2)
    if name == "tiny":
        return small_suite(2)
    raise ValueError(f"unknown suite {name!r}")


# -- exact (oracle) checks ------------------------------------------------


def exact_sampling(k: int = 2, suite_name: str = "small", tol: float = 1e-10) -> CheckResult:
    """Sampler law equals the stationary law on every suite graph."""
    per_graph = {}
    worst = 0.0
    for g in suite(suite_name, k):
        pi = stationary_distribution(transition_matrix(g, k))
        nu = sampler_distribution(g, k)
        nu_fifo = sampler_distribution(g, k, order="fifo")
        d = max(tv_distance(nu, pi), tv_distance(nu_fifo, pi))
        per_graph[g.name] = d
        worst = max(worst, d)
    anchor = None
    if k == 2:
        pi2 = stationary_distribution(transition_matrix(complete_graph(2), 2))
        anchor = float(np.abs(pi2.mass - [0.25, 0.75]).max())
        worst = max(worst, anchor)
    return CheckResult(
        "exact-sampling" if k == 2 else f"exact-sampling-k{k}",
        {"k": k, "suite": suite_name, "graphs": len(per_graph)},
        worst, tol, worst < tol, None, {"tv": per_graph, "anchor_G2_error": anchor},
    )


def micro_macro(Ns=(2, 3, 4, 5), tol: float = 1e-10) -> CheckResult:
    """General-graph one-step law on the complete graph equals the micro absorption law."""
    worst = 0.0
    rows = {}
    for N in Ns:
        g = complete_graph(N)
        Q = transition_matrix(g, 2)
        for kk in range(N):
            micro = micro_absorption_distribution(N, kk + 1, 1)
            composed = macro_count_law(N, kk)
            for s in Q.states:
                if sum(s) != kk:
                    continue
                law = count_law(Q.row(s))
                d = max(tv_distance(law, micro), tv_distance(composed, micro))
                worst = max(worst, d)
            rows[f"N={N},k={kk}"] = micro.to_json()
    return CheckResult("micro-macro", {"N": list(Ns)}, worst, tol, worst < tol, None, {"micro_laws": rows})


def _random_case(rng: np.random.Generator):
    n = int(rng.integers(1, 7))
    edges = []
    # random tree hanging off the sink keeps the graph connected
    for v in range(n):
        edges.append((v, int(rng.integers(v + 1, n + 1))))
    for _ in range(int(rng.integers(0, 2 * n + 1))):
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n + 1))
        edges.append((u, v))
    g = build_graph(n, edges)
    k = int(rng.integers(2, 5))
    total = int(rng.integers(0, 9))
    eta = np.bincount(rng.integers(0, n, size=total), minlength=n)
    h = rng.integers(0, k, size=n)
    return g, Config(eta, h, k)


def abelian(cases: int = 1000, seed: int = 1) -> CheckResult:
    """Same stream, different legal orders: identical final state and odometer."""
    rng = np.random.default_rng(seed)
    mismatches = 0
    errors = 0
    for i in range(cases):
        g, cfg = _random_case(rng)
        stream_seed = int(derive_seed(seed, i))
        try:
            reps = [
                stabilize(cfg, InstructionStream(g, stream_seed), order=o, order_seed=stream_seed ^ 0x5A5A)
                for o in OrderPolicy
            ]
        except Exception:  # noqa: BLE001 - counted, reported as failure
            errors += 1
            continue
        base = reps[0]
        for r in reps[1:]:
            if r.final != base.final or not np.array_equal(r.odometer, base.odometer):
                mismatches += 1
                break
    return CheckResult("abelian", {"cases": cases}, mismatches + errors, 0,
                       mismatches == 0 and errors == 0, seed, {"mismatches": mismatches, "exceptions": errors})


# -- Monte Carlo checks ---------------------------------------------------


def density(N: int = 1000, steps: int = 100_000, burnin: int = 20_000, seed: int = 1,
            band=(0.47, 0.53), eps: float = 0.1, max_escape: float = 1e-3) -> CheckResult:
    c = concentration_check(N, steps, burnin, eps, seed)
    means = list(c.mean_density.values())
    escapes = list(c.escape_fraction.values())
    ok = all(band[0] <= m <= band[1] for m in means) and all(e < max_escape for e in escapes)
    return CheckResult(
        "density", {"N": N, "steps": steps, "burnin": burnin, "eps": eps},
        {"mean_density": c.mean_density, "escape_fraction": c.escape_fraction},
        {"band": list(band), "max_escape": max_escape}, ok, seed, {"seeds": c.seeds, "recorded": c.recorded},
    )


def drift(N: int = 2000, trials: int = 10_000, seed: int = 1,
          below=(0.1, 0.2, 0.3, 0.4), above=(0.6, 0.7, 0.8, 0.9), workers: int = 1) -> CheckResult:
    grid = (0.0,) + tuple(below) + tuple(above)
    pts = drift_profile(N, grid, trials, seed, workers)
    zero = pts[0]
    exact0 = (N - 1) / N
    se0 = zero.half_width / 2.5758293035489
    ok0 = abs(zero.mean - exact0) <= max(3 * se0, 3 * math.sqrt(exact0 * (1 - exact0) / trials))
    ok_below = all(p.lower > 0 for p in pts[1:1 + len(below)])
    ok_above = all(p.upper < 0 for p in pts[1 + len(below):])
    table = {f"{p.density:.2f}": {"k": p.k, "mean": p.mean, "half_width": p.half_width} for p in pts}
    return CheckResult("drift", {"N": N, "trials": trials}, table,
                       "CI excludes 0 with the expected sign; density 0 mean = (N-1)/N within 3 SE",
                       ok0 and ok_below and ok_above, seed, {"zero_ok": ok0})


def long_jumps(N: int = 1000, gamma: float = 0.4, beta: float = 0.2, trials: int = 100_000,
               seed: int = 1) -> CheckResult:
    r = long_jump_probability(N, gamma, beta, trials, seed)
    return CheckResult("long-jumps", {"N": N, "gamma": gamma, "beta": beta, "trials": trials},
                       r.events, 0, r.events == 0, seed, {"k": r.k})


def tau0_tail_check(N: int = 1000, k: int = 300, j: int = 1, trials: int = 100_000, seed: int = 1,
                    min_count: int = 30) -> CheckResult:
    n0 = math.ceil(4 * j / (1 - 2 * k / N))
    s = tau0_tail(N, k, j, horizon=2000, trials=trials, seed=seed)
    slope, icpt, lo, hi = s.log_linear_fit(n_min=n0, min_count=min_count)
    ok_range = s.at_risk >= min_count
    surv = s.survival[ok_range]
    decreasing = bool(np.all(np.diff(surv) <= 0))
    return CheckResult("tau0-tail", {"N": N, "k": k, "j": j, "trials": trials},
                       slope, "slope < 0 and non-increasing survival", slope < 0 and decreasing, seed,
                       {"fit_range": [lo, hi], "intercept": icpt})


def geometric(N: int = 2000, frac: float = 0.3, trials: int = 100_000, seed: int = 1,
              n_se: float = 4.0) -> CheckResult:
    k = int(round(frac * N))
    r = geometric_domination(N, k, trials, seed)
    return CheckResult("geometric-domination", {"N": N, "k": k, "trials": trials, "p": 2 / 3},
                       r.worst_margin, -n_se, r.dominated(n_se), seed,
                       {"empirical_cdf": r.empirical_cdf[:6], "geometric_cdf": r.geometric_cdf[:6]})


def generic_k(N: int = 1000, k: int = 3, steps: int = 200_000, burnin: int = 50_000, seed: int = 1,
              band: float = 0.05) -> CheckResult:
    r = generic_k_density(N, k, steps, burnin, seed)
    ok = abs(r["mean_density"] - r["conjectured"]) <= band
    return CheckResult("generic-k-density", {"N": N, "k": k, "steps": steps, "burnin": burnin},
                       r["mean_density"], [r["conjectured"] - band, r["conjectured"] + band], ok, seed,
                       exploratory=True)


def _pointwise(emp: ProbabilityVector, exact: ProbabilityVector, n: int, n_se: float):
    """Worst ``|p_hat - p| / se`` with ``se = sqrt(p (1 - p) / n)``; mass where ``p = 0`` fails."""
    worst = 0.0
    bad = []
    ed, xd = emp.as_dict(), exact.as_dict()
    for s in set(ed) | set(xd):
        p, q = xd.get(s, 0.0), ed.get(s, 0.0)
        se = math.sqrt(p * (1 - p) / n)
        if se == 0:
            z = 0.0 if abs(q - p) < 1e-15 else math.inf
        else:
            z = abs(q - p) / se
        worst = max(worst, z)
        if z > n_se:
            bad.append(s)
    return worst, bad


def coherence(reps: int = 1_000_000, seed: int = 1, n_se: float = 4.0, Ns=(2, 3, 4, 5)) -> CheckResult:
    """Oracle laws vs ``reps``-sample Monte Carlo laws, pointwise within ``n_se`` SE."""
    worst = 0.0
    failing = {}
    labels = []
    idx = 0

    def record(label, emp, exact):
        nonlocal worst, idx
        z, bad = _pointwise(emp, exact, reps, n_se)
        worst = max(worst, z)
        labels.append(label)
        if bad:
            failing[label] = [str(b) for b in bad]
        idx += 1

    for k, graphs in ((2, suite("small", 2)), (3, suite("small", 3))):
        for g in graphs:
            rows = sample_batch(g, k, derive_seed(seed, idx), reps)
            record(f"sampler k={k} {g.name}", ProbabilityVector.from_rows(rows), sampler_distribution(g, k))
    for N in Ns:
        g = complete_graph(N)
        for kk in range(N):
            exact = micro_absorption_distribution(N, kk + 1, 1)
            xs = micro_batch(N, kk + 1, 1, derive_seed(seed, idx), reps)["x"]
            record(f"micro N={N} k={kk}", ProbabilityVector.from_samples(xs.tolist()), exact)
            start = np.zeros(g.n_vertices, dtype=np.int64)
            start[:kk] = 1
            rows = macro_batch_general(g, 2, start, derive_seed(seed, idx), reps)
            record(f"macro-general N={N} k={kk}", ProbabilityVector.from_samples(rows.sum(axis=1).tolist()), exact)
    return CheckResult("oracle-mc-coherence", {"reps": reps, "laws": len(labels)}, worst, n_se,
                       not failing, seed, {"failing": failing})


CHECKS = {
    "exact-sampling": lambda seed, **kw: exact_sampling(2, kw.get("suite", "small")),
    "generic-k-sampling": lambda seed, **kw: exact_sampling(3, kw.get("suite", "small")),
    "abelian": lambda seed, **kw: abelian(kw.get("cases", 1000), seed),
    "micro-macro": lambda seed, **kw: micro_macro(),
    "density": lambda seed, **kw: density(seed=seed),
    "drift": lambda seed, **kw: drift(seed=seed, workers=kw.get("workers", 1)),
    "long-jumps": lambda seed, **kw: long_jumps(seed=seed),
    "tau0-tail": lambda seed, **kw: tau0_tail_check(seed=seed),
    "geometric": lambda seed, **kw: geometric(seed=seed),
    "generic-k-density": lambda seed, **kw: generic_k(seed=seed),
    "coherence": lambda seed, **kw: coherence(kw.get("reps", 1_000_000), seed),
}
