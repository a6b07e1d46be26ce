"""Exact sampling from the stationary law of the driven-dissipative chain.

Recipe: fill every site with ``k-1`` particles, draw each odometer residue
uniformly from ``{0, ..., k-1}``, stabilize with fresh instructions and
keep the resulting particle configuration.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _backend
from .dynamics import DEFAULT_STEP_CAP, Config, InstructionStream, OrderPolicy, stabilize
from .errors import BadParameter
from .graph import GraphTopology
from .oracle import ProbabilityVector
from .rng import SplitMix64, derive_seed


def initial_state(graph: GraphTopology, k: int, seed: int) -> tuple[Config, InstructionStream]:
    """The random start ``(k-1, h0)`` and instruction stream of replica seed ``seed``."""
    if k < 2:
        raise BadParameter(f"threshold must be >= 2, got {k}")
    rng = SplitMix64(derive_seed(seed, 0))
    h0 = [rng.randbelow(k) for _ in range(graph.n_vertices)]
    eta0 = np.full(graph.n_vertices, k - 1, dtype=np.int64)
    return Config(eta0, h0, k), InstructionStream(graph, derive_seed(seed, 1))


def exact_sample(
    graph: GraphTopology,
    k: int = 2,
    seed: int = 0,
    order: OrderPolicy = OrderPolicy.LOWEST_INDEX,
    cap: int = DEFAULT_STEP_CAP,
) -> Config:
    start, stream = initial_state(graph, k, seed)
    report = stabilize(start, stream, order=order, cap=cap, order_seed=derive_seed(seed, 2))
    return report.final


def sample_batch(graph: GraphTopology, k: int, seed: int, reps: int, first: int = 0,
                 workers: int = 1, cap: int = DEFAULT_STEP_CAP) -> np.ndarray:
    """``(reps, n)`` array; row ``i`` is ``exact_sample(graph, k, derive_seed(seed, first + i)).eta``."""
    ptr, idx = graph.csr
    out = np.zeros((reps, graph.n_vertices), dtype=np.int64)
    kern = _backend.kernels
    if workers <= 1 or reps < 2 * workers:
        kern.exact_sample_batch(ptr, idx, k, seed, first, out, cap)
        return out
    bounds = np.linspace(0, reps, workers + 1).astype(int)

    def run(a, b):
        kern.exact_sample_batch(ptr, idx, k, seed, first + a, out[a:b], cap)

    with ThreadPoolExecutor(workers) as ex:
        list(ex.map(run, bounds[:-1], bounds[1:]))
    return out


def sample_density(graph: GraphTopology, k: int, seed: int, reps: int, workers: int = 1,
                   cap: int = DEFAULT_STEP_CAP) -> ProbabilityVector:
    """Empirical law of the total particle count over ``reps`` exact samples."""
    if reps < 1:
        raise BadParameter("reps must be >= 1")
    totals = sample_batch(graph, k, seed, reps, workers=workers, cap=cap).sum(axis=1)
    counts = np.bincount(totals, minlength=graph.n_vertices * (k - 1) + 1)
    return ProbabilityVector(tuple(range(len(counts))), counts / reps, counts=counts)


def sample_config_law(graph: GraphTopology, k: int, seed: int, reps: int, workers: int = 1) -> ProbabilityVector:
    """Empirical law over full particle configurations."""
    rows = sample_batch(graph, k, seed, reps, workers=workers)
    return ProbabilityVector.from_samples(map(tuple, rows.tolist()))
