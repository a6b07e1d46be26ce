"""Driven-dissipative chains and the complete-graph micro chain.

Micro chain ``(x, y)``: ``x`` particles in total, ``y`` of them active, on
the complete graph with ``N - 1`` sites. Each step moves one active
particle to a uniform slot among ``N``: the sink (``x, y`` both drop),
one of the ``x - y`` sleepers (it wakes, ``y + 1``) or any other site
(the mover falls asleep, ``y - 1``). ``y = 0`` is absorbing.

One macro step from ``xi`` equals a micro run from ``(xi + 1, 1)``: the
added particle is treated as an active particle sitting on the sink side.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .dynamics import DEFAULT_STEP_CAP, Config, InstructionStream, StabilizationReport, stabilize
from .errors import BadParameter, InvalidState
from .graph import GraphTopology
from .oracle import check_micro_state
from .rng import SplitMix64, derive_seed


@dataclass(frozen=True)
class MicroState:
    x: int
    y: int
    n: int

    def __post_init__(self):
        try:
            check_micro_state(self.n, self.x, self.y)
        except InvalidState:
            raise InvalidState(f"({self.x}, {self.y}) outside the state space for N={self.n}") from None

    @property
    def absorbed(self) -> bool:
        return self.y == 0


@dataclass
class MicroRun:
    final: MicroState
    tau0: int
    sink_exits: int
    peak_y: int


@dataclass
class MacroTrace:
    xi0: int
    times: np.ndarray
    xi: np.ndarray
    sink_exits: np.ndarray
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def density(self) -> np.ndarray:
        n = self.meta.get("N")
        return self.xi / n


def micro_step(state: MicroState, rng: SplitMix64) -> MicroState:
    if state.y == 0:
        return state
    z = rng.randbelow(state.n)
    if z == 0:
        return MicroState(state.x - 1, state.y - 1, state.n)
    if z <= state.x - state.y:
        return MicroState(state.x, state.y + 1, state.n)
    return MicroState(state.x, state.y - 1, state.n)


def micro_run_to_absorption(start: MicroState, rng: SplitMix64, cap: int = DEFAULT_STEP_CAP) -> MicroRun:
    """Advance ``rng`` through one run; same trajectory as repeated ``micro_step``."""
    x, tau, exits, peak, state = _backend.kernels.micro_run(start.n, start.x, start.y, rng.state, int(cap))
    rng.state = int(state)
    return MicroRun(MicroState(int(x), 0, start.n), int(tau), int(exits), int(peak))


def micro_batch(N: int, x0: int, y0: int, seed: int, trials: int, cap: int = DEFAULT_STEP_CAP,
                workers: int = 1) -> dict[str, np.ndarray]:
    """``trials`` independent runs from ``(x0, y0)``; run ``i`` uses ``derive_seed(seed, i)``."""
    check_micro_state(N, x0, y0)
    cols = {name: np.zeros(trials, dtype=np.int64) for name in ("x", "tau0", "sink_exits", "peak_y")}
    kern = _backend.kernels

    def run(a, b):
        kern.micro_run_batch(N, x0, y0, seed, a, int(cap), cols["x"][a:b], cols["tau0"][a:b],
                             cols["sink_exits"][a:b], cols["peak_y"][a:b])

    if workers <= 1 or trials < 2 * workers:
        run(0, trials)
    else:
        bounds = np.linspace(0, trials, workers + 1).astype(int)
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(run, bounds[:-1], bounds[1:]))
    return cols


def macro_step_complete(xi: int, N: int, rng: SplitMix64, cap: int = DEFAULT_STEP_CAP) -> int:
    if not 0 <= xi <= N - 1:
        raise InvalidState(f"macro state {xi} outside 0..{N - 1}")
    return micro_run_to_absorption(MicroState(xi + 1, 1, N), rng, cap).final.x


def macro_step_general(config: Config, graph: GraphTopology, seed: int, add_on_v_only: bool = False,
                       cap: int = DEFAULT_STEP_CAP) -> tuple[Config, StabilizationReport | None]:
    """Add a particle at a uniform vertex of ``V`` (plus the sink) and stabilize.

    ``seed`` is the step seed: the vertex comes from ``SplitMix64(seed)``,
    instructions from ``derive_seed(seed, 1)``. Returns the new stable
    configuration and the stabilization report (``None`` on a sink draw).
    """
    if not config.is_stable():
        raise BadParameter("macro step needs a stable configuration")
    n = graph.n_vertices
    x = SplitMix64(seed).randbelow(n if add_on_v_only else n + 1)
    if x == n:
        return Config.from_eta(config.eta, config.k), None
    eta = config.eta.copy()
    eta[x] += 1
    report = stabilize(Config.from_eta(eta, config.k), InstructionStream(graph, derive_seed(seed, 1)), cap=cap)
    return Config.from_eta(report.final.eta, config.k), report


def macro_batch_general(graph: GraphTopology, k: int, eta_start, seed: int, reps: int,
                        add_on_v_only: bool = False, cap: int = DEFAULT_STEP_CAP) -> np.ndarray:
    """Rows = one macro step each from ``eta_start``, step seed ``derive_seed(seed, i)``."""
    ptr, idx = graph.csr
    out = np.zeros((reps, graph.n_vertices), dtype=np.int64)
    _backend.kernels.macro_step_batch(ptr, idx, k, np.asarray(eta_start, dtype=np.int64), seed, 0,
                                      add_on_v_only, out, int(cap))
    return out


def _check_drive(steps, burnin, record_every):
    if steps < 0 or burnin < 0:
        raise BadParameter("steps and burnin must be non-negative")
    if record_every < 1:
        raise BadParameter("record_every must be >= 1")


def drive(N: int, k0: int, steps: int, burnin: int = 0, record_every: int = 1, seed: int = 0,
          cap: int = DEFAULT_STEP_CAP) -> MacroTrace:
    """Macro chain on ``complete_graph(N)`` via micro runs.

    Runs ``burnin + steps`` macro steps from ``xi_0 = k0`` and records
    ``xi`` every ``record_every`` steps after the burn-in; ``sink_exits``
    holds the particles lost since the previous record (``1 - dxi`` summed).
    """
    if not 0 <= k0 <= N - 1:
        raise InvalidState(f"initial count {k0} outside 0..{N - 1}")
    _check_drive(steps, burnin, record_every)
    xs, ex, _ = _backend.kernels.drive_complete(N, k0, seed, burnin, steps, record_every, int(cap))
    times = burnin + record_every * np.arange(1, len(xs) + 1)
    meta = {"N": N, "k0": k0, "steps": steps, "burnin": burnin, "record_every": record_every,
            "seed": seed, "path": "micro"}
    return MacroTrace(k0, times, np.asarray(xs), np.asarray(ex), seed, meta)


def drive_general(graph: GraphTopology, k: int, eta0, steps: int, burnin: int = 0, record_every: int = 1,
                  seed: int = 0, add_on_v_only: bool = False, cap: int = DEFAULT_STEP_CAP) -> tuple[MacroTrace, Config]:
    """Driven chain on any graph; step ``t`` uses step seed ``derive_seed(seed, t)``.

    Returns the trace of total particle counts and the final configuration.
    """
    _check_drive(steps, burnin, record_every)
    start = Config.from_eta(eta0, k)
    if not start.is_stable():
        raise BadParameter("initial configuration must be stable")
    ptr, idx = graph.csr
    eta = start.eta.copy()
    totals, ex = _backend.kernels.drive_general(ptr, idx, k, eta, seed, burnin, steps, record_every,
                                                add_on_v_only, int(cap))
    times = burnin + record_every * np.arange(1, len(totals) + 1)
    meta = {"N": graph.n_vertices + 1, "n_vertices": graph.n_vertices, "k": k, "steps": steps,
            "burnin": burnin, "record_every": record_every, "seed": seed, "path": "general",
            "graph": graph.name, "add_on_v_only": add_on_v_only}
    return MacroTrace(start.total, times, np.asarray(totals), np.asarray(ex), seed, meta), Config.from_eta(eta, k)


__all__ = [
    "MicroState",
    "MicroRun",
    "MacroTrace",
    "micro_step",
    "micro_run_to_absorption",
    "micro_batch",
    "macro_step_complete",
    "macro_step_general",
    "macro_batch_general",
    "drive",
    "drive_general",
]
