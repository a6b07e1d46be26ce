"""Configurations, instruction arrays and legal half-toppling dynamics.

A configuration is a pair ``(eta, h)``: particle counts and the odometer
residue ``h mod k`` per site. A site is unstable when it holds a particle
and either has at least ``k`` of them or is mid-toppling (nonzero
residue). A half-toppling sends one particle along the next instruction of
the site; particles entering the sink vanish, a self-loop leaves ``eta``
unchanged but still advances the odometer.

Instruction ``I^{x,j}`` (the ``j``-th jump out of ``x``) is a pure function
of ``(seed, x, j)``: replaying a stream always replays the same array,
which is what makes the final state independent of toppling order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _backend
from .errors import (
    BadIndex,
    BadParameter,
    IllegalToppling,
    UnreachablePair,
    UnsupportedThreshold,
)
from .graph import GraphTopology
from .rng import below, instruction_word

DEFAULT_STEP_CAP = 10**9


class OrderPolicy(Enum):
    LOWEST_INDEX = 0
    FIFO_QUEUE = 1
    UNIFORM_RANDOM = 2

    @classmethod
    def parse(cls, name: str) -> "OrderPolicy":
        aliases = {"lowest": cls.LOWEST_INDEX, "fifo": cls.FIFO_QUEUE, "random": cls.UNIFORM_RANDOM}
        try:
            return aliases[name.lower()]
        except KeyError:
            return cls[name.upper()]


@dataclass
class Config:
    eta: np.ndarray
    h: np.ndarray
    k: int = 2

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=np.int64).copy()
        if self.h is None:
            self.h = np.zeros_like(self.eta)
        self.h = np.asarray(self.h, dtype=np.int64).copy()
        if self.k < 2:
            raise BadParameter(f"threshold must be >= 2, got {self.k}")
        if self.eta.ndim != 1 or self.eta.shape != self.h.shape:
            raise BadParameter("eta and h must be 1-d arrays of equal length")
        if (self.eta < 0).any():
            raise BadParameter("negative particle count")
        self.h %= self.k

    @classmethod
    def empty(cls, n: int, k: int = 2) -> "Config":
        return cls(np.zeros(n, dtype=np.int64), None, k)

    @classmethod
    def from_eta(cls, eta, k: int = 2) -> "Config":
        return cls(eta, None, k)

    def __len__(self):
        return len(self.eta)

    def __eq__(self, other):
        if not isinstance(other, Config):
            return NotImplemented
        return (
            self.k == other.k
            and np.array_equal(self.eta, other.eta)
            and np.array_equal(self.h, other.h)
        )

    @property
    def total(self) -> int:
        return int(self.eta.sum())

    def copy(self) -> "Config":
        return Config(self.eta, self.h, self.k)

    def key(self) -> tuple:
        return tuple(int(v) for v in self.eta), tuple(int(v) for v in self.h)

    def to_json(self) -> dict:
        return {"k": int(self.k), "eta": self.eta.tolist(), "h": self.h.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "Config":
        return cls(data["eta"], data.get("h"), int(data.get("k", 2)))

    def is_stable(self) -> bool:
        return not any(is_unstable(self, x) for x in range(len(self)))


class InstructionStream:
    """The instruction array ``I`` of one stabilization.

    ``slot(x, j)`` is the adjacency slot used by the ``j``-th jump from
    ``x``; each entry is uniform over the ``d_x`` slots and entries are
    independent across ``(x, j)``. Lookups are memoized; the memo is only
    a cache, the kernels evaluate the same function directly.
    """

    def __init__(self, graph: GraphTopology, seed: int):
        self.graph = graph
        self.seed = int(seed) & ((1 << 64) - 1)
        self.memo: dict[tuple[int, int], int] = {}

    def slot(self, x: int, j: int) -> int:
        key = (x, j)
        s = self.memo.get(key)
        if s is None:
            d = len(self.graph.adjacency[x])
            s = self.memo[key] = below(instruction_word(self.seed, x, j), d)
        return s

    def neighbor(self, x: int, j: int) -> int:
        return self.graph.adjacency[x][self.slot(x, j)]

    def __repr__(self):
        return f"InstructionStream(seed={self.seed:#x}, cached={len(self.memo)})"


@dataclass
class StabilizationReport:
    final: Config
    odometer: np.ndarray
    sink_exits: int
    steps: int
    initial_total: int = field(default=0, repr=False)

    def to_json(self) -> dict:
        return {
            "final": self.final.to_json(),
            "odometer": self.odometer.tolist(),
            "sink_exits": int(self.sink_exits),
            "steps": int(self.steps),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _check_site(config: Config, x: int):
    if not 0 <= x < len(config.eta):
        raise BadIndex(f"site {x} is not a non-sink vertex")


def is_unstable(config: Config, x: int) -> bool:
    _check_site(config, x)
    e = config.eta[x]
    return bool(e >= 1 and (e >= config.k or config.h[x] != 0))


def half_topple(config: Config, x: int, stream: InstructionStream, h_counter) -> tuple[Config, int]:
    """Apply one legal half-toppling at ``x``.

    Uses instruction ``(x, h_counter[x])`` and increments ``h_counter[x]``
    in place. Returns the new configuration and the destination vertex
    (``graph.sink_id`` for the sink).
    """
    if not is_unstable(config, x):
        raise IllegalToppling(f"site {x} is stable (eta={config.eta[x]}, h={config.h[x]})")
    y = stream.neighbor(x, int(h_counter[x]))
    h_counter[x] += 1
    out = config.copy()
    out.h[x] = (out.h[x] + 1) % out.k
    if y != x:
        out.eta[x] -= 1
        if y != stream.graph.sink_id:
            out.eta[y] += 1
    return out, y


def stabilize(
    config: Config,
    stream: InstructionStream,
    order: OrderPolicy = OrderPolicy.LOWEST_INDEX,
    cap: int = DEFAULT_STEP_CAP,
    order_seed: int = 0,
    h_counter=None,
) -> StabilizationReport:
    """Half-topple unstable sites until none remain.

    The ``j``-th half-toppling at ``x`` reads instruction
    ``(x, h_counter[x] + j)``; ``h_counter`` defaults to the residues of
    ``config``. ``order_seed`` only matters for ``UNIFORM_RANDOM``.
    """
    graph = stream.graph
    if len(config) != graph.n_vertices:
        raise BadParameter(f"config has {len(config)} sites, graph has {graph.n_vertices}")
    ptr, idx = graph.csr
    eta = config.eta.copy()
    res = config.h.copy()
    j0 = res.copy() if h_counter is None else np.asarray(h_counter, dtype=np.int64).copy()
    odo, steps, exits = _backend.kernels.stabilize(
        ptr, idx, config.k, eta, res, j0, stream.seed, order.value, int(order_seed) & ((1 << 64) - 1), int(cap)
    )
    return StabilizationReport(Config(eta, res, config.k), odo, exits, steps, config.total)


def config_to_sleeping_active(config: Config) -> list[tuple[int, int]]:
    """Per-site ``(active, sleeping)`` counts for the threshold-2 model."""
    if config.k != 2:
        raise UnsupportedThreshold("active/sleeping view is defined for k = 2 only")
    out = []
    for x, (e, r) in enumerate(zip(config.eta.tolist(), config.h.tolist())):
        if e == 0:
            if r % 2:
                raise UnreachablePair(f"site {x}: empty with odd odometer")
            out.append((0, 0))
        elif e == 1 and r % 2 == 0:
            out.append((0, 1))
        else:
            out.append((e, 0))
    return out
