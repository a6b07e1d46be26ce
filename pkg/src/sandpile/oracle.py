"""Exact finite-state computations on small instances.

All laws here come from linear solves, never from simulation, and serve as
ground truth for the Monte Carlo paths.

Stabilization outcomes are computed on the chain whose state is
``(eta, h mod k)`` (plus the pending queue for FIFO order): the chosen site
jumps along a *fresh* uniform slot at every step. That is exact for the
stabilization law because along any single path each instruction
``I^{x,j}`` is read at most once, and the entries are i.i.d. It is NOT a
model of a replayed, fixed instruction array; do not use it to reason
about a particular stream.
"""

from __future__ import annotations

import itertools
import os
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .errors import (
    BadParameter,
    InvalidState,
    NotIrreducible,
    NumericalFailure,
    SingularSystem,
    StateCapExceeded,
)
from .graph import GraphTopology

DEFAULT_STATE_CAP = 2_000_000
DENSE_LIMIT = 4000
RESIDUAL_TOL = 1e-12


def state_cap() -> int:
    return int(os.environ.get("SANDPILE_STATE_CAP", DEFAULT_STATE_CAP))


@dataclass
class ProbabilityVector:
    support: tuple
    mass: np.ndarray
    counts: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.support = tuple(self.support)
        m = np.asarray(self.mass, dtype=float)
        if m.shape != (len(self.support),):
            raise BadParameter("support and mass lengths differ")
        if (m < -1e-12).any():
            raise NumericalFailure(f"negative mass {m.min():.3e}")
        self.mass = np.clip(m, 0.0, None)
        total = self.mass.sum()
        if abs(total - 1.0) > 1e-12:
            raise NumericalFailure(f"masses sum to {total!r}")

    @classmethod
    def from_dict(cls, law: dict, sort: bool = True) -> "ProbabilityVector":
        keys = sorted(law) if sort else list(law)
        return cls(tuple(keys), np.array([law[s] for s in keys], dtype=float))

    @classmethod
    def from_samples(cls, samples: Iterable[Hashable]) -> "ProbabilityVector":
        c = Counter(samples)
        keys = sorted(c)
        counts = np.array([c[s] for s in keys], dtype=np.int64)
        return cls(tuple(keys), counts / counts.sum(), counts=counts)

    @classmethod
    def from_rows(cls, rows: np.ndarray) -> "ProbabilityVector":
        """Empirical law of the rows of a 2-d integer array."""
        uniq, counts = np.unique(rows, axis=0, return_counts=True)
        return cls(tuple(tuple(int(v) for v in r) for r in uniq), counts / counts.sum(), counts=counts)

    def __len__(self):
        return len(self.support)

    def prob(self, state) -> float:
        try:
            return float(self.mass[self.support.index(state)])
        except ValueError:
            return 0.0

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.mass.tolist()))

    def pushforward(self, f: Callable) -> "ProbabilityVector":
        acc: dict = {}
        for s, m in zip(self.support, self.mass):
            key = f(s)
            acc[key] = acc.get(key, 0.0) + m
        return ProbabilityVector.from_dict(acc)

    def mean(self, f: Callable = lambda s: s) -> float:
        return float(sum(m * f(s) for s, m in zip(self.support, self.mass)))

    def to_json(self) -> list:
        def enc(s):
            return list(s) if isinstance(s, tuple) else s

        return [[enc(s), float(m)] for s, m in zip(self.support, self.mass)]


def align(p: ProbabilityVector, q: ProbabilityVector) -> tuple[list, np.ndarray, np.ndarray]:
    """Common support (missing states get mass 0)."""
    keys = sorted(set(p.support) | set(q.support))
    pd, qd = p.as_dict(), q.as_dict()
    return keys, np.array([pd.get(s, 0.0) for s in keys]), np.array([qd.get(s, 0.0) for s in keys])


# -- absorbing chains ------------------------------------------------------


def _coo(triplets, shape):
    t = np.array(triplets, dtype=float).reshape(-1, 3)
    return sp.coo_matrix((t[:, 2], (t[:, 0].astype(np.int64), t[:, 1].astype(np.int64))), shape=shape)


def _solve_absorption(n_trans: int, trans: list, absorb: list, n_abs: int) -> np.ndarray:
    """Solve ``(I - T) B = R``; ``trans``/``absorb`` are (i, j, p) triplets."""
    if n_trans == 0:
        return np.zeros((0, n_abs))
    T = _coo(trans, (n_trans, n_trans)).tocsr()
    R = _coo(absorb, (n_trans, n_abs)).toarray()
    A = sp.identity(n_trans, format="csr") - T
    if n_trans <= DENSE_LIMIT:
        Ad = A.toarray()
        try:
            B = np.linalg.solve(Ad, R)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from None
        resid = np.abs(Ad @ B - R).max() if R.size else 0.0
    else:
        B = spla.splu(A.tocsc()).solve(R)
        resid = np.abs(A @ B - R).max() if R.size else 0.0
    if not np.isfinite(B).all():
        raise SingularSystem("non-finite absorption probabilities")
    if resid > RESIDUAL_TOL:
        raise NumericalFailure(f"absorption residual {resid:.3e}")
    return B


class StabilizationChain:
    """Absorbing chain of one stabilization on ``graph`` with threshold ``k``.

    ``order`` is ``"lowest"`` or ``"fifo"``; results are identical for both
    by the Abelian property, which the test-suite checks.
    """

    def __init__(self, graph: GraphTopology, k: int, order: str = "lowest",
                 keep_residue: bool = False, cap: int | None = None):
        if k < 2:
            raise BadParameter(f"threshold must be >= 2, got {k}")
        if order not in ("lowest", "fifo"):
            raise BadParameter(f"oracle order must be 'lowest' or 'fifo', got {order!r}")
        self.graph = graph
        self.k = k
        self.order = order
        self.keep_residue = keep_residue
        self.cap = state_cap() if cap is None else cap

    def _unstable(self, e, r, x):
        return e[x] >= 1 and (e[x] >= self.k or r[x] != 0)

    def _start(self, eta, res):
        eta, res = tuple(int(v) for v in eta), tuple(int(v) % self.k for v in res)
        if self.order == "fifo":
            q = tuple(x for x in range(len(eta)) if self._unstable(eta, res, x))
            return eta, res, q
        return eta, res

    def _moves(self, state):
        """Successor states with probabilities; empty list when stable."""
        k, n = self.k, self.graph.n_vertices
        eta, res = state[0], state[1]
        if self.order == "fifo":
            queue = state[2]
            if not queue:
                return []
            x = queue[0]
            rest = queue[1:]
        else:
            x = next((v for v in range(n) if self._unstable(eta, res, v)), None)
            if x is None:
                return []
        nbrs = self.graph.adjacency[x]
        d = len(nbrs)
        out = []
        for y, c in Counter(nbrs).items():
            e = list(eta)
            r = list(res)
            r[x] = (r[x] + 1) % k
            if y != x:
                e[x] -= 1
                if y != n:
                    e[y] += 1
            if self.order == "fifo":
                q = list(rest)
                if y != x and y != n and y not in q and self._unstable(e, r, y):
                    q.append(y)
                if x not in q and self._unstable(e, r, x):
                    q.append(x)
                nxt = (tuple(e), tuple(r), tuple(q))
            else:
                nxt = (tuple(e), tuple(r))
            out.append((c / d, nxt))
        return out

    def _final_key(self, state):
        return (state[0], state[1]) if self.keep_residue else state[0]

    def solve(self, starts: Sequence[tuple]) -> list[dict]:
        """Outcome law (dict final -> prob) for each ``(eta, res)`` start."""
        roots = [self._start(e, r) for e, r in starts]
        index: dict = {}
        absorbing: dict = {}
        trans, absorb = [], []
        moves_of = {}
        queue = deque()
        for s in roots:
            if s not in index and s not in moves_of:
                mv = self._moves(s)
                moves_of[s] = mv
                if mv:
                    index[s] = len(index)
                queue.append(s)
        while queue:
            s = queue.popleft()
            mv = moves_of[s]
            if not mv:
                continue
            i = index[s]
            for p, t in mv:
                if t not in moves_of:
                    tm = self._moves(t)
                    moves_of[t] = tm
                    if tm:
                        if len(index) >= self.cap:
                            raise StateCapExceeded(f"more than {self.cap} transient states")
                        index[t] = len(index)
                        queue.append(t)
                if moves_of[t]:
                    trans.append((i, index[t], p))
                else:
                    key = self._final_key(t)
                    j = absorbing.setdefault(key, len(absorbing))
                    absorb.append((i, j, p))
        B = _solve_absorption(len(index), trans, absorb, len(absorbing))
        keys = list(absorbing)
        laws = []
        for s in roots:
            if moves_of[s]:
                row = B[index[s]]
                laws.append({keys[j]: float(row[j]) for j in np.flatnonzero(row > 0)})
            else:
                laws.append({self._final_key(s): 1.0})
        return laws


def stabilization_distribution(initial, graph: GraphTopology, k: int | None = None,
                               order: str = "lowest", keep_residue: bool = False) -> ProbabilityVector:
    """Exact law of the stable configuration reached from ``initial`` (a Config)."""
    k = initial.k if k is None else k
    chain = StabilizationChain(graph, k, order=order, keep_residue=keep_residue)
    law = chain.solve([(initial.eta, initial.h)])[0]
    return ProbabilityVector.from_dict(law)


# -- the driven chain ------------------------------------------------------


@dataclass
class MarkovMatrix:
    states: tuple
    matrix: np.ndarray

    def row(self, state) -> ProbabilityVector:
        i = self.states.index(state)
        nz = np.flatnonzero(self.matrix[i] > 0)
        return ProbabilityVector(tuple(self.states[j] for j in nz), self.matrix[i, nz])


def stable_configs(n: int, k: int) -> list[tuple]:
    return [tuple(c) for c in itertools.product(range(k), repeat=n)]


def transition_matrix(graph: GraphTopology, k: int = 2, add_on_v_only: bool = False,
                      order: str = "lowest") -> MarkovMatrix:
    """One-step matrix of the driven chain over ``{0..k-1}^V``.

    Addition is uniform on ``V`` plus the sink (a sink draw is a lazy step)
    unless ``add_on_v_only``.
    """
    n = graph.n_vertices
    if k**n > state_cap():
        raise StateCapExceeded(f"{k}^{n} stable configurations exceed the state cap")
    states = stable_configs(n, k)
    pos = {s: i for i, s in enumerate(states)}
    starts = []
    for s in states:
        for x in range(n):
            e = list(s)
            e[x] += 1
            starts.append((e, [0] * n))
    laws = StabilizationChain(graph, k, order=order).solve(starts)
    m = n if add_on_v_only else n + 1
    Q = np.zeros((len(states), len(states)))
    it = iter(laws)
    for i, s in enumerate(states):
        if not add_on_v_only:
            Q[i, i] += 1.0 / m
        for _ in range(n):
            for t, p in next(it).items():
                Q[i, pos[t]] += p / m
    return MarkovMatrix(tuple(states), Q)


def stationary_distribution(Q) -> ProbabilityVector:
    """Solve ``pi Q = pi``, ``sum(pi) = 1`` for an irreducible chain.

    ``Q`` is a :class:`MarkovMatrix` or a bare row-stochastic array (states
    are then the indices).
    """
    if isinstance(Q, MarkovMatrix):
        states, P = Q.states, np.asarray(Q.matrix, dtype=float)
    else:
        P = np.asarray(Q, dtype=float)
        states = tuple(range(P.shape[0]))
    n = P.shape[0]
    if P.shape != (n, n) or (P < 0).any() or np.abs(P.sum(axis=1) - 1).max() > 1e-12:
        raise BadParameter("Q is not a square row-stochastic matrix")
    ncomp, _ = csgraph.connected_components(sp.csr_matrix(P > 0), directed=True, connection="strong")
    if ncomp != 1:
        raise NotIrreducible(f"chain has {ncomp} communicating classes")
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from None
    resid = np.abs(pi @ P - pi).max()
    if resid > RESIDUAL_TOL:
        raise NumericalFailure(f"stationarity residual {resid:.3e}")
    return ProbabilityVector(states, pi)


def sampler_distribution(graph: GraphTopology, k: int = 2, order: str = "lowest") -> ProbabilityVector:
    """Exact law of the exact sampler: average over all ``k^|V|`` residue starts."""
    n = graph.n_vertices
    if k**n > state_cap():
        raise StateCapExceeded(f"{k}^{n} residue vectors exceed the state cap")
    starts = [([k - 1] * n, list(r)) for r in itertools.product(range(k), repeat=n)]
    laws = StabilizationChain(graph, k, order=order).solve(starts)
    acc: dict = {}
    w = 1.0 / len(starts)
    for law in laws:
        for t, p in law.items():
            acc[t] = acc.get(t, 0.0) + w * p
    return ProbabilityVector.from_dict(acc)


# -- complete-graph micro chain ---------------------------------------------


def check_micro_state(N: int, x: int, y: int):
    if N < 1 or not (0 <= y <= x and x - y <= N - 1):
        raise InvalidState(f"({x}, {y}) is not a micro state for N={N}")


def micro_absorption_distribution(N: int, x0: int, y0: int) -> ProbabilityVector:
    """Exact law of the total particle count when the active count first hits 0."""
    check_micro_state(N, x0, y0)
    if y0 == 0:
        return ProbabilityVector((x0,), np.array([1.0]))
    # transient states (x, y), y >= 1, x <= x0, x - y <= N - 1, x >= y
    index = {}
    frontier = deque([(x0, y0)])
    index[(x0, y0)] = 0
    trans, absorb = [], []
    cap = state_cap()
    while frontier:
        x, y = frontier.popleft()
        i = index[(x, y)]
        for p, (a, b) in ((1 / N, (x - 1, y - 1)), ((x - y) / N, (x, y + 1)), ((N - 1 - x + y) / N, (x, y - 1))):
            if p == 0:
                continue
            if b == 0:
                absorb.append((i, a, p))
                continue
            if (a, b) not in index:
                if len(index) >= cap:
                    raise StateCapExceeded(f"more than {cap} micro states")
                index[(a, b)] = len(index)
                frontier.append((a, b))
            trans.append((i, index[(a, b)], p))
    B = _solve_absorption(len(index), trans, absorb, x0 + 1)
    row = B[0]
    nz = np.flatnonzero(row > 0)
    return ProbabilityVector(tuple(int(v) for v in nz), row[nz])


def macro_count_law(N: int, k: int) -> ProbabilityVector:
    """One complete-graph macro step from ``k`` particles, written as
    sink / empty / occupied addition followed by a micro run from ``(k+1, 2)``."""
    if not 0 <= k <= N - 1:
        raise InvalidState(f"macro state {k} outside 0..{N - 1}")
    acc = {k: 1.0 / N}
    acc[k + 1] = acc.get(k + 1, 0.0) + (N - 1 - k) / N
    if k > 0:
        for s, p in micro_absorption_distribution(N, k + 1, 2).as_dict().items():
            acc[s] = acc.get(s, 0.0) + k / N * p
    return ProbabilityVector.from_dict({s: p for s, p in acc.items() if p > 0})


def complete_macro_matrix(N: int) -> np.ndarray:
    """Exact ``N x N`` one-step matrix of the macro chain on ``complete_graph(N)``.

    All rows come from one absorbing solve over the micro states with
    ``x <= N``; row ``k`` is the absorption law from ``(k + 1, 1)``.
    Round-off negatives above ``-1e-13`` are set to zero.
    """
    if N < 2:
        raise BadParameter("N must be >= 2")
    index = {}
    for x in range(N + 1):
        for y in range(max(1, x - (N - 1)), x + 1):
            index[(x, y)] = len(index)
    if len(index) > state_cap():
        raise StateCapExceeded(f"{len(index)} micro states exceed the state cap")
    trans, absorb = [], []
    for (x, y), i in index.items():
        for p, (a, b) in ((1 / N, (x - 1, y - 1)), ((x - y) / N, (x, y + 1)), ((N - 1 - x + y) / N, (x, y - 1))):
            if p == 0:
                continue
            if b == 0:
                absorb.append((i, a, p))
            else:
                trans.append((i, index[(a, b)], p))
    B = _solve_absorption(len(index), trans, absorb, N + 1)
    Q = np.array([B[index[(k + 1, 1)], :N] for k in range(N)])
    if Q.min() < -1e-13:
        raise NumericalFailure(f"negative transition probability {Q.min():.3e}")
    return np.clip(Q, 0.0, None)


def count_law(pv: ProbabilityVector) -> ProbabilityVector:
    """Law of the total particle count of a law over configurations."""
    return pv.pushforward(lambda s: int(sum(s[0] if isinstance(s[0], tuple) else s)))
