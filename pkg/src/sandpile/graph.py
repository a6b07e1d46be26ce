"""Finite multigraphs with a single sink vertex.

Vertices ``0 .. n-1`` are the non-sink sites, index ``n`` is the sink.
Each non-sink vertex keeps a multiset of neighbor *slots*: a self-loop
adds one slot pointing at the vertex itself, an edge to the sink adds one
slot pointing at ``n``. The sink has no slots of its own; particles
entering it are deleted.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BadIndex, BadParameter, DisconnectedGraph, EmptyVertexSet

__all__ = [
    "GraphTopology",
    "build_graph",
    "complete_graph",
    "path_graph",
    "cycle_graph",
    "star_graph",
    "grid_graph",
    "load_graph",
    "parse_graph_spec",
    "small_suite",
]


@dataclass(frozen=True, eq=False)
class GraphTopology:
    n_vertices: int
    adjacency: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...] = field(default=(), repr=False)
    name: str = ""

    @property
    def sink_id(self) -> int:
        return self.n_vertices

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(adj_ptr, adj_idx) arrays consumed by the kernels."""
        ptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        ptr[1:] = np.cumsum(self.degrees)
        idx = np.fromiter(
            (y for a in self.adjacency for y in a), dtype=np.int64, count=int(ptr[-1])
        )
        return ptr, idx

    def __eq__(self, other):
        if not isinstance(other, GraphTopology):
            return NotImplemented
        return self.n_vertices == other.n_vertices and self.adjacency == other.adjacency

    def __hash__(self):
        return hash((self.n_vertices, self.adjacency))

    def to_json(self) -> dict:
        return {"n": self.n_vertices, "edges": [list(e) for e in self.edges]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def build_graph(n_vertices: int, edges: Iterable[Sequence[int]], name: str = "") -> GraphTopology:
    """Validate an edge list and build the slot adjacency.

    ``[u, u]`` is a self-loop (one slot); ``[u, n]`` connects ``u`` to the
    sink. Repeated edges give repeated slots.
    """
    n = int(n_vertices)
    if n <= 0:
        raise EmptyVertexSet("graph needs at least one non-sink vertex")
    edges = [tuple(int(v) for v in e) for e in edges]
    if not edges:
        raise BadParameter("edge list is empty")
    adj: list[list[int]] = [[] for _ in range(n)]
    for e in edges:
        if len(e) != 2:
            raise BadParameter(f"edge {e!r} is not a vertex pair")
        u, v = e
        for w in (u, v):
            if not 0 <= w <= n:
                raise BadIndex(f"vertex {w} outside 0..{n}")
        if u == n and v == n:
            raise BadParameter("sink self-loop has no meaning")
        if u == v:
            adj[u].append(u)
        elif u == n:
            adj[v].append(n)
        elif v == n:
            adj[u].append(n)
        else:
            adj[u].append(v)
            adj[v].append(u)

    # reverse search from the sink
    rev: list[list[int]] = [[] for _ in range(n + 1)]
    for x, nbrs in enumerate(adj):
        for y in nbrs:
            if y != x:
                rev[y].append(x)
    seen = [False] * (n + 1)
    seen[n] = True
    queue = deque([n])
    while queue:
        y = queue.popleft()
        for x in rev[y]:
            if not seen[x]:
                seen[x] = True
                queue.append(x)
    cut = [x for x in range(n) if not seen[x]]
    if cut:
        raise DisconnectedGraph(f"vertices {cut} have no path to the sink")
    return GraphTopology(n, tuple(tuple(a) for a in adj), tuple(edges), name)


def complete_graph(N: int) -> GraphTopology:
    """Complete graph with self-loops on ``N-1`` sites plus the sink.

    Every site has degree ``N``: all ``N-1`` sites (itself once) and the sink.
    """
    if N < 2:
        raise BadParameter(f"complete graph needs N >= 2, got {N}")
    n = N - 1
    edges = [(u, v) for u in range(n) for v in range(u, n)]
    edges += [(u, n) for u in range(n)]
    return build_graph(n, edges, name=f"complete:{N}")


def path_graph(n: int, both_ends: bool = False) -> GraphTopology:
    """Path ``0 - 1 - ... - n-1 - sink``; ``both_ends`` also wires 0 to the sink."""
    if n < 1:
        raise BadParameter(f"path needs n >= 1, got {n}")
    edges = [(i, i + 1) for i in range(n)]
    if both_ends:
        edges.append((0, n))
    return build_graph(n, edges, name=f"path{'2' if both_ends else ''}:{n}")


def cycle_graph(n: int) -> GraphTopology:
    """Cycle on ``n >= 3`` sites with site 0 also wired to the sink."""
    if n < 3:
        raise BadParameter(f"cycle needs n >= 3, got {n}")
    edges = [(i, (i + 1) % n) for i in range(n)] + [(0, n)]
    return build_graph(n, edges, name=f"cycle:{n}")


def star_graph(n: int, sink_center: bool = False) -> GraphTopology:
    """Star on ``n`` sites.

    With ``sink_center`` every site hangs off the sink directly; otherwise
    site 0 is the hub and is the one wired to the sink.
    """
    if n < 1:
        raise BadParameter(f"star needs n >= 1, got {n}")
    if sink_center:
        edges = [(i, n) for i in range(n)]
    else:
        edges = [(0, i) for i in range(1, n)] + [(0, n)]
    return build_graph(n, edges, name=f"star{'s' if sink_center else ''}:{n}")


def grid_graph(rows: int, cols: int) -> GraphTopology:
    """Square grid; each missing lattice neighbor becomes an edge to the sink."""
    if rows < 1 or cols < 1:
        raise BadParameter("grid needs positive dimensions")
    n = rows * cols
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols:
                    v = rr * cols + cc
                    if v > u:
                        edges.append((u, v))
                else:
                    edges.append((u, n))
    return build_graph(n, edges, name=f"grid:{rows}x{cols}")


def load_graph(path) -> GraphTopology:
    data = json.loads(Path(path).read_text())
    try:
        return build_graph(data["n"], data["edges"], name=f"file:{path}")
    except KeyError as exc:
        raise BadParameter(f"graph file missing key {exc}") from None


def parse_graph_spec(spec: str) -> GraphTopology:
    """``complete:N``, ``path:N``, ``cycle:N``, ``star:N``, ``grid:RxC`` or ``file:<path>``."""
    kind, _, arg = spec.partition(":")
    if not arg:
        raise BadParameter(f"bad graph specifier {spec!r}")
    if kind == "file":
        return load_graph(arg)
    try:
        if kind == "grid":
            r, _, c = arg.partition("x")
            return grid_graph(int(r), int(c))
        size = int(arg)
    except ValueError:
        raise BadParameter(f"bad graph specifier {spec!r}") from None
    builders = {
        "complete": complete_graph,
        "path": path_graph,
        "path2": lambda m: path_graph(m, both_ends=True),
        "cycle": cycle_graph,
        "star": star_graph,
        "stars": lambda m: star_graph(m, sink_center=True),
    }
    if kind not in builders:
        raise BadParameter(f"unknown graph family {kind!r}")
    return builders[kind](size)


def small_suite(max_vertices: int = 3) -> list[GraphTopology]:
    """Every path/cycle/complete/star topology with at most ``max_vertices`` sites.

    Includes the one-site complete graph ``complete:2`` (a self-loop plus a
    sink edge) and distinct sink attachments where the family allows them.
    """
    out = []
    for n in range(1, max_vertices + 1):
        out += [path_graph(n), complete_graph(n + 1)]
        if n >= 2:
            out += [path_graph(n, both_ends=True), star_graph(n, sink_center=True)]
        if n >= 3:
            out += [cycle_graph(n), star_graph(n)]
    # cycle with the sink as one of the ring vertices
    if max_vertices >= 2:
        out.append(build_graph(2, [(0, 1), (1, 2), (2, 0)], name="ring-through-sink:3"))
    if max_vertices >= 3:
        out.append(build_graph(3, [(0, 1), (1, 2), (2, 3), (3, 0)], name="ring-through-sink:4"))
    seen, uniq = set(), []
    for g in out:
        if g not in seen:
            seen.add(g)
            uniq.append(g)
    return uniq
