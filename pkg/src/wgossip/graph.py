"""Matrix-weighted gossip graphs.

Agent ``a`` (0-based) owns state indices ``a*m .. a*m + m - 1``. A pre-local
matrix for edge ``(u, v)`` is ``2m x 2m`` with agent ``u``'s states first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .stomat import NotStochasticError, StochasticMatrix

MAX_CYCLES = 10_000

Edge = tuple[int, int]


class CycleLimitError(RuntimeError):
    pass


def edge_key(e: Sequence[int]) -> frozenset:
    return frozenset(e)


def agent_indices(a: int, m: int) -> range:
    return range(a * m, (a + 1) * m)


@dataclass(frozen=True)
class PointedCycle:
    """Closed walk nodes[0] nodes[1] ... nodes[-1] nodes[0] with basepoint nodes[0]."""

    nodes: tuple[int, ...]

    def __post_init__(self):
        if len(self.nodes) < 3:
            raise ValueError("cycles need at least 3 nodes")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"repeated node in cycle {self.label}")

    @property
    def basepoint(self) -> int:
        return self.nodes[0]

    @property
    def edges(self) -> tuple[Edge, ...]:
        k = len(self.nodes)
        return tuple((self.nodes[i], self.nodes[(i + 1) % k]) for i in range(k))

    @property
    def covered(self) -> tuple[int, ...]:
        return tuple(sorted(self.nodes))

    def rotate(self, r: int) -> "PointedCycle":
        r %= len(self.nodes)
        return PointedCycle(self.nodes[r:] + self.nodes[:r])

    def reversed(self) -> "PointedCycle":
        return PointedCycle((self.nodes[0],) + tuple(reversed(self.nodes[1:])))

    @property
    def label(self) -> str:
        return "".join(f"v{v + 1}" for v in self.nodes + self.nodes[:1])

    def __len__(self) -> int:
        return len(self.nodes)


def assemble_local(pre: StochasticMatrix, edge: Edge, n: int, m: int) -> StochasticMatrix:
    """Embed a pre-local matrix into the nm x nm identity."""
    i, j = edge
    if i == j:
        raise ValueError(f"self-loop at v{i + 1}")
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"edge {edge} outside 0..{n - 1}")
    if pre.dim != 2 * m:
        raise ValueError(f"pre-local matrix has dim {pre.dim}, expected {2 * m}")
    idx = list(agent_indices(i, m)) + list(agent_indices(j, m))
    pos = {g: k for k, g in enumerate(idx)}
    one, zero = (Fraction(1), Fraction(0)) if pre.exact else (1.0, 0.0)
    rows = []
    for r in range(n * m):
        if r in pos:
            src = pre.rows[pos[r]]
            row = [zero] * (n * m)
            for k, g in enumerate(idx):
                row[g] = src[k]
        else:
            row = [zero] * (n * m)
            row[r] = one
        rows.append(tuple(row))
    return StochasticMatrix(tuple(rows), pre.exact, False)


@dataclass(frozen=True)
class GossipGraph:
    n: int
    m: int
    edges: tuple[Edge, ...]
    pre_local: tuple[StochasticMatrix, ...]
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if len(self.edges) != len(self.pre_local):
            raise ValueError("one pre-local matrix per edge is required")
        index = {}
        for k, (u, v) in enumerate(self.edges):
            if u == v:
                raise ValueError(f"self-loop at v{u + 1}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge (v{u + 1},v{v + 1}) references a missing node")
            key = edge_key((u, v))
            if key in index:
                raise ValueError(f"duplicate edge (v{u + 1},v{v + 1})")
            index[key] = k
            if self.pre_local[k].dim != 2 * self.m:
                raise ValueError(f"edge (v{u + 1},v{v + 1}) pre-local matrix must be {2 * self.m}x{2 * self.m}")
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return self.n * self.m

    @property
    def exact(self) -> bool:
        return all(p.exact for p in self.pre_local)

    def edge_id(self, e: Sequence[int]) -> int:
        try:
            return self._index[edge_key(e)]
        except KeyError:
            raise KeyError(f"(v{e[0] + 1},v{e[1] + 1}) is not an edge") from None

    def has_edge(self, e: Sequence[int]) -> bool:
        return edge_key(e) in self._index

    def local(self, e: Sequence[int]) -> StochasticMatrix:
        k = self.edge_id(e)
        return assemble_local(self.pre_local[k], self.edges[k], self.n, self.m)

    def local_rows(self, e: Sequence[int]) -> tuple[list[int], StochasticMatrix]:
        """State indices touched by edge e (stored orientation) and its pre-local matrix."""
        k = self.edge_id(e)
        u, v = self.edges[k]
        return list(agent_indices(u, self.m)) + list(agent_indices(v, self.m)), self.pre_local[k]

    def neighbours(self) -> list[list[int]]:
        adj = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return [sorted(a) for a in adj]

    def to_float(self) -> "GossipGraph":
        return GossipGraph(self.n, self.m, self.edges, tuple(p.to_float() for p in self.pre_local))


def apply_edge(rows: list[list], idx: Sequence[int], pre: StochasticMatrix) -> None:
    """In place: rows <- A_e rows, touching only the rows of the gossiping pair."""
    old = [rows[g] for g in idx]
    width = len(old[0])
    for a, g in enumerate(idx):
        coeffs = [(b, c) for b, c in enumerate(pre.rows[a]) if c]
        rows[g] = [sum(c * old[b][col] for b, c in coeffs) for col in range(width)]


def transition_matrix(G: GossipGraph, seq: Sequence[Sequence[int]], s: int = 0, t: int | None = None) -> StochasticMatrix:
    """A_{e_t} ... A_{e_{s+1}}; identity when t <= s."""
    if t is None:
        t = len(seq)
    if not (0 <= s <= len(seq)) or not (0 <= t <= len(seq)):
        raise IndexError(f"indices s={s}, t={t} outside 0..{len(seq)}")
    exact = G.exact
    I = StochasticMatrix.identity(G.dim, exact)
    rows = [list(r) for r in I.rows]
    for k in range(s, t):
        idx, pre = G.local_rows(seq[k])
        apply_edge(rows, idx, pre)
    return StochasticMatrix(tuple(tuple(r) for r in rows), exact, False)


def cycle_matrix(G: GossipGraph, C: PointedCycle) -> StochasticMatrix:
    """Transition matrix of one traversal of C starting at its basepoint."""
    return transition_matrix(G, C.edges)


# --- topology -------------------------------------------------------------------

def _components(n: int, edges: Iterable[Edge]) -> list[int]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    return [find(x) for x in range(n)]


def connected_pairs(n: int, edges: Iterable[Edge]) -> int:
    comp = _components(n, edges)
    sizes: dict[int, int] = {}
    for c in comp:
        sizes[c] = sizes.get(c, 0) + 1
    return sum(s * (s - 1) // 2 for s in sizes.values())


def is_connected(G: GossipGraph) -> bool:
    return len(set(_components(G.n, G.edges))) <= 1


def find_bridges(G: GossipGraph) -> list[Edge]:
    """Edges whose removal strictly reduces the number of connected node pairs."""
    total = connected_pairs(G.n, G.edges)
    out = []
    for k, e in enumerate(G.edges):
        rest = G.edges[:k] + G.edges[k + 1:]
        if connected_pairs(G.n, rest) < total:
            out.append(e)
    return out


def bridges_by_cycles(G: GossipGraph) -> list[Edge]:
    """Edges whose endpoints lie on no common cycle (cut-edge criterion)."""
    node_sets = [set(C.nodes) for C in enumerate_cycles(G)]
    return [e for e in G.edges if not any(e[0] in s and e[1] in s for s in node_sets)]


def is_bridgeless(G: GossipGraph) -> bool:
    return not find_bridges(G)


def enumerate_cycles(G: GossipGraph, limit: int = MAX_CYCLES) -> list[PointedCycle]:
    """All simple cycles of length >= 3, each in both orientations.

    Basepoint is the smallest node on the cycle; the list is sorted
    lexicographically by node sequence.
    """
    adj = G.neighbours()
    found: list[tuple[int, ...]] = []

    for s in range(G.n):
        path = [s]
        on_path = {s}
        stack = [iter(adj[s])]
        while stack:
            for w in stack[-1]:
                if w == s and len(path) >= 3:
                    found.append(tuple(path))
                    if len(found) > limit:
                        raise CycleLimitError(f"more than {limit} cycles")
                elif w > s and w not in on_path:
                    path.append(w)
                    on_path.add(w)
                    stack.append(iter(adj[w]))
                    break
            else:
                stack.pop()
                on_path.discard(path.pop())
    return [PointedCycle(c) for c in sorted(found)]


def undirected_cycles(cycles: Sequence[PointedCycle]) -> list[frozenset]:
    """Distinct edge sets among the given pointed cycles."""
    seen = []
    for C in cycles:
        key = frozenset(edge_key(e) for e in C.edges)
        if key not in seen:
            seen.append(key)
    return seen


def covered_indices(C: PointedCycle, m: int) -> list[int]:
    return [g for a in C.covered for g in agent_indices(a, m)]


def restrict(obj, C: PointedCycle, m: int):
    """Bar operator: drop rows/columns (or entries) of agents not covered by C."""
    idx = covered_indices(C, m)
    if isinstance(obj, StochasticMatrix):
        return obj.restrict(idx)
    return tuple(obj[g] for g in idx)


@dataclass
class Diagnostics:
    simple: bool
    connected: bool
    bridgeless: bool
    bridges: list[Edge]
    has_cycles: bool
    stochastic_errors: list[str]
    messages: list[str]

    @property
    def theorem_ready(self) -> bool:
        return self.simple and self.connected and self.bridgeless and not self.stochastic_errors


def validate(G: GossipGraph) -> Diagnostics:
    msgs = []
    connected = is_connected(G)
    if not connected:
        msgs.append("not connected")
    bridges = find_bridges(G)
    for u, v in bridges:
        msgs.append(f"bridge present: (v{u + 1},v{v + 1})")
    errors = []
    for (u, v), pre in zip(G.edges, G.pre_local):
        try:
            StochasticMatrix(pre.rows, pre.exact)
        except NotStochasticError as exc:
            errors.append(f"edge ({u + 1},{v + 1}) {exc}")
    msgs.extend(errors)
    has_cycles = bool(enumerate_cycles(G)) if G.n >= 3 else False
    if not has_cycles:
        msgs.append("no cycles — holonomy undefined")
    # GossipGraph construction already rejects loops and duplicate edges
    return Diagnostics(True, connected, not bridges, bridges, has_cycles, errors, msgs)

