"""Derived graph of orbit vectors and the schedules it generates.

Edges follow the orbit action: an edge labeled with cycle C goes from u to
u P_C. Walks read left to right multiply row vectors on the right; ``psi``
turns a walk into the gossip schedule that realises the same product on
states, which reverses the order of cycles.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .graph import Edge, GossipGraph, PointedCycle, edge_key
from .holonomy import CycleAnalysis, NotHolonomicError, Weight, analyze_graph, as_weight, format_vector


@dataclass(frozen=True)
class DerivedEdge:
    source: int
    target: int
    cycle: int  # index into DerivedGraph.analyses
    position: int  # orbit index of the source


@dataclass(frozen=True)
class DerivedGraph:
    graph: GossipGraph
    weight: Weight
    nodes: tuple[Weight, ...]
    edges: tuple[DerivedEdge, ...]
    analyses: tuple[CycleAnalysis, ...]
    basepoint: int = 0

    def cycle_of(self, edge_id: int) -> PointedCycle:
        return self.analyses[self.edges[edge_id].cycle].cycle

    def loop(self, c: int) -> list[int]:
        """Edge ids of the full orbit loop of cycle c, starting at w."""
        return [k for k, e in enumerate(self.edges) if e.cycle == c]

    def to_json(self) -> dict:
        return {
            "basepoint": self.basepoint,
            "nodes": [{"id": k, "coords": format_vector(v)} for k, v in enumerate(self.nodes)],
            "edges": [
                {
                    "id": k,
                    "source": e.source,
                    "target": e.target,
                    "cycle": self.analyses[e.cycle].cycle.label,
                    "position": e.position,
                }
                for k, e in enumerate(self.edges)
            ],
            "cycles": [{"cycle": a.cycle.label, "order_w": a.order_w} for a in self.analyses],
        }

    def to_dot(self) -> str:
        lines = ["digraph derived {"]
        for k, v in enumerate(self.nodes):
            label = "w" if k == self.basepoint else f"n{k}"
            lines.append(f'  n{k} [label="{label}"];')
        for k, e in enumerate(self.edges):
            label = f"{self.analyses[e.cycle].cycle.label}^{e.position}"
            lines.append(f'  n{e.source} -> n{e.target} [label="{label}", id="e{k}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_derived_graph(G: GossipGraph, w: Sequence, analyses: Sequence[CycleAnalysis] | None = None) -> DerivedGraph:
    w = as_weight(w, G.dim)
    if analyses is None:
        report = analyze_graph(G, w)
        analyses = report.analyses
    bad = [a.cycle.label for a in analyses if a.order_w == 0]
    if bad:
        raise NotHolonomicError("not w-holonomic on cycles: " + ", ".join(bad))
    nodes: list[Weight] = [w]
    node_id = {w: 0}
    edges: list[DerivedEdge] = []
    for c, a in enumerate(analyses):
        if a.orbit[0] != w:
            raise ValueError(f"orbit of {a.cycle.label} does not start at w")
        ids = []
        for v in a.orbit:
            if v not in node_id:
                node_id[v] = len(nodes)
                nodes.append(v)
            ids.append(node_id[v])
        k = len(ids)
        for pos in range(k):
            edges.append(DerivedEdge(ids[pos], ids[(pos + 1) % k], c, pos))
    return DerivedGraph(G, w, tuple(nodes), tuple(edges), tuple(analyses))


def walk_is_valid(D: DerivedGraph, walk: Sequence[int]) -> bool:
    if any(not (0 <= k < len(D.edges)) for k in walk):
        return False
    return all(D.edges[a].target == D.edges[b].source for a, b in zip(walk, walk[1:]))


def psi(D: DerivedGraph, walk: Sequence[int]) -> list[Edge]:
    """Gossip schedule of a derived walk: cycle edge lists in reversed walk order."""
    if not walk_is_valid(D, walk):
        raise ValueError("not a walk in the derived graph")
    seq: list[Edge] = []
    for k in reversed(walk):
        seq.extend(D.cycle_of(k).edges)
    return seq


def psi_cycles(D: DerivedGraph, walk: Sequence[int]) -> list[int]:
    """Cycle indices in schedule order (one entry per traversal)."""
    return [D.edges[k].cycle for k in reversed(walk)]


def exhaustive_closed_walk(D: DerivedGraph, seed: int | None = None) -> list[int]:
    """Closed walk at w covering every edge.

    Without a seed each cycle's orbit loop is run once in canonical order;
    with a seed the loop order is shuffled and each loop repeated 1-2 times.
    """
    order = list(range(len(D.analyses)))
    reps = [1] * len(order)
    if seed is not None:
        rng = random.Random(seed)
        rng.shuffle(order)
        reps = [rng.randint(1, 2) for _ in order]
    walk: list[int] = []
    for c, r in zip(order, reps):
        walk.extend(D.loop(c) * r)
    return walk


def is_exhaustive_closed(D: DerivedGraph, walk: Sequence[int]) -> bool:
    if not walk or not walk_is_valid(D, walk):
        return False
    if D.edges[walk[0]].source != D.basepoint or D.edges[walk[-1]].target != D.basepoint:
        return False
    return set(walk) == set(range(len(D.edges)))


def is_spanning(seq: Sequence[Edge], G: GossipGraph) -> bool:
    """True when the edges of seq contain a spanning tree of G."""
    parent = list(range(G.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    merged = 0
    for u, v in {tuple(sorted(e)) for e in seq}:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            merged += 1
    return merged == G.n - 1


def covers_all_edges(seq: Sequence[Edge], G: GossipGraph) -> bool:
    return {edge_key(e) for e in seq} == {edge_key(e) for e in G.edges}


def periodic_schedule(D: DerivedGraph, repetitions: int, walk: Sequence[int] | None = None) -> list[Edge]:
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    if walk is None:
        walk = exhaustive_closed_walk(D)
    return psi(D, list(walk) * repetitions)
