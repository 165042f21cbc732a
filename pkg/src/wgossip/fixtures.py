"""Scenarios with ground truth known by construction.

Each pre-local matrix mixes two kinds of rows: unit rows realising a
permutation of some state indices, and reversible averaging groups whose
coefficients satisfy detailed balance against ``w`` (so ``w`` restricted to the
group is left invariant). Permuted indices are never averaged, which makes
cycle orders, partitions and the limit group readable off the construction.
The declared values below come from that bookkeeping and from plain numpy
products, never from the analysis code they are checked against.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .graph import GossipGraph
from .holonomy import Partition
from .stomat import StochasticMatrix

KINDS = ("F1", "F2", "F3")
SHAPES = {"F1": (3, 1), "F2": (4, 2), "F3": (7, 3)}


@dataclass
class EdgeSpec:
    u: int
    v: int
    swaps: list[tuple[int, int]] = field(default_factory=list)  # global index pairs
    groups: list[list[int]] = field(default_factory=list)  # averaging groups, global indices


@dataclass
class Fixture:
    kind: str
    graph: GossipGraph
    weight: tuple[Fraction, ...]
    declared: dict


def random_weight(dim: int, rng: random.Random) -> tuple[Fraction, ...]:
    """Distinct positive rationals summing to 1."""
    raw = rng.sample(range(1, 10 * dim + 1), dim)
    total = sum(raw)
    return tuple(Fraction(x, total) for x in raw)


def averaging_block(weights: Sequence[Fraction], rng: random.Random) -> list[list[Fraction]]:
    """Irreducible lazy block with weights as a left fixed vector (detailed balance)."""
    k = len(weights)
    order = list(range(k))
    rng.shuffle(order)
    t = [[0] * k for _ in range(k)]
    for a, b in zip(order, order[1:]):
        t[a][b] = t[b][a] = rng.randint(1, 3)
    for a in range(k):
        for b in range(a + 1, k):
            if not t[a][b] and rng.random() < 0.5:
                t[a][b] = t[b][a] = rng.randint(1, 3)
    load = max(sum(t[a][b] * weights[b] for b in range(k)) for a in range(k))
    c = 1 / (2 * load) if load else Fraction(0)
    rows = [[c * t[a][b] * weights[b] for b in range(k)] for a in range(k)]
    for a in range(k):
        rows[a][a] = 1 - sum(rows[a][b] for b in range(k) if b != a)
    return rows


def build_pre_local(spec: EdgeSpec, m: int, w: Sequence[Fraction], rng: random.Random) -> StochasticMatrix:
    idx = list(range(spec.u * m, (spec.u + 1) * m)) + list(range(spec.v * m, (spec.v + 1) * m))
    pos = {g: k for k, g in enumerate(idx)}
    size = 2 * m
    rows = [[Fraction(int(i == j)) for j in range(size)] for i in range(size)]
    for a, b in spec.swaps:
        for x, y in ((a, b), (b, a)):
            rows[pos[x]] = [Fraction(int(j == pos[y])) for j in range(size)]
    for group in spec.groups:
        block = averaging_block([w[g] for g in group], rng)
        for a, ga in enumerate(group):
            row = [Fraction(0)] * size
            for b, gb in enumerate(group):
                row[pos[gb]] = block[a][b]
            rows[pos[ga]] = row
    return StochasticMatrix.from_rows(rows)


def _union_blocks(size: int, groups: list[list[int]]) -> Partition:
    parent = list(range(size))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    touched = set()
    for g in groups:
        touched.update(g)
        for x in g[1:]:
            ra, rb = find(g[0]), find(x)
            if ra != rb:
                parent[rb] = ra
    comps: dict[int, list[int]] = {}
    for x in touched:
        comps.setdefault(find(x), []).append(x)
    block0 = [x for x in range(size) if x not in touched]
    return Partition(size, tuple(block0), tuple(tuple(c) for c in comps.values()))


def _cycle_edges(nodes: Sequence[int]) -> list[tuple[int, int]]:
    return [(nodes[i], nodes[(i + 1) % len(nodes)]) for i in range(len(nodes))]


def _swap_order(specs: dict, cycle: Sequence[int], size: int) -> int:
    sigma = list(range(size))
    for e in _cycle_edges(cycle):
        for a, b in specs[frozenset(e)].swaps:
            sigma[a], sigma[b] = sigma[b], sigma[a]
    seen, order = set(), 1
    for s in range(size):
        if s in seen:
            continue
        length, i = 0, s
        while i not in seen:
            seen.add(i)
            i = sigma[i]
            length += 1
        order = math.lcm(order, length)
    return order


def _numpy_cycle_product(G: GossipGraph, cycle: Sequence[int]) -> np.ndarray:
    mats = []
    for u, v in _cycle_edges(cycle):
        k = G.edge_id((u, v))
        a, b = G.edges[k]
        idx = list(range(a * G.m, (a + 1) * G.m)) + list(range(b * G.m, (b + 1) * G.m))
        A = np.eye(G.dim)
        A[np.ix_(idx, idx)] = G.pre_local[k].to_array()
        mats.append(A)
    # latest edge leftmost
    out = np.eye(G.dim)
    for A in mats:
        out = A @ out
    return out


def _specs(kind: str) -> tuple[list[EdgeSpec], list[tuple[int, ...]], int]:
    """Edge specs, undirected cycles (as node tuples from the smallest node) and |K|."""
    if kind == "F1":
        specs = [EdgeSpec(0, 1, swaps=[(0, 1)]), EdgeSpec(1, 2, swaps=[(1, 2)]), EdgeSpec(0, 2)]
        return specs, [(0, 1, 2)], 3
    if kind == "F2":
        # T-state of agent a is 2a (permuted), R-state is 2a+1 (averaged)
        specs = [
            EdgeSpec(0, 1, swaps=[(0, 2)]),
            EdgeSpec(1, 2, swaps=[(2, 4)]),
            EdgeSpec(0, 2, groups=[[1, 5]]),
            EdgeSpec(0, 3, groups=[[1, 7]]),
            EdgeSpec(2, 3, groups=[[5, 7]]),
        ]
        return specs, [(0, 1, 2), (0, 1, 2, 3), (0, 2, 3)], 3
    if kind == "F3":
        # 1-based state indices of the 21-state butterfly, shifted to 0-based
        z = lambda *xs: [x - 1 for x in xs]  # noqa: E731
        specs = [
            EdgeSpec(0, 1, groups=[z(1, 3, 5)]),
            EdgeSpec(1, 2, swaps=[tuple(z(4, 7))], groups=[z(6, 8, 9)]),
            EdgeSpec(0, 2, groups=[z(1, 3)]),
            EdgeSpec(0, 3, swaps=[tuple(z(10, 11))], groups=[z(1, 2)]),
            EdgeSpec(3, 4, groups=[z(12, 13)]),
            EdgeSpec(0, 4, groups=[z(14, 15)]),
            EdgeSpec(4, 5, groups=[z(13, 16)]),
            EdgeSpec(5, 6, groups=[z(16, 17, 19, 20)]),
            EdgeSpec(4, 6, groups=[z(13, 19)]),
        ]
        return specs, [(0, 1, 2), (0, 3, 4), (4, 5, 6)], 4
    raise ValueError(f"unknown fixture kind {kind!r}; expected one of {', '.join(KINDS)}")


def gen_fixture(kind: str, seed: int = 0, n: int | None = None, m: int | None = None,
                weight: Sequence | None = None) -> Fixture:
    if kind not in SHAPES:
        raise ValueError(f"unknown fixture kind {kind!r}; expected one of {', '.join(KINDS)}")
    want = SHAPES[kind]
    if (n, m) != (None, None) and (n, m) != want:
        raise ValueError(f"{kind} is defined for n={want[0]}, m={want[1]} only (got n={n}, m={m})")
    n, m = want
    rng = random.Random(seed)
    dim = n * m
    w = tuple(Fraction(x) for x in weight) if weight is not None else random_weight(dim, rng)
    if len(w) != dim:
        raise ValueError(f"weight must have {dim} entries")
    specs, cycles, k_order = _specs(kind)
    pre = tuple(build_pre_local(s, m, w, rng) for s in specs)
    G = GossipGraph(n, m, tuple((s.u, s.v) for s in specs), pre)

    by_edge = {frozenset((s.u, s.v)): s for s in specs}
    declared_cycles = {}
    partitions = []
    epsilon = None
    for nodes in cycles:
        groups = [g for e in _cycle_edges(nodes) for g in by_edge[frozenset(e)].groups]
        part = _union_blocks(dim, groups)
        partitions.append(part)
        order = _swap_order(by_edge, nodes, dim)
        product = _numpy_cycle_product(G, nodes)
        eps_c = min((product[np.ix_(b, b)][product[np.ix_(b, b)] > 0].min() for b in part.blocks), default=None)
        if eps_c is not None:
            epsilon = eps_c if epsilon is None else min(epsilon, eps_c)
        reverse = (nodes[0],) + tuple(reversed(nodes[1:]))
        for c in (nodes, reverse):
            label = "".join(f"v{v + 1}" for v in c + c[:1])
            declared_cycles[label] = {"order": order, "partition": part}
        # the reversed traversal has the same averaging groups, hence the same partition
        rev_product = _numpy_cycle_product(G, reverse)
        eps_r = min((rev_product[np.ix_(b, b)][rev_product[np.ix_(b, b)] > 0].min() for b in part.blocks), default=None)
        if eps_r is not None:
            epsilon = min(epsilon, eps_r)

    global_groups = [g for s in specs for g in s.groups]
    global_part = _union_blocks(dim, global_groups)
    p_blocks = [tuple(w[i] / sum(w[j] for j in b) for i in b) for b in global_part.blocks]
    declared = {
        "cycles": declared_cycles,
        "global_partition": global_part,
        "epsilon": epsilon,
        "K_order": k_order,
        "p": p_blocks,
        "undirected_cycles": len(cycles),
    }
    return Fixture(kind, G, w, declared)


def f1_with_transient() -> tuple[GossipGraph, tuple[Fraction, ...]]:
    """F1 with the identity on (v1,v3) replaced by a copy of v1's state, creating a transient class."""
    F = gen_fixture("F1", weight=(Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)))
    G = F.graph
    bad = StochasticMatrix.from_rows([[1, 0], [1, 0]])
    pre = tuple(bad if e == (0, 2) else p for e, p in zip(G.edges, G.pre_local))
    return GossipGraph(G.n, G.m, G.edges, pre), F.weight
