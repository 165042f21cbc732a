"""Per-cycle holonomy: w-orders, orbit sets and induced index partitions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .graph import GossipGraph, PointedCycle, cycle_matrix, enumerate_cycles, restrict, transition_matrix
from .stomat import (
    StochasticMatrix,
    canonical_form,
    fmt_fraction,
    maximal_permutation_index,
    period,
    permutation_order,
    to_fraction,
    unit_row_targets,
    vecmat,
)

NON_HOLONOMIC = "non-holonomic"
HOLONOMIC = "holonomic"
FINITELY_NON_HOLONOMIC = "finitely-non-holonomic"

Weight = tuple[Fraction, ...]


class ExactModeError(TypeError):
    pass


class NotHolonomicError(ValueError):
    pass


def as_weight(w: Iterable, dim: int | None = None) -> Weight:
    """Validate a weight vector in the open simplex, converting to Fractions."""
    if any(isinstance(x, float) for x in w):
        raise ExactModeError("w-order requires exact mode")
    vec = tuple(to_fraction(x) for x in w)
    if dim is not None and len(vec) != dim:
        raise ValueError(f"weight has {len(vec)} entries, expected {dim}")
    if any(x <= 0 for x in vec):
        raise ValueError("weight entries must be positive")
    if sum(vec) != 1:
        raise ValueError(f"weight entries sum to {sum(vec)}")
    return vec


def format_vector(v: Sequence[Fraction]) -> list[str]:
    return [fmt_fraction(x) for x in v]


@dataclass(frozen=True)
class Partition:
    """block0 (permutation indices) plus disjoint irreducible blocks, 0-based."""

    size: int
    block0: tuple[int, ...]
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        b0 = tuple(sorted(self.block0))
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0] if b else -1))
        if any(not b for b in blocks):
            raise ValueError("non-permutation blocks must be nonempty")
        flat = list(b0) + [i for b in blocks for i in b]
        if sorted(flat) != list(range(self.size)):
            missing = sorted(set(range(self.size)) - set(flat))
            raise ValueError(f"not a partition of {self.size} indices (missing {missing}, or overlaps)")
        object.__setattr__(self, "block0", b0)
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_one_based(cls, size: int, block0: Iterable[int], blocks: Iterable[Iterable[int]]) -> "Partition":
        return cls(size, tuple(i - 1 for i in block0), tuple(tuple(i - 1 for i in b) for b in blocks))

    def one_based(self) -> tuple[tuple[int, ...], tuple[tuple[int, ...], ...]]:
        return tuple(i + 1 for i in self.block0), tuple(tuple(i + 1 for i in b) for b in self.blocks)

    def to_json(self) -> dict:
        b0, blocks = self.one_based()
        return {"block0": list(b0), "blocks": [list(b) for b in blocks]}

    @property
    def largest_block(self) -> int:
        return max((len(b) for b in self.blocks), default=0)


def transient_classes(P: StochasticMatrix) -> tuple[tuple[int, ...], ...]:
    return tuple(c.members for c in canonical_form(P).transient)


def cycle_partition(P: StochasticMatrix) -> Partition | None:
    """Partition induced by a cycle matrix; None when a transient class exists (order zero)."""
    cf = canonical_form(P)
    if cf.transient:
        return None
    block0 = set(maximal_permutation_index(P))
    blocks = [c.members for c in cf.ergodic if not set(c.members) <= block0]
    return Partition(P.dim, tuple(block0), tuple(blocks))


def merge_partitions(a: Partition, b: Partition) -> Partition:
    """Intersect permutation sets and join overlapping non-permutation blocks."""
    if a.size != b.size:
        raise ValueError(f"partitions over different ground sets ({a.size} vs {b.size})")
    block0 = set(a.block0) & set(b.block0)
    parent = {i: i for i in range(a.size) if i not in block0}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for blk in a.blocks + b.blocks:
        root = find(blk[0])
        for i in blk[1:]:
            r = find(i)
            if r != root:
                parent[r] = root
    groups: dict[int, list[int]] = {}
    for i in parent:
        groups.setdefault(find(i), []).append(i)
    return Partition(a.size, tuple(block0), tuple(tuple(g) for g in groups.values()))


def block_permutation(P: StochasticMatrix, block0: Sequence[int]) -> tuple[int, ...]:
    """P restricted to a closed permutation index set, as positions within block0."""
    pos = {g: k for k, g in enumerate(block0)}
    targets = unit_row_targets(P)
    try:
        sigma = tuple(pos[targets[g]] for g in block0)
    except KeyError:
        raise ValueError("index set is not a closed permutation block") from None
    if len(set(sigma)) != len(sigma):
        raise ValueError("restriction is not a permutation")
    return sigma


def structural_order_bound(P: StochasticMatrix, partition: Partition) -> int:
    """lcm of the permutation block's order and every irreducible block's period.

    Every w-order of the cycle divides this number.
    """
    L = permutation_order(block_permutation(P, partition.block0)) if partition.block0 else 1
    for blk in partition.blocks:
        L = math.lcm(L, period(P.submatrix(blk)))
    return L


def w_order(G: GossipGraph, C: PointedCycle, w: Sequence, cap: int | None = None) -> int:
    """Smallest k <= cap with w_bar = w_bar (P_bar)^k, else 0."""
    w = as_weight(w, G.dim)
    if not G.exact:
        raise ExactModeError("w-order requires exact mode")
    P = cycle_matrix(G, C)
    if cap is None:
        part = cycle_partition(P)
        if part is None:
            return 0
        cap = structural_order_bound(P, part)
    return _order_search(restrict(w, C, G.m), restrict(P, C, G.m), cap)


def _order_search(wbar: Sequence, Pbar: StochasticMatrix, cap: int) -> int:
    if cap < 1:
        raise ValueError("cap must be at least 1")
    v = tuple(wbar)
    for k in range(1, cap + 1):
        v = vecmat(v, Pbar)
        if v == tuple(wbar):
            return k
    return 0


def orbit_set(G: GossipGraph, C: PointedCycle, w: Sequence, order: int | None = None) -> tuple[Weight, ...]:
    """[w, w P_C, ..., w P_C^(ord-1)] as full-length vectors."""
    w = as_weight(w, G.dim)
    if order is None:
        order = w_order(G, C, w)
    if order == 0:
        raise NotHolonomicError(f"cycle {C.label} not w-holonomic")
    P = cycle_matrix(G, C)
    orbit = [w]
    for _ in range(order - 1):
        orbit.append(vecmat(orbit[-1], P))
    return tuple(orbit)


def classify(order: int) -> str:
    if order == 0:
        return NON_HOLONOMIC
    return HOLONOMIC if order == 1 else FINITELY_NON_HOLONOMIC


def transport_basepoint(G: GossipGraph, C: PointedCycle, w: Sequence, r: int) -> tuple[PointedCycle, Weight]:
    """Move the basepoint r steps along C.

    With P_C = X Y (Y the first r edges, X the rest), w' = w X satisfies
    w' (Y X)^k = w' whenever w (X Y)^k = w.
    """
    w = as_weight(w, G.dim)
    if w_order(G, C, w) == 0:
        raise NotHolonomicError(f"cycle {C.label} not w-holonomic")
    r %= len(C)
    if r == 0:
        return C, w
    X = transition_matrix(G, C.edges, r, len(C))
    return C.rotate(r), vecmat(w, X)


@dataclass(frozen=True)
class CycleAnalysis:
    cycle: PointedCycle
    P: StochasticMatrix
    partition: Partition | None
    order_w: int
    orbit: tuple[Weight, ...]
    structural_order: int | None
    cap: int
    witness: str | None = None

    @property
    def classification(self) -> str:
        return classify(self.order_w)

    @property
    def permutation(self) -> tuple[int, ...]:
        return block_permutation(self.P, self.partition.block0)

    def to_json(self) -> dict:
        return {
            "cycle": self.cycle.label,
            "order_w": self.order_w,
            "structural_order": self.structural_order if self.structural_order is not None else "unbounded-cap",
            "classification": self.classification,
            "partition": self.partition.to_json() if self.partition else None,
            "orbit": [format_vector(v) for v in self.orbit],
            "witness": self.witness,
        }


def analyze_cycle(G: GossipGraph, C: PointedCycle, w: Sequence, cap: int | None = None) -> CycleAnalysis:
    w = as_weight(w, G.dim)
    if not G.exact:
        raise ExactModeError("w-order requires exact mode")
    P = cycle_matrix(G, C)
    part = cycle_partition(P)
    if part is None:
        witness = "transient class " + ", ".join(
            "{" + ",".join(str(i + 1) for i in c) + "}" for c in sorted(transient_classes(P))
        )
        return CycleAnalysis(C, P, None, 0, (), None, cap or 0, witness)
    bound = structural_order_bound(P, part)
    search_cap = cap if cap is not None else bound
    order = _order_search(restrict(w, C, G.m), restrict(P, C, G.m), search_cap)
    witness = None
    if order == 0:
        witness = f"no return within cap {search_cap}" + (" (cap-limited)" if search_cap < bound else "")
    orbit = orbit_set(G, C, w, order) if order else ()
    return CycleAnalysis(C, P, part, order, orbit, bound, search_cap, witness)


def stabilized_indices(a: CycleAnalysis) -> tuple[int, ...]:
    """Indices of block0 left in place by (B00)^ord; all of block0 for distinct weights."""
    if not a.order_w or not a.partition:
        return ()
    sigma = a.permutation
    cur = tuple(range(len(sigma)))
    for _ in range(a.order_w):
        cur = tuple(sigma[i] for i in cur)
    return tuple(a.partition.block0[k] for k in range(len(sigma)) if cur[k] == k)


@dataclass
class HolonomyReport:
    holonomic: bool
    analyses: list[CycleAnalysis]
    offending: list[CycleAnalysis]
    note: str | None = None


def analyze_graph(G: GossipGraph, w: Sequence, cap: int | None = None) -> HolonomyReport:
    """w-holonomy of every cycle of length > 2 (both orientations)."""
    w = as_weight(w, G.dim)
    cycles = enumerate_cycles(G) if G.n >= 3 else []
    if not cycles:
        return HolonomyReport(True, [], [], "no cycles")
    analyses = [analyze_cycle(G, C, w, cap) for C in cycles]
    offending = [a for a in analyses if a.order_w == 0]
    return HolonomyReport(not offending, analyses, offending)


def is_w_holonomic_for_graph(G: GossipGraph, w: Sequence, cap: int | None = None) -> bool:
    return analyze_graph(G, w, cap).holonomic
