"""Simulation along schedules and the limit structure of periodic products."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Sequence

import numpy as np

from . import kernels
from .derived import DerivedGraph, build_derived_graph, exhaustive_closed_walk, is_exhaustive_closed, psi, psi_cycles
from .graph import Edge, GossipGraph, apply_edge, validate
from .holonomy import (
    CycleAnalysis,
    Partition,
    Weight,
    analyze_graph,
    as_weight,
    block_permutation,
    format_vector,
    merge_partitions,
)
from .stomat import StochasticMatrix, fmt_fraction, min_entry, seminorm, to_fraction

DEFAULT_TOL = 1e-10
ROUNDING = 1e-6  # 0/1 rounding threshold for float permutation parts
P_TOL = 1e-9
FLOAT_SLACK = 1e-14
GROUP_CAP = 10**6


class ContractionError(RuntimeError):
    pass


class GroupCapError(RuntimeError):
    def __init__(self, msg: str, generators):
        super().__init__(msg)
        self.generators = generators


# --- simulation -------------------------------------------------------------------

@dataclass
class Trajectory:
    x0: tuple
    schedule: list[Edge]
    times: list[int]
    states: list[tuple]
    exact: bool
    seminorms: list[list[float]] = field(default_factory=list)

    @property
    def final(self) -> tuple:
        return self.states[-1]


def simulate(G: GossipGraph, schedule: Sequence[Edge], x0: Sequence, steps: int | None = None,
             every: int = 1, blocks: Sequence[Sequence[int]] | None = None) -> Trajectory:
    """Run x(t+1) = A_{e_t} x(t); a schedule shorter than ``steps`` is repeated.

    Exact when G is exact and x0 has no floats. With ``blocks`` the float
    running product is tracked and its block semi-norms recorded at each
    checkpoint.
    """
    if len(x0) != G.dim:
        raise ValueError(f"x0 has {len(x0)} entries, expected {G.dim}")
    if every < 1:
        raise ValueError("every must be positive")
    schedule = [tuple(e) for e in schedule]
    for e in schedule:
        G.edge_id(e)
    if steps is None:
        steps = len(schedule)
    if steps and not schedule:
        raise ValueError("empty schedule cannot be run for a positive number of steps")
    exact = G.exact and not any(isinstance(v, float) for v in x0)
    locs = [G.local_rows(e) for e in schedule]
    if exact:
        x = [to_fraction(v) for v in x0]
        mats = [p.rows for _, p in locs]
    else:
        x = np.array([float(v) for v in x0])
        mats = [p.to_array() for _, p in locs]
    track = blocks is not None and not exact
    if track:
        pre, idx = kernels.pack_graph(G)
        members, offsets = kernels.pack_blocks(blocks)
        ids = kernels.schedule_ids(G, schedule)
        P = np.eye(G.dim)
    times, states, norms = [0], [tuple(x)], []
    if track:
        norms.append(list(kernels.block_seminorms(P, members, offsets)))
    for t in range(steps):
        k = t % len(schedule)
        rows, A = locs[k][0], mats[k]
        if exact:
            old = [x[g] for g in rows]
            for a, g in enumerate(rows):
                x[g] = sum(A[a][b] * old[b] for b in range(len(rows)))
        else:
            x[rows] = A @ x[rows]
        if track:
            kernels.apply_schedule(P, pre, idx, ids[k:k + 1], 1)
        if (t + 1) % every == 0 or t + 1 == steps:
            times.append(t + 1)
            states.append(tuple(x))
            if track:
                norms.append(list(kernels.block_seminorms(P, members, offsets)))
    return Trajectory(tuple(x0), schedule, times, states, exact, norms)


# --- predicted structure ------------------------------------------------------------

def global_partition(analyses: Sequence[CycleAnalysis], size: int | None = None) -> Partition:
    parts = [a.partition for a in analyses]
    if any(p is None for p in parts):
        raise ValueError("global partition needs every cycle to be w-holonomic")
    if not parts:
        if size is None:
            raise ValueError("size required when there are no cycles")
        return Partition(size, tuple(range(size)), ())
    return reduce(merge_partitions, parts)


def epsilon_bound(analyses: Sequence[CycleAnalysis]) -> Fraction | None:
    """Smallest nonzero entry over the irreducible blocks of every cycle matrix.

    None means every cycle is a pure permutation ("no contraction blocks").
    """
    eps = None
    for a in analyses:
        if a.partition is None:
            raise ValueError(f"cycle {a.cycle.label} has no partition")
        for blk in a.partition.blocks:
            e = min_entry(a.P.submatrix(blk))
            eps = e if eps is None else min(eps, e)
    return eps


def predicted_limit_blocks(w: Sequence, partition: Partition) -> list[tuple[Fraction, ...]]:
    w = as_weight(w, partition.size)
    out = []
    for blk in partition.blocks:
        alpha = sum(w[i] for i in blk)
        out.append(tuple(w[i] / alpha for i in blk))
    return out


def relabel_order(partition: Partition) -> list[int]:
    return list(partition.block0) + [i for b in partition.blocks for i in b]


@dataclass(frozen=True)
class LimitGroup:
    block0: tuple[int, ...]
    generators: tuple[tuple[int, ...], ...]
    elements: tuple[tuple[int, ...], ...]

    @property
    def order(self) -> int:
        return len(self.elements)

    def __contains__(self, sigma) -> bool:
        return tuple(sigma) in self._set

    @property
    def _set(self) -> frozenset:
        return frozenset(self.elements)

    def to_json(self, listing_limit: int = 1000) -> dict:
        one = lambda s: [self.block0[k] + 1 for k in s]  # noqa: E731
        out = {
            "on_indices": [i + 1 for i in self.block0],
            "order": self.order,
            "generators": [one(g) for g in self.generators],
        }
        if self.order <= listing_limit:
            out["elements"] = [one(s) for s in self.elements]
        return out


def limit_group(analyses: Sequence[CycleAnalysis], partition: Partition, cap: int = GROUP_CAP) -> LimitGroup:
    """Group generated by each cycle matrix restricted to the global permutation block.

    Permutations are tuples of positions within ``partition.block0``.
    """
    block0 = partition.block0
    gens = []
    for a in analyses:
        g = block_permutation(a.P, block0)
        if g not in gens:
            gens.append(g)
    ident = tuple(range(len(block0)))
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for s in frontier:
            for g in gens:
                t = tuple(s[g[i]] for i in range(len(g)))
                if t not in seen:
                    seen.add(t)
                    nxt.append(t)
                    if len(seen) > cap:
                        raise GroupCapError(f"limit group exceeds {cap} elements", tuple(gens))
        frontier = nxt
    return LimitGroup(block0, tuple(gens), tuple(sorted(seen)))


# --- running products -----------------------------------------------------------------

class _FloatProduct:
    exact = False

    def __init__(self, G: GossipGraph, partition: Partition):
        self.P = np.eye(G.dim)
        self.pre, self.idx = kernels.pack_graph(G)
        self.members, self.offsets = kernels.pack_blocks(partition.blocks)
        self.G = G
        self.block0 = list(partition.block0)

    def ids(self, seq):
        return kernels.schedule_ids(self.G, seq)

    def apply(self, ids, reps: int = 1):
        kernels.apply_schedule(self.P, self.pre, self.idx, ids, reps)

    def seminorms(self) -> list[float]:
        return [float(v) for v in kernels.block_seminorms(self.P, self.members, self.offsets)]

    def renormalize(self) -> float:
        drift = kernels.max_row_drift(self.P)
        self.P /= self.P.sum(axis=1, keepdims=True)
        return drift

    def perm_part(self):
        if not self.block0:
            return ()
        sub = self.P[np.ix_(self.block0, self.block0)]
        arg = sub.argmax(axis=1)
        if np.any(sub[np.arange(len(arg)), arg] < 1 - ROUNDING):
            return None
        return tuple(int(a) for a in arg)

    def array(self) -> np.ndarray:
        return self.P


class _ExactProduct:
    exact = True

    def __init__(self, G: GossipGraph, partition: Partition):
        self.rows = [list(r) for r in StochasticMatrix.identity(G.dim).rows]
        self.G = G
        self.blocks = partition.blocks
        self.block0 = list(partition.block0)

    def ids(self, seq):
        return [self.G.local_rows(e) for e in seq]

    def apply(self, ids, reps: int = 1):
        for _ in range(reps):
            for idx, pre in ids:
                apply_edge(self.rows, idx, pre)

    def seminorms(self) -> list[Fraction]:
        return [seminorm([[self.rows[i][j] for j in b] for i in b]) for b in self.blocks]

    def renormalize(self) -> float:
        return 0.0

    def perm_part(self):
        pos = {g: k for k, g in enumerate(self.block0)}
        out = []
        for g in self.block0:
            hits = [j for j in self.block0 if self.rows[g][j] == 1]
            if len(hits) != 1:
                return None
            out.append(pos[hits[0]])
        return tuple(out)

    def array(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.rows])


@dataclass(frozen=True)
class TraceRow:
    checkpoint: int
    repetitions: int
    block: int
    seminorm: float
    bound: float | None

    @property
    def violated(self) -> bool:
        return self.bound is not None and self.seminorm > self.bound + FLOAT_SLACK


@dataclass
class LimitReport:
    partition: Partition
    group: LimitGroup
    predicted: list[tuple[Fraction, ...]]
    measured: list[list[float]]
    epsilon: Fraction | None
    l_G: int
    spacing: int
    tol: float
    mode: str
    reps: int
    converged: bool
    max_seminorm: float
    trace: list[TraceRow]
    observed: list[tuple[int, ...]]
    observed_at_repetitions: list[tuple[int, ...]]
    observed_stable: bool
    perm_in_group: bool
    modes_agree: bool
    max_p_error: float
    off_block_max: float
    max_drift: float
    backend: str
    limit_product: list[list[float]] = field(default_factory=list)

    @property
    def violations(self) -> list[TraceRow]:
        return [r for r in self.trace if r.violated]

    @property
    def clauses(self) -> dict[str, bool | None]:
        finite = self.observed_stable and 0 < len(self.observed) <= self.group.order
        block_diag = self.off_block_max <= P_TOL and self.perm_in_group
        if self.partition.blocks:
            rank_one = self.converged and self.max_p_error <= P_TOL and self.perm_in_group
        else:
            rank_one = None  # vacuous: no averaging blocks
        return {"i": finite, "ii": block_diag, "iii": rank_one}

    def to_json(self) -> dict:
        one = lambda s: [self.group.block0[k] + 1 for k in s]  # noqa: E731
        return {
            "mode": self.mode,
            "backend": self.backend,
            "tol": self.tol,
            "repetitions": self.reps,
            "converged": self.converged,
            "global_partition": self.partition.to_json(),
            "l_G": self.l_G,
            "checkpoint_spacing": self.spacing,
            "epsilon": fmt_fraction(self.epsilon) if self.epsilon is not None else "no contraction blocks",
            "group": self.group.to_json(),
            "observed_limit_set": [one(s) for s in self.observed],
            "observed_limit_set_size": len(self.observed),
            "observed_at_repetitions": [one(s) for s in self.observed_at_repetitions],
            "limit_set_divides_K": self.group.order % max(len(self.observed), 1) == 0,
            "predicted_blocks": [format_vector(p) for p in self.predicted],
            "measured_blocks": self.measured,
            "max_block_seminorm": self.max_seminorm,
            "max_p_error": self.max_p_error,
            "off_block_max": self.off_block_max,
            "max_row_drift": self.max_drift,
            "permutation_part_in_K": self.perm_in_group,
            "float_exact_permutation_agree": self.modes_agree,
            "contraction_violations": len(self.violations),
            "clauses": self.clauses,
        }

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["checkpoint", "repetitions", "block", "seminorm", "bound"])
        for r in self.trace:
            w.writerow([r.checkpoint, r.repetitions, r.block + 1, repr(r.seminorm), "" if r.bound is None else repr(r.bound)])
        return buf.getvalue()


def run_to_convergence(D: DerivedGraph, walk: Sequence[int] | None = None, tol: float = DEFAULT_TOL,
                       max_reps: int = 10_000, mode: str = "float", spacing: int | None = None,
                       stop_at_tol: bool = True, sample_factor: int = 2) -> LimitReport:
    """Repeat the schedule of a closed exhaustive walk and track the limit structure.

    Block semi-norms are checked after every repetition (any increase raises
    ContractionError) and compared against the (1 - eps) contraction bound
    every ``spacing`` repetitions. Once converged (or out of repetitions) the
    walk is run ``sample_factor * |K|`` more times, sampling the permutation
    part after every cycle traversal; that sample is the observed limit set.
    """
    if mode not in ("float", "exact"):
        raise ValueError("mode must be 'float' or 'exact'")
    tol = float(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_reps < 0:
        raise ValueError("max_reps must be nonnegative")
    if walk is None:
        walk = exhaustive_closed_walk(D)
    if not is_exhaustive_closed(D, walk):
        raise ValueError("walk is not a closed exhaustive walk at w")
    G = D.graph
    analyses = D.analyses
    partition = global_partition(analyses, G.dim)
    group = limit_group(analyses, partition)
    eps = epsilon_bound(analyses)
    l_G = partition.largest_block
    if spacing is None:
        spacing = max(1, math.ceil(l_G / 2))
    predicted = predicted_limit_blocks(D.weight, partition)

    state = (_ExactProduct if mode == "exact" else _FloatProduct)(G, partition)
    full = state.ids(psi(D, walk))
    order = psi_cycles(D, walk)
    segments = [state.ids(analyses[c].cycle.edges) for c in order]
    gens = [block_permutation(a.P, partition.block0) for a in analyses]
    slack = 0 if mode == "exact" else FLOAT_SLACK

    ident = tuple(range(len(partition.block0)))
    exact_perm = ident
    perm_ok = True
    agree = True
    max_drift = 0.0

    def rep_perm(p):
        # exact permutation part of (one repetition) . p
        for c in order:
            g = gens[c]
            p = tuple(p[g[i]] for i in range(len(g)))
        return p

    norms = state.seminorms()
    trace = [TraceRow(0, 0, b, float(v), None) for b, v in enumerate(norms)]
    last_checkpoint = norms
    prev = norms
    reps = 0
    converged = all(v < tol for v in norms)
    while reps < max_reps and not (converged and stop_at_tol):
        state.apply(full)
        reps += 1
        exact_perm = rep_perm(exact_perm)
        norms = state.seminorms()
        for b, (old, new) in enumerate(zip(prev, norms)):
            if new > old + slack:
                raise ContractionError(
                    f"contraction violated: block {b + 1} semi-norm rose from {float(old):.3e} "
                    f"to {float(new):.3e} at repetition {reps}"
                )
        prev = norms
        if reps % spacing == 0:
            max_drift = max(max_drift, state.renormalize())
            k = reps // spacing
            for b, v in enumerate(norms):
                bound = float((1 - eps) * Fraction(last_checkpoint[b])) if eps is not None else None
                trace.append(TraceRow(k, reps, b, float(v), bound))
            last_checkpoint = norms
            fp = state.perm_part()
            perm_ok &= fp in group
            agree &= fp == exact_perm
        converged = all(v < tol for v in norms)

    # limit-set sampling
    observed: list[tuple[int, ...]] = []
    at_reps: list[tuple[int, ...]] = []
    halves: list[set] = [set(), set()]
    max_p_error = 0.0
    off_block = 0.0
    n_samples = max(sample_factor, 1) * min(group.order, 1000) if reps or max_reps else 0
    relabel = relabel_order(partition)
    for r in range(n_samples):
        for c, seg in zip(order, segments):
            state.apply(seg)
            g = gens[c]
            exact_perm = tuple(exact_perm[g[i]] for i in range(len(g)))
            fp = state.perm_part()
            perm_ok &= fp in group
            agree &= fp == exact_perm
            if fp is not None and fp not in observed:
                observed.append(fp)
            halves[0 if r < n_samples // 2 else 1].add(fp)
        fp = state.perm_part()
        if fp is not None and fp not in at_reps:
            at_reps.append(fp)
        err, off = _block_errors(state.array(), partition, predicted)
        max_p_error, off_block = max(max_p_error, err), max(off_block, off)
        max_drift = max(max_drift, state.renormalize())
    if n_samples:
        norms = state.seminorms()
    A = state.array()
    measured = [list(A[np.ix_(b, b)].mean(axis=0)) for b in partition.blocks]
    if not n_samples:
        max_p_error, off_block = _block_errors(A, partition, predicted)
        fp = state.perm_part()
        perm_ok &= fp in group
        if fp is not None:
            observed.append(fp)
    stable = n_samples >= 2 and halves[0] == halves[1]
    return LimitReport(
        partition=partition, group=group, predicted=predicted, measured=measured, epsilon=eps,
        l_G=l_G, spacing=spacing, tol=tol, mode=mode, reps=reps, converged=converged,
        max_seminorm=float(max(norms, default=0.0)), trace=trace, observed=sorted(observed),
        observed_at_repetitions=sorted(at_reps), observed_stable=stable, perm_in_group=perm_ok,
        modes_agree=agree, max_p_error=max_p_error, off_block_max=off_block, max_drift=max_drift,
        backend="exact" if mode == "exact" else kernels.BACKEND,
        limit_product=[list(map(float, A[i, relabel])) for i in relabel],
    )


def _block_errors(A: np.ndarray, partition: Partition, predicted) -> tuple[float, float]:
    """Largest |row - p_i| over all blocks, and largest entry outside the diagonal blocks."""
    err = 0.0
    mask = np.ones_like(A, dtype=bool)
    b0 = list(partition.block0)
    mask[np.ix_(b0, b0)] = False
    for blk, p in zip(partition.blocks, predicted):
        sub = A[np.ix_(blk, blk)]
        err = max(err, float(np.abs(sub - np.array([float(x) for x in p])).max()))
        mask[np.ix_(blk, blk)] = False
    off = float(np.abs(A[mask]).max()) if mask.any() else 0.0
    return err, off


# --- theorem check -----------------------------------------------------------------

@dataclass
class WalkVerdict:
    walk: list[int]
    report: LimitReport | None
    error: str | None = None

    @property
    def clauses(self) -> dict[str, bool | None]:
        if self.report is None:
            return {"i": False, "ii": False, "iii": False}
        return self.report.clauses

    @property
    def passed(self) -> bool:
        return self.error is None and all(v is not False for v in self.clauses.values())


@dataclass
class Verdict:
    precondition: str | None
    walks: list[WalkVerdict]
    group_order: int | None = None

    @property
    def passed(self) -> bool:
        return self.precondition is None and bool(self.walks) and all(v.passed for v in self.walks)

    def to_json(self) -> dict:
        out = {"precondition": self.precondition or "ok", "passed": self.passed, "K_order": self.group_order}
        out["walks"] = [
            {
                "walk": [k for k in v.walk],
                "clauses": v.clauses,
                "observed_limit_set_size": len(v.report.observed) if v.report else None,
                "max_p_error": v.report.max_p_error if v.report else None,
                "error": v.error,
            }
            for v in self.walks
        ]
        return out


def check_preconditions(G: GossipGraph, w: Sequence) -> tuple[str | None, list[CycleAnalysis]]:
    diag = validate(G)
    if not diag.connected:
        return "precondition failed: not connected", []
    if diag.bridges:
        u, v = diag.bridges[0]
        return f"precondition failed: bridge (v{u + 1},v{v + 1})", []
    if diag.stochastic_errors:
        return "precondition failed: " + diag.stochastic_errors[0], []
    if not diag.has_cycles:
        return "precondition failed: no cycles", []
    rep = analyze_graph(G, w)
    if not rep.holonomic:
        return "precondition failed: not w-holonomic on " + ", ".join(a.cycle.label for a in rep.offending), []
    return None, rep.analyses


def verify_theorem(G: GossipGraph, w: Sequence, walks: Sequence | int = 1, seed: int = 0,
                   tol: float = DEFAULT_TOL, max_reps: int = 10_000) -> Verdict:
    """Check the finite-limit-set clauses on several walks.

    ``walks`` is either a list of derived-graph walks or a count; a count draws
    the canonical walk followed by seeded shuffles.
    """
    w = as_weight(w, G.dim)
    problem, analyses = check_preconditions(G, w)
    if problem:
        return Verdict(problem, [])
    D = build_derived_graph(G, w, analyses)
    if isinstance(walks, int):
        walks = [exhaustive_closed_walk(D)] + [exhaustive_closed_walk(D, seed + k) for k in range(1, walks)]
    out = []
    order = None
    for walk in walks:
        try:
            rep = run_to_convergence(D, walk, tol=tol, max_reps=max_reps)
            order = rep.group.order
            out.append(WalkVerdict(list(walk), rep))
        except (ContractionError, ValueError) as exc:
            out.append(WalkVerdict(list(walk), None, str(exc)))
    return Verdict(None, out, order)


def conserves_weight(G: GossipGraph, w: Weight, schedule: Sequence[Edge]) -> bool:
    """Exact check of w P = w for the product of a schedule."""
    from .graph import transition_matrix
    from .stomat import vecmat

    return vecmat(w, transition_matrix(G, schedule)) == tuple(w)
