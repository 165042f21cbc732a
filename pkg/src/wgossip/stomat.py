"""Nonnegative-matrix algebra for row-stochastic matrices.

Matrices are held as tuples of rows. In exact mode entries are
:class:`fractions.Fraction`; in float mode they are Python floats. All index
sets used here are 0-based; reports convert to 1-based at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

FLOAT_ROW_TOL = 1e-12


class NotStochasticError(ValueError):
    """Raised when a matrix fails the row-stochastic contract."""

    def __init__(self, message: str, row: int | None = None, total=None):
        super().__init__(message)
        self.row = row
        self.total = total


class NotIrreducibleError(ValueError):
    pass


class PrimitiveMatrixError(ValueError):
    pass


def to_fraction(x) -> Fraction:
    """Exact conversion; floats go through their shortest repr ("0.1" -> 1/10)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("boolean is not a matrix entry")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def fmt_fraction(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class StochasticMatrix:
    """Square row-stochastic matrix, exact (Fraction) or float."""

    rows: tuple[tuple, ...]
    exact: bool = True
    _check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if not self._check:
            return
        n = len(self.rows)
        if n == 0:
            raise NotStochasticError("matrix has no rows")
        for i, row in enumerate(self.rows):
            if len(row) != n:
                raise NotStochasticError(f"row {i + 1} has {len(row)} entries, expected {n}", row=i)
            for x in row:
                if x < 0:
                    raise NotStochasticError(f"row {i + 1} has a negative entry {x}", row=i)
            total = sum(row)
            if self.exact:
                if total != 1:
                    raise NotStochasticError(f"row {i + 1} sums to {total}", row=i, total=total)
            elif abs(total - 1.0) > FLOAT_ROW_TOL:
                raise NotStochasticError(f"row {i + 1} sums to {total!r}", row=i, total=total)

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable], exact: bool = True) -> "StochasticMatrix":
        conv = to_fraction if exact else float
        return cls(tuple(tuple(conv(x) for x in row) for row in rows), exact)

    @classmethod
    def identity(cls, n: int, exact: bool = True) -> "StochasticMatrix":
        one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
        return cls(tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n)), exact, False)

    @classmethod
    def from_permutation(cls, sigma: Sequence[int], exact: bool = True) -> "StochasticMatrix":
        """Row i carries its 1 in column sigma[i]."""
        n = len(sigma)
        one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
        return cls(tuple(tuple(one if sigma[i] == j else zero for j in range(n)) for i in range(n)), exact, False)

    @property
    def dim(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __matmul__(self, other: "StochasticMatrix") -> "StochasticMatrix":
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        exact = self.exact and other.exact
        if not exact:
            prod = self.to_array() @ other.to_array()
            return StochasticMatrix(tuple(tuple(float(x) for x in r) for r in prod), False, False)
        cols = list(zip(*other.rows))
        out = []
        for row in self.rows:
            nz = [(k, a) for k, a in enumerate(row) if a]
            out.append(tuple(sum((a * cols[j][k] for k, a in nz), Fraction(0)) for j in range(len(cols))))
        return StochasticMatrix(tuple(out), True, False)

    def power(self, k: int) -> "StochasticMatrix":
        if k < 0:
            raise ValueError("negative power")
        result = StochasticMatrix.identity(self.dim, self.exact)
        base = self
        while k:
            if k & 1:
                result = result @ base
            k >>= 1
            if k:
                base = base @ base
        return result

    def submatrix(self, idx: Sequence[int]) -> tuple[tuple, ...]:
        """Principal submatrix (not necessarily stochastic)."""
        return tuple(tuple(self.rows[i][j] for j in idx) for i in idx)

    def restrict(self, idx: Sequence[int]) -> "StochasticMatrix":
        """Principal submatrix that must itself be stochastic."""
        return StochasticMatrix(self.submatrix(idx), self.exact)

    def relabel(self, order: Sequence[int]) -> "StochasticMatrix":
        """P^T A P for the permutation listing old indices in new order."""
        return StochasticMatrix(self.submatrix(order), self.exact, False)

    def to_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.rows], dtype=float)

    def to_float(self) -> "StochasticMatrix":
        if not self.exact:
            return self
        return StochasticMatrix(tuple(tuple(float(x) for x in r) for r in self.rows), False, False)

    def to_json(self) -> list[list]:
        if self.exact:
            return [[fmt_fraction(x) for x in row] for row in self.rows]
        return [[float(x) for x in row] for row in self.rows]


def vecmat(v: Sequence, A: StochasticMatrix) -> tuple:
    """Row vector times matrix."""
    n = A.dim
    if len(v) != n:
        raise ValueError(f"vector of length {len(v)} against matrix of dim {n}")
    zero = Fraction(0) if A.exact else 0.0
    out = [zero] * n
    for vi, row in zip(v, A.rows):
        if vi:
            for j, a in enumerate(row):
                if a:
                    out[j] += vi * a
    return tuple(out)


def _rows(A) -> Sequence[Sequence]:
    return A.rows if isinstance(A, StochasticMatrix) else A


# --- norms and ergodicity -------------------------------------------------

def seminorm(A) -> Fraction | float:
    """Largest within-column spread max_j max_{i1,i2} |a_{i1 j} - a_{i2 j}|."""
    rows = _rows(A)
    if not rows:
        return 0
    return max(max(col) - min(col) for col in zip(*rows))


def ergodicity_coefficient(A) -> Fraction | float:
    """Half the largest L1 distance between two rows."""
    rows = _rows(A)
    best = 0
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            d = sum(abs(a - b) for a, b in zip(rows[i], rows[j]))
            if d > best:
                best = d
    return best / 2


def is_scrambling(A) -> bool:
    rows = _rows(A)
    supports = [frozenset(j for j, x in enumerate(r) if x > 0) for r in rows]
    return all(supports[i] & supports[j] for i in range(len(rows)) for j in range(i + 1, len(rows)))


def min_entry(A):
    """Smallest nonzero entry."""
    nz = [x for row in _rows(A) for x in row if x != 0]
    if not nz:
        raise ValueError("empty support")
    return min(nz)


# --- permutation structure -------------------------------------------------

def unit_row_targets(A) -> dict[int, int]:
    """Map i -> j for every row that is the standard unit vector e_j."""
    out = {}
    for i, row in enumerate(_rows(A)):
        nz = [j for j, x in enumerate(row) if x != 0]
        if len(nz) == 1 and row[nz[0]] == 1:
            out[i] = nz[0]
    return out


def maximal_permutation_index(A) -> tuple[int, ...]:
    """Largest closed index set on which A acts as a permutation.

    A row in the set must be a unit row pointing back into the set; the set is
    then a union of cycles of the functional graph i -> target(i).
    """
    target = unit_row_targets(A)
    on_cycle: set[int] = set()
    state: dict[int, int] = {}  # 1 = on stack, 2 = done
    for start in target:
        if start in state:
            continue
        path = []
        i = start
        while i in target and i not in state:
            state[i] = 1
            path.append(i)
            i = target[i]
        if i in target and state.get(i) == 1:
            on_cycle.update(path[path.index(i):])
        for p in path:
            state[p] = 2
    return tuple(sorted(on_cycle))


def is_permutation(A) -> bool:
    rows = _rows(A)
    n = len(rows)
    seen = set()
    for row in rows:
        nz = [j for j, x in enumerate(row) if x != 0]
        if len(nz) != 1 or row[nz[0]] != 1:
            return False
        seen.add(nz[0])
    return len(seen) == n


def permutation_of(A) -> tuple[int, ...]:
    """sigma with row i = e_{sigma[i]}; A must be a permutation matrix."""
    if not is_permutation(A):
        raise ValueError("matrix is not a permutation")
    return tuple(unit_row_targets(A)[i] for i in range(len(_rows(A))))


def permutation_order(sigma: Sequence[int]) -> int:
    seen = [False] * len(sigma)
    order = 1
    for s in range(len(sigma)):
        if seen[s]:
            continue
        length, i = 0, s
        while not seen[i]:
            seen[i] = True
            i = sigma[i]
            length += 1
        order = math.lcm(order, length)
    return order


def finite_order(A: StochasticMatrix, limit: int | None = None) -> int:
    """Smallest k in [1, limit] with A^k = I, else 0.

    For a stochastic matrix, supp(A^k) = supp(I) already forces A^k = I, so
    the search runs on boolean supports and is confirmed exactly.
    """
    n = A.dim
    if limit is None:
        limit = math.factorial(n)
    S = np.array([[x != 0 for x in r] for r in A.rows], dtype=bool)
    eye = np.eye(n, dtype=bool)
    cur = S.copy()
    seen = set()
    for k in range(1, limit + 1):
        if np.array_equal(cur, eye):
            if A.power(k) != StochasticMatrix.identity(n, A.exact):
                raise AssertionError("identity support without identity power")
            return k
        key = cur.tobytes()
        if key in seen:
            return 0
        seen.add(key)
        cur = (cur.astype(np.int64) @ S.astype(np.int64)) > 0
    return 0


# --- support digraphs --------------------------------------------------------

@dataclass(frozen=True)
class SupportDigraph:
    """Graph of a matrix: arc i -> j iff a_{ji} != 0."""

    dim: int
    edges: frozenset

    @classmethod
    def of(cls, A) -> "SupportDigraph":
        rows = _rows(A)
        return cls(len(rows), frozenset((i, j) for j, row in enumerate(rows) for i, x in enumerate(row) if x != 0))

    def has_self_arcs(self) -> bool:
        return all((i, i) in self.edges for i in range(self.dim))


def compose_support_graphs(GA: SupportDigraph, GB: SupportDigraph) -> SupportDigraph:
    """GB o GA: arc i -> j when i -> k in GA and k -> j in GB; equals the graph of BA."""
    if GA.dim != GB.dim:
        raise ValueError(f"dimension mismatch: {GA.dim} vs {GB.dim}")
    out_b: dict[int, list[int]] = {}
    for k, j in GB.edges:
        out_b.setdefault(k, []).append(j)
    return SupportDigraph(GA.dim, frozenset((i, j) for i, k in GA.edges for j in out_b.get(k, ())))


def _successors(A) -> list[list[int]]:
    """Markov-direction adjacency: i -> j iff a_{ij} != 0."""
    return [[j for j, x in enumerate(row) if x != 0] for row in _rows(A)]


def strongly_connected_components(succ: Sequence[Sequence[int]]) -> list[list[int]]:
    """Iterative Tarjan; components come out in reverse topological order."""
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pos = work.pop()
            if pos == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            for k in range(pos, len(succ[v])):
                w = succ[v][k]
                if index[w] == -1:
                    work.append((v, k + 1))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


@dataclass(frozen=True)
class MarkovClass:
    members: tuple[int, ...]
    ergodic: bool


@dataclass(frozen=True)
class CanonicalForm:
    """Relabeling order plus classes: transient classes first, ergodic last."""

    order: tuple[int, ...]
    classes: tuple[MarkovClass, ...]

    @property
    def transient(self) -> tuple[MarkovClass, ...]:
        return tuple(c for c in self.classes if not c.ergodic)

    @property
    def ergodic(self) -> tuple[MarkovClass, ...]:
        return tuple(c for c in self.classes if c.ergodic)


def canonical_form(A) -> CanonicalForm:
    succ = _successors(A)
    comps = strongly_connected_components(succ)
    comp_of = {}
    for c, members in enumerate(comps):
        for v in members:
            comp_of[v] = c
    leaves = [any(comp_of[j] != c for v in members for j in succ[v]) for c, members in enumerate(comps)]
    # Tarjan emits sinks first; reversing gives a topological order.
    topo = list(reversed(range(len(comps))))
    transient = [c for c in topo if leaves[c]]
    ergodic = sorted((c for c in topo if not leaves[c]), key=lambda c: comps[c][0])
    classes = tuple(MarkovClass(tuple(comps[c]), False) for c in transient) + tuple(
        MarkovClass(tuple(comps[c]), True) for c in ergodic
    )
    order = tuple(v for cls in classes for v in cls.members)
    return CanonicalForm(order, classes)


def is_irreducible(A) -> bool:
    return len(strongly_connected_components(_successors(A))) == 1


def _bfs_levels(succ: Sequence[Sequence[int]], root: int = 0) -> list[int]:
    level = [-1] * len(succ)
    level[root] = 0
    frontier = [root]
    while frontier:
        nxt = []
        for v in frontier:
            for w in succ[v]:
                if level[w] == -1:
                    level[w] = level[v] + 1
                    nxt.append(w)
        frontier = nxt
    return level


def period(A) -> int:
    """gcd of cycle lengths in the support digraph, via BFS level differences."""
    succ = _successors(A)
    if not is_irreducible(A):
        raise NotIrreducibleError("matrix not irreducible")
    level = _bfs_levels(succ)
    g = 0
    for v, outs in enumerate(succ):
        for w in outs:
            g = math.gcd(g, level[v] + 1 - level[w])
    return g


def frobenius_form(A) -> tuple[tuple[int, ...], ...]:
    """Cyclic classes of an imprimitive irreducible matrix.

    Rows of class k are supported on class k+1 (mod h), giving the
    superdiagonal block pattern after relabeling in class order.
    """
    h = period(A)
    if h == 1:
        raise PrimitiveMatrixError("matrix primitive")
    level = _bfs_levels(_successors(A))
    classes = [[] for _ in range(h)]
    for v, lv in enumerate(level):
        classes[lv % h].append(v)
    return tuple(tuple(c) for c in classes)


def solve_exact(M: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction]:
    """Gauss-Jordan over the rationals for a square nonsingular system."""
    n = len(M)
    aug = [list(map(Fraction, row)) + [Fraction(bi)] for row, bi in zip(M, b)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular system")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [aug[r][n] for r in range(n)]


def perron_row_vector(A: StochasticMatrix) -> tuple[Fraction, ...]:
    """Unique positive q with qA = q and entries summing to 1 (exact)."""
    if not is_irreducible(A):
        raise NotIrreducibleError("matrix not irreducible")
    n = A.dim
    rows = A.rows if A.exact else tuple(tuple(to_fraction(x) for x in r) for r in A.rows)
    # (A^T - I) q = 0 with the last equation replaced by sum(q) = 1
    system = [[rows[j][i] - (1 if i == j else 0) for j in range(n)] for i in range(n - 1)]
    system.append([Fraction(1)] * n)
    rhs = [Fraction(0)] * (n - 1) + [Fraction(1)]
    return tuple(solve_exact(system, rhs))


def compose_permutations(*sigmas: Sequence[int]) -> tuple[int, ...]:
    """Permutation of the matrix product of the arguments, left to right.

    Row i of AB is row sigma_A(i) of B, so AB corresponds to sigma_B o sigma_A.
    """
    return reduce(lambda a, b: tuple(b[a[i]] for i in range(len(a))), sigmas)
