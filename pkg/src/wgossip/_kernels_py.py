"""Pure numpy versions of the compiled kernels (same signatures)."""

from __future__ import annotations

import numpy as np


def apply_schedule(P: np.ndarray, pre: np.ndarray, idx: np.ndarray, schedule: np.ndarray, reps: int = 1) -> None:
    for _ in range(reps):
        for e in schedule:
            rows = idx[e]
            P[rows] = pre[e] @ P[rows]


def seminorm(A: np.ndarray) -> float:
    if A.shape[0] == 0:
        return 0.0
    return float(np.max(A.max(axis=0) - A.min(axis=0)))


def block_seminorms(P: np.ndarray, members: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    out = np.zeros(len(offsets) - 1)
    for b in range(len(offsets) - 1):
        blk = members[offsets[b]:offsets[b + 1]]
        out[b] = seminorm(P[np.ix_(blk, blk)])
    return out


def max_row_drift(P: np.ndarray) -> float:
    return float(np.max(np.abs(P.sum(axis=1) - 1.0))) if P.size else 0.0
