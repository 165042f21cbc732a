"""Float kernel dispatch: compiled extension when built, numpy otherwise.

Set ``WGOSSIP_PURE=1`` to force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

if os.environ.get("WGOSSIP_PURE"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def pack_graph(G):
    """Stack pre-local matrices and their row indices for the kernels."""
    from .graph import agent_indices

    pre = np.ascontiguousarray(np.stack([p.to_array() for p in G.pre_local]), dtype=np.float64)
    idx = np.array(
        [list(agent_indices(u, G.m)) + list(agent_indices(v, G.m)) for u, v in G.edges], dtype=np.int64
    )
    return pre, idx


def schedule_ids(G, seq) -> np.ndarray:
    return np.array([G.edge_id(e) for e in seq], dtype=np.int64)


def pack_blocks(blocks) -> tuple[np.ndarray, np.ndarray]:
    members = np.array([i for b in blocks for i in b], dtype=np.int64)
    offsets = np.cumsum([0] + [len(b) for b in blocks]).astype(np.int64)
    return members, offsets


def apply_schedule(P, pre, idx, schedule, reps: int = 1, impl=None) -> None:
    (impl or _impl).apply_schedule(P, pre, idx, schedule, reps)


def seminorm(A, impl=None) -> float:
    return float((impl or _impl).seminorm(np.ascontiguousarray(A, dtype=np.float64)))


def block_seminorms(P, members, offsets, impl=None) -> np.ndarray:
    return np.asarray((impl or _impl).block_seminorms(P, members, offsets))


def max_row_drift(P, impl=None) -> float:
    return float((impl or _impl).max_row_drift(P))
