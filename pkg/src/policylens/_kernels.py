"""Hot numeric kernels.

Two implementations of each kernel exist: a numba ``@njit`` version and a
plain numpy version. The numba path is used when numba imports cleanly and
``POLICYLENS_DISABLE_NUMBA`` is unset (or ``0``). Both paths are always
importable so tests and the benchmark can compare them directly.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "lcs_length",
    "lcs_length_numpy",
    "transitive_closure",
    "transitive_closure_numpy",
    "encode",
]


def _numba_disabled() -> bool:
    return os.environ.get("POLICYLENS_DISABLE_NUMBA", "").strip() not in ("", "0")


def encode(s: str) -> np.ndarray:
    """Code points of ``s`` as an int32 array."""
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.int32)


def lcs_length_numpy(a: np.ndarray, b: np.ndarray) -> int:
    """Longest common contiguous run of ``a`` and ``b``; row-vectorised DP."""
    n, m = a.shape[0], b.shape[0]
    if n == 0 or m == 0:
        return 0
    prev = np.zeros(m + 1, dtype=np.int32)
    best = 0
    for i in range(n):
        cur = np.zeros(m + 1, dtype=np.int32)
        eq = b == a[i]
        cur[1:] = np.where(eq, prev[:-1] + 1, 0)
        row_best = int(cur.max())
        if row_best > best:
            best = row_best
        prev = cur
    return best


def transitive_closure_numpy(adj: np.ndarray) -> np.ndarray:
    """Reflexive-transitive closure of a boolean adjacency matrix (Warshall)."""
    reach = adj.astype(bool, copy=True)
    n = reach.shape[0]
    reach[np.arange(n), np.arange(n)] = True
    for k in range(n):
        reach |= np.outer(reach[:, k], reach[k, :])
    return reach


_lcs_length_numba = None
_transitive_closure_numba = None

try:
    from numba import njit

    @njit(cache=True)
    def _lcs_length_numba(a, b):  # noqa: F811
        n = a.shape[0]
        m = b.shape[0]
        if n == 0 or m == 0:
            return 0
        prev = np.zeros(m + 1, dtype=np.int32)
        cur = np.zeros(m + 1, dtype=np.int32)
        best = 0
        for i in range(n):
            ai = a[i]
            cur[0] = 0
            for j in range(m):
                if ai == b[j]:
                    v = prev[j] + 1
                    cur[j + 1] = v
                    if v > best:
                        best = v
                else:
                    cur[j + 1] = 0
            prev, cur = cur, prev
        return best

    @njit(cache=True)
    def _transitive_closure_numba(adj):  # noqa: F811
        n = adj.shape[0]
        reach = np.zeros((n, n), dtype=np.bool_)
        for i in range(n):
            for j in range(n):
                reach[i, j] = adj[i, j]
            reach[i, i] = True
        for k in range(n):
            for i in range(n):
                if reach[i, k]:
                    for j in range(n):
                        if reach[k, j]:
                            reach[i, j] = True
        return reach

except ImportError:  # pragma: no cover - numba is a declared dependency
    pass


HAS_NUMBA = _lcs_length_numba is not None

if HAS_NUMBA and not _numba_disabled():
    BACKEND = "numba"

    def lcs_length(a: np.ndarray, b: np.ndarray) -> int:
        return int(_lcs_length_numba(a, b))

    def transitive_closure(adj: np.ndarray) -> np.ndarray:
        return _transitive_closure_numba(np.ascontiguousarray(adj, dtype=np.bool_))

else:
    BACKEND = "numpy"
    lcs_length = lcs_length_numpy
    transitive_closure = transitive_closure_numpy


def lcs_length_jit(a: np.ndarray, b: np.ndarray) -> int:
    if not HAS_NUMBA:
        raise RuntimeError("numba is not available")
    return int(_lcs_length_numba(a, b))


def transitive_closure_jit(adj: np.ndarray) -> np.ndarray:
    if not HAS_NUMBA:
        raise RuntimeError("numba is not available")
    return _transitive_closure_numba(np.ascontiguousarray(adj, dtype=np.bool_))
