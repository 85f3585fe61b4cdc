"""Backend selection for the hot loops.

The compiled extension ``fsketch._ckernels`` is used when it imports; otherwise the
numpy fallback in ``fsketch._pykernels`` takes over. Setting ``FSKETCH_PURE_PYTHON=1``
forces the fallback. ``FSKETCH_THREADS`` caps how many threads split a batch.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _pykernels

try:
    if os.environ.get("FSKETCH_PURE_PYTHON") == "1":
        raise ImportError("pure-python backend requested")
    from . import _ckernels as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

BACKEND = "cython" if _compiled is not None else "python"

# Below this many units of work a thread pool costs more than it saves.
_MIN_PARALLEL_WORK = 1 << 16


def thread_count() -> int:
    raw = os.environ.get("FSKETCH_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"FSKETCH_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def _impl(backend: str | None):
    name = backend or BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} is not available; have {sorted(BACKENDS)}") from None


def _spans(total: int, parts: int) -> list[tuple[int, int]]:
    bounds = np.linspace(0, total, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def sketch_csr(indptr, indices, values, rho, r, p: int, d: int, backend: str | None = None) -> np.ndarray:
    """Sketch every row of a CSR matrix; returns a (rows, d) uint32 array.

    Indices are 0-based, values non-negative.
    """
    impl = _impl(backend)
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    values = np.ascontiguousarray(values, dtype=np.int64)
    rho = np.ascontiguousarray(rho, dtype=np.int64)
    r = np.ascontiguousarray(r, dtype=np.int64)
    m = indptr.shape[0] - 1
    out = np.zeros((m, d), dtype=np.uint32)
    threads = min(thread_count(), m)
    if threads <= 1 or indices.shape[0] < _MIN_PARALLEL_WORK:
        impl.sketch_csr(indptr, indices, values, rho, r, p, out)
        return out

    def work(span):
        a, b = span
        # Row blocks write disjoint slices of ``out``.
        impl.sketch_csr(indptr[a:b + 1] - indptr[a], indices[indptr[a]:indptr[b]],
                        values[indptr[a]:indptr[b]], rho, r, p, out[a:b])

    with ThreadPoolExecutor(threads) as pool:
        list(pool.map(work, _spans(m, threads)))
    return out


def pair_hamming(a: np.ndarray, b: np.ndarray, ia, ib, backend: str | None = None) -> np.ndarray:
    """Number of differing cells between rows ``a[ia[k]]`` and ``b[ib[k]]`` for each k."""
    impl = _impl(backend)
    if a.dtype != b.dtype:
        common = np.promote_types(a.dtype, b.dtype)
        a, b = a.astype(common), b.astype(common)
    if a.dtype not in (np.uint8, np.uint16, np.uint32, np.int64):
        a, b = a.astype(np.int64), b.astype(np.int64)
    a = np.ascontiguousarray(a)
    b = np.ascontiguousarray(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"row length mismatch: {a.shape[1]} != {b.shape[1]}")
    ia = np.ascontiguousarray(ia, dtype=np.int64)
    ib = np.ascontiguousarray(ib, dtype=np.int64)
    if ia.shape != ib.shape:
        raise ValueError("index arrays must have equal length")
    for idx, mat in ((ia, a), (ib, b)):
        if idx.size and (idx.min() < 0 or idx.max() >= mat.shape[0]):
            raise IndexError("pair index out of range")
    out = np.empty(ia.shape[0], dtype=np.int64)
    threads = min(thread_count(), ia.shape[0])
    if threads <= 1 or ia.shape[0] * a.shape[1] < _MIN_PARALLEL_WORK:
        impl.pair_hamming(a, b, ia, ib, out)
        return out

    def work(span):
        lo, hi = span
        impl.pair_hamming(a, b, ia[lo:hi], ib[lo:hi], out[lo:hi])

    with ThreadPoolExecutor(threads) as pool:
        list(pool.map(work, _spans(ia.shape[0], threads)))
    return out
