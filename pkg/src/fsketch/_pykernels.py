"""Numpy implementations of the hot loops; used when the compiled module is absent."""

import numpy as np

# Rows per chunk are picked so that a chunk's scratch buffers stay around 32 MiB.
_CHUNK_CELLS = 1 << 22
_EXACT_FLOAT = 1 << 53


def sketch_csr(indptr, indices, values, rho, r, p, out):
    m, d = out.shape
    if m == 0:
        return
    rows_per_chunk = max(1, _CHUNK_CELLS // max(d, 1))
    for start in range(0, m, rows_per_chunk):
        stop = min(m, start + rows_per_chunk)
        lo, hi = indptr[start], indptr[stop]
        if lo == hi:
            continue
        idx = indices[lo:hi]
        terms = (values[lo:hi] % p) * r[idx] % p
        rows = np.repeat(np.arange(stop - start), np.diff(indptr[start:stop + 1]))
        keys = rows * d + rho[idx]
        ncells = (stop - start) * d
        widest = int(np.diff(indptr[start:stop + 1]).max())
        if widest * (p - 1) < _EXACT_FLOAT:
            sums = np.bincount(keys, weights=terms, minlength=ncells).astype(np.int64)
        else:
            sums = np.zeros(ncells, dtype=np.int64)
            np.add.at(sums, keys, terms)
        out[start:stop] = (sums % p).reshape(stop - start, d)


def pair_hamming(a, b, ia, ib, out):
    n = ia.shape[0]
    d = a.shape[1]
    step = max(1, _CHUNK_CELLS // max(d, 1))
    for start in range(0, n, step):
        stop = min(n, start + step)
        out[start:stop] = np.count_nonzero(a[ia[start:stop]] != b[ib[start:stop]], axis=1)
