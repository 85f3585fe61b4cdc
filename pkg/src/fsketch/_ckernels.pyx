# Compiled inner loops. Must stay interchangeable with _pykernels.
cimport cython
from libc.stdint cimport int64_t, uint8_t, uint16_t, uint32_t, uint64_t

ctypedef fused cell_t:
    uint8_t
    uint16_t
    uint32_t
    int64_t


def sketch_csr(const int64_t[::1] indptr, const int64_t[::1] indices,
               const int64_t[::1] values, const int64_t[::1] rho,
               const int64_t[::1] r, uint64_t p, uint32_t[:, ::1] out):
    """Accumulate (value * r) mod p into out[row, rho[index]] for every stored entry.

    ``out`` must be zero on entry. Requires p < 2**32 and non-negative values.
    """
    cdef Py_ssize_t m = indptr.shape[0] - 1
    cdef Py_ssize_t row, k, i, j
    cdef uint64_t term, cell
    with nogil:
        for row in range(m):
            for k in range(indptr[row], indptr[row + 1]):
                i = indices[k]
                j = rho[i]
                term = ((<uint64_t>values[k]) % p) * (<uint64_t>r[i]) % p
                cell = <uint64_t>out[row, j] + term
                if cell >= p:
                    cell -= p
                out[row, j] = <uint32_t>cell


def pair_hamming(const cell_t[:, ::1] a, const cell_t[:, ::1] b,
                 const int64_t[::1] ia, const int64_t[::1] ib, int64_t[::1] out):
    """out[k] = number of columns where a[ia[k]] and b[ib[k]] differ."""
    cdef Py_ssize_t npairs = ia.shape[0]
    cdef Py_ssize_t d = a.shape[1]
    cdef Py_ssize_t k, j, x, y
    cdef int64_t f
    with nogil:
        for k in range(npairs):
            x = ia[k]
            y = ib[k]
            f = 0
            for j in range(d):
                if a[x, j] != b[y, j]:
                    f += 1
            out[k] = f
