"""FSketch construction, update and inspection.

A sketch maps an n-dimensional categorical vector x (values in {0..c}, 0 meaning
"missing") to d cells over {0..p-1}. Attribute i lands in cell ``rho[i]`` and
contributes ``x[i] * r[i] mod p`` to it, so each cell is the mod-p sum of the
weighted attributes hashed there. The mapping ``rho`` and weights ``r`` are drawn
once per dataset from a 64-bit seed.

The disagreement guarantees assume every value is below p: two values that are
congruent mod p look identical to the sketch. Choosing p as the next prime after
the number of categories c (:func:`next_prime`) ensures this; larger values are
still sketched exactly, just with weaker separation.

All indices in the Python API are 0-based: attributes are ``0..n-1`` and sketch
cells ``0..d-1``. The text file formats in :mod:`fsketch.data_io` are 1-based.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import kernels

# Cells are stored as uint32 and products are formed in uint64, so p-1 must stay
# below 2**31 for (p-1)**2 plus a running cell to fit.
MAX_PRIME = (1 << 31) - 1
SEED_BITS = 64

_RHO_STREAM = 0
_R_STREAM = 1
_DERIVE_STREAM = 2

# Deterministic Miller-Rabin witnesses; exact for every n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    """Deterministic primality test for integers below 3.3e24."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(c: int) -> int:
    """Smallest prime strictly greater than ``c``.

    Used to pick the modulus from the number of categories. The search checks at
    most ``c`` candidates: Bertrand's postulate puts a prime in ``(c, 2c]``.
    """
    c = int(c)
    if c < 1:
        raise ValueError(f"c must be >= 1, got {c}")
    candidate = c + 1
    while not is_prime(candidate):
        candidate += 1
    return candidate


def default_dim(sigma: int) -> int:
    """Reduced dimension 4*sigma, the setting under which the accuracy bounds hold."""
    return max(2, 4 * int(sigma))


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < (1 << SEED_BITS):
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return seed


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def derive_seed(seed: int, index: int) -> int:
    """Independent child seed, e.g. for row ``index`` of a median sketch."""
    state = np.random.SeedSequence(_check_seed(seed), spawn_key=(_DERIVE_STREAM, int(index)))
    return int(state.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True, eq=False)
class CategoricalVector:
    """Sparse vector over {0..c}^dim; absent attributes are 0.

    ``indices`` are 0-based, strictly increasing; ``values`` are >= 1.
    """

    dim: int
    indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    values: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        val = np.asarray(self.values, dtype=np.int64).reshape(-1)
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if idx.shape != val.shape:
            raise ValueError("indices and values must have the same length")
        if idx.size:
            order = np.argsort(idx, kind="stable")
            idx, val = idx[order], val[order]
            if idx[0] < 0 or idx[-1] >= self.dim:
                raise ValueError(f"attribute index out of range [0, {self.dim})")
            if np.any(idx[1:] == idx[:-1]):
                raise ValueError("duplicate attribute index")
            if val.min() < 1:
                raise ValueError("stored values must be >= 1 (0 is represented by absence)")
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dict(cls, dim: int, entries: Mapping[int, int]) -> "CategoricalVector":
        items = [(int(i), int(v)) for i, v in entries.items() if v != 0]
        if not items:
            return cls(dim)
        idx, val = zip(*items)
        return cls(dim, np.array(idx, dtype=np.int64), np.array(val, dtype=np.int64))

    @classmethod
    def from_dense(cls, dense: Iterable[int]) -> "CategoricalVector":
        arr = np.asarray(list(dense) if not isinstance(dense, np.ndarray) else dense, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("dense vector must be one-dimensional")
        if np.any(arr < 0):
            raise ValueError("categorical values must be non-negative")
        nz = np.flatnonzero(arr)
        return cls(arr.shape[0], nz, arr[nz])

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    @property
    def max_value(self) -> int:
        return int(self.values.max()) if self.nnz else 0

    def get(self, i: int) -> int:
        pos = np.searchsorted(self.indices, i)
        if pos < self.nnz and self.indices[pos] == i:
            return int(self.values[pos])
        return 0

    def to_dict(self) -> dict[int, int]:
        return dict(zip(self.indices.tolist(), self.values.tolist()))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.int64)
        out[self.indices] = self.values
        return out

    def with_value(self, i: int, v: int) -> "CategoricalVector":
        """Copy with attribute ``i`` set to ``v`` (0 removes it)."""
        if not 0 <= i < self.dim:
            raise IndexError(f"attribute {i} out of range [0, {self.dim})")
        entries = self.to_dict()
        if v:
            entries[i] = v
        else:
            entries.pop(i, None)
        return CategoricalVector.from_dict(self.dim, entries)

    def hamming(self, other: "CategoricalVector") -> int:
        """Number of attributes where the two vectors differ."""
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} != {other.dim}")
        common, ia, ib = np.intersect1d(self.indices, other.indices,
                                        assume_unique=True, return_indices=True)
        agree = int(np.count_nonzero(self.values[ia] == other.values[ib]))
        return self.nnz + other.nnz - common.shape[0] - agree

    def __eq__(self, other):
        if not isinstance(other, CategoricalVector):
            return NotImplemented
        return (self.dim == other.dim
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.dim, self.indices.tobytes(), self.values.tobytes()))

    def __repr__(self):
        return f"CategoricalVector(dim={self.dim}, entries={self.to_dict()})"


def sparsity(vectors: Iterable[CategoricalVector]) -> int:
    """Maximum number of non-zero attributes over ``vectors`` (0 if empty)."""
    return max((v.nnz for v in vectors), default=0)


@dataclass(frozen=True, eq=False)
class SketchParams:
    """Random attribute-to-cell mapping ``rho`` and weights ``r`` for one sketch row.

    Weights are drawn from the full range {0..p-1}; an attribute with r[i] == 0
    never affects its cell.
    """

    n: int
    d: int
    p: int
    rho: np.ndarray
    r: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError(f"n and d must be positive, got n={self.n}, d={self.d}")
        if self.p > MAX_PRIME or not is_prime(self.p):
            raise ValueError(f"p must be a prime below 2**31, got {self.p}")
        rho = np.asarray(self.rho, dtype=np.int64)
        r = np.asarray(self.r, dtype=np.int64)
        if rho.shape != (self.n,) or r.shape != (self.n,):
            raise ValueError("rho and r must both have length n")
        if rho.min() < 0 or rho.max() >= self.d:
            raise ValueError("rho must map into [0, d)")
        if r.min() < 0 or r.max() >= self.p:
            raise ValueError("r must lie in [0, p)")
        rho.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "r", r)

    def same_as(self, other: "SketchParams") -> bool:
        return (self.n, self.d, self.p) == (other.n, other.d, other.p) and \
            np.array_equal(self.rho, other.rho) and np.array_equal(self.r, other.r)

    def preimage(self, j: int) -> np.ndarray:
        """Attributes mapped to cell ``j``."""
        return np.flatnonzero(self.rho == j)


def init_params(n: int, d: int, p: int, seed: int) -> SketchParams:
    """Draw ``rho`` uniformly from cells and ``r`` uniformly from {0..p-1}.

    The two arrays come from separately keyed streams of ``seed`` so either can be
    regenerated on its own; the same arguments always give the same params.
    """
    seed = _check_seed(seed)
    if n < 1 or d < 1:
        raise ValueError(f"n and d must be positive, got n={n}, d={d}")
    if p > MAX_PRIME or not is_prime(p):
        raise ValueError(f"p must be a prime below 2**31, got {p}")
    if d > n:
        warnings.warn(f"reduced dimension d={d} exceeds n={n}", stacklevel=2)
    rho = _stream(seed, _RHO_STREAM).integers(0, d, size=n, dtype=np.int64)
    r = _stream(seed, _R_STREAM).integers(0, p, size=n, dtype=np.int64)
    return SketchParams(n, d, p, rho, r, seed)


@dataclass(frozen=True, eq=False)
class FSketchVector:
    """Dense sketch: ``d`` cells in {0..p-1}."""

    cells: np.ndarray
    p: int

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.uint32).reshape(-1)
        if cells.size and int(cells.max()) >= self.p:
            raise ValueError(f"sketch cell outside [0, {self.p})")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def d(self) -> int:
        return int(self.cells.shape[0])

    def __eq__(self, other):
        if not isinstance(other, FSketchVector):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.p, self.cells.tobytes()))

    def __repr__(self):
        return f"FSketchVector(p={self.p}, cells={self.cells.tolist()})"


def _check_dims(x: CategoricalVector, params: SketchParams):
    if x.dim != params.n:
        raise ValueError(f"vector has dim {x.dim} but params expect n={params.n}")


def create_sketch(x: CategoricalVector, params: SketchParams, backend: str | None = None) -> FSketchVector:
    """Sketch one vector in a single pass over its stored entries."""
    _check_dims(x, params)
    indptr = np.array([0, x.nnz], dtype=np.int64)
    cells = kernels.sketch_csr(indptr, x.indices, x.values, params.rho, params.r,
                               params.p, params.d, backend=backend)
    return FSketchVector(cells[0], params.p)


def sketch_rows(indptr, indices, values, params: SketchParams, backend: str | None = None) -> np.ndarray:
    """Sketch every row of a CSR batch (0-based indices); returns (rows, d) uint32."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= params.n):
        raise ValueError(f"attribute index out of range [0, {params.n})")
    values = np.asarray(values, dtype=np.int64)
    if values.size and values.min() < 0:
        raise ValueError("categorical values must be non-negative")
    return kernels.sketch_csr(indptr, indices, values, params.rho, params.r,
                              params.p, params.d, backend=backend)


def sketch_many(vectors: Iterable[CategoricalVector], params: SketchParams,
                backend: str | None = None) -> np.ndarray:
    vectors = list(vectors)
    for x in vectors:
        _check_dims(x, params)
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    np.cumsum([x.nnz for x in vectors], out=indptr[1:])
    if vectors:
        indices = np.concatenate([x.indices for x in vectors])
        values = np.concatenate([x.values for x in vectors])
    else:
        indices = values = np.empty(0, dtype=np.int64)
    return kernels.sketch_csr(indptr, indices, values, params.rho, params.r,
                              params.p, params.d, backend=backend)


def sketch_entry(x: CategoricalVector, params: SketchParams, j: int) -> int:
    """Cell ``j`` evaluated directly as the mod-p sum over the attributes mapped to it.

    Exact integer arithmetic, independent of the batch kernels.
    """
    _check_dims(x, params)
    if not 0 <= j < params.d:
        raise IndexError(f"cell {j} out of range [0, {params.d})")
    total = 0
    for i, v in zip(x.indices.tolist(), x.values.tolist()):
        if params.rho[i] == j:
            total += v * int(params.r[i])
    return total % params.p


def update_sketch(s: FSketchVector, i: int, v: int, v_new: int, params: SketchParams,
                  c: int | None = None) -> FSketchVector:
    """Sketch of x after attribute ``i`` changes from ``v`` to ``v_new``.

    Only cell ``rho[i]`` moves, by ``(v_new - v) * r[i]`` reduced to [0, p). Passing
    ``v == 0`` inserts an attribute and ``v_new == 0`` deletes one. ``c``, when
    given, bounds ``v_new``.
    """
    if s.d != params.d or s.p != params.p:
        raise ValueError("sketch was not built with these params")
    if not 0 <= i < params.n:
        raise IndexError(f"attribute {i} out of range [0, {params.n})")
    if v < 0 or v_new < 0 or (c is not None and v_new > c):
        raise ValueError(f"value outside encoding range: {v} -> {v_new}")
    if v == v_new:
        return s
    j = int(params.rho[i])
    cells = s.cells.copy()
    # Python's % is already the non-negative remainder for a positive modulus.
    cells[j] = (int(cells[j]) + (v_new - v) * int(params.r[i])) % params.p
    return FSketchVector(cells, params.p)


def sketch_nnz(s: FSketchVector) -> int:
    """Number of non-zero cells."""
    return int(np.count_nonzero(s.cells))
