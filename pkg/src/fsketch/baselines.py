"""Comparison sketches: one-hot encoding, feature hashing, SimHash and an OHE bucket proxy.

Hash-based baselines derive buckets, signs and hyperplanes from splitmix64 over
(seed, attribute) so nothing of size n*d is ever stored. Distances on their
sketches are plain Hamming distances over cells or bits.

``ohe_binary_bucket_sketch`` is a PROXY for one-hot encoding followed by
BinSketch: it ORs one-hot bits into hashed buckets and reports the raw bucket
Hamming distance, without BinSketch's own estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import CategoricalVector

PROXY_LABEL = "ohe-binsketch-PROXY"

_FH_BUCKET_SALT = 0x46480001
_FH_SIGN_SALT = 0x46480002
_SH_SALT = 0x53480001
_OHE_SALT = 0x4F480001

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def splitmix64(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def _keyed_hash(seed: int, salt: int, keys) -> np.ndarray:
    base = splitmix64(np.uint64((int(seed) ^ salt) & 0xFFFFFFFFFFFFFFFF))
    with np.errstate(over="ignore"):
        return splitmix64(np.asarray(keys, dtype=np.uint64) + base)


@dataclass(frozen=True, eq=False)
class BinaryVector:
    dim: int
    set_bits: np.ndarray

    def __post_init__(self):
        bits = np.unique(np.asarray(self.set_bits, dtype=np.int64))
        if bits.size and (bits[0] < 0 or bits[-1] >= self.dim):
            raise ValueError(f"bit index out of range [0, {self.dim})")
        object.__setattr__(self, "set_bits", bits)

    @property
    def nnz(self) -> int:
        return int(self.set_bits.shape[0])

    def hamming(self, other: "BinaryVector") -> int:
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} != {other.dim}")
        return int(np.setxor1d(self.set_bits, other.set_bits, assume_unique=True).shape[0])

    def __eq__(self, other):
        if not isinstance(other, BinaryVector):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.set_bits, other.set_bits)


@dataclass(frozen=True, eq=False)
class SignedSketch:
    """Integer cells (feature hashing) or 0/1 bits (SimHash)."""

    dim: int
    cells: np.ndarray

    def __post_init__(self):
        if self.cells.shape != (self.dim,):
            raise ValueError("cells must have length dim")

    def hamming(self, other: "SignedSketch") -> int:
        return int(np.count_nonzero(self.cells != other.cells))

    def __eq__(self, other):
        if not isinstance(other, SignedSketch):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.cells, other.cells)


def _single_csr(x: CategoricalVector):
    return np.array([0, x.nnz], dtype=np.int64), x.indices, x.values


def _row_ids(indptr) -> np.ndarray:
    return np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))


def one_hot_encode(x: CategoricalVector, c: int) -> BinaryVector:
    """Attribute i with value v sets bit ``i*c + v-1``; missing attributes set nothing."""
    if x.nnz and x.max_value > c:
        raise ValueError(f"value {x.max_value} exceeds category count c={c}")
    return BinaryVector(x.dim * c, x.indices * c + (x.values - 1))


def ohe_distance_bounds(x: CategoricalVector, y: CategoricalVector, c: int) -> tuple[int, int]:
    """Hamming distance before and after one-hot encoding.

    Always ``hd <= hd_ohe <= 2 * hd``.
    """
    return x.hamming(y), one_hot_encode(x, c).hamming(one_hot_encode(y, c))


def _fh_hashes(indices, d: int, seed: int):
    bucket = (_keyed_hash(seed, _FH_BUCKET_SALT, indices) % np.uint64(d)).astype(np.int64)
    sign = np.where(_keyed_hash(seed, _FH_SIGN_SALT, indices) >> np.uint64(63), -1, 1)
    return bucket, sign.astype(np.int64)


def feature_hash_rows(indptr, indices, values, d: int, seed: int) -> np.ndarray:
    """``out[row, bucket(i)] += sign(i) * x_i`` for every stored entry."""
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    indptr = np.asarray(indptr, dtype=np.int64)
    m = len(indptr) - 1
    bucket, sign = _fh_hashes(indices, d, seed)
    out = np.zeros(m * d, dtype=np.int64)
    np.add.at(out, _row_ids(indptr) * d + bucket, sign * np.asarray(values, dtype=np.int64))
    return out.reshape(m, d)


def feature_hash_sketch(x: CategoricalVector, d: int, seed: int) -> SignedSketch:
    return SignedSketch(d, feature_hash_rows(*_single_csr(x), d, seed)[0])


def _hyperplane_signs(indices, d: int, seed: int) -> np.ndarray:
    """(len(indices), d) matrix of +-1 entries of the seeded hyperplanes."""
    indices = np.asarray(indices, dtype=np.uint64)
    # Key (i, j) as i * 2**20 + j; d is capped so keys never collide.
    keys = (indices[:, None] << np.uint64(20)) + np.arange(d, dtype=np.uint64)[None, :]
    bits = _keyed_hash(seed, _SH_SALT, keys) >> np.uint64(63)
    return (1 - 2 * bits.astype(np.int8)).astype(np.int8)


def simhash_rows(indptr, indices, values, n: int, d: int, seed: int) -> np.ndarray:
    """Bit j of each row is 1 when its dot product with hyperplane j is positive."""
    if not 1 <= d < (1 << 20):
        raise ValueError(f"d must be in [1, 2**20), got {d}")
    indptr = np.asarray(indptr, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    m = len(indptr) - 1
    used, local = np.unique(indices, return_inverse=True)
    mat = sp.csr_matrix((np.asarray(values, dtype=np.float64), local.reshape(-1), indptr),
                        shape=(m, used.shape[0]))
    dots = mat @ _hyperplane_signs(used, d, seed).astype(np.float64)
    return (np.asarray(dots) > 0).astype(np.uint8)


def simhash_sketch(x: CategoricalVector, d: int, seed: int) -> SignedSketch:
    return SignedSketch(d, simhash_rows(*_single_csr(x), x.dim, d, seed)[0])


def ohe_bucket_rows(indptr, indices, values, c: int, d: int, seed: int) -> np.ndarray:
    """PROXY rows: bucket bit = OR of the one-hot bits hashed to it."""
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    indptr = np.asarray(indptr, dtype=np.int64)
    values = np.asarray(values, dtype=np.int64)
    if values.size and values.max() > c:
        raise ValueError(f"value {values.max()} exceeds category count c={c}")
    m = len(indptr) - 1
    positions = np.asarray(indices, dtype=np.int64) * c + (values - 1)
    bucket = (_keyed_hash(seed, _OHE_SALT, positions) % np.uint64(d)).astype(np.int64)
    out = np.zeros(m * d, dtype=np.uint8)
    out[_row_ids(indptr) * d + bucket] = 1
    return out.reshape(m, d)


def ohe_binary_bucket_sketch(x: CategoricalVector, c: int, d: int, seed: int) -> BinaryVector:
    row = ohe_bucket_rows(*_single_csr(x), c, d, seed)[0]
    return BinaryVector(d, np.flatnonzero(row))
