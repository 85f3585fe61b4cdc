"""Dataset ingestion and persistence.

Formats
-------
UCI docword
    Three header lines ``D``, ``W``, ``NNZ`` followed by ``docID wordID count``
    lines, all 1-based. Counts become category labels unchanged.
native
    Header ``n c`` then one line per point of ``idx:val`` pairs (1-based idx);
    an empty line is an all-zero point.
sketch file
    Little-endian binary: magic ``FSK1``; uint64 n, d, p, seed, count, sigma, k;
    then ``count * k`` rows of ``d`` cells, each cell 1, 2 or 4 bytes wide
    (the narrowest that holds p-1). Rows are point-major. ``rho`` and ``r`` are not
    stored; they are regenerated from (n, d, p, seed).
"""

from __future__ import annotations

import io
import os
import struct
import tempfile
import warnings
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .core import CategoricalVector

MAGIC = b"FSK1"
_HEADER = struct.Struct("<4s7Q")


class DataFormatError(ValueError):
    """Malformed input; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SketchFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    """Points stored row-wise in CSR form with 0-based attribute indices."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    name: str = "dataset"
    category_bound: int | None = None
    _sigma: int = field(init=False, repr=False)

    def __post_init__(self):
        indptr = np.asarray(self.indptr, dtype=np.int64)
        indices = np.asarray(self.indices, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.int64)
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if indptr.ndim != 1 or indptr.size < 1 or indptr[0] != 0 or indptr[-1] != indices.size:
            raise ValueError("inconsistent indptr")
        if indices.shape != values.shape:
            raise ValueError("indices and values must have the same length")
        if indices.size:
            if indices.min() < 0 or indices.max() >= self.n:
                raise ValueError(f"attribute index out of range [0, {self.n})")
            if values.min() < 1:
                raise ValueError("stored values must be >= 1")
        # Sort each row by attribute so rows compare and serialise canonically.
        rows = np.repeat(np.arange(indptr.size - 1), np.diff(indptr))
        order = np.lexsort((indices, rows))
        indices, values = indices[order], values[order]
        if indices.size > 1:
            same_row = rows[1:] == rows[:-1]
            if np.any(same_row & (indices[1:] == indices[:-1])):
                raise ValueError("duplicate attribute index within a point")
        if self.category_bound is not None and values.size and values.max() > self.category_bound:
            raise ValueError(f"value {values.max()} exceeds category bound {self.category_bound}")
        for arr in (indptr, indices, values):
            arr.setflags(write=False)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_sigma", int(np.diff(indptr).max()) if indptr.size > 1 else 0)

    @classmethod
    def from_vectors(cls, vectors: Sequence[CategoricalVector], name: str = "dataset",
                     category_bound: int | None = None, n: int | None = None) -> "Dataset":
        vectors = list(vectors)
        if n is None:
            if not vectors:
                raise ValueError("cannot infer n from an empty collection")
            n = vectors[0].dim
        if any(v.dim != n for v in vectors):
            raise ValueError("all points must share the same dimension")
        indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
        np.cumsum([v.nnz for v in vectors], out=indptr[1:])
        empty = np.empty(0, dtype=np.int64)
        indices = np.concatenate([v.indices for v in vectors]) if vectors else empty
        values = np.concatenate([v.values for v in vectors]) if vectors else empty
        return cls(n, indptr, indices, values, name, category_bound)

    def __len__(self) -> int:
        return self.indptr.shape[0] - 1

    def __getitem__(self, k: int) -> CategoricalVector:
        if not -len(self) <= k < len(self):
            raise IndexError(k)
        k %= len(self)
        lo, hi = self.indptr[k], self.indptr[k + 1]
        return CategoricalVector(self.n, self.indices[lo:hi], self.values[lo:hi])

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    @property
    def points(self) -> list[CategoricalVector]:
        return list(self)

    @property
    def c(self) -> int:
        """Largest observed category value."""
        return int(self.values.max()) if self.values.size else 0

    @property
    def category_count(self) -> int:
        """Category bound used for encoding: the explicit bound if set, else ``c``."""
        return self.category_bound if self.category_bound is not None else self.c

    @property
    def sigma(self) -> int:
        return self._sigma

    @property
    def nnz_per_point(self) -> np.ndarray:
        return np.diff(self.indptr)

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.indptr, self.indices, self.values

    def to_dense(self) -> np.ndarray:
        out = np.zeros((len(self), self.n), dtype=np.int64)
        out[np.repeat(np.arange(len(self)), self.nnz_per_point), self.indices] = self.values
        return out

    def subset(self, rows: Iterable[int], name: str | None = None) -> "Dataset":
        return Dataset.from_vectors([self[int(k)] for k in rows], name or self.name,
                                    self.category_bound, n=self.n)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))


def dataset_stats(ds: Dataset) -> tuple[int, int, int, int]:
    """``(n, c, sigma, count)``."""
    if len(ds) == 0:
        raise ValueError("dataset is empty")
    return ds.n, ds.c, ds.sigma, len(ds)


def sample_points(ds: Dataset, count: int, seed: int) -> Dataset:
    """Seeded uniform sample of ``count`` points without replacement, in original order."""
    if count >= len(ds):
        return ds
    rng = np.random.default_rng(seed)
    rows = np.sort(rng.choice(len(ds), size=count, replace=False))
    return ds.subset(rows, name=f"{ds.name}[sample {count} seed {seed}]")


def _text_lines(source: IO) -> list[str]:
    raw = source.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    return raw.splitlines()


def _header_int(lines: list[str], k: int, label: str) -> int:
    if k >= len(lines):
        raise DataFormatError(f"missing header value {label}", k + 1)
    try:
        value = int(lines[k].strip())
    except ValueError:
        raise DataFormatError(f"header {label} is not an integer: {lines[k]!r}", k + 1) from None
    if value < 0:
        raise DataFormatError(f"header {label} is negative", k + 1)
    return value


def load_docword(source: IO, category_ceiling: int | None = None, name: str = "docword") -> Dataset:
    """Parse a UCI bag-of-words ``docword`` stream, one point per document.

    Counts above ``category_ceiling`` are capped to it with a warning.
    """
    lines = _text_lines(source)
    num_docs = _header_int(lines, 0, "D")
    num_words = _header_int(lines, 1, "W")
    declared = _header_int(lines, 2, "NNZ")
    if num_words < 1:
        raise DataFormatError("W must be positive", 2)
    body = [(k + 1, line) for k, line in enumerate(lines[3:], start=3) if line.strip()]
    if len(body) != declared:
        raise DataFormatError(f"header declares NNZ={declared} but found {len(body)} entries", 3)
    triples = np.empty((len(body), 3), dtype=np.int64)
    for row, (lineno, line) in enumerate(body):
        parts = line.split()
        if len(parts) != 3:
            raise DataFormatError(f"expected 'docID wordID count', got {line!r}", lineno)
        try:
            triples[row] = [int(t) for t in parts]
        except ValueError:
            raise DataFormatError(f"non-integer field in {line!r}", lineno) from None
    docs, words, counts = triples.T if body else (np.empty(0, np.int64),) * 3
    linenos = np.array([ln for ln, _ in body], dtype=np.int64)
    for mask, what in (((docs < 1) | (docs > num_docs), "docID out of range"),
                       ((words < 1) | (words > num_words), "wordID out of range"),
                       (counts < 1, "count must be >= 1")):
        if mask.any():
            raise DataFormatError(what, int(linenos[np.argmax(mask)]))
    order = np.lexsort((words, docs))
    dup = (docs[order][1:] == docs[order][:-1]) & (words[order][1:] == words[order][:-1])
    if dup.any():
        raise DataFormatError("duplicate (docID, wordID) entry", int(linenos[order][1:][np.argmax(dup)]))
    if category_ceiling is not None and counts.size and counts.max() > category_ceiling:
        over = int(np.count_nonzero(counts > category_ceiling))
        warnings.warn(f"{over} counts exceed the category ceiling {category_ceiling}; capped", stacklevel=2)
        counts = np.minimum(counts, category_ceiling)
    docs, words, counts = docs[order], words[order], counts[order]
    indptr = np.zeros(num_docs + 1, dtype=np.int64)
    np.cumsum(np.bincount(docs - 1, minlength=num_docs), out=indptr[1:])
    return Dataset(num_words, indptr, words - 1, counts, name, category_ceiling)


def load_native(source: IO, name: str = "native") -> Dataset:
    lines = _text_lines(source)
    if not lines:
        raise DataFormatError("missing header 'n c'", 1)
    try:
        n, c = (int(t) for t in lines[0].split())
    except ValueError:
        raise DataFormatError(f"header must be 'n c', got {lines[0]!r}", 1) from None
    vectors = []
    for lineno, line in enumerate(lines[1:], start=2):
        entries = {}
        for token in line.split():
            try:
                idx, val = (int(t) for t in token.split(":"))
            except ValueError:
                raise DataFormatError(f"bad entry {token!r}, expected idx:val", lineno) from None
            if not 1 <= idx <= n:
                raise DataFormatError(f"index {idx} out of range [1, {n}]", lineno)
            if not 1 <= val <= c:
                raise DataFormatError(f"value {val} out of range [1, {c}]", lineno)
            if idx - 1 in entries:
                raise DataFormatError(f"duplicate index {idx}", lineno)
            entries[idx - 1] = val
        vectors.append(CategoricalVector.from_dict(n, entries))
    return Dataset.from_vectors(vectors, name, category_bound=c, n=n)


def dump_native(ds: Dataset, sink: IO[str]) -> None:
    sink.write(f"{ds.n} {ds.category_count}\n")
    for x in ds:
        sink.write(" ".join(f"{i + 1}:{v}" for i, v in zip(x.indices.tolist(), x.values.tolist())))
        sink.write("\n")


def load_dataset(path: str | os.PathLike, fmt: str = "native", category_ceiling: int | None = None) -> Dataset:
    name = os.path.basename(os.fspath(path))
    with open(path, "rb") as fh:
        if fmt == "docword":
            return load_docword(fh, category_ceiling, name=name)
        if fmt == "native":
            return load_native(fh, name=name)
    raise ValueError(f"unknown dataset format {fmt!r}")


def atomic_write(path: str | os.PathLike, data: bytes) -> None:
    """Write via a temporary file in the same directory so readers never see a partial file."""
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), prefix=".fsketch-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_dataset(path: str | os.PathLike, ds: Dataset) -> None:
    buf = io.StringIO()
    dump_native(ds, buf)
    atomic_write(path, buf.getvalue().encode("utf-8"))


def cell_dtype(p: int) -> np.dtype:
    for dtype in (np.uint8, np.uint16, np.uint32):
        if p - 1 <= np.iinfo(dtype).max:
            return np.dtype(dtype).newbyteorder("<")
    raise ValueError(f"p={p} does not fit a 4-byte cell")


@dataclass(frozen=True, eq=False)
class SketchFile:
    """Sketches of ``count`` points, each with ``k`` rows of ``d`` cells."""

    n: int
    d: int
    p: int
    seed: int
    sigma: int
    cells: np.ndarray  # (count, k, d)

    @property
    def count(self) -> int:
        return int(self.cells.shape[0])

    @property
    def k(self) -> int:
        return int(self.cells.shape[1])

    def __eq__(self, other):
        if not isinstance(other, SketchFile):
            return NotImplemented
        return ((self.n, self.d, self.p, self.seed, self.sigma) ==
                (other.n, other.d, other.p, other.seed, other.sigma)
                and self.cells.shape == other.cells.shape
                and np.array_equal(self.cells, other.cells))


def encode_sketches(sf: SketchFile) -> bytes:
    cells = np.asarray(sf.cells)
    if cells.ndim == 2:
        cells = cells[:, None, :]
    count, k, d = cells.shape
    if d != sf.d and count:
        raise ValueError(f"cells have width {d} but d={sf.d}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if cells.size and int(cells.max()) >= sf.p:
        raise ValueError(f"cell value outside [0, {sf.p})")
    header = _HEADER.pack(MAGIC, sf.n, sf.d, sf.p, sf.seed, count, sf.sigma, k)
    return header + np.ascontiguousarray(cells, dtype=cell_dtype(sf.p)).tobytes()


def decode_sketches(data: bytes) -> SketchFile:
    if len(data) < _HEADER.size:
        raise SketchFormatError("truncated header")
    magic, n, d, p, seed, count, sigma, k = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SketchFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if n < 1 or d < 1 or p < 2 or k < 1:
        raise SketchFormatError(f"corrupt header n={n} d={d} p={p} k={k}")
    try:
        dtype = cell_dtype(p)
    except ValueError as exc:
        raise SketchFormatError(str(exc)) from None
    expected = count * k * d * dtype.itemsize
    payload = memoryview(data)[_HEADER.size:]
    if len(payload) != expected:
        raise SketchFormatError(f"payload has {len(payload)} bytes, expected {expected}")
    cells = np.frombuffer(payload, dtype=dtype).reshape(count, k, d).astype(np.uint32)
    if cells.size and int(cells.max()) >= p:
        raise SketchFormatError("cell value outside [0, p)")
    return SketchFile(n, d, p, seed, sigma, cells)


def save_sketches(path: str | os.PathLike, sf: SketchFile) -> None:
    atomic_write(path, encode_sketches(sf))


def load_sketches(path: str | os.PathLike) -> SketchFile:
    with open(path, "rb") as fh:
        return decode_sketches(fh.read())
