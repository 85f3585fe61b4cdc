"""Desk-scale evaluation: pairwise RMSE, top-k search accuracy, purity, variance, timing.

A *method* turns a dataset into a :class:`Reduction` at a given reduced dimension:
the discrete sketch rows (used for clustering) plus a vectorised pair estimator
``estimate(i, j) -> distances``. The registry in :data:`METHODS` holds FSketch,
the in-repo hash baselines and the exact-distance oracle.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import baselines, kernels
from .core import default_dim, derive_seed, init_params, next_prime, sketch_rows
from .data_io import Dataset
from .estimator import EstimatorConfig, estimate_hamming_array

PairEstimator = Callable[[np.ndarray, np.ndarray], np.ndarray]

METRICS = ("rmse", "topk_accuracy", "purity", "variance", "time_ms")
DEFAULT_PAIR_BUDGET = 10**6


@dataclass(frozen=True)
class DatasetMeta:
    """Dataset-level quantities every method needs, fixed before any sketching."""

    n: int
    c: int
    sigma: int
    p: int

    @classmethod
    def of(cls, ds: Dataset, p: int | None = None, sigma: int | None = None) -> "DatasetMeta":
        c = max(1, ds.category_count)
        return cls(ds.n, c, ds.sigma if sigma is None else sigma, p or next_prime(c))

    @property
    def default_dim(self) -> int:
        return default_dim(self.sigma)


@dataclass
class Reduction:
    method: str
    dim: int
    rows: np.ndarray | None
    estimate: PairEstimator


Method = Callable[[Dataset, int, int, DatasetMeta], Reduction]


@dataclass
class EvalReport:
    method: str
    reduced_dim: int
    metric: str
    value: float
    seed: int
    trials: int
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.metric == "rmse" and self.value < 0:
            raise ValueError("rmse must be non-negative")
        if self.metric in ("topk_accuracy", "purity") and not 0.0 <= self.value <= 1.0:
            raise ValueError(f"{self.metric} must lie in [0, 1]")

    def csv_row(self) -> list:
        return [self.method, self.reduced_dim, self.metric, repr(float(self.value)), self.seed, self.trials]


CSV_COLUMNS = ["method", "dim", "metric", "value", "seed", "trials"]


def write_reports(reports: Iterable[EvalReport], sink, comment: str | None = None) -> None:
    if comment:
        sink.write(f"# {comment}\n")
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    rows = sorted(reports, key=lambda r: (r.metric, r.method, r.reduced_dim))
    for report in rows:
        writer.writerow(report.csv_row())


# Exact distances ------------------------------------------------------------

def _indicator_matrices(ds: Dataset):
    m = len(ds)
    support = sp.csr_matrix((np.ones(ds.indices.size), ds.indices, ds.indptr), shape=(m, ds.n))
    width = max(1, ds.c)
    onehot = sp.csr_matrix((np.ones(ds.indices.size), ds.indices * width + ds.values - 1, ds.indptr),
                           shape=(m, ds.n * width))
    return support, onehot


def _rowwise_dot(mat: sp.csr_matrix, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    return np.asarray(mat[i].multiply(mat[j]).sum(axis=1)).reshape(-1)


def exact_hamming_pairs(ds: Dataset, i, j) -> np.ndarray:
    """True Hamming distance for each pair ``(i[k], j[k])``.

    Uses ``HD = nnz(x) + nnz(y) - |common support| - |common support with equal value|``.
    """
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    nnz = ds.nnz_per_point
    support, onehot = _indicator_matrices(ds)
    out = np.empty(i.shape[0], dtype=np.int64)
    step = 1 << 16
    for lo in range(0, i.shape[0], step):
        a, b = i[lo:lo + step], j[lo:lo + step]
        shared = _rowwise_dot(support, a, b) + _rowwise_dot(onehot, a, b)
        out[lo:lo + step] = nnz[a] + nnz[b] - np.rint(shared).astype(np.int64)
    return out


def select_pairs(m: int, budget: int = DEFAULT_PAIR_BUDGET, seed: int = 0) -> tuple[np.ndarray, np.ndarray, bool]:
    """All unordered pairs, or a seeded sample of ``budget`` pairs when there are more."""
    if m < 2:
        raise ValueError("need at least two points")
    total = m * (m - 1) // 2
    if total <= budget:
        i, j = np.triu_indices(m, 1)
        return i.astype(np.int64), j.astype(np.int64), False
    rng = np.random.default_rng(seed)
    i = rng.integers(0, m, size=budget)
    j = (i + rng.integers(1, m, size=budget)) % m
    return np.minimum(i, j), np.maximum(i, j), True


# Methods --------------------------------------------------------------------

def fsketch_method(k: int = 1) -> Method:
    """FSketch with the given median arity (k=1 is a plain sketch)."""

    def build(ds: Dataset, d: int, seed: int, meta: DatasetMeta) -> Reduction:
        cfg = EstimatorConfig(d, meta.p, meta.sigma)
        seeds = [seed] if k == 1 else [derive_seed(seed, row) for row in range(k)]
        blocks = [sketch_rows(*ds.csr(), init_params(ds.n, d, meta.p, s)) for s in seeds]

        def estimate(i, j):
            per_row = [estimate_hamming_array(kernels.pair_hamming(b, b, i, j), cfg) for b in blocks]
            return per_row[0] if k == 1 else np.median(per_row, axis=0)

        return Reduction("fsketch" if k == 1 else f"median-fsketch-k{k}", d,
                         np.hstack(blocks), estimate)

    return build


def _hamming_reduction(name: str, rows: np.ndarray, d: int) -> Reduction:
    return Reduction(name, d, rows,
                     lambda i, j: kernels.pair_hamming(rows, rows, i, j).astype(np.float64))


def feature_hash_method(ds: Dataset, d: int, seed: int, meta: DatasetMeta) -> Reduction:
    return _hamming_reduction("fh", baselines.feature_hash_rows(*ds.csr(), d, seed), d)


def simhash_method(ds: Dataset, d: int, seed: int, meta: DatasetMeta) -> Reduction:
    return _hamming_reduction("sh", baselines.simhash_rows(*ds.csr(), ds.n, d, seed), d)


def ohe_proxy_method(ds: Dataset, d: int, seed: int, meta: DatasetMeta) -> Reduction:
    rows = baselines.ohe_bucket_rows(*ds.csr(), meta.c, d, seed)
    return _hamming_reduction(baselines.PROXY_LABEL, rows, d)


def exact_method(ds: Dataset, d: int, seed: int, meta: DatasetMeta) -> Reduction:
    return Reduction("exact", d, None, lambda i, j: exact_hamming_pairs(ds, i, j).astype(np.float64))


METHODS: dict[str, Method] = {
    "fsketch": fsketch_method(),
    "fh": feature_hash_method,
    "sh": simhash_method,
    baselines.PROXY_LABEL: ohe_proxy_method,
    "exact": exact_method,
}
DEFAULT_METHODS = ("fsketch", "fh", "sh", baselines.PROXY_LABEL)


def resolve_methods(names: Iterable[str]) -> dict[str, Method]:
    out = {}
    for name in names:
        if name.startswith("median-fsketch-k"):
            out[name] = fsketch_method(int(name.rsplit("k", 1)[1]))
        elif name in METHODS:
            out[name] = METHODS[name]
        else:
            raise ValueError(f"unknown method {name!r}; choose from {sorted(METHODS)}")
    return out


# Metrics --------------------------------------------------------------------

def pairwise_rmse(ds: Dataset, estimator: PairEstimator, pair_budget: int = DEFAULT_PAIR_BUDGET,
                  seed: int = 0) -> float:
    """Root of the mean squared error between true and estimated distances over all pairs.

    Above ``pair_budget`` pairs a seeded sample is used instead.
    """
    i, j, _ = select_pairs(len(ds), pair_budget, seed)
    err = exact_hamming_pairs(ds, i, j) - np.asarray(estimator(i, j), dtype=np.float64)
    return float(math.sqrt(np.mean(err * err)))


def split_queries(m: int, query_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < query_fraction < 1.0:
        raise ValueError("query_fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(m)
    nq = min(m - 1, max(1, int(round(query_fraction * m))))
    return np.sort(perm[:nq]), np.sort(perm[nq:])


def _top_k(dist: np.ndarray, candidates: np.ndarray, k: int) -> np.ndarray:
    # Ascending distance, ties by ascending point index.
    return candidates[np.lexsort((candidates, dist))[:k]]


def topk_accuracy(ds: Dataset, query_fraction: float, k: int, estimator: PairEstimator,
                  seed: int = 0) -> float:
    """Mean Jaccard overlap of each query's true and estimated k nearest training points."""
    queries, train = split_queries(len(ds), query_fraction, seed)
    if k > train.shape[0]:
        raise ValueError(f"k={k} exceeds the training partition size {train.shape[0]}")
    if k < 1:
        raise ValueError("k must be positive")
    scores = []
    for q in queries:
        qs = np.full(train.shape[0], q, dtype=np.int64)
        full = set(_top_k(exact_hamming_pairs(ds, qs, train), train, k).tolist())
        reduced = set(_top_k(np.asarray(estimator(qs, train)), train, k).tolist())
        scores.append(len(full & reduced) / len(full | reduced))
    return float(np.mean(scores))


def purity_index(ground, found) -> float:
    """Fraction of points that fall in the majority ground-truth class of their found cluster."""
    ground = np.asarray(ground)
    found = np.asarray(found)
    if ground.shape != found.shape or ground.ndim != 1:
        raise ValueError("clusterings must label the same points")
    if ground.size == 0:
        raise ValueError("empty clustering")
    _, g = np.unique(ground, return_inverse=True)
    _, f = np.unique(found, return_inverse=True)
    table = np.zeros((f.max() + 1, g.max() + 1), dtype=np.int64)
    np.add.at(table, (f, g), 1)
    return float(table.max(axis=1).sum() / ground.size)


_MODE_TABLE_LIMIT = 1 << 24


def _column_modes(block: np.ndarray) -> np.ndarray:
    """Most frequent value per column; ties go to the smallest value."""
    width = int(block.max()) + 1 if block.size else 1
    cols = block.shape[1]
    if cols * width <= _MODE_TABLE_LIMIT:
        keys = (np.arange(cols)[None, :] * width + block).reshape(-1)
        counts = np.bincount(keys, minlength=cols * width).reshape(cols, width)
        return counts.argmax(axis=1)
    out = np.empty(cols, dtype=np.int64)
    for col in range(cols):
        vals, counts = np.unique(block[:, col], return_counts=True)
        out[col] = vals[counts.argmax()]
    return out


def _nearest(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    out = np.empty(points.shape[0], dtype=np.int64)
    step = max(1, _MODE_TABLE_LIMIT // max(1, centroids.size))
    for lo in range(0, points.shape[0], step):
        dist = (points[lo:lo + step, None, :] != centroids[None, :, :]).sum(axis=2)
        out[lo:lo + step] = dist.argmin(axis=1)
    return out


def k_modes(data, k: int, seed: int = 0, max_iters: int = 100) -> np.ndarray:
    """Lloyd-style k-modes under Hamming distance; returns a cluster label per point.

    ``data`` is a :class:`Dataset` or a 2-D array of discrete values (e.g. sketches).
    Initial modes are ``k`` distinct points drawn with ``seed``; empty clusters keep
    their previous mode.
    """
    points = data.to_dense() if isinstance(data, Dataset) else np.asarray(data)
    points = points.astype(np.int64) - (points.min() if points.size else 0)
    m = points.shape[0]
    if k < 1:
        raise ValueError("k must be positive")
    if k > m:
        raise ValueError(f"k={k} exceeds the number of points {m}")
    rng = np.random.default_rng(seed)
    centroids = points[np.sort(rng.choice(m, size=k, replace=False))].copy()
    labels = _nearest(points, centroids)
    for _ in range(max_iters):
        for c in range(k):
            members = points[labels == c]
            if members.shape[0]:
                centroids[c] = _column_modes(members)
        new_labels = _nearest(points, centroids)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels


# Sweeps ---------------------------------------------------------------------

def rmse_sweep(ds: Dataset, methods: dict[str, Method], dims: Sequence[int], seed: int,
               meta: DatasetMeta | None = None, pair_budget: int = DEFAULT_PAIR_BUDGET) -> list[EvalReport]:
    meta = meta or DatasetMeta.of(ds)
    i, j, sampled = select_pairs(len(ds), pair_budget, seed)
    truth = exact_hamming_pairs(ds, i, j)
    reports = []
    for name, method in methods.items():
        for d in dims:
            red = method(ds, d, seed, meta)
            err = truth - np.asarray(red.estimate(i, j), dtype=np.float64)
            reports.append(EvalReport(name, d, "rmse", float(math.sqrt(np.mean(err * err))), seed,
                                      int(i.shape[0]), {"subsampled": sampled}))
    return reports


def search_sweep(ds: Dataset, methods: dict[str, Method], dims: Sequence[int], seed: int,
                 k: int = 100, query_fraction: float = 0.05,
                 meta: DatasetMeta | None = None) -> list[EvalReport]:
    meta = meta or DatasetMeta.of(ds)
    queries, train = split_queries(len(ds), query_fraction, seed)
    k = min(k, train.shape[0])
    reports = []
    for name, method in methods.items():
        for d in dims:
            red = method(ds, d, seed, meta)
            acc = topk_accuracy(ds, query_fraction, k, red.estimate, seed)
            reports.append(EvalReport(name, d, "topk_accuracy", acc, seed, int(queries.shape[0]), {"k": k}))
    return reports


def cluster_sweep(ds: Dataset, methods: dict[str, Method], dims: Sequence[int], seed: int,
                  k: int, max_iters: int = 100, meta: DatasetMeta | None = None) -> list[EvalReport]:
    meta = meta or DatasetMeta.of(ds)
    ground = k_modes(ds, k, seed, max_iters)
    reports = []
    for name, method in methods.items():
        for d in dims:
            red = method(ds, d, seed, meta)
            found = ground if red.rows is None else k_modes(red.rows, k, seed, max_iters)
            reports.append(EvalReport(name, d, "purity", purity_index(ground, found), seed, len(ds), {"k": k}))
    return reports


def estimate_variance_profile(ds: Dataset, dims: Sequence[int], repeats: int, seed: int,
                              methods: dict[str, Method] | None = None,
                              meta: DatasetMeta | None = None,
                              pair: tuple[int, int] | None = None) -> list[EvalReport]:
    """Mean and variance of one pair's estimate over ``repeats`` fresh random draws.

    One report per (method, dim) with ``metric="variance"``; the mean, true
    distance and pair are in ``detail``.
    """
    if repeats < 2:
        raise ValueError("repeats must be >= 2")
    methods = methods if methods is not None else resolve_methods(["fsketch", "fh", "sh"])
    meta = meta or DatasetMeta.of(ds)
    if pair is None:
        rng = np.random.default_rng(seed)
        a, b = rng.choice(len(ds), size=2, replace=False)
        pair = (int(min(a, b)), int(max(a, b)))
    sub = ds.subset(pair)
    truth = int(exact_hamming_pairs(ds, [pair[0]], [pair[1]])[0])
    zero, one = np.array([0]), np.array([1])
    reports = []
    for name, method in methods.items():
        for d in dims:
            est = np.array([method(sub, d, derive_seed(seed, rep), meta).estimate(zero, one)[0]
                            for rep in range(repeats)], dtype=np.float64)
            reports.append(EvalReport(name, d, "variance", float(est.var(ddof=1)), seed, repeats,
                                      {"mean": float(est.mean()), "true": truth, "pair": pair}))
    return reports


def timing_sweep(ds: Dataset, methods: dict[str, Method], dims: Sequence[int], seed: int,
                 repeats: int = 3, meta: DatasetMeta | None = None) -> list[EvalReport]:
    """Best-of-``repeats`` wall time to reduce the whole dataset."""
    meta = meta or DatasetMeta.of(ds)
    reports = []
    for name, method in methods.items():
        for d in dims:
            best = math.inf
            for _ in range(repeats):
                start = time.perf_counter()
                method(ds, d, seed, meta)
                best = min(best, time.perf_counter() - start)
            reports.append(EvalReport(name, d, "time_ms", best * 1e3, seed, repeats))
    return reports
