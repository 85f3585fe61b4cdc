"""Hamming distance estimates recovered from sketch disagreements.

Two vectors at Hamming distance h disagree on a given sketch cell with probability
``P * (1 - D**h)`` where ``D = 1 - 1/d`` and ``P = 1 - 1/p``. Inverting the expected
number of disagreeing cells gives the estimate used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .core import CategoricalVector, FSketchVector, SketchParams, create_sketch, derive_seed, init_params


@dataclass(frozen=True)
class EstimatorConfig:
    d: int
    p: int
    sigma: int

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"estimation needs d >= 2 (ln D is 0 at d=1), got d={self.d}")
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")

    @property
    def D(self) -> float:
        return 1.0 - 1.0 / self.d

    @property
    def P(self) -> float:
        return 1.0 - 1.0 / self.p

    @property
    def clamp_threshold(self) -> float:
        """Sketch distances at or above d*P cannot be inverted."""
        return self.d * self.P

    @property
    def cap(self) -> float:
        return 2.0 * self.sigma

    @classmethod
    def for_params(cls, params: SketchParams, sigma: int) -> "EstimatorConfig":
        return cls(params.d, params.p, sigma)


@dataclass(frozen=True)
class DistanceEstimate:
    h_hat: float
    f: float
    clamped: bool


def sketch_hamming(a: FSketchVector, b: FSketchVector) -> int:
    """Number of cells where two sketches differ."""
    if a.d != b.d or a.p != b.p:
        raise ValueError(f"incompatible sketches: d {a.d}/{b.d}, p {a.p}/{b.p}")
    return int(np.count_nonzero(a.cells != b.cells))


def collision_probability(h: float, cfg: EstimatorConfig) -> float:
    """Probability that one sketch cell differs for vectors at Hamming distance ``h``."""
    if h < 0:
        raise ValueError(f"h must be non-negative, got {h}")
    # 1 - D**h computed without cancellation.
    return cfg.P * -math.expm1(h * math.log1p(-1.0 / cfg.d))


def expected_collisions(h: float, cfg: EstimatorConfig) -> float:
    """Expected number of differing sketch cells, ``d * P * (1 - D**h)``."""
    return cfg.d * collision_probability(h, cfg)


def _invert(f, cfg: EstimatorConfig):
    return np.log1p(-np.asarray(f, dtype=np.float64) / cfg.clamp_threshold) / math.log1p(-1.0 / cfg.d)


def estimate_hamming(f: float, cfg: EstimatorConfig) -> DistanceEstimate:
    """Invert a sketch distance; returns 2*sigma once ``f >= d*P``.

    The unclamped branch is also capped at 2*sigma, the largest possible distance
    between two sigma-sparse vectors.
    """
    if f < 0 or f > cfg.d:
        raise ValueError(f"sketch distance {f} outside [0, {cfg.d}]")
    if f >= cfg.clamp_threshold:
        return DistanceEstimate(cfg.cap, f, True)
    if f == 0:
        return DistanceEstimate(0.0, f, False)
    return DistanceEstimate(min(float(_invert(f, cfg)), cfg.cap), f, False)


def estimate_hamming_array(f, cfg: EstimatorConfig) -> np.ndarray:
    """Vectorised :func:`estimate_hamming`; returns only the estimates."""
    f = np.asarray(f, dtype=np.float64)
    clamped = f >= cfg.clamp_threshold
    with np.errstate(divide="ignore", invalid="ignore"):
        h = _invert(np.where(clamped, 0.0, f), cfg)
    h = np.minimum(h, cfg.cap)
    h[clamped] = cfg.cap
    h[f == 0] = 0.0
    return h


def estimate_pair(a: FSketchVector, b: FSketchVector, cfg: EstimatorConfig) -> DistanceEstimate:
    if a.d != cfg.d or a.p != cfg.p:
        raise ValueError("sketch shape does not match estimator config")
    return estimate_hamming(sketch_hamming(a, b), cfg)


def estimate_pairs(sketches_a: np.ndarray, sketches_b: np.ndarray, ia, ib, cfg: EstimatorConfig,
                   backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Batch estimation over row pairs; returns ``(f, h_hat)`` arrays."""
    f = kernels.pair_hamming(sketches_a, sketches_b, ia, ib, backend=backend)
    return f, estimate_hamming_array(f, cfg)


@dataclass(frozen=True)
class MedianParams:
    """Independent params for each of the k rows; row i is shared by all points."""

    rows: tuple[SketchParams, ...]

    def __post_init__(self):
        if not self.rows:
            raise ValueError("a median sketch needs at least one row")
        d, p = self.rows[0].d, self.rows[0].p
        if any(row.d != d or row.p != p for row in self.rows):
            raise ValueError("all rows must share d and p")

    @property
    def k(self) -> int:
        return len(self.rows)

    @property
    def d(self) -> int:
        return self.rows[0].d

    @property
    def p(self) -> int:
        return self.rows[0].p


def init_median_params(n: int, d: int, p: int, k: int, seed: int) -> MedianParams:
    """Row i is drawn from ``derive_seed(seed, i)``."""
    if k < 1:
        raise ValueError(f"arity k must be >= 1, got {k}")
    return MedianParams(tuple(init_params(n, d, p, derive_seed(seed, i)) for i in range(k)))


@dataclass(frozen=True)
class MedianSketch:
    rows: tuple[FSketchVector, ...]
    params: MedianParams

    @property
    def k(self) -> int:
        return len(self.rows)


def create_median_sketch(x: CategoricalVector, params: MedianParams) -> MedianSketch:
    return MedianSketch(tuple(create_sketch(x, row) for row in params.rows), params)


_STATISTICS = {
    "median": np.median,
    "mean": np.mean,
    "min": np.min,
}


def row_estimates(phi_x: MedianSketch, phi_y: MedianSketch, cfg: EstimatorConfig) -> list[DistanceEstimate]:
    if phi_x.k != phi_y.k:
        raise ValueError(f"arity mismatch: {phi_x.k} != {phi_y.k}")
    if phi_x.params is not phi_y.params and not all(
            a.same_as(b) for a, b in zip(phi_x.params.rows, phi_y.params.rows)):
        raise ValueError("median sketches were built with different params")
    return [estimate_pair(a, b, cfg) for a, b in zip(phi_x.rows, phi_y.rows)]


def median_estimate(phi_x: MedianSketch, phi_y: MedianSketch, cfg: EstimatorConfig,
                    statistic: str = "median") -> DistanceEstimate:
    """Combine the k per-row estimates; the median by default.

    ``statistic`` may also be ``"mean"`` or ``"min"`` for comparison. For even k
    the median is the mean of the two middle estimates. ``f`` in the result is the
    mean per-row sketch distance and ``clamped`` is set if any row clamped.
    """
    rows = row_estimates(phi_x, phi_y, cfg)
    return combine_estimates(rows, statistic)


def combine_estimates(rows: Sequence[DistanceEstimate], statistic: str = "median") -> DistanceEstimate:
    try:
        reduce = _STATISTICS[statistic]
    except KeyError:
        raise ValueError(f"unknown statistic {statistic!r}; choose from {sorted(_STATISTICS)}") from None
    h = float(reduce([r.h_hat for r in rows]))
    f = float(np.mean([r.f for r in rows]))
    return DistanceEstimate(h, f, any(r.clamped for r in rows))
