"""Sketches of sparse categorical vectors that preserve Hamming distance."""

__version__ = "0.1.0"

from .core import (
    CategoricalVector,
    FSketchVector,
    SketchParams,
    create_sketch,
    default_dim,
    derive_seed,
    init_params,
    is_prime,
    next_prime,
    sketch_entry,
    sketch_many,
    sketch_nnz,
    sketch_rows,
    sparsity,
    update_sketch,
)
from .estimator import (
    DistanceEstimate,
    EstimatorConfig,
    MedianParams,
    MedianSketch,
    collision_probability,
    create_median_sketch,
    estimate_hamming,
    estimate_pair,
    estimate_pairs,
    expected_collisions,
    init_median_params,
    median_estimate,
    sketch_hamming,
)
from .data_io import Dataset, dataset_stats, load_docword, load_sketches, save_sketches
from .kernels import BACKEND
