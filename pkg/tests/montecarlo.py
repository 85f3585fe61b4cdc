"""Helpers for running many fresh-params trials through the production sketch path.

``T`` independent trials on an n-attribute pair are embedded as one sketch problem
with ``T*n`` attributes and ``T*d`` cells: trial t's attributes map only into cell
block t, with freshly drawn mapping and weights. One kernel call then sketches all
trials at once, and block t of the result is exactly the trial-t sketch.
"""

import numpy as np

from fsketch.core import CategoricalVector, SketchParams, sketch_rows


def block_sketches(vectors, d, p, trials, rng, chunk=10_000):
    """Yield arrays of shape (len(vectors), t, d), one per chunk of t trials."""
    n = vectors[0].dim
    for start in range(0, trials, chunk):
        t = min(chunk, trials - start)
        offsets = (np.arange(t) * d)[:, None]
        rho = (rng.integers(0, d, size=(t, n)) + offsets).reshape(-1)
        r = rng.integers(0, p, size=(t, n)).reshape(-1)
        params = SketchParams(t * n, t * d, p, rho, r)
        indptr = np.arange(len(vectors) + 1, dtype=np.int64) * 0
        idx_parts, val_parts = [], []
        for k, x in enumerate(vectors):
            idx_parts.append((x.indices[None, :] + (np.arange(t) * n)[:, None]).reshape(-1))
            val_parts.append(np.tile(x.values, t))
            indptr[k + 1] = indptr[k] + idx_parts[-1].size
        cells = sketch_rows(indptr, np.concatenate(idx_parts), np.concatenate(val_parts), params)
        yield cells.reshape(len(vectors), t, d)


def pair_distances(x: CategoricalVector, y: CategoricalVector, d, p, trials, rng):
    """Sketch Hamming distance f of (x, y) under ``trials`` fresh params."""
    return np.concatenate([np.count_nonzero(s[0] != s[1], axis=1)
                           for s in block_sketches([x, y], d, p, trials, rng)])


def cell_disagreements(x, y, d, p, trials, rng, cell=0):
    """Whether cell ``cell`` differs, one independent draw per trial."""
    return np.concatenate([s[0, :, cell] != s[1, :, cell]
                           for s in block_sketches([x, y], d, p, trials, rng)])
