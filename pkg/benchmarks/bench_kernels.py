"""Compare the compiled and numpy backends on the two hot loops.

    python3 benchmarks/bench_kernels.py --points 10000 --sigma 1000 --pairs 1000000

Both backends get identical inputs; the script checks that their outputs agree
before reporting the best-of-N wall time for each.
"""

import argparse
import os
import time

import numpy as np

from fsketch import kernels
from fsketch.core import init_params


def best_time(fn, repeats):
    best, result = float("inf"), None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def random_csr(m, n, sigma, c, rng):
    block = n // sigma
    steps = rng.integers(0, block, size=(m, sigma)) + np.arange(sigma) * block
    indices = ((rng.integers(0, n, size=(m, 1)) + steps) % n).reshape(-1)
    values = rng.integers(1, c + 1, size=m * sigma)
    return np.arange(m + 1, dtype=np.int64) * sigma, indices, values


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=10_000)
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--sigma", type=int, default=1000)
    ap.add_argument("--d", type=int, default=400)
    ap.add_argument("--p", type=int, default=43)
    ap.add_argument("--pairs", type=int, default=1_000_000)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    os.environ["FSKETCH_THREADS"] = str(args.threads)

    rng = np.random.default_rng(0)
    indptr, indices, values = random_csr(args.points, args.n, args.sigma, args.p - 1, rng)
    params = init_params(args.n, args.d, args.p, seed=0)
    ia = rng.integers(0, args.points, size=args.pairs)
    ib = rng.integers(0, args.points, size=args.pairs)

    rows = {}
    reference = None
    for name in sorted(kernels.BACKENDS):
        t_sketch, cells = best_time(lambda: kernels.sketch_csr(indptr, indices, values, params.rho, params.r,
                                                               args.p, args.d, backend=name), args.repeats)
        t_pairs, f = best_time(lambda: kernels.pair_hamming(cells, cells, ia, ib, backend=name), args.repeats)
        if reference is None:
            reference = (cells, f)
        elif not (np.array_equal(reference[0], cells) and np.array_equal(reference[1], f)):
            raise SystemExit(f"backend {name} disagrees with {sorted(kernels.BACKENDS)[0]}")
        rows[name] = (t_sketch, t_pairs)

    nnz = indices.size
    print(f"points={args.points} n={args.n} sigma={args.sigma} d={args.d} p={args.p} "
          f"pairs={args.pairs} threads={args.threads}")
    print(f"{'backend':<8} {'sketch s':>10} {'Mnnz/s':>8} {'pairs s':>10} {'Mpairs/s':>9}")
    for name, (ts, tp) in rows.items():
        print(f"{name:<8} {ts:>10.4f} {nnz / ts / 1e6:>8.1f} {tp:>10.4f} {args.pairs / tp / 1e6:>9.1f}")
    if len(rows) == 2:
        (cs, cp), (ps, pp) = rows["cython"], rows["python"]
        print(f"speedup  sketch x{ps / cs:.1f}  pairs x{pp / cp:.1f}")


if __name__ == "__main__":
    main()
