"""``fsketch`` command line.

Every failure prints one line ``error: <kind>: <message>`` to stderr and exits
non-zero; outputs are written atomically so a failed run leaves nothing behind.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
import warnings

import numpy as np

from . import __version__
from .core import FSketchVector, default_dim, derive_seed, init_params, is_prime, sketch_rows, update_sketch
from .data_io import SketchFile, atomic_write, dataset_stats, load_dataset, load_sketches, save_dataset, save_sketches
from .estimator import EstimatorConfig, estimate_hamming_array
from . import evaluation as ev
from . import kernels
from .synthetic import make_synthetic

COMMANDS = ("stats", "synth", "sketch", "update", "estimate", "rmse", "search", "variance", "cluster")


class CLIError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError(f"usage: {message}")


def _int_list(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("dimensions must be positive integers")
    return values


def _prime_arg(text: str):
    if text == "auto":
        return None
    return int(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fsketch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fsketch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_args(p):
        p.add_argument("--input", required=True)
        p.add_argument("--format", choices=("docword", "native"), default="native")
        p.add_argument("--category-ceiling", type=int, default=None,
                       help="cap docword counts at this category value")

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--p", type=_prime_arg, default=None, help="prime modulus or 'auto' (next prime after c)")
        p.add_argument("--sigma", type=int, default=None, help="override the dataset sparsity")
        p.add_argument("--out", default=None)

    p = sub.add_parser("stats", help="print n, c, sigma and point count")
    data_args(p)

    p = sub.add_parser("synth", help="write a seeded synthetic dataset in native format")
    p.add_argument("--out", required=True)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--sigma", type=int, default=100)
    p.add_argument("--c", type=int, default=42)
    p.add_argument("--clusters", type=int, default=None)
    p.add_argument("--mutation", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--labels-out", default=None)

    p = sub.add_parser("sketch", help="sketch a dataset into a binary sketch file")
    data_args(p)
    common(p)
    p.add_argument("--d", type=int, default=None, help="reduced dimension (default 4*sigma)")
    p.add_argument("--k", type=int, default=1, help="median arity")

    p = sub.add_parser("update", help="apply 'point idx old new' mutations to a sketch file")
    p.add_argument("--input", required=True, help="sketch file")
    p.add_argument("--mutations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--c", type=int, default=None, help="largest allowed new value")

    p = sub.add_parser("estimate", help="estimate Hamming distances between sketched points")
    p.add_argument("--input", required=True, help="sketch file")
    p.add_argument("--pairs", default=None, help="file of 'i j' lines (1-based); default all pairs")
    p.add_argument("--sigma", type=int, default=None)
    p.add_argument("--pair-budget", type=int, default=ev.DEFAULT_PAIR_BUDGET)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--out", default=None)

    for name, helptext in (("rmse", "pairwise RMSE sweep over --dims"),
                           ("search", "top-k similarity search accuracy sweep"),
                           ("variance", "estimator variance for one pair over fresh draws"),
                           ("cluster", "k-modes purity on sketches vs the full data")):
        p = sub.add_parser(name, help=helptext)
        data_args(p)
        common(p)
        p.add_argument("--dims", type=_int_list, default=None, help="comma-separated reduced dimensions")
        p.add_argument("--methods", default=",".join(ev.DEFAULT_METHODS))
        p.add_argument("--k", type=int, default=1, help="median arity for FSketch")
        p.add_argument("--pair-budget", type=int, default=ev.DEFAULT_PAIR_BUDGET)
        p.add_argument("--query-frac", type=float, default=0.05)
        p.add_argument("--topk", type=int, default=100)
        p.add_argument("--repeats", type=int, default=100)
        p.add_argument("--clusters", type=int, default=5)
        p.add_argument("--delta", type=float, default=0.05)
        p.add_argument("--timing", action="store_true", help="also report sketching time (ms)")
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write(out, text.encode("utf-8"))
    else:
        sys.stdout.write(text)


def _meta(ds, args) -> ev.DatasetMeta:
    if args.p is not None and not is_prime(args.p):
        raise CLIError(f"--p {args.p} is not prime")
    return ev.DatasetMeta.of(ds, p=args.p, sigma=args.sigma)


def cmd_stats(args):
    ds = load_dataset(args.input, args.format, args.category_ceiling)
    n, c, sigma, count = dataset_stats(ds)
    print(f"n={n} c={c} sigma={sigma} count={count}")


def cmd_synth(args):
    ds, labels = make_synthetic(args.points, args.n, args.sigma, args.c, args.seed,
                                clusters=args.clusters, mutation=args.mutation)
    save_dataset(args.out, ds)
    if args.labels_out:
        atomic_write(args.labels_out, "".join(f"{v}\n" for v in labels.tolist()).encode())


def cmd_sketch(args):
    if not args.out:
        raise CLIError("--out is required")
    ds = load_dataset(args.input, args.format, args.category_ceiling)
    meta = _meta(ds, args)
    d = args.d or default_dim(meta.sigma)
    if args.k < 1:
        raise CLIError("--k must be >= 1")
    seeds = [args.seed] if args.k == 1 else [derive_seed(args.seed, row) for row in range(args.k)]
    rows = [sketch_rows(*ds.csr(), init_params(ds.n, d, meta.p, s)) for s in seeds]
    cells = np.stack(rows, axis=1)
    save_sketches(args.out, SketchFile(ds.n, d, meta.p, args.seed, meta.sigma, cells))


def _row_params(sf: SketchFile):
    seeds = [sf.seed] if sf.k == 1 else [derive_seed(sf.seed, row) for row in range(sf.k)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return [init_params(sf.n, sf.d, sf.p, s) for s in seeds]


def _read_int_lines(path: str, width: int, what: str):
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split()
            try:
                values = [int(t) for t in parts]
            except ValueError:
                values = []
            if len(values) != width:
                raise CLIError(f"{path}:{lineno}: expected {what}, got {line.strip()!r}")
            out.append((lineno, values))
    return out


def cmd_update(args):
    sf = load_sketches(args.input)
    params = _row_params(sf)
    cells = sf.cells.copy()
    for lineno, (point, idx, old, new) in _read_int_lines(args.mutations, 4, "'point idx old new'"):
        if not 1 <= point <= sf.count:
            raise CLIError(f"{args.mutations}:{lineno}: point {point} out of range [1, {sf.count}]")
        if not 1 <= idx <= sf.n:
            raise CLIError(f"{args.mutations}:{lineno}: attribute {idx} out of range [1, {sf.n}]")
        for row, prm in enumerate(params):
            s = FSketchVector(cells[point - 1, row], sf.p)
            cells[point - 1, row] = update_sketch(s, idx - 1, old, new, prm, c=args.c).cells
    save_sketches(args.out, SketchFile(sf.n, sf.d, sf.p, sf.seed, sf.sigma, cells))


def cmd_estimate(args):
    sf = load_sketches(args.input)
    sigma = sf.sigma if args.sigma is None else args.sigma
    cfg = EstimatorConfig(sf.d, sf.p, sigma)
    if args.pairs:
        pairs = np.array([v for _, v in _read_int_lines(args.pairs, 2, "'i j'")], dtype=np.int64).reshape(-1, 2)
        if pairs.size and (pairs.min() < 1 or pairs.max() > sf.count):
            raise CLIError(f"pair index out of range [1, {sf.count}]")
        i, j = pairs[:, 0] - 1, pairs[:, 1] - 1
    else:
        i, j, _ = ev.select_pairs(sf.count, args.pair_budget, args.seed)
    fs = np.stack([kernels.pair_hamming(sf.cells[:, row], sf.cells[:, row], i, j) for row in range(sf.k)])
    est = np.median(np.stack([estimate_hamming_array(f, cfg) for f in fs]), axis=0)
    clamped = (fs >= cfg.clamp_threshold).any(axis=0)
    band = 32.0 / cfg.P * math.sqrt(sigma * math.log(2.0 / args.delta)) if sigma else 0.0
    buf = io.StringIO()
    buf.write(f"# fsketch {__version__} command=estimate seed={sf.seed} d={sf.d} p={sf.p} "
              f"sigma={sigma} k={sf.k} delta={args.delta} band={band!r}\n")
    buf.write("i,j,f,h_hat,clamped\n")
    fmean = fs.mean(axis=0)
    for a, b, f, h, cl in zip(i.tolist(), j.tolist(), fmean.tolist(), est.tolist(), clamped.tolist()):
        f_text = str(int(f)) if float(f).is_integer() else repr(f)
        buf.write(f"{a + 1},{b + 1},{f_text},{h!r},{int(cl)}\n")
    _emit(buf.getvalue(), args.out)


def _sweep(args):
    ds = load_dataset(args.input, args.format, args.category_ceiling)
    meta = _meta(ds, args)
    dims = args.dims or [meta.default_dim]
    names = [m.strip() for m in args.methods.split(",") if m.strip()]
    if args.k > 1:
        names = [f"median-fsketch-k{args.k}" if m == "fsketch" else m for m in names]
    methods = ev.resolve_methods(names)
    if args.command == "rmse":
        reports = ev.rmse_sweep(ds, methods, dims, args.seed, meta, args.pair_budget)
    elif args.command == "search":
        reports = ev.search_sweep(ds, methods, dims, args.seed, args.topk, args.query_frac, meta)
    elif args.command == "variance":
        reports = ev.estimate_variance_profile(ds, dims, args.repeats, args.seed, methods, meta)
    else:
        reports = ev.cluster_sweep(ds, methods, dims, args.seed, args.clusters, meta=meta)
    if args.timing:
        reports += ev.timing_sweep(ds, methods, dims, args.seed, meta=meta)
    buf = io.StringIO()
    comment = (f"fsketch {__version__} command={args.command} dataset={ds.name} seed={args.seed} "
               f"p={meta.p} sigma={meta.sigma} c={meta.c} dims={','.join(map(str, dims))} "
               f"backend={kernels.BACKEND}")
    ev.write_reports(reports, buf, comment)
    _emit(buf.getvalue(), args.out)


HANDLERS = {
    "stats": cmd_stats,
    "synth": cmd_synth,
    "sketch": cmd_sketch,
    "update": cmd_update,
    "estimate": cmd_estimate,
    "rmse": _sweep,
    "search": _sweep,
    "variance": _sweep,
    "cluster": _sweep,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        HANDLERS[args.command](args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, IndexError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
