"""Command-line interface.

Subcommands:

  bias-table    precompute debiasing constants over a (k, d, alpha) grid
  estimate      one-shot estimate of J_alpha (or Renyi entropy) from a CSV
  experiment    trial-averaged sweep on a synthetic family, CSV/SVG output
  ground-truth  print a closed-form J_alpha

A `--config FILE` with `key = value` lines supplies defaults for any long
flag of the chosen subcommand; explicit flags win.  The default output
directory honors the RENYIKIT_OUT_DIR environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import bias_mc
from .baselines import estimate_J_kde_fixed, estimate_J_leonenko
from .bias_mc import BiasTable, bias_kde, bias_llde, load_table, store_table
from .errors import RenyikitError, SingularExcess
from .experiments import METHODS, emit_csv, emit_plot, run_experiment
from .kde_estimator import EstimatorConfig, estimate_J_kde, renyi_from_J
from .kernels import FAMILIES as KERNEL_FAMILIES
from .kernels import KernelSpec
from .llde_estimator import estimate_J_klnn
from .neighbors import Dataset, truncation_size
from .synthdata import FAMILIES, ground_truth

OUT_DIR_ENV = "RENYIKIT_OUT_DIR"


def _int_list(text):
    return [int(tok) for tok in text.split(",") if tok != ""]


def _float_list(text):
    return [float(tok) for tok in text.split(",") if tok != ""]


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="renyikit",
        description="Density-power integrals and Renyi entropy from samples",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file with flag defaults")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1,
                        help="parallel workers (results are identical for any value)")
    common.add_argument("--out-dir", default=os.environ.get(OUT_DIR_ENV, "."),
                        help=f"output directory (default ${OUT_DIR_ENV} or .)")

    p = sub.add_parser("bias-table", parents=[common],
                       help="precompute debiasing constants")
    p.add_argument("--k-list", type=_int_list, required=True)
    p.add_argument("--d-list", type=_int_list, required=True)
    p.add_argument("--alpha-list", type=_float_list, required=True)
    p.add_argument("--estimator", choices=["kde", "llde"], required=True)
    p.add_argument("--kernel", choices=list(KERNEL_FAMILIES), default="gaussian")
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--m-trunc", type=_int_list, default=[2000],
                   help="one or more truncation levels (comma-separated); "
                        "estimation picks the entry matching its own "
                        "truncation max(k, ceil(ln n))")
    p.add_argument("--out", required=True,
                   help="table CSV; existing entries are kept and updated")

    p = sub.add_parser("estimate", parents=[common],
                       help="estimate J_alpha or Renyi entropy from CSV samples")
    p.add_argument("--input", required=True, help="CSV, one sample per row")
    p.add_argument("--method", choices=list(METHODS), required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--kernel", choices=list(KERNEL_FAMILIES), default="gaussian")
    p.add_argument("--bias-table", default=None,
                   help="bias table CSV (default: the packaged table)")
    p.add_argument("--bandwidth", default="silverman",
                   help='fixed-KDE bandwidth: a float or "silverman"')
    p.add_argument("--renyi", action="store_true",
                   help="report the Renyi entropy instead of J_alpha")
    p.add_argument("--out", default=None, help="write the CSV row here "
                   "instead of stdout")

    p = sub.add_parser("experiment", parents=[common],
                       help="trial-averaged sweep on a synthetic family")
    p.add_argument("--family", choices=list(FAMILIES), required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--methods", default="klnn,kde,leonenko",
                   help="comma-separated subset of " + ",".join(METHODS))
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--r-list", type=_float_list, default=None)
    p.add_argument("--n-list", type=_int_list, default=None)
    p.add_argument("--r", type=float, default=None, help="fixed r for an n sweep")
    p.add_argument("--n", type=int, default=None, help="fixed n for an r sweep")
    p.add_argument("--kernel", choices=list(KERNEL_FAMILIES), default="gaussian")
    p.add_argument("--bandwidth", default="silverman")
    p.add_argument("--bias-table", default=None)
    p.add_argument("--label", default=None)
    p.add_argument("--plot", action="store_true", help="also write an SVG plot")

    p = sub.add_parser("ground-truth", parents=[common],
                       help="print a closed-form J_alpha")
    p.add_argument("--family", choices=list(FAMILIES), required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    return parser


def _apply_config_file(argv):
    """Expand `--config FILE` into flags placed before the explicit ones."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise RenyikitError("--config needs a file argument")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2 :]
    flags = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise RenyikitError(f"{path}: expected key=value, got {line!r}")
            key, value = (tok.strip() for tok in line.split("=", 1))
            flags.append(f"--{key}={value}")
    if not rest:
        raise RenyikitError("--config requires a subcommand")
    return [rest[0]] + flags + rest[1:]


def _load_bias_table(path):
    if path is None:
        return bias_mc.load_default_table()
    return load_table(path)


def _cmd_bias_table(args):
    path = os.path.join(args.out_dir, args.out) if not os.path.isabs(args.out) \
        else args.out
    table = load_table(path) if os.path.exists(path) else BiasTable()
    jobs = [(k, d, alpha, m)
            for d in args.d_list for alpha in args.alpha_list
            for k in args.k_list for m in args.m_trunc if m >= k]
    for done, (k, d, alpha, m) in enumerate(jobs, start=1):
        try:
            if args.estimator == "kde":
                entry = bias_kde(k, d, alpha, KernelSpec(args.kernel, d),
                                 args.trials, m, args.seed, jobs=args.jobs)
            else:
                entry = bias_llde(k, d, alpha, args.trials, m, args.seed,
                                  jobs=args.jobs)
        except SingularExcess as exc:
            # degenerate grid point (m <= d leaves the local covariance
            # rank-deficient); skip it rather than abort the whole grid
            print(f"[{done}/{len(jobs)}] {args.estimator} k={k} d={d} "
                  f"alpha={alpha:g} m={m}: skipped ({exc})", file=sys.stderr)
            continue
        table.add(entry)
        print(f"[{done}/{len(jobs)}] {args.estimator} k={k} d={d} "
              f"alpha={alpha:g} m={m}: {entry.bias:.6f} "
              f"(stderr {entry.stderr:.2e})", file=sys.stderr)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    store_table(table, path)
    print(path)
    return 0


def _cmd_estimate(args):
    dataset = Dataset.from_csv(args.input)
    kernel = KernelSpec(args.kernel, dataset.d)
    config = EstimatorConfig(k=args.k, alpha=args.alpha, kernel=kernel)
    m = truncation_size(dataset.n, args.k)
    if args.method == "kde":
        if args.alpha == 1.0:  # constant is exactly 1; no table needed
            bias = bias_kde(args.k, dataset.d, 1.0, kernel, 1, m, args.seed)
        else:
            table = _load_bias_table(args.bias_table)
            bias = table.get(args.k, dataset.d, args.alpha, "kde",
                             args.kernel, m)
        result = estimate_J_kde(dataset, config, bias)
    elif args.method == "klnn":
        if args.alpha == 1.0:
            bias = bias_llde(args.k, dataset.d, 1.0, 1, m, args.seed)
        else:
            table = _load_bias_table(args.bias_table)
            bias = table.get(args.k, dataset.d, args.alpha, "llde", None, m)
        result = estimate_J_klnn(dataset, config, bias)
    elif args.method == "leonenko":
        result = estimate_J_leonenko(dataset, args.k, args.alpha)
    else:
        result = estimate_J_kde_fixed(dataset, kernel, args.alpha, args.bandwidth)
    if args.renyi:
        result = renyi_from_J(result, result.method)
    line = (f"method,n,d,k,alpha,value\n"
            f"{result.method},{result.n},{result.d},{result.k},"
            f"{result.alpha:g},{repr(result.value)}\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(line)
        print(args.out)
    else:
        sys.stdout.write(line)
    return 0


def _cmd_experiment(args):
    methods = [tok for tok in args.methods.split(",") if tok]
    table = _load_bias_table(args.bias_table)
    report = run_experiment(
        args.family, args.alpha, args.k, methods, table,
        trials=args.trials, seed=args.seed,
        r_values=args.r_list, n_values=args.n_list, r=args.r, n=args.n,
        kernel_family=args.kernel, bandwidth=args.bandwidth,
        label=args.label, jobs=args.jobs,
    )
    report.config_echo = {
        "family": args.family, "alpha": f"{args.alpha:g}", "k": args.k,
        "methods": ",".join(methods), "trials": args.trials,
        "seed": args.seed, "kernel": args.kernel,
        "bandwidth": args.bandwidth,
        "sweep": ("r=" + ",".join(f"{v:g}" for v in args.r_list)
                  + f" n={args.n}") if args.r_list else
                 ("n=" + ",".join(str(v) for v in args.n_list) + f" r={args.r:g}"),
    }
    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, f"{report.label}.csv")
    emit_csv(report, csv_path)
    print(csv_path)
    if args.plot:
        svg_path = os.path.join(args.out_dir, f"{report.label}.svg")
        emit_plot(report, svg_path)
        print(svg_path)
    return 0


def _cmd_ground_truth(args):
    print(repr(ground_truth(args.family, args.alpha, args.r)))
    return 0


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config_file(argv)
        args = _build_parser().parse_args(argv)
        if args.command == "bias-table":
            return _cmd_bias_table(args)
        if args.command == "estimate":
            return _cmd_estimate(args)
        if args.command == "experiment":
            return _cmd_experiment(args)
        return _cmd_ground_truth(args)
    except RenyikitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
