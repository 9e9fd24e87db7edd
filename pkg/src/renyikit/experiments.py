"""Sweep orchestration: run estimators across r or n grids, trial-averaged.

Every (sweep point, trial) pair draws its dataset from a counter-based
stream keyed by (seed, trial), all methods see the same datasets (paired
trials), and aggregation runs in trial order, so reports are bit-identical
for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import estimate_J_kde_fixed, estimate_J_leonenko
from .bias_mc import BiasTable
from .errors import UnsupportedPair
from .kde_estimator import EstimatorConfig, estimate_J_kde
from .kernels import KernelSpec
from .llde_estimator import estimate_J_klnn
from .neighbors import build_index, truncation_size
from .synthdata import ExperimentSpec, family_dim, ground_truth, sample

METHODS = ("klnn", "kde", "leonenko", "kde-fixed")
_TRIAL_CHUNK = 8

CSV_HEADER = ("experiment,family,alpha,r,n,method,k,trials,"
              "mean,std,ground_truth,rel_error,seed")


@dataclass(frozen=True)
class ReportRow:
    family: str
    alpha: float
    r: float
    n: int
    method: str
    k: int
    trials: int
    mean: float
    std: float
    ground_truth: float
    rel_error: float
    seed: int


@dataclass
class ExperimentReport:
    label: str
    config_echo: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)


def _trial_chunk(args):
    (family, alpha, r, n, seed, k, methods, kernel_family, bandwidth,
     kde_bias, llde_bias, start, stop) = args
    spec = ExperimentSpec(family=family, alpha=alpha, r=r, n=n,
                          trials=stop, seed=seed)
    kernel = KernelSpec(kernel_family, spec.d)
    config = EstimatorConfig(k=k, alpha=alpha, kernel=kernel)
    out = np.empty((stop - start, len(methods)))
    for t in range(start, stop):
        index = build_index(sample(spec, t))
        for j, method in enumerate(methods):
            if method == "kde":
                value = estimate_J_kde(index, config, kde_bias).value
            elif method == "klnn":
                value = estimate_J_klnn(index, config, llde_bias).value
            elif method == "leonenko":
                value = estimate_J_leonenko(index, k, alpha).value
            elif method == "kde-fixed":
                value = estimate_J_kde_fixed(index, kernel, alpha, bandwidth).value
            else:
                raise ValueError(f"unknown method {method!r}")
            out[t - start, j] = value
    return out


def run_experiment(family, alpha, k, methods, bias_table: BiasTable, *,
                   trials, seed, r_values=None, n_values=None, r=None, n=None,
                   kernel_family="gaussian", bandwidth="silverman",
                   label=None, jobs=1) -> ExperimentReport:
    """Trial-averaged estimates across an r sweep (fixed n) or an n sweep
    (fixed r), with ground truth and relative error per row.

    All configuration, including the needed bias entries, is validated
    before the first sample is drawn.
    """
    if (r_values is None) == (n_values is None):
        raise ValueError("provide exactly one of r_values / n_values")
    if r_values is not None:
        if n is None:
            raise ValueError("an r sweep needs the fixed sample count n")
        points = [(float(rv), int(n)) for rv in r_values]
        sweep = "r"
    else:
        if r is None:
            raise ValueError("an n sweep needs the fixed correlation r")
        points = [(float(r), int(nv)) for nv in n_values]
        sweep = "n"
    methods = list(methods)
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; expected {METHODS}")
    d = family_dim(family)
    # fail fast: every sweep point needs a ground truth, a valid spec, and
    # bias entries matched to its truncation level, before any sampling
    biases = {}
    for rv, nv in points:
        ground_truth(family, alpha, rv)
        ExperimentSpec(family=family, alpha=alpha, r=rv, n=nv,
                       trials=trials, seed=seed)
        m = truncation_size(nv, k)
        kde_bias = (bias_table.get(k, d, alpha, "kde", kernel_family, m)
                    if "kde" in methods else None)
        llde_bias = (bias_table.get(k, d, alpha, "llde", None, m)
                     if "klnn" in methods else None)
        biases[(rv, nv)] = (kde_bias, llde_bias)

    if label is None:
        label = f"{family}-alpha{alpha:g}-{sweep}sweep"
    report = ExperimentReport(label=label)
    for rv, nv in points:
        kde_bias, llde_bias = biases[(rv, nv)]
        spans = [(a, min(a + _TRIAL_CHUNK, trials))
                 for a in range(0, trials, _TRIAL_CHUNK)]
        args = [(family, alpha, rv, nv, seed, k, methods, kernel_family,
                 bandwidth, kde_bias, llde_bias, a, b) for a, b in spans]
        if jobs > 1 and len(args) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                parts = list(pool.map(_trial_chunk, args))
        else:
            parts = [_trial_chunk(a) for a in args]
        values = np.concatenate(parts, axis=0)
        truth = ground_truth(family, alpha, rv)
        for j, method in enumerate(methods):
            mean = float(np.mean(values[:, j]))
            std = float(np.std(values[:, j]))
            report.rows.append(ReportRow(
                family=family, alpha=alpha, r=rv, n=nv, method=method,
                k=k, trials=trials, mean=mean, std=std, ground_truth=truth,
                rel_error=abs(mean - truth) / abs(truth), seed=seed,
            ))
    return report


def emit_csv(report: ExperimentReport, path):
    """Write the report; comment lines echo the run configuration."""
    lines = []
    for key in sorted(report.config_echo):
        lines.append(f"# {key}={report.config_echo[key]}")
    lines.append(CSV_HEADER)
    for row in report.rows:
        lines.append(",".join([
            report.label, row.family, repr(float(row.alpha)), repr(row.r),
            str(row.n), row.method, str(row.k), str(row.trials),
            repr(row.mean), repr(row.std), repr(row.ground_truth),
            repr(row.rel_error), str(row.seed),
        ]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _svg_points(xs, ys, x0, x1, y0, y1, width, height, margin):
    pts = []
    for x, y in zip(xs, ys):
        px = margin + (x - x0) / (x1 - x0 or 1.0) * (width - 2 * margin)
        py = height - margin - (y - y0) / (y1 - y0 or 1.0) * (height - 2 * margin)
        pts.append(f"{px:.2f},{py:.2f}")
    return " ".join(pts)


_PALETTE = {"klnn": "#1b7837", "kde": "#2166ac", "leonenko": "#b2182b",
            "kde-fixed": "#8c510a"}


def emit_plot(report: ExperimentReport, path):
    """Minimal deterministic SVG: mean +- std per method over the sweep
    variable (log10 scale), with the ground truth dashed."""
    if not report.rows:
        raise ValueError("cannot plot an empty report")
    sweep_r = len({row.r for row in report.rows}) > 1
    xlabel = "log10(1-r)" if sweep_r else "log10(n)"

    def xval(row):
        return math.log10(1.0 - row.r) if sweep_r else math.log10(row.n)

    def yval(v):
        return math.log10(max(v, 1e-300))

    methods = sorted({row.method for row in report.rows})
    series = {}
    for method in methods:
        rows = sorted((row for row in report.rows if row.method == method),
                      key=xval)
        series[method] = (
            [xval(row) for row in rows],
            [yval(row.mean) for row in rows],
            [yval(max(row.mean - row.std, 1e-300)) for row in rows],
            [yval(row.mean + row.std) for row in rows],
        )
    truth_rows = sorted({(xval(row), row.ground_truth) for row in report.rows})
    tx = [p[0] for p in truth_rows]
    ty = [yval(p[1]) for p in truth_rows]

    all_x = tx + [x for s in series.values() for x in s[0]]
    all_y = ty + [y for s in series.values() for ys in (s[1], s[2], s[3]) for y in ys]
    x0, x1 = min(all_x), max(all_x)
    y0, y1 = min(all_y), max(all_y)
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    width, height, margin = 640, 420, 54

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="16" text-anchor="middle" '
        f'font-size="13">{report.label}</text>',
        f'<text x="{width / 2:.0f}" y="{height - 8}" text-anchor="middle" '
        f'font-size="12">{xlabel}</text>',
        f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" '
        f'font-size="12" transform="rotate(-90 14 {height / 2:.0f})">'
        f'log10(estimate)</text>',
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
        f'height="{height - 2 * margin}" fill="none" stroke="#999"/>',
    ]
    parts.append(
        f'<polyline points="{_svg_points(tx, ty, x0, x1, y0, y1, width, height, margin)}" '
        f'fill="none" stroke="#444" stroke-dasharray="6,4" stroke-width="1.5"/>'
    )
    for li, method in enumerate(methods):
        xs, ys, lo, hi = series[method]
        color = _PALETTE.get(method, "#666")
        for band in (lo, hi):
            parts.append(
                f'<polyline points="{_svg_points(xs, band, x0, x1, y0, y1, width, height, margin)}" '
                f'fill="none" stroke="{color}" stroke-width="0.6" opacity="0.55"/>'
            )
        parts.append(
            f'<polyline points="{_svg_points(xs, ys, x0, x1, y0, y1, width, height, margin)}" '
            f'fill="none" stroke="{color}" stroke-width="1.8"/>'
        )
        parts.append(
            f'<text x="{width - margin + 4}" y="{margin + 14 * li + 10}" '
            f'font-size="11" fill="{color}">{method}</text>'
        )
    parts.append(
        f'<text x="{width - margin + 4}" y="{margin + 14 * len(methods) + 10}" '
        f'font-size="11" fill="#444">truth</text>'
    )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
