"""Monte Carlo precomputation of the universal debiasing constants.

The fixed-k resubstitution estimators carry a multiplicative asymptotic bias
that depends only on (k, d, alpha) and the kernel, never on the sampled
distribution.  Its limiting model is driven by order statistics: partial
sums R_j = E_1 + ... + E_j of i.i.d. standard exponentials and i.i.d.
directions xi_j uniform on the unit (d-1)-sphere, with the j-th neighbor
displacement standardizing to xi_j * R_j^(1/d).

Per trial we draw the model once and form the standardized density ratio Z
(estimated density over true density, in the large-n limit):

  KDE path (radial kernel K):
      Z = c_d * S / R_k,   S = sum_{j<=m} K(xi_j (R_j / R_k)^(1/d)).

  Local-Gaussian path:
      S_g = sum_{j<=m} xi_j^(g) (R_j/R_k)^(g/d) exp(-(R_j/R_k)^(2/d) / 2),
      g in {0,1,2}, xi^(0)=1, xi^(1)=xi, xi^(2)=xi xi^T,
      mu = S_1/S_0,  Sigma = S_2/S_0 - mu mu^T,
      Z = c_d S_0 / (R_k (2 pi)^(d/2) |Sigma|^(1/2)) * exp(-mu^T Sigma^-1 mu / 2).

The debiasing constant is B = E[Z^(alpha-1)]: dividing the resubstitution
mean by B removes the asymptotic bias (for alpha=2 one can check in closed
form that B = 1 + c_d K(1) / (k-1) for the KDE path).  The reciprocal
moment E[Z^(1-alpha)] of the same Z is also exposed; some reference
tabulations of these constants follow that convention, but it is NOT the
constant that debiases the estimators here (and for the local-Gaussian
path in d=1 it has heavy tails: its sample mean is seed-sensitive).

Trials use per-trial counter-based RNG streams keyed by (seed, trial), so
results are bit-identical for any worker count, and are accumulated in
trial-index order.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CorruptEntry,
    FormatVersionMismatch,
    MissingBiasEntry,
    NonFinite,
    SingularExcess,
)
from .kernels import KernelSpec, unit_ball_volume

FORMAT_VERSION = "1"
TABLE_HEADER = [
    "version", "k", "d", "alpha", "estimator", "kernel",
    "bias", "stderr", "trials", "m_trunc", "seed",
]

_MASK64 = (1 << 64) - 1
_CHUNK = 4096

# Fraction of trials allowed to need covariance regularization before the
# run is declared unusable.
SINGULAR_TRIAL_LIMIT = 0.01
RIDGE_SCALE = 1e-8


def substream(seed, trial, stream=0):
    """Independent counter-based RNG stream for one (seed, trial, stream).

    Splittable by construction: the Philox key encodes the triple, so
    parallel workers draw identical numbers no matter how trials are
    scheduled.  trial must fit in 56 bits, stream in 8.
    """
    if not 0 <= trial < (1 << 56):
        raise ValueError("trial index out of range")
    if not 0 <= stream < (1 << 8):
        raise ValueError("stream id out of range")
    key = [seed & _MASK64, ((stream << 56) | trial) & _MASK64]
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class OrderStatSample:
    """One draw of the limiting neighbor model: increasing Erlang partial
    sums and unit directions, mutually independent."""

    partial_sums: np.ndarray
    directions: np.ndarray

    @property
    def m(self):
        return len(self.partial_sums)

    @property
    def d(self):
        return self.directions.shape[1]


def sample_order_stats(rng, m, d):
    """Draw partial sums R_1 < ... < R_m (R_j ~ Erlang(j, 1)) and m unit
    directions, Haar on the (d-1)-sphere via normalized Gaussians."""
    if m < 1 or d < 1:
        raise ValueError("m and d must be >= 1")
    partial_sums = np.cumsum(rng.standard_exponential(m))
    xi = rng.standard_normal((m, d))
    norms = np.linalg.norm(xi, axis=1)
    while np.any(norms < 1e-100):  # astronomically rare; redraw those rows
        bad = norms < 1e-100
        xi[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(xi, axis=1)
    return OrderStatSample(partial_sums, xi / norms[:, None])


def _ratio_root(x, d):
    """x^(1/d) for positive x, with fast paths for the common dimensions."""
    if d == 1:
        return x
    if d == 2:
        return np.sqrt(x)
    if d == 3:
        return np.cbrt(x)
    return x ** (1.0 / d)


def s_tilde_kde(sample: OrderStatSample, k, kernel: KernelSpec):
    """sum_j K(xi_j (R_j/R_k)^(1/d)): the limiting kernel sum at truncation m."""
    if not 1 <= k <= sample.m:
        raise ValueError(f"k={k} outside [1, m={sample.m}]")
    R = sample.partial_sums
    radii = _ratio_root(R / R[k - 1], sample.d)
    return float(kernel.profile(radii).sum())


def s_tilde_llde(sample: OrderStatSample, k):
    """Limiting weighted local-Gaussian moments (S0, S1, S2) at truncation m."""
    if not 1 <= k <= sample.m:
        raise ValueError(f"k={k} outside [1, m={sample.m}]")
    R, xi, d = sample.partial_sums, sample.directions, sample.d
    q = _ratio_root(R / R[k - 1], d)  # |u_j| in the limiting model
    w = np.exp(-0.5 * q * q)
    s0 = float(w.sum())
    s1 = xi.T @ (q * w)
    s2 = (xi * (q * q * w)[:, None]).T @ xi
    return s0, s1, s2


def _moments_to_gaussian_value(s0, s1, s2, d):
    """Map local moments to (|Sigma_reg|^(1/2), quad form, regularized?)."""
    mu = s1 / s0
    sigma = s2 / s0 - np.outer(mu, mu)
    vals, vecs = np.linalg.eigh(sigma)
    ridge = RIDGE_SCALE * max(1.0, float(np.trace(sigma)) / d)
    regularized = bool(vals[0] < ridge)
    if regularized:
        vals = vals + ridge
    y = vecs.T @ mu
    quad = float(np.sum(y * y / vals))
    root_det = math.sqrt(float(np.prod(vals)))
    return root_det, quad, regularized


def _kde_z_chunk(args):
    """Standardized density ratios Z for trials [start, stop) of the KDE path."""
    k, d, kernel, m_trunc, seed, start, stop = args
    out = np.empty(stop - start)
    c_d = unit_ball_volume(d)
    for t in range(start, stop):
        s = sample_order_stats(substream(seed, t), m_trunc, d)
        out[t - start] = c_d * s_tilde_kde(s, k, kernel) / s.partial_sums[k - 1]
    return out


def _llde_z_chunk(args):
    """Z ratios plus regularization count for the local-Gaussian path."""
    k, d, m_trunc, seed, start, stop = args
    out = np.empty(stop - start)
    reg_count = 0
    c_d = unit_ball_volume(d)
    two_pi_pow = (2.0 * math.pi) ** (d / 2.0)
    for t in range(start, stop):
        s = sample_order_stats(substream(seed, t), m_trunc, d)
        s0, s1, s2 = s_tilde_llde(s, k)
        root_det, quad, regularized = _moments_to_gaussian_value(s0, s1, s2, d)
        reg_count += regularized
        rk = s.partial_sums[k - 1]
        out[t - start] = (
            c_d * s0 / (rk * two_pi_pow * root_det) * math.exp(-0.5 * quad)
        )
    return out, reg_count


def _run_chunked(worker, argfn, trials, jobs):
    """Evaluate trials [0, trials) in fixed chunks, in trial order.

    The chunk grid is independent of the worker count, and each trial only
    consumes its own stream, so the assembled result is bit-identical for
    any `jobs`.
    """
    spans = [(s, min(s + _CHUNK, trials)) for s in range(0, trials, _CHUNK)]
    args = [argfn(a, b) for a, b in spans]
    if jobs > 1 and len(spans) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(worker, args))
    return [worker(a) for a in args]


def _check_mc_args(k, d, alpha, trials, m_trunc):
    if k < 1 or d < 1:
        raise ValueError("k and d must be >= 1")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if m_trunc < k:
        raise ValueError(f"m_trunc={m_trunc} must be >= k={k}")
    if not math.isfinite(alpha):
        raise ValueError("alpha must be finite")


def _kde_ratios(k, d, kernel, trials, m_trunc, seed, jobs):
    if kernel.d != d:
        raise ValueError(f"kernel dimension {kernel.d} != d={d}")
    parts = _run_chunked(
        _kde_z_chunk,
        lambda a, b: (k, d, kernel, m_trunc, seed, a, b),
        trials, jobs,
    )
    return np.concatenate(parts)


def _llde_ratios(k, d, trials, m_trunc, seed, jobs):
    parts = _run_chunked(
        _llde_z_chunk,
        lambda a, b: (k, d, m_trunc, seed, a, b),
        trials, jobs,
    )
    z = np.concatenate([p[0] for p in parts])
    reg_count = sum(p[1] for p in parts)
    if reg_count > SINGULAR_TRIAL_LIMIT * trials:
        raise SingularExcess(
            f"{reg_count}/{trials} trials needed covariance regularization "
            f"(limit {SINGULAR_TRIAL_LIMIT:.0%})"
        )
    return z

def _power_mean(z, exponent, trials):
    values = z ** exponent
    bad = np.nonzero(~np.isfinite(values))[0]
    if bad.size:
        raise NonFinite(
            f"trial {int(bad[0])} evaluated to a non-finite value", trial=int(bad[0])
        )
    mean = float(np.mean(values))
    stderr = float(np.std(values)) / math.sqrt(trials)
    return mean, stderr


@dataclass(frozen=True)
class BiasEntry:
    """One precomputed debiasing constant with its Monte Carlo provenance."""

    k: int
    d: int
    alpha: float
    estimator: str  # "kde" | "llde"
    kernel: str | None  # kernel family for kde entries, None for llde
    bias: float
    stderr: float
    trials: int
    m_trunc: int
    seed: int

    def key(self):
        return (self.k, self.d, float(self.alpha), self.estimator, self.kernel,
                self.m_trunc)


def bias_kde(k, d, alpha, kernel: KernelSpec, trials, m_trunc, seed, jobs=1):
    """Debiasing constant E[Z^(alpha-1)] for the KDE path."""
    _check_mc_args(k, d, alpha, trials, m_trunc)
    if alpha == 1.0:
        return BiasEntry(k, d, 1.0, "kde", kernel.family, 1.0, 0.0,
                         trials, m_trunc, seed)
    z = _kde_ratios(k, d, kernel, trials, m_trunc, seed, jobs)
    bias, stderr = _power_mean(z, alpha - 1.0, trials)
    return BiasEntry(k, d, float(alpha), "kde", kernel.family, bias, stderr,
                     trials, m_trunc, seed)


def bias_llde(k, d, alpha, trials, m_trunc, seed, jobs=1):
    """Debiasing constant E[Z^(alpha-1)] for the local-Gaussian path."""
    _check_mc_args(k, d, alpha, trials, m_trunc)
    if alpha == 1.0:
        return BiasEntry(k, d, 1.0, "llde", None, 1.0, 0.0, trials, m_trunc, seed)
    z = _llde_ratios(k, d, trials, m_trunc, seed, jobs)
    bias, stderr = _power_mean(z, alpha - 1.0, trials)
    return BiasEntry(k, d, float(alpha), "llde", None, bias, stderr,
                     trials, m_trunc, seed)


def reciprocal_moment_kde(k, d, alpha, kernel: KernelSpec, trials, m_trunc,
                          seed, jobs=1):
    """(mean, stderr) of the reciprocal moment E[Z^(1-alpha)], KDE path.

    Reference tabulations of the constants follow this convention; it is
    kept separate from BiasEntry because dividing an estimate by it does
    not debias anything.
    """
    _check_mc_args(k, d, alpha, trials, m_trunc)
    if alpha == 1.0:
        return 1.0, 0.0
    z = _kde_ratios(k, d, kernel, trials, m_trunc, seed, jobs)
    return _power_mean(z, 1.0 - alpha, trials)


def reciprocal_moment_llde(k, d, alpha, trials, m_trunc, seed, jobs=1):
    """(mean, stderr) of E[Z^(1-alpha)] for the local-Gaussian path.

    Heavy-tailed in d=1 (the quadratic form enters exp with positive sign),
    so the sample mean there is dominated by rare trials; treat with care.
    """
    _check_mc_args(k, d, alpha, trials, m_trunc)
    if alpha == 1.0:
        return 1.0, 0.0
    z = _llde_ratios(k, d, trials, m_trunc, seed, jobs)
    return _power_mean(z, 1.0 - alpha, trials)


@dataclass
class BiasTable:
    """Keyed collection of BiasEntry rows with versioned CSV persistence.

    Entries are keyed by (k, d, alpha, estimator, kernel, m_trunc): the
    constants depend materially on the truncation level in the regime the
    estimators run at, so one (k, d, alpha) may carry one entry per
    truncation level and estimation picks the one matching its own
    truncation_size(n, k).
    """

    entries: dict = field(default_factory=dict)

    def add(self, entry: BiasEntry):
        self.entries[entry.key()] = entry

    def get(self, k, d, alpha, estimator, kernel=None, m_trunc=None):
        """Exact lookup when m_trunc is given; otherwise the entry must be
        unique for (k, d, alpha, estimator, kernel)."""
        if m_trunc is not None:
            key = (k, d, float(alpha), estimator, kernel, m_trunc)
            try:
                return self.entries[key]
            except KeyError:
                raise MissingBiasEntry(key) from None
        prefix = (k, d, float(alpha), estimator, kernel)
        matches = [e for key, e in self.entries.items() if key[:5] == prefix]
        if len(matches) == 1:
            return matches[0]
        if not matches:
            raise MissingBiasEntry(prefix + ("any m_trunc",))
        raise MissingBiasEntry(
            prefix + (f"ambiguous: m_trunc in {sorted(e.m_trunc for e in matches)}",)
        )

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        return isinstance(other, BiasTable) and self.entries == other.entries


def store_table(table: BiasTable, path):
    """Write the table as versioned CSV; full-precision round-trip."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE_HEADER)
        for key in sorted(table.entries,
                          key=lambda t: (t[3], t[1], t[0], t[2], t[5])):
            e = table.entries[key]
            writer.writerow([
                FORMAT_VERSION, e.k, e.d, repr(float(e.alpha)), e.estimator,
                e.kernel or "", repr(e.bias), repr(e.stderr),
                e.trials, e.m_trunc, e.seed,
            ])


def load_table(path) -> BiasTable:
    table = BiasTable()
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CorruptEntry(f"{path}: empty file") from None
        if header != TABLE_HEADER:
            raise CorruptEntry(f"{path}: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TABLE_HEADER):
                raise CorruptEntry(f"{path}:{lineno}: expected "
                                   f"{len(TABLE_HEADER)} fields, got {len(row)}")
            if row[0] != FORMAT_VERSION:
                raise FormatVersionMismatch(
                    f"{path}:{lineno}: version {row[0]!r}, expected {FORMAT_VERSION!r}"
                )
            try:
                entry = BiasEntry(
                    k=int(row[1]), d=int(row[2]), alpha=float(row[3]),
                    estimator=row[4], kernel=row[5] or None,
                    bias=float(row[6]), stderr=float(row[7]),
                    trials=int(row[8]), m_trunc=int(row[9]), seed=int(row[10]),
                )
            except ValueError as exc:
                raise CorruptEntry(f"{path}:{lineno}: {exc}") from None
            if entry.estimator not in ("kde", "llde"):
                raise CorruptEntry(
                    f"{path}:{lineno}: unknown estimator {entry.estimator!r}"
                )
            table.add(entry)
    return table


def default_table_path():
    """Path of the bias table shipped with the package."""
    return os.path.join(os.path.dirname(__file__), "data", "default_bias_table.csv")


def load_default_table() -> BiasTable:
    return load_table(default_table_path())
