import math

import numpy as np
import pytest

from renyikit.bias_mc import (
    BiasEntry,
    BiasTable,
    OrderStatSample,
    bias_kde,
    bias_llde,
    load_table,
    reciprocal_moment_kde,
    s_tilde_kde,
    s_tilde_llde,
    sample_order_stats,
    store_table,
    substream,
)
from renyikit.errors import (
    CorruptEntry,
    FormatVersionMismatch,
    MissingBiasEntry,
    SingularExcess,
)
from renyikit.kernels import KernelSpec, unit_ball_volume


def test_substream_reproducible_and_distinct():
    a = substream(1, 5).standard_normal(4)
    b = substream(1, 5).standard_normal(4)
    c = substream(1, 6).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, substream(1, 5, stream=1).standard_normal(4))


def test_order_stats_shape_and_monotonicity():
    s = sample_order_stats(substream(0, 0), 100, 3)
    assert s.m == 100 and s.d == 3
    assert np.all(np.diff(s.partial_sums) > 0)
    assert np.all(s.partial_sums > 0)
    np.testing.assert_allclose(np.linalg.norm(s.directions, axis=1), 1.0,
                               rtol=1e-12)


def test_erlang_mean_of_top_partial_sum():
    # R_100 ~ Erlang(100, 1): mean 100, sd 10; over 1e4 draws the sample
    # mean has sd 0.1, so +-3 is a wide 3-sigma-style bound
    means = np.empty(10000)
    for t in range(10000):
        rng = substream(13, t)
        means[t] = np.cumsum(rng.standard_exponential(100))[-1]
    assert abs(means.mean() - 100.0) < 3.0


def test_sign_frequency_in_1d():
    signs = np.empty(10000)
    for t in range(10000):
        signs[t] = sample_order_stats(substream(17, t), 1, 1).directions[0, 0]
    assert set(np.unique(signs)) == {-1.0, 1.0}
    assert abs(np.mean(signs == 1.0) - 0.5) < 0.02


@pytest.mark.parametrize("k,j", [(2, 5), (4, 10)])
def test_partial_sum_ratio_second_moment(k, j):
    # R_k/R_j ~ Beta(k, j-k): E[(R_k/R_j)^2] = k(k+1)/(j(j+1))
    draws = 1_000_000
    E = substream(23, 0).standard_exponential((draws, j))
    R = np.cumsum(E, axis=1)
    sq = (R[:, k - 1] / R[:, j - 1]) ** 2
    want = k * (k + 1) / (j * (j + 1))
    stderr = sq.std() / math.sqrt(draws)
    assert abs(sq.mean() - want) < 3 * stderr


@pytest.mark.parametrize("d", [1, 2, 3, 6])
def test_haar_isotropy(d):
    trials = 40000
    rng = substream(29, d)
    xi = rng.standard_normal((trials, d))
    xi /= np.linalg.norm(xi, axis=1)[:, None]
    assert np.all(np.abs(xi.mean(axis=0)) < 4.0 / math.sqrt(trials))
    cov = xi.T @ xi / trials
    np.testing.assert_allclose(cov, np.eye(d) / d, atol=6.0 / math.sqrt(trials))


def test_s_tilde_kde_uniform_counts_first_k():
    # uniform kernel: every j <= k contributes 1/c_d, nothing beyond
    for d in (1, 2, 3):
        s = sample_order_stats(substream(31, d), 50, d)
        for k in (1, 4, 9):
            got = s_tilde_kde(s, k, KernelSpec("uniform", d))
            assert got == pytest.approx(k / unit_ball_volume(d), rel=1e-12)


def test_s_tilde_kde_gaussian_hand_case():
    # d=1, partial sums (1,2,3), k=2: ratios (1/2, 1, 3/2)
    s = OrderStatSample(np.array([1.0, 2.0, 3.0]), np.array([[1.0]] * 3))
    got = s_tilde_kde(s, 2, KernelSpec("gaussian", 1))
    want = (2 * math.pi) ** -0.5 * (
        math.exp(-1 / 8) + math.exp(-1 / 2) + math.exp(-9 / 8)
    )
    assert got == pytest.approx(want, rel=1e-12)


def test_s_tilde_kde_nondecreasing_in_m():
    base = sample_order_stats(substream(37, 1), 200, 2)
    kern = KernelSpec("gaussian", 2)
    vals = [
        s_tilde_kde(
            OrderStatSample(base.partial_sums[:m], base.directions[:m]), 5, kern
        )
        for m in (10, 50, 100, 200)
    ]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_s_tilde_llde_hand_case():
    # d=1, partial sums (1,4), k=2, directions (+1,-1):
    # weights e^{-1/32}, e^{-1/2}; multipliers (R_j/R_k)^g = (1/4)^g, 1
    s = OrderStatSample(np.array([1.0, 4.0]), np.array([[1.0], [-1.0]]))
    s0, s1, s2 = s_tilde_llde(s, 2)
    w1, w2 = math.exp(-1 / 32), math.exp(-1 / 2)
    assert s0 == pytest.approx(w1 + w2, rel=1e-12)
    assert s1[0] == pytest.approx(0.25 * w1 - w2, rel=1e-12)
    assert s2[0, 0] == pytest.approx(0.0625 * w1 + w2, rel=1e-12)


def test_s_tilde_llde_direction_parity():
    s = sample_order_stats(substream(41, 2), 30, 3)
    s0, s1, s2 = s_tilde_llde(s, 4)
    f0, f1, f2 = s_tilde_llde(
        OrderStatSample(s.partial_sums, -s.directions), 4
    )
    assert f0 == s0
    np.testing.assert_array_equal(f1, -s1)
    np.testing.assert_array_equal(f2, s2)


def test_s_tilde_llde_single_term_weight():
    # with m = k the only term sits at ratio 1: weight e^{-1/2}
    s = sample_order_stats(substream(43, 0), 1, 2)
    s0, s1, s2 = s_tilde_llde(s, 1)
    xi = s.directions[0]
    assert s0 == pytest.approx(math.exp(-0.5), rel=1e-12)
    np.testing.assert_allclose(s1, xi * math.exp(-0.5), rtol=1e-12)
    np.testing.assert_allclose(s2, np.outer(xi, xi) * math.exp(-0.5), rtol=1e-12)


def test_bias_alpha_one_is_exact():
    e = bias_kde(4, 2, 1.0, KernelSpec("gaussian", 2), 10, 20, 0)
    assert (e.bias, e.stderr) == (1.0, 0.0)
    e = bias_llde(4, 2, 1.0, 10, 20, 0)
    assert (e.bias, e.stderr) == (1.0, 0.0)


@pytest.mark.parametrize("k", [3, 6])
def test_bias_kde_uniform_closed_form(k):
    # uniform kernel, alpha=2: B = E[k / R_k] = k/(k-1) in any dimension
    e = bias_kde(k, 2, 2.0, KernelSpec("uniform", 2), 40000, 100, 5)
    want = k / (k - 1.0)
    assert abs(e.bias - want) < max(4 * e.stderr, 1e-3)


@pytest.mark.parametrize("d,k", [(1, 4), (2, 5), (3, 7)])
def test_bias_kde_gaussian_alpha2_closed_form(d, k):
    # conditioning on R_k makes the alpha=2 constant exact:
    # B = 1 + c_d K(1) / (k-1) for any radial kernel (m -> infinity)
    kern = KernelSpec("gaussian", d)
    e = bias_kde(k, d, 2.0, kern, 30000, 1500, 7)
    want = 1.0 + unit_ball_volume(d) * float(kern.profile(1.0)) / (k - 1.0)
    assert abs(e.bias - want) < 4 * e.stderr


@pytest.mark.parametrize("alpha", [2.0, 3.0])
def test_bias_kde_kernel_scale_covariance(alpha):
    # doubling the kernel doubles every trial value exactly, so the
    # constant picks up exactly 2^(alpha-1)
    base = bias_kde(4, 1, alpha, KernelSpec("gaussian", 1), 2000, 50, 3)
    doubled = bias_kde(4, 1, alpha, KernelSpec("gaussian", 1, scale=2.0),
                       2000, 50, 3)
    assert doubled.bias == pytest.approx(2.0 ** (alpha - 1.0) * base.bias,
                                         rel=1e-12)


def test_bias_determinism_and_worker_independence():
    kern = KernelSpec("gaussian", 2)
    a = bias_kde(5, 2, 2.0, kern, 9000, 30, 11, jobs=1)
    b = bias_kde(5, 2, 2.0, kern, 9000, 30, 11, jobs=1)
    c = bias_kde(5, 2, 2.0, kern, 9000, 30, 11, jobs=2)
    assert a == b == c
    x = bias_llde(5, 2, 2.0, 5000, 30, 11, jobs=1)
    y = bias_llde(5, 2, 2.0, 5000, 30, 11, jobs=2)
    assert x == y


def test_bias_llde_rank_deficient_model_rejected():
    # m <= d leaves the weighted covariance rank-deficient in every trial
    with pytest.raises(SingularExcess):
        bias_llde(4, 6, 2.0, 500, 6, 0)


def test_truncation_tail_decays():
    # Gaussian-kernel tail beyond m, averaged over the limiting model,
    # shrinks with m and is far below 1e-3 by m=5000 (d=1, k=4)
    kern = KernelSpec("gaussian", 1)
    tails = {m: 0.0 for m in (10, 30, 5000)}
    draws = 300
    for t in range(draws):
        s = sample_order_stats(substream(53, t), 6000, 1)
        full = s_tilde_kde(s, 4, kern)
        for m in tails:
            head = OrderStatSample(s.partial_sums[:m], s.directions[:m])
            tails[m] += (full - s_tilde_kde(head, 4, kern)) / draws
    assert tails[10] > tails[30] > tails[5000]
    assert tails[5000] < 1e-3


def test_reciprocal_moment_matches_reference_value():
    # spot value from the published tabulation convention E[Z^(1-alpha)]
    mean, stderr = reciprocal_moment_kde(7, 3, 2.0, KernelSpec("gaussian", 3),
                                         20000, 500, 5)
    assert abs(mean - 0.9900) < max(4 * stderr, 0.004)


def _toy_table():
    table = BiasTable()
    table.add(BiasEntry(4, 2, 2.0, "kde", "gaussian", 1.01, 0.001, 100, 9, 3))
    table.add(BiasEntry(4, 2, 2.0, "kde", "gaussian", 1.02, 0.001, 100, 12, 3))
    table.add(BiasEntry(5, 1, 3.0, "llde", None, 1.9, 0.01, 50, 7, 4))
    return table


def test_table_round_trip(tmp_path):
    table = _toy_table()
    path = tmp_path / "bias.csv"
    store_table(table, path)
    assert load_table(path) == table


def test_table_get_by_truncation():
    table = _toy_table()
    assert table.get(4, 2, 2.0, "kde", "gaussian", 9).bias == 1.01
    assert table.get(5, 1, 3.0, "llde").m_trunc == 7  # unique, no m needed
    with pytest.raises(MissingBiasEntry):
        table.get(4, 2, 2.0, "kde", "gaussian")  # ambiguous without m
    with pytest.raises(MissingBiasEntry):
        table.get(9, 2, 2.0, "kde", "gaussian", 9)


def test_table_version_mismatch(tmp_path):
    path = tmp_path / "bias.csv"
    store_table(_toy_table(), path)
    lines = path.read_text().splitlines()
    lines[1] = "99" + lines[1][1:]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(FormatVersionMismatch):
        load_table(path)


def test_table_truncated_row(tmp_path):
    path = tmp_path / "bias.csv"
    store_table(_toy_table(), path)
    text = path.read_text()
    path.write_text(text[: text.rindex(",") - 20])
    with pytest.raises(CorruptEntry):
        load_table(path)


def test_table_rejects_unknown_estimator(tmp_path):
    path = tmp_path / "bias.csv"
    store_table(_toy_table(), path)
    path.write_text(path.read_text().replace("llde", "spline"))
    with pytest.raises(CorruptEntry):
        load_table(path)
