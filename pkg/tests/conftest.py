import numpy as np
import pytest

from renyikit.bias_mc import BiasEntry, bias_kde, bias_llde, load_default_table
from renyikit.kernels import KernelSpec


@pytest.fixture(scope="session")
def default_table():
    return load_default_table()


@pytest.fixture(scope="session")
def bias_factory():
    """Compute-and-cache bias entries for combinations the shipped table
    does not carry (scaled kernels, unusual alphas)."""
    cache = {}

    def make(estimator, k, d, alpha, m_trunc, kernel=None, trials=20000, seed=77):
        key = (estimator, k, d, alpha, m_trunc, kernel, trials, seed)
        if key not in cache:
            if estimator == "kde":
                spec = kernel if kernel is not None else KernelSpec("gaussian", d)
                cache[key] = bias_kde(k, d, alpha, spec, trials, m_trunc, seed)
            else:
                cache[key] = bias_llde(k, d, alpha, trials, m_trunc, seed)
        return cache[key]

    return make


def unit_bias(estimator, k, d, alpha, m_trunc, kernel=None):
    """A BiasEntry with constant 1, for tests that exercise the estimator
    formula itself rather than the debiasing."""
    return BiasEntry(k=k, d=d, alpha=float(alpha), estimator=estimator,
                     kernel=kernel, bias=1.0, stderr=0.0, trials=1,
                     m_trunc=m_trunc, seed=0)


def random_rotation(d, rng):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))
