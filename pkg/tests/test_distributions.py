import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from plateau.distributions import (BatchSpec, Distribution, ParameterError, Strategy, draw,
                                   draw_family, log_pdf, resolve_strategy,
                                   sample_dirichlet_batch)
from plateau.parallel import ParallelExecutor
from plateau.rng import RngStream

from conftest import assert_within_se

N_DRAWS = 100_000


def dirichlet_logpdf_oracle(x, alpha):
    # Written from the closed-form density with math.lgamma, independent of the library.
    total = math.lgamma(sum(alpha)) - sum(math.lgamma(a) for a in alpha)
    return total + sum((a - 1) * math.log(v) for a, v in zip(alpha, x))


def test_log_pdf_examples():
    assert log_pdf(Distribution("Gaussian", (0, 1)), 0.0) == pytest.approx(-0.918938533204673,
                                                                          abs=1e-14)
    assert log_pdf(Distribution("Bernoulli", (0.5,)), 1) == pytest.approx(math.log(0.5))
    alpha, x = (2.0, 3.0, 4.0), (0.2, 0.3, 0.5)
    got = log_pdf(Distribution("Dirichlet", (alpha,)), x)
    assert abs(got - dirichlet_logpdf_oracle(x, alpha)) < 1e-12


def test_log_pdf_against_scipy():
    cases = [
        ("Gaussian", (1.5, 2.0), 0.3, stats.norm(1.5, math.sqrt(2.0)).logpdf(0.3)),
        ("Gamma", (2.5, 1.5), 0.7, stats.gamma(2.5, scale=1.5).logpdf(0.7)),
        ("InverseGamma", (3.0, 2.0), 0.9, stats.invgamma(3.0, scale=2.0).logpdf(0.9)),
        ("Beta", (2.0, 5.0), 0.3, stats.beta(2.0, 5.0).logpdf(0.3)),
        ("Uniform", (-1.0, 3.0), 0.5, math.log(0.25)),
        ("Categorical", ((0.2, 0.3, 0.5),), 2, math.log(0.5)),
    ]
    for fam, params, x, want in cases:
        assert log_pdf(Distribution(fam, params), x) == pytest.approx(want, abs=1e-12)


def test_outside_support_is_minus_infinity_and_nan_fails():
    assert log_pdf(Distribution("Gamma", (2.0, 1.0)), -1.0) == -np.inf
    assert log_pdf(Distribution("Beta", (2.0, 2.0)), 1.5) == -np.inf
    assert log_pdf(Distribution("Uniform", (0.0, 1.0)), 2.0) == -np.inf
    assert log_pdf(Distribution("Categorical", ((0.5, 0.5),)), 3) == -np.inf
    with pytest.raises(ValueError):
        log_pdf(Distribution("Gaussian", (0, 1)), float("nan"))


def test_invalid_parameters_rejected():
    for fam, params in [("Gaussian", (0, -1)), ("Dirichlet", ((1.0, 0.0),)),
                        ("Categorical", ((0.5, 0.6),)), ("Bernoulli", (1.5,)),
                        ("Beta", (0, 1)), ("Uniform", (1, 1)), ("Frobnitz", (1,))]:
        with pytest.raises(ParameterError):
            Distribution(fam, params)


def test_degenerate_categorical():
    d = Distribution("Categorical", ((1.0, 0.0),))
    rng = RngStream(1)
    assert all(draw(d, rng, e) == 0 for e in range(1000))


# (family, params, mean, variance, scipy cdf for KS or None)
MOMENT_CASES = [
    ("Gaussian", (1.0, 4.0), 1.0, 4.0, stats.norm(1.0, 2.0).cdf),
    ("Gamma", (1.0, 1.0), 1.0, 1.0, stats.gamma(1.0).cdf),
    ("Gamma", (0.3, 2.0), 0.6, 1.2, stats.gamma(0.3, scale=2.0).cdf),
    ("Gamma", (7.5, 0.5), 3.75, 1.875, stats.gamma(7.5, scale=0.5).cdf),
    ("InverseGamma", (6.0, 2.0), 0.4, 4 / (25 * 4), stats.invgamma(6.0, scale=2.0).cdf),
    ("Beta", (2.0, 3.0), 0.4, 0.04, stats.beta(2.0, 3.0).cdf),
    ("Beta", (0.5, 0.5), 0.5, 0.125, stats.beta(0.5, 0.5).cdf),
    ("Uniform", (-2.0, 3.0), 0.5, 25 / 12, stats.uniform(-2.0, 5.0).cdf),
    ("Bernoulli", (0.3,), 0.3, 0.21, None),
    ("Categorical", ((0.2, 0.5, 0.3),), 1.1, 0.49, None),
]


@pytest.mark.parametrize("family,params,mean,var,cdf", MOMENT_CASES,
                         ids=[f"{c[0]}{c[1]}" for c in MOMENT_CASES])
def test_moments_and_ks(family, params, mean, var, cdf):
    args = [np.asarray(p, dtype=float) for p in params]
    x = draw_family(family, args, RngStream(2024, stream=11), np.arange(N_DRAWS))
    assert_within_se(x, mean, var)
    if cdf is not None:
        assert stats.kstest(x, cdf).pvalue > 0.001


def test_dirichlet_moments():
    alpha = np.array([1.0, 1.0, 1.0])
    x = draw_family("Dirichlet", [alpha], RngStream(5), np.arange(N_DRAWS))
    a0 = alpha.sum()
    for c in range(3):
        m = alpha[c] / a0
        assert_within_se(x[:, c], m, m * (1 - m) / (a0 + 1))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["Gaussian", "Gamma", "InverseGamma", "Beta", "Uniform", "Bernoulli",
                        "Dirichlet", "Categorical"]),
       st.lists(st.floats(0.05, 20.0), min_size=3, max_size=3),
       st.integers(0, 2**32))
def test_draws_in_support(family, raw, seed):
    a, b, c = raw
    params = {
        "Gaussian": (a - 10, b), "Gamma": (a, b), "InverseGamma": (a, b), "Beta": (a, b),
        "Uniform": (-a, b), "Bernoulli": (min(a / 20, 1.0),),
        "Dirichlet": ((a, b, c),), "Categorical": (np.array(raw) / sum(raw),),
    }[family]
    d = Distribution(family, params)
    for e in range(20):
        x = draw(d, RngStream(seed, 3), e)
        assert np.isfinite(log_pdf(d, x))


def test_gamma_rejects_bad_shape():
    with pytest.raises(ParameterError):
        draw_family("Gamma", [np.array([0.0]), np.array(1.0)], RngStream(0), np.arange(1))


# -- batched Dirichlet ---------------------------------------------------------

def _batch(rows, cols, strategy, workers, seed=7):
    conc = np.random.default_rng(0).uniform(0.05, 3.0, (rows, cols))
    with ParallelExecutor(workers) as pool:
        return sample_dirichlet_batch(BatchSpec(rows, cols, conc, strategy),
                                      RngStream(seed, 4, 2), pool)


def test_row_and_column_strategies_bit_identical_across_workers():
    ref = _batch(600, 37, Strategy.ROW_PARALLEL, 1)
    for workers in (1, 2, 8):
        for strategy in (Strategy.ROW_PARALLEL, Strategy.COLUMN_PARALLEL, Strategy.AUTO):
            assert np.array_equal(_batch(600, 37, strategy, workers), ref)


def test_batch_rows_are_simplex_points():
    x = _batch(300, 50, Strategy.AUTO, 2)
    assert np.all(x > 0)
    assert np.max(np.abs(x.sum(axis=1) - 1)) < 1e-12
    one = sample_dirichlet_batch(BatchSpec(1, 5, np.array([0.3, 1, 2, 3, 4])), RngStream(1))
    assert abs(one.sum() - 1) < 1e-12


def test_batch_column_means():
    alpha = np.array([2.0, 3.0, 4.0])
    x = sample_dirichlet_batch(BatchSpec(10_000, 3, alpha), RngStream(11))
    m = alpha / alpha.sum()
    se = np.sqrt(m * (1 - m) / (alpha.sum() + 1) / x.shape[0])
    assert np.all(np.abs(x.mean(axis=0) - m) < 3 * se)


def test_auto_strategy_rule():
    # Few wide rows on a many-core machine go column-wise; many narrow rows go row-wise.
    assert resolve_strategy(20, 37276, workers=64) is Strategy.COLUMN_PARALLEL
    assert resolve_strategy(48556, 20, workers=64) is Strategy.ROW_PARALLEL
    assert resolve_strategy(20, 37276, workers=1) is Strategy.ROW_PARALLEL


def test_batch_rejects_nonpositive_concentration():
    with pytest.raises(ParameterError):
        BatchSpec(2, 2, np.array([[1.0, 1.0], [0.0, 1.0]]))
