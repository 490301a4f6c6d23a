import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from trunccens import (
    CensoringScheme,
    TruncNormParams,
    expected_fractions,
    sample_array,
    tn_cdf,
    tn_mean,
    tn_pdf,
    tn_sample,
)

# Frozen via an independent high-precision evaluation (mpmath, 40 digits)
# of pdf(0.4)/(0.5 * (1 - cdf(-1.6))), cross-checked by quadrature.
PDF_ORACLE = 0.7792422013
# Quadrature of y * pdf over [0, mu + 10 sigma] at mu=0.8, sigma=0.5, a=0.
MEAN_ORACLE = 0.858675810177344


def test_pdf_matches_oracle():
    p = TruncNormParams(0.8, 0.5, 0.0)
    assert tn_pdf(1.0, p) == pytest.approx(PDF_ORACLE, abs=5e-11)


def test_pdf_outside_support_is_zero():
    p = TruncNormParams(0.8, 0.5, 0.0)
    assert tn_pdf(-0.1, p) == 0.0


def test_pdf_standard_normal_mode_without_truncation():
    p = TruncNormParams(0.3, 1.0)
    assert tn_pdf(0.3, p) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-13)


@pytest.mark.parametrize("mu,sigma,left", [(0.8, 0.5, 0.0), (1.0, 0.45, 0.0), (-1.0, 2.0, -3.0), (5.0, 0.1, 4.9)])
def test_pdf_normalizes_over_support(mu, sigma, left):
    p = TruncNormParams(mu, sigma, left)
    total, _ = quad(lambda v: tn_pdf(v, p), left, left + 12.0 * sigma + abs(mu - left), limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_cdf_table_values():
    # expected censoring probabilities at the detection limit
    assert tn_cdf(0.61, TruncNormParams(1.0, 0.45, 0.0)) == pytest.approx(0.1823, abs=5e-5)
    assert tn_cdf(0.61, TruncNormParams(1.1, 0.50, 0.0)) == pytest.approx(0.1517, abs=5e-5)


def test_cdf_at_bound_and_monotone():
    p = TruncNormParams(1.0, 0.45, 0.0)
    assert tn_cdf(0.0, p) == 0.0
    assert tn_cdf(-5.0, p) == 0.0
    grid = np.linspace(0.0, 4.0, 200)
    vals = [tn_cdf(v, p) for v in grid]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert tn_cdf(30.0, p) == pytest.approx(1.0, abs=1e-14)


def test_cdf_pdf_consistency_by_finite_difference():
    p = TruncNormParams(0.9, 0.6, 0.0)
    h = 1e-6
    for y in (0.3, 0.8, 1.5, 2.5):
        fd = (tn_cdf(y + h, p) - tn_cdf(y - h, p)) / (2.0 * h)
        assert fd == pytest.approx(tn_pdf(y, p), rel=1e-6)


def test_mean_examples():
    assert tn_mean(TruncNormParams(0.0, 1.0)) == 0.0
    assert tn_mean(TruncNormParams(0.0, 1.0, 0.0)) == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-13)
    assert tn_mean(TruncNormParams(0.8, 0.5, 0.0)) == pytest.approx(MEAN_ORACLE, rel=1e-12)
    # left truncation can only raise the mean
    assert tn_mean(TruncNormParams(0.8, 0.5, 0.0)) >= 0.8


def test_sample_examples():
    assert tn_sample(TruncNormParams(1.0, 0.45, 0.0), 0.0) == 0.0
    assert tn_sample(TruncNormParams(0.0, 1.0, 0.0), 0.5) == pytest.approx(0.674489750196, abs=1e-12)
    # truncation negligible five sigma away from the bound
    assert tn_sample(TruncNormParams(5.0, 1.0, 0.0), 0.5) == pytest.approx(5.0, abs=1e-6)


def test_sample_u_one_clamps_to_largest_quantile():
    y = tn_sample(TruncNormParams(0.0, 1.0, 0.0), 1.0)
    assert math.isfinite(y)
    assert y > 35.0


def test_sample_domain_error():
    p = TruncNormParams(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        tn_sample(p, -0.01)
    with pytest.raises(ValueError):
        tn_sample(p, 1.01)


@pytest.mark.parametrize("u", [1e-6, 0.01, 0.5, 0.99, 1.0 - 1e-6])
@pytest.mark.parametrize("mu,sigma,left", [(1.0, 0.45, 0.0), (0.7, 0.4, 0.0), (-2.0, 3.0, -1.0)])
def test_sampler_round_trip(u, mu, sigma, left):
    p = TruncNormParams(mu, sigma, left)
    assert abs(tn_cdf(tn_sample(p, u), p) - u) < 1e-9


def test_reduction_to_plain_normal():
    p = TruncNormParams(0.4, 1.3)
    for y in (-2.0, 0.0, 0.4, 3.0):
        assert abs(tn_pdf(y, p) - norm.pdf(y, 0.4, 1.3)) < 1e-12
        assert abs(tn_cdf(y, p) - norm.cdf(y, 0.4, 1.3)) < 1e-12
    assert tn_mean(p) == 0.4
    for u in (0.001, 0.1, 0.5, 0.9, 0.999):
        assert abs(tn_sample(p, u) - norm.ppf(u, 0.4, 1.3)) < 1e-12


def test_expected_fractions_table_rows():
    s = CensoringScheme(0.61)
    c, t, r = expected_fractions(TruncNormParams(0.7, 0.40, 0.0), s)
    assert (round(100 * c, 2), round(100 * t, 2), r) == (38.64, 4.01, 9.64)
    c, t, r = expected_fractions(TruncNormParams(1.1, 0.40, 0.0), s)
    assert (round(100 * c, 2), round(100 * t, 2), r) == (10.76, 0.30, 35.87)


def test_expected_fractions_empty_censoring_interval():
    c, _, _ = expected_fractions(TruncNormParams(1.0, 0.45, 0.0), CensoringScheme(1e-12))
    assert c == pytest.approx(0.0, abs=1e-11)


def test_expected_fractions_requires_truncation():
    with pytest.raises(ValueError):
        expected_fractions(TruncNormParams(1.0, 0.45), CensoringScheme(0.61))
    with pytest.raises(ValueError):
        expected_fractions(TruncNormParams(1.0, 0.45, 0.0), CensoringScheme(-0.1))


def test_param_validation():
    with pytest.raises(ValueError):
        TruncNormParams(0.0, 0.0)
    with pytest.raises(ValueError):
        TruncNormParams(math.nan, 1.0)
    with pytest.raises(ValueError):
        TruncNormParams(0.0, 1.0, math.inf)
    with pytest.raises(ValueError):
        tn_pdf(math.inf, TruncNormParams(0.0, 1.0))


def test_empirical_censoring_law():
    # one million draws at (1.0, 0.45, 0): fraction below 0.61 ~ 0.1823
    p = TruncNormParams(1.0, 0.45, 0.0)
    rng = np.random.Generator(np.random.Philox(key=np.array([11, 0], dtype=np.uint64)))
    draws = sample_array(p, rng.random(1_000_000))
    assert np.all(draws >= 0.0)
    frac = float(np.mean(draws < 0.61))
    assert abs(frac - 0.1823) < 0.003
