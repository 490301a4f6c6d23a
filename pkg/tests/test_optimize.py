import math

import numpy as np
import pytest

from trunccens import (
    CensoredSample,
    LineSearch,
    Method,
    ModelSpec,
    OptimizerConfig,
    ParamVector,
    TruncNormParams,
    Variant,
    initialize,
    loglik,
    maximize,
    sample_array,
)
from conftest import make_censored_sample

ALL_METHODS = [Method.NEWTON, Method.BFGS, Method.CG]


def _uncensored_sample(rng, n=200, mu=2.0, sigma=0.7):
    y = rng.normal(mu, sigma, n)
    dl = float(y.min()) - 1.0
    s = CensoredSample(y=y, censored=np.zeros(n, bool), X=np.ones((n, 1)), dl=dl, left=-math.inf)
    return s, ModelSpec(Variant.CENSORED, dl=dl)


def _censored_truncated_10k(seed=7):
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    ylat = sample_array(TruncNormParams(1.0, 0.45, 0.0), rng.random(10_000))
    mask = ylat <= 0.61
    yc = np.where(mask, 0.61, ylat)
    s = CensoredSample(y=yc, censored=mask, X=np.ones((10_000, 1)), dl=0.61, left=0.0)
    return s, ModelSpec(Variant.CENSORED_TRUNCATED, left=0.0, dl=0.61)


@pytest.mark.parametrize("method", ALL_METHODS)
def test_normal_mle_closed_form(rng, method):
    # CG stops on the relative-loglik criterion before the last two digits
    # settle; the second-order methods land on the closed form exactly
    tol = 1e-8 if method is not Method.CG else 1e-5
    s, spec = _uncensored_sample(rng)
    th0 = ParamVector(np.array([0.5]), np.array([0.0]))
    res = maximize(s, spec, th0, OptimizerConfig(method=method))
    assert res.converged
    assert res.theta_hat.beta[0] == pytest.approx(float(s.y.mean()), abs=tol)
    assert res.theta_hat.sigma[0] == pytest.approx(float(s.y.std()), abs=tol)


def test_consistency_at_scale():
    s, spec = _censored_truncated_10k()
    th0 = initialize(s, spec)
    res = maximize(s, spec, th0, OptimizerConfig())
    assert abs(res.theta_hat.beta[0] - 1.0) < 0.02
    assert abs(res.theta_hat.sigma[0] - 0.45) < 0.02


def test_methods_agree_at_optimum():
    s, spec = _censored_truncated_10k()
    th0 = initialize(s, spec)
    sols = [
        maximize(s, spec, th0, OptimizerConfig(method=m)).theta_hat.to_array()
        for m in ALL_METHODS
    ]
    for other in sols[1:]:
        assert np.max(np.abs(sols[0] - other)) < 1e-5


@pytest.mark.parametrize("method", ALL_METHODS)
@pytest.mark.parametrize("line_search", [LineSearch.ARMIJO, LineSearch.WOLFE])
def test_ascent_trajectory(rng, method, line_search):
    sample, spec = make_censored_sample(rng, n=120)
    th0 = ParamVector(np.array([0.5, 0.0]), np.array([0.0]))
    res = maximize(sample, spec, th0, OptimizerConfig(method=method, line_search=line_search))
    trace = res.loglik_trace
    assert np.all(np.diff(trace) >= 0.0)
    assert res.converged


def test_newton_stationarity(rng):
    sample, spec = make_censored_sample(rng, n=150)
    cfg = OptimizerConfig()
    res = maximize(sample, spec, initialize(sample, spec), cfg)
    assert res.converged and res.convergence_reason == "gradient"
    assert res.final_grad_norm <= cfg.grad_tol


def test_determinism_bit_identical(rng):
    sample, spec = make_censored_sample(rng, n=100)
    th0 = initialize(sample, spec)
    a = maximize(sample, spec, th0, OptimizerConfig(method=Method.BFGS))
    b = maximize(sample, spec, th0, OptimizerConfig(method=Method.BFGS))
    assert a.theta_hat.to_array().tobytes() == b.theta_hat.to_array().tobytes()
    assert a.loglik_at_opt == b.loglik_at_opt
    assert a.iterations == b.iterations
    assert np.array_equal(a.loglik_trace, b.loglik_trace)


def test_location_scale_invariance_of_fit(rng):
    sample, spec = make_censored_sample(rng, n=150)
    res = maximize(sample, spec, initialize(sample, spec), OptimizerConfig())
    c, d = 2.0, 0.5
    y2 = np.where(sample.censored, c * sample.dl + d, c * sample.y + d)
    s2 = CensoredSample(
        y=y2, censored=sample.censored, X=sample.X, dl=c * sample.dl + d, left=c * sample.left + d
    )
    spec2 = ModelSpec(Variant.CENSORED_TRUNCATED, left=s2.left, dl=s2.dl)
    res2 = maximize(s2, spec2, initialize(s2, spec2), OptimizerConfig())
    beta_mapped = res.theta_hat.beta * c
    beta_mapped[0] += d
    assert np.max(np.abs(res2.theta_hat.beta - beta_mapped)) < 1e-6
    assert res2.theta_hat.sigma[0] == pytest.approx(c * res.theta_hat.sigma[0], abs=1e-6)


def test_non_finite_start_rejected():
    y = np.array([0.61, 1.0, 1.5])
    s = CensoredSample(y=y, censored=np.array([True, False, False]), X=np.ones((3, 1)), dl=0.61, left=0.0)
    spec = ModelSpec(Variant.CENSORED_TRUNCATED, left=0.0, dl=0.61)
    bad = ParamVector(np.array([-25.0]), np.array([math.log(0.5)]))
    with pytest.raises(ValueError):
        maximize(s, spec, bad, OptimizerConfig())


def test_converged_never_reports_max_iter(rng):
    sample, spec = make_censored_sample(rng, n=80)
    res = maximize(sample, spec, initialize(sample, spec), OptimizerConfig(max_iter=2, method=Method.CG))
    if res.converged:
        assert res.convergence_reason != "max_iter"
    else:
        assert res.convergence_reason == "max_iter"


def test_initialize_uncensored_is_ols(rng):
    n = 120
    X = np.column_stack([np.ones(n), rng.normal(size=n)])
    y = X @ np.array([2.0, -0.5]) + rng.normal(0, 0.3, n)
    dl = float(y.min()) - 1.0
    s = CensoredSample(y=y, censored=np.zeros(n, bool), X=X, dl=dl, left=-math.inf)
    th0 = initialize(s, ModelSpec(Variant.CENSORED, dl=dl))
    beta_ols, *_ = np.linalg.lstsq(X, y, rcond=None)
    assert np.allclose(th0.beta, beta_ols, atol=1e-10)
    resid = y - X @ beta_ols
    assert th0.log_sigma[0] == pytest.approx(math.log(float(np.sqrt(resid @ resid / n))), abs=1e-10)


def test_initialize_combined_model_matches_grid_searched_tobit():
    # brute-force oracle: profile the Tobit likelihood over a coarse-to-fine
    # (mu, log sigma) grid and compare against the initializer's start
    y = np.array([0.61, 1.0, 1.5])
    cens = np.array([True, False, False])
    s = CensoredSample(y=y, censored=cens, X=np.ones((3, 1)), dl=0.61, left=0.0)
    spec = ModelSpec(Variant.CENSORED_TRUNCATED, left=0.0, dl=0.61)
    th0 = initialize(s, spec)

    tobit_sample = CensoredSample(y=y, censored=cens, X=np.ones((3, 1)), dl=0.61, left=-math.inf)
    tobit_spec = ModelSpec(Variant.CENSORED, dl=0.61)

    center = np.array([1.0, math.log(0.5)])
    width = np.array([1.5, 1.5])
    best = None
    for _ in range(12):
        mus = np.linspace(center[0] - width[0], center[0] + width[0], 21)
        lss = np.linspace(center[1] - width[1], center[1] + width[1], 21)
        best = max(
            ((loglik(tobit_sample, tobit_spec, ParamVector(np.array([m]), np.array([ls]))), m, ls)
             for m in mus for ls in lss),
            key=lambda t: t[0],
        )
        center = np.array([best[1], best[2]])
        width = width / 5.0
    assert th0.beta[0] == pytest.approx(best[1], abs=1e-4)
    assert th0.log_sigma[0] == pytest.approx(best[2], abs=1e-4)


def test_initialize_heteroskedastic_sets_equal_scales(rng):
    sample, spec = make_censored_sample(rng, n=80, n_groups=2)
    th0 = initialize(sample, spec)
    assert th0.log_sigma.size == 2
    assert th0.log_sigma[0] == th0.log_sigma[1]


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(max_iter=0)
    with pytest.raises(ValueError):
        OptimizerConfig(grad_tol=0.0)
