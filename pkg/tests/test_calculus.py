import math

import numpy as np
import pytest

from trunccens import (
    CensoredSample,
    DegenerateParameterError,
    ModelSpec,
    ParamVector,
    Variance,
    Variant,
    fd_check,
    gradient,
    hessian,
    loglik,
)
from conftest import make_censored_sample


def _random_case(k, variant, n_groups=1):
    rng = np.random.default_rng(5000 + k)
    sample, _ = make_censored_sample(
        rng,
        n=60,
        beta=(1.0 + 0.2 * rng.standard_normal(), 0.3),
        sigma=0.45 + 0.1 * rng.random(),
        n_groups=n_groups,
    )
    if variant is Variant.TRUNCATED:
        keep = ~sample.censored
        sample = CensoredSample(
            y=sample.y[keep],
            censored=np.zeros(int(keep.sum()), bool),
            X=sample.X[keep],
            group=None if sample.group is None else _relabel(sample.group[keep]),
            left=sample.left,
        )
        spec = ModelSpec(
            Variant.TRUNCATED,
            Variance.PER_GROUP if n_groups > 1 else Variance.COMMON,
            left=sample.left,
        )
    elif variant is Variant.CENSORED:
        sample = CensoredSample(
            y=sample.y,
            censored=sample.censored,
            X=sample.X,
            group=sample.group,
            dl=sample.dl,
            left=-math.inf,
        )
        spec = ModelSpec(
            Variant.CENSORED,
            Variance.PER_GROUP if n_groups > 1 else Variance.COMMON,
            dl=sample.dl,
        )
    else:
        spec = ModelSpec(
            Variant.CENSORED_TRUNCATED,
            Variance.PER_GROUP if n_groups > 1 else Variance.COMMON,
            left=sample.left,
            dl=sample.dl,
        )
    J = sample.n_groups if spec.variance is Variance.PER_GROUP else 1
    theta = ParamVector(
        np.array([1.0, 0.3]) + 0.15 * rng.standard_normal(2),
        np.log(0.5) + 0.2 * rng.standard_normal(J),
    )
    return sample, spec, theta


def _relabel(g):
    _, inv = np.unique(g, return_inverse=True)
    return inv + 1


@pytest.mark.parametrize("variant", [Variant.CENSORED, Variant.TRUNCATED, Variant.CENSORED_TRUNCATED])
def test_gradient_matches_finite_differences_50_draws(variant):
    worst = 0.0
    for k in range(50):
        sample, spec, theta = _random_case(k, variant)
        rep = fd_check(sample, spec, theta, step=1e-5)
        worst = max(worst, rep.grad_max_rel_err)
    assert worst < 1e-6


@pytest.mark.parametrize("variant", [Variant.CENSORED, Variant.TRUNCATED, Variant.CENSORED_TRUNCATED])
def test_hessian_matches_differenced_gradient_50_draws(variant):
    worst = 0.0
    for k in range(50):
        sample, spec, theta = _random_case(k, variant)
        rep = fd_check(sample, spec, theta, step=1e-5)
        worst = max(worst, rep.hess_max_rel_err)
    assert worst < 1e-5


def test_heteroskedastic_derivatives_and_block_sparsity():
    for k in range(25):
        sample, spec, theta = _random_case(k, Variant.CENSORED_TRUNCATED, n_groups=3)
        rep = fd_check(sample, spec, theta, step=1e-5)
        assert rep.grad_max_rel_err < 1e-6
        assert rep.hess_max_rel_err < 1e-5
        H = hessian(sample, spec, theta)
        block = H[2:, 2:]
        off = block - np.diag(np.diag(block))
        assert np.all(off == 0.0)  # independent groups: exact zeros


def test_hessian_symmetry():
    sample, spec, theta = _random_case(0, Variant.CENSORED_TRUNCATED, n_groups=2)
    H = hessian(sample, spec, theta)
    assert np.max(np.abs(H - H.T)) < 1e-12


def test_score_zero_at_sample_mean_without_censoring():
    y = np.array([0.4, 1.1, 2.3, 0.9, 1.8])
    s = CensoredSample(y=y, censored=np.zeros(5, bool), X=np.ones((5, 1)), dl=0.0, left=-math.inf)
    spec = ModelSpec(Variant.CENSORED, dl=0.0)
    th = ParamVector(np.array([float(y.mean())]), np.array([0.2]))
    g = gradient(s, spec, th)
    assert g[0] == pytest.approx(0.0, abs=1e-12)


def test_normal_curvature_identity():
    # no censoring, no truncation: d2l/dmu2 = -n / sigma^2
    y = np.array([0.4, 1.1, 2.3, 0.9, 1.8])
    s = CensoredSample(y=y, censored=np.zeros(5, bool), X=np.ones((5, 1)), dl=0.0, left=-math.inf)
    spec = ModelSpec(Variant.CENSORED, dl=0.0)
    sig = 0.8
    th = ParamVector(np.array([1.2]), np.array([math.log(sig)]))
    H = hessian(s, spec, th)
    assert H[0, 0] == pytest.approx(-5.0 / sig**2, rel=1e-12)


def test_group_gradient_additivity():
    sample, spec, theta = _random_case(3, Variant.CENSORED_TRUNCATED, n_groups=2)
    g = gradient(sample, spec, theta)
    sel = sample.group == 1
    sub = CensoredSample(
        y=sample.y[sel],
        censored=sample.censored[sel],
        X=sample.X[sel],
        dl=sample.dl,
        left=sample.left,
    )
    sub_spec = ModelSpec(Variant.CENSORED_TRUNCATED, left=spec.left, dl=spec.dl)
    g1 = gradient(sub, sub_spec, ParamVector(theta.beta, theta.log_sigma[:1]))
    # group 1's scale derivative only involves group 1's rows
    assert g[2] == pytest.approx(g1[2], rel=1e-12)


def test_fd_check_localizes_corruption(monkeypatch):
    sample, spec, theta = _random_case(1, Variant.CENSORED_TRUNCATED)
    from trunccens.kernels import get_kernels

    real = get_kernels().gradient

    def corrupted(*args):
        g = real(*args)
        g = np.asarray(g).copy()
        g[1] += 0.5
        return g

    import trunccens.calculus as calc

    class FakeKernels:
        loglik = staticmethod(get_kernels().loglik)
        gradient = staticmethod(corrupted)
        hessian = staticmethod(get_kernels().hessian)

    monkeypatch.setattr(calc, "get_kernels", lambda: FakeKernels)
    rep = fd_check(sample, spec, theta, step=1e-5)
    assert rep.grad_worst_index == 1
    assert rep.grad_max_rel_err > 1e-3


def test_gradient_errors_at_degenerate_point():
    s = CensoredSample(
        y=np.array([0.61, 1.0, 1.5]),
        censored=np.array([True, False, False]),
        X=np.ones((3, 1)),
        dl=0.61,
        left=0.0,
    )
    spec = ModelSpec(Variant.CENSORED_TRUNCATED, left=0.0, dl=0.61)
    th = ParamVector(np.array([-25.0]), np.array([math.log(0.5)]))
    for op in (gradient, hessian):
        with pytest.raises(DegenerateParameterError):
            op(s, spec, th)
    with pytest.raises(DegenerateParameterError):
        fd_check(s, spec, th)


def test_fd_step_validation():
    sample, spec, theta = _random_case(2, Variant.CENSORED_TRUNCATED)
    with pytest.raises(ValueError):
        fd_check(sample, spec, theta, step=-1e-5)
    rep = fd_check(sample, spec, theta)  # default cbrt(eps) scaled step
    assert rep.grad_max_rel_err < 1e-6
