import numpy as np
import pytest

from trunccens import (
    CensoredSample,
    ModelSpec,
    ParamVector,
    TruncNormParams,
    Variance,
    Variant,
    sample_array,
)


def make_censored_sample(
    rng,
    n=80,
    beta=(1.0, 0.3),
    sigma=0.5,
    left=0.0,
    dl=0.61,
    n_groups=1,
    with_covariate=True,
):
    """Simulate a sample that matches its own generating model."""
    beta = np.asarray(beta, dtype=float)
    if with_covariate:
        X = np.column_stack([np.ones(n), rng.normal(0.0, 0.6, n)])
    else:
        X = np.ones((n, 1))
        beta = beta[:1]
    group = None
    sig_row = np.full(n, sigma)
    if n_groups > 1:
        group = 1 + (np.arange(n) % n_groups)
        sig_row = sigma * (1.0 + 0.3 * (group - 1))
    mean = X @ beta
    u = rng.random(n)
    ylat = np.empty(n)
    for i in range(n):
        ylat[i] = sample_array(TruncNormParams(mean[i], sig_row[i], left), np.array([u[i]]))[0]
    mask = ylat <= dl
    y = np.where(mask, dl, ylat)
    sample = CensoredSample(y=y, censored=mask, X=X, group=group, dl=dl, left=left)
    spec = ModelSpec(
        Variant.CENSORED_TRUNCATED,
        Variance.PER_GROUP if n_groups > 1 else Variance.COMMON,
        left=left,
        dl=dl,
    )
    return sample, spec


def theta_for(sample, spec, beta=None, sigma=0.5):
    n_groups = sample.n_groups if spec.variance is Variance.PER_GROUP else 1
    if beta is None:
        beta = np.zeros(sample.X.shape[1])
        beta[0] = 1.0
    return ParamVector(np.asarray(beta, dtype=float), np.full(n_groups, np.log(sigma)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
