"""Log-likelihood evaluation for all model variants.

One kernel covers every case: the truncation sum drops out when the
bound is ``NO_TRUNCATION`` (censored-only / Tobit) and the censored sum
is empty for truncated-only data, so the special cases are exact
reductions of the combined likelihood.

A parameter region where the censored-interval probability underflows
yields ``-inf`` (a valid likelihood value optimizers can back away
from); exceptions are reserved for structural errors.
"""

from __future__ import annotations

import math

import numpy as np

from .data import CensoredSample, ModelSpec, ParamVector, Variance, Variant
from .kernels import get_kernels
from .truncnorm import NO_TRUNCATION


def validate(sample: CensoredSample, spec: ModelSpec) -> None:
    """Check that a sample is usable under a model specification."""
    if spec.variant is Variant.TRUNCATED and sample.censored.any():
        raise ValueError("truncated-only model cannot have censored observations")
    if spec.variant is not Variant.TRUNCATED:
        if sample.dl is None:
            raise ValueError("model with censoring needs the sample's detection limit")
        if spec.dl is not None and sample.dl is not None and spec.dl != sample.dl:
            raise ValueError("sample and spec disagree on the detection limit")
    if spec.left != sample.left:
        raise ValueError("sample and spec disagree on the truncation bound")
    if spec.variance is Variance.PER_GROUP and sample.group is None:
        raise ValueError("per-group variances need group labels")


def check_dims(sample: CensoredSample, spec: ModelSpec, theta: ParamVector) -> int:
    """Validate theta's shape against sample/spec; returns J."""
    n_groups = sample.n_groups if spec.variance is Variance.PER_GROUP else 1
    if theta.beta.size != sample.X.shape[1]:
        raise ValueError(
            f"theta has {theta.beta.size} coefficients but the design has {sample.X.shape[1]} columns"
        )
    if theta.log_sigma.size != n_groups:
        raise ValueError(
            f"theta has {theta.log_sigma.size} scale parameters but the model needs {n_groups}"
        )
    return n_groups


def _kernel_args(sample: CensoredSample, spec: ModelSpec, theta: ParamVector):
    gidx = sample.group_index(spec.variance)
    left = spec.left if spec.variant is not Variant.CENSORED else NO_TRUNCATION
    dl = sample.dl if sample.dl is not None else math.nan
    return (
        sample.y,
        sample.censored,
        sample.X,
        gidx,
        theta.beta,
        theta.log_sigma,
        left,
        dl,
    )


def loglik(sample: CensoredSample, spec: ModelSpec, theta: ParamVector) -> float:
    """Log-likelihood at ``theta``; ``-inf`` in degenerate parameter regions."""
    validate(sample, spec)
    check_dims(sample, spec, theta)
    return float(get_kernels().loglik(*_kernel_args(sample, spec, theta)))


def split_sets(sample: CensoredSample):
    """Censored/uncensored index sets and per-group counts.

    Returns ``(s0, s1, n0_by_group, n1_by_group)`` where the index
    arrays are disjoint and exhaustive and the count vectors have one
    entry per group (a single entry when no groups are defined).
    """
    s0 = np.nonzero(sample.censored)[0]
    s1 = np.nonzero(~sample.censored)[0]
    n_groups = sample.n_groups
    gidx = np.zeros(sample.n, dtype=np.int64) if sample.group is None else sample.group - 1
    n0 = np.bincount(gidx[s0], minlength=n_groups)
    n1 = np.bincount(gidx[s1], minlength=n_groups)
    return s0, s1, n0, n1
