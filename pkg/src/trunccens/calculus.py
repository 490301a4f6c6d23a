"""Analytic gradient and Hessian of the log-likelihood, plus an FD verifier.

Derivatives are taken with respect to (beta, log sigma_j); natural-scale
standard errors come later via the delta method. The heteroskedastic
Hessian is block sparse: cross-derivatives between distinct groups'
scale parameters are exactly zero because groups are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import CensoredSample, ModelSpec, ParamVector
from .kernels import get_kernels
from .likelihood import _kernel_args, check_dims, loglik, validate


class DegenerateParameterError(ValueError):
    """Raised when derivatives are requested where the log-likelihood is -inf."""


def _require_finite(sample, spec, theta) -> None:
    if not math.isfinite(loglik(sample, spec, theta)):
        raise DegenerateParameterError("gradient undefined at degenerate point")


def gradient(sample: CensoredSample, spec: ModelSpec, theta: ParamVector) -> np.ndarray:
    """Score vector ordered (beta_1..beta_{p-1}, log sigma_1..log sigma_J)."""
    _require_finite(sample, spec, theta)
    return get_kernels().gradient(*_kernel_args(sample, spec, theta))


def hessian(sample: CensoredSample, spec: ModelSpec, theta: ParamVector) -> np.ndarray:
    """Symmetric matrix of second derivatives in the gradient's ordering."""
    _require_finite(sample, spec, theta)
    return get_kernels().hessian(*_kernel_args(sample, spec, theta))


def default_fd_step(theta: ParamVector) -> np.ndarray:
    """Central-difference steps: cbrt(eps) * max(1, |theta_i|) per coordinate."""
    x = theta.to_array()
    return np.cbrt(np.finfo(float).eps) * np.maximum(1.0, np.abs(x))


@dataclass(frozen=True)
class FdCheckReport:
    grad_max_rel_err: float
    grad_worst_index: int
    hess_max_rel_err: float
    hess_worst_index: tuple[int, int]
    step: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "grad_max_rel_err": self.grad_max_rel_err,
            "grad_worst_index": self.grad_worst_index,
            "hess_max_rel_err": self.hess_max_rel_err,
            "hess_worst_index": list(self.hess_worst_index),
            "step": self.step.tolist(),
        }


def fd_check(
    sample: CensoredSample,
    spec: ModelSpec,
    theta: ParamVector,
    step: float | np.ndarray | None = None,
) -> FdCheckReport:
    """Compare analytic derivatives with central finite differences.

    The gradient is checked against differences of the log-likelihood
    and the Hessian against differences of the analytic gradient.
    Relative errors are scaled by ``max(1, |fd value|)`` per component.
    """
    validate(sample, spec)
    check_dims(sample, spec, theta)
    _require_finite(sample, spec, theta)
    x0 = theta.to_array()
    nb = theta.beta.size
    if step is None:
        h = default_fd_step(theta)
    else:
        h = np.broadcast_to(np.asarray(step, dtype=float), x0.shape).copy()
        if np.any(h <= 0.0):
            raise ValueError("step must be positive")

    def f(x):
        return loglik(sample, spec, ParamVector.from_array(x, nb))

    def g(x):
        return gradient(sample, spec, ParamVector.from_array(x, nb))

    dim = x0.size
    g_fd = np.empty(dim)
    H_fd = np.empty((dim, dim))
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = h[i]
        g_fd[i] = (f(x0 + e) - f(x0 - e)) / (2.0 * h[i])
        H_fd[:, i] = (g(x0 + e) - g(x0 - e)) / (2.0 * h[i])

    g_an = g(x0)
    g_err = np.abs(g_an - g_fd) / np.maximum(1.0, np.abs(g_fd))
    H_an = hessian(sample, spec, theta)
    H_err = np.abs(H_an - H_fd) / np.maximum(1.0, np.abs(H_fd))
    gi = int(np.argmax(g_err))
    hi = np.unravel_index(int(np.argmax(H_err)), H_err.shape)
    return FdCheckReport(
        grad_max_rel_err=float(g_err[gi]),
        grad_worst_index=gi,
        hess_max_rel_err=float(H_err[hi]),
        hess_worst_index=(int(hi[0]), int(hi[1])),
        step=h,
    )
