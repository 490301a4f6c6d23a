"""Ascent optimizers for the log-likelihood.

Three methods on the unconstrained (beta, log sigma) coordinates:
Newton-Raphson with a curvature-checked symmetric solve, BFGS with the
standard rank-two inverse update, and Polak-Ribiere-plus nonlinear
conjugate gradient with periodic restarts. Line searches enforce an
ascent condition, so accepted iterates are monotone nondecreasing in
log-likelihood; all paths are deterministic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import calculus, likelihood
from .data import CensoredSample, ModelSpec, ParamVector, Variance, Variant
from .truncnorm import NO_TRUNCATION

_ARMIJO_C1 = 1e-4
_WOLFE_C2 = 0.9
_MIN_ALPHA = 1e-20


class Method(Enum):
    NEWTON = "newton"
    BFGS = "bfgs"
    CG = "cg"


class LineSearch(Enum):
    ARMIJO = "armijo"
    WOLFE = "wolfe"


@dataclass(frozen=True)
class OptimizerConfig:
    method: Method = Method.NEWTON
    max_iter: int = 200
    grad_tol: float = 1e-8
    step_tol: float = 1e-10
    f_tol: float = 1e-12
    line_search: LineSearch = LineSearch.ARMIJO

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        for name in ("grad_tol", "step_tol", "f_tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class OptimResult:
    theta_hat: ParamVector
    loglik_at_opt: float
    iterations: int
    converged: bool
    convergence_reason: str  # "gradient" | "step" | "function" | "max_iter"
    final_grad_norm: float
    loglik_trace: np.ndarray
    newton_fallbacks: int = 0
    method: Method = Method.NEWTON


def _supnorm(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def _armijo(f, x, d, fx, slope, alpha0, expand=False):
    """Backtracking search for f(x + a d) >= fx + c1 a slope; slope > 0.

    With ``expand``, a first trial that already satisfies the condition
    is doubled while the objective keeps rising (used by CG, whose
    scaled initial step can be far too short near the optimum).
    """
    alpha = alpha0
    first = True
    while alpha > _MIN_ALPHA:
        fn = f(x + alpha * d)
        if math.isfinite(fn) and fn >= fx + _ARMIJO_C1 * alpha * slope:
            if expand and first:
                while alpha < 1e6:
                    fn2 = f(x + 2.0 * alpha * d)
                    if not (math.isfinite(fn2) and fn2 > fn):
                        break
                    alpha, fn = 2.0 * alpha, fn2
            return alpha, fn
        first = False
        alpha *= 0.5
    return None, fx


def _wolfe(f, g, x, d, fx, slope, alpha0):
    """Strong-Wolfe search (ascent form): sufficient increase plus
    |g(x+ad).d| <= c2 |slope|. Falls back to plain backtracking when the
    bracket fails. Returns (alpha, f_new, g_new or None)."""

    def phi(a):
        return f(x + a * d)

    def dphi(a):
        gn = g(x + a * d)
        return float(gn @ d), gn

    amax = 1e3
    a_prev, f_prev = 0.0, fx
    a = alpha0
    g_new = None
    for it in range(20):
        fa = phi(a)
        if (not math.isfinite(fa)) or fa < fx + _ARMIJO_C1 * a * slope or (it > 0 and fa <= f_prev):
            return _zoom(phi, dphi, a_prev, a, f_prev, fx, slope)
        da, g_new = dphi(a)
        if abs(da) <= _WOLFE_C2 * abs(slope):
            return a, fa, g_new
        if da <= 0.0:  # overshot the maximum along d
            return _zoom(phi, dphi, a, a_prev, fa, fx, slope)
        a_prev, f_prev = a, fa
        a = min(2.0 * a, amax)
        if a >= amax:
            break
    alpha, fn = _armijo(f, x, d, fx, slope, alpha0)
    return alpha, fn, None


def _zoom(phi, dphi, lo, hi, f_lo, fx, slope, max_iter=30):
    for _ in range(max_iter):
        a = 0.5 * (lo + hi)
        fa = phi(a)
        if (not math.isfinite(fa)) or fa < fx + _ARMIJO_C1 * a * slope or fa <= f_lo:
            hi = a
        else:
            da, g_new = dphi(a)
            if abs(da) <= _WOLFE_C2 * abs(slope):
                return a, fa, g_new
            if da * (hi - lo) <= 0.0:
                hi = lo
            lo, f_lo = a, fa
        if abs(hi - lo) < 1e-14 * max(1.0, abs(lo)):
            break
    if f_lo > fx and lo > 0.0:
        return lo, f_lo, None
    return None, fx, None


def _maximize_arrays(f, g, h, x0, cfg: OptimizerConfig):
    """Core ascent loop on raw arrays; ``h`` may be None for BFGS/CG."""
    x = np.asarray(x0, dtype=float).copy()
    fx = f(x)
    if not math.isfinite(fx):
        raise ValueError("objective is not finite at the starting point")
    gx = g(x)
    dim = x.size
    trace = [fx]
    fallbacks = 0
    reason = "max_iter"
    converged = False
    iterations = 0

    if _supnorm(gx) <= cfg.grad_tol:
        return x, fx, 0, True, "gradient", _supnorm(gx), np.array(trace), 0

    Hinv = np.eye(dim) if cfg.method is Method.BFGS else None
    d_prev = None
    g_prev = None
    f_prev = None

    for it in range(1, cfg.max_iter + 1):
        iterations = it
        # --- direction ---
        if cfg.method is Method.NEWTON:
            Hm = h(x)
            d = None
            try:
                c = cho_factor(-Hm, lower=True)
                d = cho_solve(c, gx)
            except (LinAlgError, ValueError):
                d = None
            if d is None or not np.all(np.isfinite(d)) or float(gx @ d) <= 0.0:
                d = gx.copy()  # steepest ascent when curvature is unusable
                fallbacks += 1
        elif cfg.method is Method.BFGS:
            d = Hinv @ gx
            if float(gx @ d) <= 0.0:
                Hinv = np.eye(dim)
                d = gx.copy()
        else:  # CG, Polak-Ribiere-plus with restarts
            if d_prev is None or (it - 1) % dim == 0:
                d = gx.copy()
            else:
                beta_pr = max(0.0, float(gx @ (gx - g_prev)) / float(g_prev @ g_prev))
                d = gx + beta_pr * d_prev
                lost_conjugacy = abs(float(gx @ g_prev)) >= 0.1 * float(gx @ gx)
                if lost_conjugacy or float(gx @ d) <= 0.0:
                    d = gx.copy()

        slope = float(gx @ d)

        # --- initial step ---
        if cfg.method in (Method.NEWTON, Method.BFGS):
            alpha0 = 1.0
        elif f_prev is None:
            alpha0 = min(1.0, 1.0 / max(1.0, _supnorm(gx)))
        else:
            alpha0 = 2.0 * (fx - f_prev) / slope if slope > 0 else 1.0
            if not (0.0 < alpha0 <= 1.0) or not math.isfinite(alpha0):
                alpha0 = 1.0

        # --- line search ---
        g_new = None
        if cfg.line_search is LineSearch.WOLFE:
            alpha, f_new, g_new = _wolfe(f, g, x, d, fx, slope, alpha0)
        else:
            alpha, f_new = _armijo(
                f, x, d, fx, slope, alpha0, expand=cfg.method is Method.CG
            )
        if alpha is None:
            # no representable step improves f: flat to machine precision
            reason = "function"
            converged = True
            break

        x_new = x + alpha * d
        if g_new is None:
            g_new = g(x_new)

        # --- quasi-Newton state updates ---
        if cfg.method is Method.BFGS:
            s = x_new - x
            yk = -(g_new - gx)  # gradient change of the negated objective
            ys = float(yk @ s)
            if ys > 1e-10 * float(np.linalg.norm(yk)) * float(np.linalg.norm(s)):
                rho = 1.0 / ys
                V = np.eye(dim) - rho * np.outer(s, yk)
                Hinv = V @ Hinv @ V.T + rho * np.outer(s, s)
        elif cfg.method is Method.CG:
            g_prev = gx
            d_prev = d

        f_prev = fx
        x, fx, gx = x_new, f_new, g_new
        trace.append(fx)

        # --- convergence, first satisfied criterion wins ---
        gn = _supnorm(gx)
        if gn <= cfg.grad_tol:
            reason, converged = "gradient", True
            break
        if _supnorm(alpha * d) <= cfg.step_tol * max(1.0, _supnorm(x)):
            reason, converged = "step", True
            break
        if abs(fx - f_prev) <= cfg.f_tol * max(1.0, abs(fx)):
            reason, converged = "function", True
            break

    return x, fx, iterations, converged, reason, _supnorm(gx), np.array(trace), fallbacks


def maximize(
    sample: CensoredSample,
    spec: ModelSpec,
    theta0: ParamVector,
    cfg: OptimizerConfig | None = None,
) -> OptimResult:
    """Maximize the log-likelihood from ``theta0``.

    Accepted iterates never decrease the log-likelihood. A Newton step
    whose Hessian is not negative definite falls back to steepest ascent
    for that iteration (counted in ``newton_fallbacks``).
    """
    cfg = cfg or OptimizerConfig()
    likelihood.validate(sample, spec)
    n_beta = sample.X.shape[1]
    likelihood.check_dims(sample, spec, theta0)

    def f(x):
        return likelihood.loglik(sample, spec, ParamVector.from_array(x, n_beta))

    def g(x):
        return calculus.gradient(sample, spec, ParamVector.from_array(x, n_beta))

    def h(x):
        return calculus.hessian(sample, spec, ParamVector.from_array(x, n_beta))

    x, fx, iters, conv, reason, gn, trace, fb = _maximize_arrays(
        f, g, h if cfg.method is Method.NEWTON else None, theta0.to_array(), cfg
    )
    return OptimResult(
        theta_hat=ParamVector.from_array(x, n_beta),
        loglik_at_opt=fx,
        iterations=iters,
        converged=conv,
        convergence_reason=reason,
        final_grad_norm=gn,
        loglik_trace=trace,
        newton_fallbacks=fb,
        method=cfg.method,
    )


def _ols_start(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    sd = math.sqrt(float(resid @ resid) / y.shape[0])
    return beta, math.log(max(sd, 1e-8))


def _initialize(sample: CensoredSample, spec: ModelSpec):
    """Starting values plus a flag marking the Tobit-init fallback path."""
    likelihood.validate(sample, spec)
    beta0, lnsig0 = _ols_start(sample.X, sample.y)
    fallback = False
    if spec.variant is Variant.CENSORED_TRUNCATED:
        tobit_spec = ModelSpec(
            Variant.CENSORED, Variance.COMMON, left=NO_TRUNCATION, dl=spec.dl
        )
        tobit_sample = replace(sample, left=NO_TRUNCATION)
        start = ParamVector(beta0, np.array([lnsig0]))
        try:
            res = maximize(tobit_sample, tobit_spec, start, OptimizerConfig())
        except (ValueError, LinAlgError):
            res = None
        if res is not None and res.converged:
            beta0 = res.theta_hat.beta
            lnsig0 = float(res.theta_hat.log_sigma[0])
        else:
            fallback = True
            warnings.warn(
                "censored-regression initialization did not converge; using OLS start",
                RuntimeWarning,
                stacklevel=3,
            )
    n_groups = sample.n_groups if spec.variance is Variance.PER_GROUP else 1
    theta = ParamVector(beta0, np.full(n_groups, lnsig0))
    return theta, fallback


def initialize(sample: CensoredSample, spec: ModelSpec) -> ParamVector:
    """Starting values: a censored-regression (Tobit) fit of the same data
    for the combined model, OLS for the censored-only and truncated-only
    models; per-group scales all start at the pooled estimate."""
    return _initialize(sample, spec)[0]
