"""User-facing fitting API.

``fit`` runs initialization and optimization, then derives the
covariance from observed information (inverse negated Hessian at the
optimum) on the internal (beta, log sigma) coordinates and maps it to
the natural scale with the delta method. Wald intervals come from
``confint``; ``build_design`` assembles treatment-coded design matrices
from column records.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, qr
from scipy.special import ndtri

from . import calculus, likelihood
from .data import CensoredSample, ModelSpec, ParamVector, Variance
from .optimize import OptimizerConfig, OptimResult, maximize, _initialize

_JSON_FIELDS = (
    "beta",
    "sigma",
    "se_beta",
    "se_sigma",
    "loglik",
    "n",
    "n_censored",
    "converged",
    "method",
    "iterations",
)


@dataclass(frozen=True)
class FitResult:
    beta: np.ndarray
    sigma: np.ndarray
    log_sigma: np.ndarray
    vcov_internal: np.ndarray | None
    vcov_natural: np.ndarray | None
    se_beta: np.ndarray | None
    se_log_sigma: np.ndarray | None
    se_sigma: np.ndarray | None
    loglik: float
    n: int
    n_censored: int
    n_uncensored: int
    spec: ModelSpec
    optim: OptimResult
    se_available: bool
    cond_number: float | None
    init_fallback: bool

    @property
    def theta(self) -> ParamVector:
        return ParamVector(self.beta, self.log_sigma)

    def to_json_dict(self) -> dict:
        return {
            "beta": self.beta.tolist(),
            "sigma": self.sigma.tolist(),
            "se_beta": self.se_beta.tolist() if self.se_available else None,
            "se_sigma": self.se_sigma.tolist() if self.se_available else None,
            "loglik": self.loglik,
            "n": self.n,
            "n_censored": self.n_censored,
            "converged": self.optim.converged,
            "method": self.optim.method.value,
            "iterations": self.optim.iterations,
        }


def result_json(data: dict) -> str:
    """Canonical JSON serialization of a fit-result dict (stable field order)."""
    missing = [k for k in _JSON_FIELDS if k not in data]
    if missing:
        raise ValueError(f"fit result is missing fields: {missing}")
    ordered = {k: data[k] for k in _JSON_FIELDS}
    return json.dumps(ordered, indent=2) + "\n"


@dataclass(frozen=True)
class ContrastRequest:
    """Linear combination over the coefficients with a confidence level."""

    coefficients: np.ndarray
    level: float = 0.95

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=float))
        object.__setattr__(self, "coefficients", c)
        if not 0.0 < self.level < 1.0:
            raise ValueError("confidence level must lie in (0, 1)")


def fit(
    sample: CensoredSample,
    spec: ModelSpec,
    cfg: OptimizerConfig | None = None,
) -> FitResult:
    """Maximum likelihood fit of the specified model to the sample."""
    cfg = cfg or OptimizerConfig()
    likelihood.validate(sample, spec)
    n_groups = sample.n_groups if spec.variance is Variance.PER_GROUP else 1
    n_params = sample.X.shape[1] + n_groups
    if sample.n_uncensored == 0:
        raise ValueError("degenerate sample: every observation is censored")
    if sample.n_uncensored < n_params:
        raise ValueError(
            f"insufficient uncensored data: {sample.n_uncensored} uncensored rows "
            f"for {n_params} parameters"
        )
    theta0, init_fallback = _initialize(sample, spec)
    res = maximize(sample, spec, theta0, cfg)
    H = calculus.hessian(sample, spec, res.theta_hat)

    vcov_internal = None
    cond = None
    try:
        c = cho_factor(-H, lower=True)
        vcov_internal = cho_solve(c, np.eye(n_params))
        vcov_internal = 0.5 * (vcov_internal + vcov_internal.T)
        if not np.all(np.isfinite(vcov_internal)):
            vcov_internal = None
    except (LinAlgError, ValueError):
        vcov_internal = None
    if vcov_internal is None:
        cond = float(np.linalg.cond(-H))

    beta = res.theta_hat.beta
    log_sigma = res.theta_hat.log_sigma
    sigma = np.exp(log_sigma)
    if vcov_internal is not None:
        jac = np.concatenate([np.ones_like(beta), sigma])
        vcov_natural = vcov_internal * np.outer(jac, jac)
        d = np.sqrt(np.diag(vcov_internal))
        se_beta = d[: beta.size]
        se_log_sigma = d[beta.size :]
        se_sigma = sigma * se_log_sigma  # exact delta-method identity
        se_available = True
    else:
        vcov_natural = se_beta = se_log_sigma = se_sigma = None
        se_available = False

    return FitResult(
        beta=beta,
        sigma=sigma,
        log_sigma=log_sigma,
        vcov_internal=vcov_internal,
        vcov_natural=vcov_natural,
        se_beta=se_beta,
        se_log_sigma=se_log_sigma,
        se_sigma=se_sigma,
        loglik=res.loglik_at_opt,
        n=sample.n,
        n_censored=sample.n_censored,
        n_uncensored=sample.n_uncensored,
        spec=spec,
        optim=res,
        se_available=se_available,
        cond_number=cond,
        init_fallback=init_fallback,
    )


def confint(fr: FitResult, req: ContrastRequest) -> tuple[float, float]:
    """Wald interval for a coefficient contrast at the requested level."""
    if not fr.se_available:
        raise ValueError("standard errors unavailable (singular information matrix)")
    c = req.coefficients
    if c.size != fr.beta.size:
        raise ValueError(
            f"contrast has {c.size} entries but the model has {fr.beta.size} coefficients"
        )
    est = float(c @ fr.beta)
    var = float(c @ fr.vcov_natural[: c.size, : c.size] @ c)
    z = float(ndtri(0.5 * (1.0 + req.level)))
    half = z * math.sqrt(var)
    return est - half, est + half


def sigma_confint(fr: FitResult, group: int = 0, level: float = 0.95) -> tuple[float, float]:
    """Wald interval for one group's scale, built on the log scale and
    exponentiated so the bounds stay positive."""
    if not fr.se_available:
        raise ValueError("standard errors unavailable (singular information matrix)")
    z = float(ndtri(0.5 * (1.0 + level)))
    ln_hat = float(fr.log_sigma[group])
    half = z * float(fr.se_log_sigma[group])
    return math.exp(ln_hat - half), math.exp(ln_hat + half)


def build_design(
    records,
    *,
    group: str | None = None,
    covariates=(),
    ref_level: str | None = None,
):
    """Treatment-coded design from column records.

    ``records`` maps column names to equal-length sequences. The design
    gets an intercept, indicator columns for every non-reference level
    of ``group`` (reference = first seen, unless ``ref_level``), then
    the numeric covariates. Returns ``(X, group_codes, column_names,
    levels)`` where ``group_codes`` are contiguous 1..J labels (None
    without a group).
    """
    if group is None and not covariates:
        lengths = {len(v) for v in records.values()} if records else set()
        if not lengths:
            raise ValueError("no columns supplied")
        n = lengths.pop()
        if lengths:
            raise ValueError("record columns have inconsistent lengths")
        return np.ones((n, 1)), None, ["intercept"], None

    cols = [records[group]] if group is not None else []
    cols += [records[c] for c in covariates]
    lengths = {len(c) for c in cols}
    if len(lengths) != 1:
        raise ValueError("record columns have inconsistent lengths")
    n = lengths.pop()

    design_cols = [np.ones(n)]
    names = ["intercept"]
    levels = None
    group_codes = None
    if group is not None:
        labels = [str(v) for v in records[group]]
        levels = []
        for lab in labels:
            if lab not in levels:
                levels.append(lab)
        if ref_level is not None:
            if str(ref_level) not in levels:
                raise ValueError(f"reference level {ref_level!r} not present in {group!r}")
            levels.remove(str(ref_level))
            levels.insert(0, str(ref_level))
        code = {lab: i + 1 for i, lab in enumerate(levels)}
        group_codes = np.array([code[lab] for lab in labels], dtype=np.int64)
        for lev in levels[1:]:
            design_cols.append(np.array([1.0 if lab == lev else 0.0 for lab in labels]))
            names.append(f"{group}[{lev}]")
    for cname in covariates:
        col = np.asarray(records[cname], dtype=float)
        if not np.all(np.isfinite(col)):
            raise ValueError(f"covariate {cname!r} has non-finite values")
        design_cols.append(col)
        names.append(str(cname))

    X = np.column_stack(design_cols)
    _, R, piv = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag[0] * max(X.shape) * np.finfo(float).eps if diag.size else 0.0
    rank = int(np.sum(diag > tol))
    if rank < X.shape[1]:
        bad = sorted(names[j] for j in piv[rank:])
        raise ValueError(f"design matrix is rank deficient; collinear columns: {bad}")
    return X, group_codes, names, levels
