"""Maximum likelihood estimation for left-censored responses drawn from a
left-truncated normal distribution, with Tobit and truncated-only models
as exact special cases, plus a Monte Carlo study harness comparing six
estimation strategies under detection-limit censoring."""

from .backend import active_backend, set_backend
from .calculus import DegenerateParameterError, FdCheckReport, fd_check, gradient, hessian
from .data import CensoredSample, ModelSpec, ParamVector, Variance, Variant
from .likelihood import loglik, split_sets
from .model import (
    ContrastRequest,
    FitResult,
    build_design,
    confint,
    fit,
    result_json,
    sigma_confint,
)
from .optimize import (
    LineSearch,
    Method,
    OptimResult,
    OptimizerConfig,
    initialize,
    maximize,
)
from .simstudy import (
    DEFAULT_SEED,
    METHODS,
    MethodEstimate,
    ReportRow,
    ScenarioGrid,
    Study,
    StudyReport,
    apply_method,
    noninferiority_test,
    run_study,
)
from .truncnorm import (
    NO_TRUNCATION,
    CensoringScheme,
    TruncNormParams,
    expected_fractions,
    sample_array,
    tn_cdf,
    tn_mean,
    tn_pdf,
    tn_sample,
)

__version__ = "0.1.0"

__all__ = [
    "CensoredSample",
    "CensoringScheme",
    "ContrastRequest",
    "DEFAULT_SEED",
    "DegenerateParameterError",
    "FdCheckReport",
    "FitResult",
    "LineSearch",
    "METHODS",
    "Method",
    "MethodEstimate",
    "ModelSpec",
    "NO_TRUNCATION",
    "OptimResult",
    "OptimizerConfig",
    "ParamVector",
    "ReportRow",
    "ScenarioGrid",
    "Study",
    "StudyReport",
    "TruncNormParams",
    "Variance",
    "Variant",
    "active_backend",
    "apply_method",
    "build_design",
    "confint",
    "expected_fractions",
    "fd_check",
    "fit",
    "gradient",
    "hessian",
    "initialize",
    "loglik",
    "maximize",
    "noninferiority_test",
    "result_json",
    "run_study",
    "sample_array",
    "set_backend",
    "sigma_confint",
    "split_sets",
    "tn_cdf",
    "tn_mean",
    "tn_pdf",
    "tn_sample",
]
