"""Sample, model-specification and parameter containers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .truncnorm import NO_TRUNCATION

_DL_MATCH_TOL = 1e-12


class Variant(Enum):
    CENSORED = "censored"
    TRUNCATED = "truncated"
    CENSORED_TRUNCATED = "censored-truncated"


class Variance(Enum):
    COMMON = "common"
    PER_GROUP = "per-group"


@dataclass(frozen=True)
class ModelSpec:
    """Which likelihood applies: censoring/truncation bounds and variance structure.

    ``Variant.CENSORED`` requires ``left`` to be ``NO_TRUNCATION``;
    ``Variant.TRUNCATED`` requires no detection limit; the combined
    variant requires both bounds with ``dl > left``.
    """

    variant: Variant
    variance: Variance = Variance.COMMON
    left: float = NO_TRUNCATION
    dl: float | None = None

    def __post_init__(self):
        if self.variant is Variant.CENSORED:
            if self.left != NO_TRUNCATION:
                raise ValueError("censored-only model must have left = NO_TRUNCATION")
            if self.dl is None:
                raise ValueError("censored-only model needs a detection limit")
        elif self.variant is Variant.TRUNCATED:
            if self.dl is not None:
                raise ValueError("truncated-only model takes no detection limit")
            if not math.isfinite(self.left):
                raise ValueError("truncated-only model needs a finite truncation bound")
        else:
            if self.dl is None or not math.isfinite(self.left):
                raise ValueError(
                    "censored-truncated model needs both a truncation bound and a detection limit"
                )
            if self.dl <= self.left:
                raise ValueError("detection limit must exceed the truncation bound")
        if self.dl is not None and not math.isfinite(self.dl):
            raise ValueError("detection limit must be finite")


@dataclass(frozen=True)
class CensoredSample:
    """Observed responses with censoring indicators and design information.

    Censored rows are recorded at the detection limit and flagged by the
    indicator (never inferred by value matching). ``X`` is the n x (p-1)
    design matrix; intercept-only models use a single column of ones.
    ``group`` holds contiguous 1..J labels for per-group variances.
    """

    y: np.ndarray
    censored: np.ndarray
    X: np.ndarray
    group: np.ndarray | None = None
    dl: float | None = None
    left: float = NO_TRUNCATION

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=float)
        censored = np.ascontiguousarray(self.censored, dtype=bool)
        X = np.ascontiguousarray(self.X, dtype=float)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "censored", censored)
        object.__setattr__(self, "X", X)
        if y.ndim != 1 or y.shape != censored.shape:
            raise ValueError("y and censored must be matching 1-d arrays")
        if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[1] < 1:
            raise ValueError("X must be an n x (p-1) matrix with p >= 2")
        if y.shape[0] == 0:
            raise ValueError("sample is empty")
        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(X)):
            raise ValueError("y and X must be finite")
        if self.group is not None:
            group = np.ascontiguousarray(self.group, dtype=np.int64)
            object.__setattr__(self, "group", group)
            if group.shape != y.shape:
                raise ValueError("group labels must match y in length")
            uniq = np.unique(group)
            if uniq[0] != 1 or not np.array_equal(uniq, np.arange(1, uniq.size + 1)):
                raise ValueError("group labels must be contiguous 1..J with every group nonempty")
        if censored.any() and self.dl is None:
            raise ValueError("censored rows present but no detection limit given")
        if self.dl is not None:
            if not math.isfinite(self.dl):
                raise ValueError("detection limit must be finite")
            bad = np.abs(y[censored] - self.dl) > _DL_MATCH_TOL
            if bad.any():
                raise ValueError(
                    "censored responses must be recorded at the detection limit"
                )
            at_or_below = y[~censored] <= self.dl
            if at_or_below.any():
                i = int(np.nonzero(~censored)[0][np.nonzero(at_or_below)[0][0]])
                raise ValueError(
                    f"uncensored response at row {i} does not exceed the detection limit"
                )
        if math.isfinite(self.left):
            if self.dl is not None and self.dl <= self.left:
                raise ValueError("detection limit must exceed the truncation bound")
            if np.any(y < self.left):
                raise ValueError("responses below the truncation bound")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def n_censored(self) -> int:
        return int(self.censored.sum())

    @property
    def n_uncensored(self) -> int:
        return self.n - self.n_censored

    @property
    def n_groups(self) -> int:
        return 1 if self.group is None else int(self.group.max())

    def group_index(self, variance: Variance) -> np.ndarray:
        """0-based variance-group index per row (all zeros for common variance)."""
        if variance is Variance.COMMON or self.group is None:
            return np.zeros(self.n, dtype=np.int64)
        return self.group - 1


@dataclass(frozen=True)
class ParamVector:
    """Optimisation coordinates: (beta_1..beta_{p-1}, log sigma_1..log sigma_J)."""

    beta: np.ndarray
    log_sigma: np.ndarray

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        log_sigma = np.atleast_1d(np.asarray(self.log_sigma, dtype=float))
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "log_sigma", log_sigma)
        if beta.ndim != 1 or log_sigma.ndim != 1 or log_sigma.size < 1 or beta.size < 1:
            raise ValueError("beta and log_sigma must be nonempty 1-d arrays")
        if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(log_sigma))):
            raise ValueError("parameters must be finite")

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(self.log_sigma)

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.beta, self.log_sigma])

    @classmethod
    def from_array(cls, arr: np.ndarray, n_beta: int) -> "ParamVector":
        arr = np.asarray(arr, dtype=float)
        return cls(arr[:n_beta].copy(), arr[n_beta:].copy())

    @property
    def size(self) -> int:
        return self.beta.size + self.log_sigma.size
