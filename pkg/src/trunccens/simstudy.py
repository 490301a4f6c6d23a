"""Monte Carlo harness comparing six estimators on censored truncated data.

Three study designs: single-mean bias/MSE, two-population mean
difference with a common scale, and a non-inferiority Type I error
study. Each replication draws latent truncated-normal samples by
inverse transform, derives a censored copy at the detection limit, and
runs all six methods on the same draws:

    GS        truncated-only ML on the uncensored draws
    UncensNT  plain-normal ML (closed form) on the uncensored draws
    DL        plain-normal ML after imputing the detection limit
    HalfDL    plain-normal ML after imputing half the detection limit
    Tobit     censored-only ML on the censored copy
    TcensReg  censored + truncated ML on the censored copy

Replication ``k`` of scenario ``s`` uses a counter-based Philox key
``(seed, s << 40 | k)``, so results are byte-identical regardless of
execution order or worker count.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.linalg import LinAlgError
from scipy.special import ndtri

from .data import CensoredSample, ModelSpec, Variance, Variant
from .model import ContrastRequest, FitResult, confint, fit
from .truncnorm import NO_TRUNCATION, TruncNormParams, sample_array

DEFAULT_SEED = 42
METHODS = ("GS", "UncensNT", "DL", "HalfDL", "Tobit", "TcensReg")

_FIT_ERRORS = (ValueError, LinAlgError, FloatingPointError, ZeroDivisionError)


class Study(Enum):
    SINGLE_MEAN = "single-mean"
    TWO_POPULATION = "two-population"
    NON_INFERIORITY = "non-inferiority"


class Scenario(NamedTuple):
    index: int
    mu: float
    delta: float | None
    sigma: float


@dataclass(frozen=True)
class ScenarioGrid:
    """Scenario grid plus replication and censoring settings.

    ``mu`` holds the single-population means, or the first population's
    means for the two-population designs where ``delta`` gives the mean
    differences. ``n`` is the per-population sample size.
    """

    study: Study
    mu: tuple[float, ...]
    sigma: tuple[float, ...]
    delta: tuple[float, ...] = ()
    left: float = 0.0
    dl: float = 0.61
    n: int = 100
    b: int = 2000
    seed: int = DEFAULT_SEED
    margin: float = -0.15
    alpha: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(v) for v in self.mu))
        object.__setattr__(self, "sigma", tuple(float(v) for v in self.sigma))
        delta = tuple(float(v) for v in self.delta)
        if self.study is Study.NON_INFERIORITY and not delta:
            delta = (self.margin,)
        object.__setattr__(self, "delta", delta)
        if not self.mu or not self.sigma:
            raise ValueError("grid needs at least one mu and one sigma")
        if any(s <= 0.0 for s in self.sigma):
            raise ValueError("sigma values must be positive")
        if self.study is not Study.SINGLE_MEAN and not self.delta:
            raise ValueError("two-population studies need delta values")
        if not math.isfinite(self.left) or self.dl <= self.left:
            raise ValueError("detection limit must exceed the truncation bound")
        if self.b < 1:
            raise ValueError("replication count must be at least 1")
        if self.n < 2:
            raise ValueError("per-population size must be at least 2")
        if not 0.0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")

    def scenarios(self) -> list[Scenario]:
        out = []
        if self.study is Study.SINGLE_MEAN:
            for m in self.mu:
                for s in self.sigma:
                    out.append(Scenario(len(out), m, None, s))
        else:
            for m in self.mu:
                for d in self.delta:
                    for s in self.sigma:
                        out.append(Scenario(len(out), m, d, s))
        return out


class MethodEstimate(NamedTuple):
    beta: np.ndarray
    sigma: float
    se_beta: np.ndarray | None
    converged: bool


def _rep_rng(seed: int, scenario_index: int, rep: int) -> np.random.Generator:
    key = np.array([seed, (scenario_index << 40) | rep], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _normal_mle(y: np.ndarray, X: np.ndarray) -> MethodEstimate:
    """Closed-form plain-normal ML regression (1/n variance)."""
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    n = y.shape[0]
    sig = math.sqrt(float(resid @ resid) / n)
    xtx_inv = np.linalg.inv(X.T @ X)
    se = sig * np.sqrt(np.diag(xtx_inv))
    return MethodEstimate(beta, sig, se, True)


def _ml_fit(y, mask, X, variant, left, dl) -> MethodEstimate:
    sample = CensoredSample(
        y=y,
        censored=mask,
        X=X,
        dl=dl if variant is not Variant.TRUNCATED else None,
        left=left,
    )
    spec = ModelSpec(
        variant,
        Variance.COMMON,
        left=left,
        dl=dl if variant is not Variant.TRUNCATED else None,
    )
    fr = fit(sample, spec)
    return MethodEstimate(
        fr.beta, float(fr.sigma[0]), fr.se_beta, fr.optim.converged and fr.se_available
    )


def _run_method(method, ylat, ycens, mask, X, left, dl) -> MethodEstimate:
    no_mask = np.zeros(ylat.shape[0], dtype=bool)
    if method == "GS":
        if math.isfinite(left):
            return _ml_fit(ylat, no_mask, X, Variant.TRUNCATED, left, None)
        return _normal_mle(ylat, X)
    if method == "UncensNT":
        return _normal_mle(ylat, X)
    if method == "DL":
        return _normal_mle(ycens, X)
    if method == "HalfDL":
        return _normal_mle(np.where(mask, 0.5 * dl, ylat), X)
    if method == "Tobit":
        return _ml_fit(ycens, mask, X, Variant.CENSORED, NO_TRUNCATION, dl)
    if method == "TcensReg":
        if math.isfinite(left):
            return _ml_fit(ycens, mask, X, Variant.CENSORED_TRUNCATED, left, dl)
        return _ml_fit(ycens, mask, X, Variant.CENSORED, NO_TRUNCATION, dl)
    raise ValueError(f"unknown method {method!r}")


def apply_method(
    method: str,
    uncensored: CensoredSample,
    censored: CensoredSample,
    spec: ModelSpec,
) -> MethodEstimate:
    """Run one comparison method on a paired (uncensored, censored) sample.

    The samples must come from the same latent draws: the uncensored
    sample holds the raw truncated values, the censored one their copy
    recorded at the detection limit. ``spec`` describes the combined
    model; the other methods are derived from it.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if uncensored.n != censored.n:
        raise ValueError("paired samples must have equal length")
    return _run_method(
        method,
        uncensored.y,
        censored.y,
        censored.censored,
        censored.X,
        spec.left,
        spec.dl,
    )


def noninferiority_test(
    fr: FitResult,
    margin: float = -0.15,
    alpha: float = 0.05,
    contrast: np.ndarray | None = None,
) -> bool:
    """One-sided non-inferiority decision from a two-sided Wald interval.

    The contrast defaults to the last coefficient (the group difference
    in a two-population design). Rejects (accepts non-inferiority) when
    the lower bound of the two-sided ``1 - 2 alpha`` interval exceeds
    the margin.
    """
    if contrast is None:
        contrast = np.zeros(fr.beta.size)
        contrast[-1] = 1.0
    lo, _ = confint(fr, ContrastRequest(contrast, level=1.0 - 2.0 * alpha))
    return lo > margin


def _reject(delta_hat: float, se: float, margin: float, alpha: float) -> bool:
    z = float(ndtri(1.0 - alpha))
    return delta_hat - z * se > margin


def _run_chunk(grid: ScenarioGrid, scen: Scenario, r0: int, r1: int):
    """Replications [r0, r1) of one scenario.

    Returns estimate array (reps, methods, 2) with columns (target,
    sigma), an ok mask, a reject mask (nan when not applicable) and the
    summed censored fraction.
    """
    n = grid.n
    two_pop = grid.study is not Study.SINGLE_MEAN
    want_reject = grid.study is Study.NON_INFERIORITY
    if two_pop:
        X = np.column_stack([np.ones(2 * n), np.repeat([0.0, 1.0], n)])
    else:
        X = np.ones((n, 1))
    reps = r1 - r0
    est = np.full((reps, len(METHODS), 2), np.nan)
    ok = np.zeros((reps, len(METHODS)), dtype=bool)
    rej = np.full((reps, len(METHODS)), np.nan)
    cens_sum = 0.0

    for r in range(reps):
        rng = _rep_rng(grid.seed, scen.index, r0 + r)
        if two_pop:
            p1 = TruncNormParams(scen.mu, scen.sigma, grid.left)
            p2 = TruncNormParams(scen.mu + scen.delta, scen.sigma, grid.left)
            ylat = np.concatenate(
                [sample_array(p1, rng.random(n)), sample_array(p2, rng.random(n))]
            )
        else:
            ylat = sample_array(TruncNormParams(scen.mu, scen.sigma, grid.left), rng.random(n))
        mask = ylat <= grid.dl
        ycens = np.where(mask, grid.dl, ylat)
        cens_sum += float(mask.mean())

        for mi, method in enumerate(METHODS):
            try:
                me = _run_method(method, ylat, ycens, mask, X, grid.left, grid.dl)
            except _FIT_ERRORS:
                continue
            if not me.converged:
                continue
            target = float(me.beta[-1]) if two_pop else float(me.beta[0])
            est[r, mi, 0] = target
            est[r, mi, 1] = me.sigma
            if want_reject:
                if me.se_beta is None:
                    continue
                rej[r, mi] = float(
                    _reject(target, float(me.se_beta[-1]), grid.margin, grid.alpha)
                )
            ok[r, mi] = True
    return est, ok, rej, cens_sum


def _chunk_task(args):
    grid, scen, r0, r1 = args
    return scen.index, r0, _run_chunk(grid, scen, r0, r1)


@dataclass(frozen=True)
class ReportRow:
    study: str
    mu: float
    delta: float | None
    sigma: float
    method: str
    parameter: str
    mean_estimate: float | None
    bias: float | None
    mse: float | None
    log_mse: float | None
    reject_rate: float | None
    b: int
    failures: int


@dataclass(frozen=True)
class StudyReport:
    grid: ScenarioGrid
    rows: tuple[ReportRow, ...]
    censor_rates: tuple[float, ...]  # observed censored fraction per scenario

    def to_json_dict(self) -> dict:
        g = self.grid
        return {
            "study": g.study.value,
            "grid": {
                "mu": list(g.mu),
                "delta": list(g.delta),
                "sigma": list(g.sigma),
                "left_trunc": g.left,
                "dl": g.dl,
                "n": g.n,
                "b": g.b,
                "seed": g.seed,
                "margin": g.margin,
                "alpha": g.alpha,
            },
            "censor_rates": list(self.censor_rates),
            "rows": [vars(r) for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                [
                    "study",
                    "mu",
                    "delta",
                    "sigma",
                    "method",
                    "parameter",
                    "bias",
                    "mse",
                    "log_mse",
                    "reject_rate",
                    "B",
                    "failures",
                ]
            )
            for r in self.rows:
                w.writerow(
                    [
                        r.study,
                        repr(r.mu),
                        "" if r.delta is None else repr(r.delta),
                        repr(r.sigma),
                        r.method,
                        r.parameter,
                        "" if r.bias is None else repr(r.bias),
                        "" if r.mse is None else repr(r.mse),
                        "" if r.log_mse is None else repr(r.log_mse),
                        "" if r.reject_rate is None else repr(r.reject_rate),
                        r.b,
                        r.failures,
                    ]
                )

    def get(self, *, mu=None, delta=None, sigma=None, method=None, parameter=None):
        """Rows matching the given scenario/method/parameter filters."""
        out = []
        for r in self.rows:
            if mu is not None and r.mu != mu:
                continue
            if delta is not None and r.delta != delta:
                continue
            if sigma is not None and r.sigma != sigma:
                continue
            if method is not None and r.method != method:
                continue
            if parameter is not None and r.parameter != parameter:
                continue
            out.append(r)
        return out


def run_study(grid: ScenarioGrid, threads: int = 1, progress=None) -> StudyReport:
    """Run every scenario of the grid for ``grid.b`` replications.

    ``threads`` > 1 parallelizes over replication chunks with worker
    processes; the per-replication counter seeding keeps the output
    identical for any worker count. ``progress`` (if given) is called
    with a status string after each finished scenario.
    """
    scens = grid.scenarios()
    nm = len(METHODS)
    est = {s.index: np.full((grid.b, nm, 2), np.nan) for s in scens}
    ok = {s.index: np.zeros((grid.b, nm), dtype=bool) for s in scens}
    rej = {s.index: np.full((grid.b, nm), np.nan) for s in scens}
    cens_sum = {s.index: 0.0 for s in scens}

    def _absorb(si, r0, chunk):
        e, o, rj, cs = chunk
        est[si][r0 : r0 + e.shape[0]] = e
        ok[si][r0 : r0 + e.shape[0]] = o
        rej[si][r0 : r0 + e.shape[0]] = rj
        cens_sum[si] += cs

    if threads <= 1:
        for s in scens:
            _absorb(s.index, 0, _run_chunk(grid, s, 0, grid.b))
            if progress is not None:
                progress(f"scenario {s.index + 1}/{len(scens)} done")
    else:
        chunk = max(1, -(-grid.b // max(1, 2 * threads)))
        tasks = [
            (grid, s, r0, min(r0 + chunk, grid.b))
            for s in scens
            for r0 in range(0, grid.b, chunk)
        ]
        done_chunks = {s.index: 0 for s in scens}
        per_scen = -(-grid.b // chunk)
        with ProcessPoolExecutor(max_workers=threads) as ex:
            for si, r0, chunk_out in ex.map(_chunk_task, tasks):
                _absorb(si, r0, chunk_out)
                done_chunks[si] += 1
                if progress is not None and done_chunks[si] == per_scen:
                    progress(f"scenario {si + 1}/{len(scens)} done")

    rows = []
    censor_rates = []
    for s in scens:
        censor_rates.append(cens_sum[s.index] / grid.b)
        if grid.study is Study.SINGLE_MEAN:
            params = (("mu", s.mu), ("sigma", s.sigma))
        else:
            params = (("delta", s.delta), ("sigma", s.sigma))
        for mi, method in enumerate(METHODS):
            sel = ok[s.index][:, mi]
            failures = grid.b - int(sel.sum())
            reject_rate = None
            if grid.study is Study.NON_INFERIORITY and sel.any():
                reject_rate = float(np.mean(rej[s.index][sel, mi]))
            for pi, (pname, truth) in enumerate(params):
                if sel.any():
                    vals = est[s.index][sel, mi, pi]
                    mean_est = float(vals.mean())
                    bias = mean_est - truth
                    mse = float(np.mean((vals - truth) ** 2))
                    log_mse = math.log(mse) if mse > 0.0 else None
                else:
                    mean_est = bias = mse = log_mse = None
                rows.append(
                    ReportRow(
                        study=grid.study.value,
                        mu=s.mu,
                        delta=s.delta,
                        sigma=s.sigma,
                        method=method,
                        parameter=pname,
                        mean_estimate=mean_est,
                        bias=bias,
                        mse=mse,
                        log_mse=log_mse,
                        reject_rate=reject_rate if pname == "delta" else None,
                        b=grid.b,
                        failures=failures,
                    )
                )
    return StudyReport(grid=grid, rows=tuple(rows), censor_rates=tuple(censor_rates))
