"""Command-line front-end.

Subcommands: ``fit`` (model fits on delimited files), ``simulate``
(truncated-normal draws), ``sim-study`` (Monte Carlo studies from a
config file), ``expected`` (expected censoring/truncation fractions)
and ``fd-check`` (derivative verification on a data file).

Exit codes: 0 success (fit converged), 2 fit completed without
convergence, 1 input or validation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from importlib import resources

import numpy as np

from .calculus import fd_check
from .data import CensoredSample, ModelSpec, Variance, Variant
from .model import ContrastRequest, build_design, confint, fit, result_json
from .optimize import LineSearch, Method, OptimizerConfig, initialize
from .simstudy import DEFAULT_SEED, ScenarioGrid, Study, run_study
from .truncnorm import (
    NO_TRUNCATION,
    CensoringScheme,
    TruncNormParams,
    expected_fractions,
    sample_array,
)

_VARIANTS = {
    "censored": Variant.CENSORED,
    "truncated": Variant.TRUNCATED,
    "censored-truncated": Variant.CENSORED_TRUNCATED,
}


class InputError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise InputError(f"could not parse number list {text!r}") from exc


def _read_table(path: str) -> dict[str, list[str]]:
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path} is empty") from None
        cols: dict[str, list[str]] = {name.strip(): [] for name in header}
        names = [name.strip() for name in header]
        for rownum, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(names):
                raise InputError(f"{path}:{rownum}: expected {len(names)} fields, got {len(row)}")
            for name, val in zip(names, row):
                cols[name].append(val.strip())
    return cols


def _numeric_column(cols, name, path) -> np.ndarray:
    if name not in cols:
        raise InputError(f"{path}: missing column {name!r}")
    out = np.empty(len(cols[name]))
    for i, tok in enumerate(cols[name]):
        try:
            out[i] = float(tok)
        except ValueError:
            raise InputError(
                f"{path}: row {i + 2}, column {name!r}: non-numeric value {tok!r}"
            ) from None
        if not math.isfinite(out[i]):
            raise InputError(f"{path}: row {i + 2}, column {name!r}: non-finite value")
    return out


def _bool_column(cols, name, path) -> np.ndarray:
    if name not in cols:
        raise InputError(f"{path}: missing column {name!r}")
    truthy = {"1", "true", "t", "yes"}
    falsy = {"0", "false", "f", "no"}
    out = np.empty(len(cols[name]), dtype=bool)
    for i, tok in enumerate(cols[name]):
        low = tok.lower()
        if low in truthy:
            out[i] = True
        elif low in falsy:
            out[i] = False
        else:
            raise InputError(
                f"{path}: row {i + 2}, column {name!r}: expected a 0/1 indicator, got {tok!r}"
            )
    return out


def _infer_variant(args) -> Variant:
    if args.variant is not None:
        return _VARIANTS[args.variant]
    has_left = args.left_trunc is not None
    has_dl = args.dl is not None
    if has_left and has_dl:
        return Variant.CENSORED_TRUNCATED
    if has_dl:
        return Variant.CENSORED
    if has_left:
        return Variant.TRUNCATED
    raise InputError("give --variant, or at least one of --left-trunc/--dl to infer it")


def _load_sample(args):
    """Read the data file and assemble (sample, spec) for fit/fd-check."""
    variant = _infer_variant(args)
    if variant is not Variant.TRUNCATED and args.dl is None:
        raise InputError(f"variant {variant.value!r} requires --dl")
    if variant is Variant.TRUNCATED and args.dl is not None:
        raise InputError("truncated-only fits take no --dl")
    if variant is not Variant.CENSORED and args.left_trunc is None:
        raise InputError(f"variant {variant.value!r} requires --left-trunc")
    if variant is Variant.CENSORED and args.left_trunc is not None:
        raise InputError("censored-only fits take no --left-trunc")
    left = NO_TRUNCATION if args.left_trunc is None else float(args.left_trunc)
    dl = args.dl
    if dl is not None and math.isfinite(left) and dl <= left:
        raise InputError("--dl must exceed --left-trunc")

    cols = _read_table(args.input)
    y = _numeric_column(cols, args.response, args.input)
    covariates = [c for c in (args.covariates or "").split(",") if c]
    if args.group is not None and args.group not in cols:
        raise InputError(f"{args.input}: missing column {args.group!r}")

    records: dict = {args.response: y}
    if args.group is not None:
        records[args.group] = cols[args.group]
    for c in covariates:
        records[c] = _numeric_column(cols, c, args.input)
    try:
        X, gcodes, names, _ = build_design(
            records,
            group=args.group,
            covariates=covariates,
            ref_level=args.ref_level,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    if dl is not None:
        if args.censor_col is not None:
            censored = _bool_column(cols, args.censor_col, args.input)
        else:
            censored = y <= dl  # recorded detection-limit values equal the DL
        y = np.where(censored, dl, y)
    else:
        censored = np.zeros(y.shape[0], dtype=bool)

    variance = Variance.PER_GROUP if args.variance == "per-group" else Variance.COMMON
    if variance is Variance.PER_GROUP and gcodes is None:
        raise InputError("--variance per-group requires --group")
    try:
        sample = CensoredSample(
            y=y,
            censored=censored,
            X=X,
            group=gcodes,
            dl=dl,
            left=left,
        )
        spec = ModelSpec(variant, variance, left=left, dl=dl)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return sample, spec, names


def _optim_config(args) -> OptimizerConfig:
    method = {"newton": Method.NEWTON, "bfgs": Method.BFGS, "cg": Method.CG}[args.method]
    ls = LineSearch.WOLFE if args.line_search == "wolfe" else LineSearch.ARMIJO
    return OptimizerConfig(method=method, max_iter=args.max_iter, line_search=ls)


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_fit(args) -> int:
    sample, spec, names = _load_sample(args)
    try:
        fr = fit(sample, spec, _optim_config(args))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _emit(result_json(fr.to_json_dict()), args.out)
    if args.level is not None and fr.se_available:
        # human-readable Wald intervals on stderr; stdout stays pure JSON
        if not 0.0 < args.level < 1.0:
            raise InputError("--level must lie in (0, 1)")
        for k, name in enumerate(names):
            c = np.zeros(fr.beta.size)
            c[k] = 1.0
            lo, hi = confint(fr, ContrastRequest(c, level=args.level))
            print(
                f"{name}: {fr.beta[k]:.6g}  {100 * args.level:g}% CI [{lo:.6g}, {hi:.6g}]",
                file=sys.stderr,
            )
    return 0 if fr.optim.converged else 2


def _cmd_fd_check(args) -> int:
    sample, spec, _ = _load_sample(args)
    theta0 = initialize(sample, spec)
    report = fd_check(sample, spec, theta0, step=args.step)
    _emit(json.dumps(report.to_json_dict(), indent=2) + "\n", args.out)
    return 0


def _cmd_expected(args) -> int:
    left = float(args.left_trunc)
    dl = float(args.dl)
    if dl <= left:
        raise InputError("--dl must exceed --left-trunc")
    mus = _float_list(args.mu)
    sigmas = _float_list(args.sigma)
    rows = []
    for mu in mus:
        for sig in sigmas:
            try:
                c, t, ratio = expected_fractions(
                    TruncNormParams(mu, sig, left), CensoringScheme(dl)
                )
            except ValueError as exc:
                raise InputError(str(exc)) from exc
            rows.append(
                {
                    "mu": mu,
                    "sigma": sig,
                    "censor_pct": round(100.0 * c, 2),
                    "trunc_pct": round(100.0 * t, 2),
                    "ratio": ratio,
                }
            )
    if args.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", args.out)
    else:
        lines = ["mu,sigma,censor_pct,trunc_pct,ratio"]
        for r in rows:
            lines.append(
                f"{r['mu']:g},{r['sigma']:g},{r['censor_pct']:.2f},{r['trunc_pct']:.2f},{r['ratio']:.2f}"
            )
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_simulate(args) -> int:
    if args.n < 1:
        raise InputError("--n must be positive")
    if args.seed < 0:
        raise InputError("--seed must be a nonnegative integer")
    left = NO_TRUNCATION if args.left_trunc is None else float(args.left_trunc)
    params = TruncNormParams(args.mu, args.sigma, left)
    if args.dl is not None and math.isfinite(left) and args.dl <= left:
        raise InputError("--dl must exceed --left-trunc")
    rng = np.random.Generator(np.random.Philox(key=np.array([args.seed, 0], dtype=np.uint64)))
    ylat = sample_array(params, rng.random(args.n))
    if args.dl is None:
        header, rows = ["y"], [[repr(float(v))] for v in ylat]
    else:
        mask = ylat <= args.dl
        yobs = np.where(mask, args.dl, ylat)
        header = ["y", "censored"]
        rows = [[repr(float(v)), str(int(m))] for v, m in zip(yobs, mask)]
    text = ",".join(header) + "\n" + "\n".join(",".join(r) for r in rows) + "\n"
    _emit(text, args.out)
    return 0


_CONFIG_KEYS = {
    "study",
    "mu",
    "delta",
    "sigma",
    "left_trunc",
    "dl",
    "n",
    "b",
    "seed",
    "margin",
    "alpha",
}


def _load_study_config(name_or_path: str) -> dict[str, str]:
    try:
        with open(name_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError:
        ref = resources.files("trunccens").joinpath(f"configs/{name_or_path}.cfg")
        try:
            text = ref.read_text(encoding="utf-8")
        except (FileNotFoundError, OSError):
            raise InputError(
                f"config {name_or_path!r} is neither a readable file nor a bundled config name"
            ) from None
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise InputError(f"config line {lineno}: unknown key {key!r}")
        out[key] = val
    return out


def _grid_from_config(cfg: dict[str, str], args) -> ScenarioGrid:
    if "study" not in cfg:
        raise InputError("config is missing the 'study' key")
    try:
        study = Study(cfg["study"])
    except ValueError:
        raise InputError(f"unknown study {cfg['study']!r}") from None
    def flist(key, default=()):
        return tuple(_float_list(cfg[key])) if key in cfg else default
    try:
        return ScenarioGrid(
            study=study,
            mu=flist("mu"),
            sigma=flist("sigma"),
            delta=flist("delta"),
            left=float(cfg.get("left_trunc", 0.0)),
            dl=float(cfg.get("dl", 0.61)),
            n=int(cfg.get("n", 100)),
            b=args.b if args.b is not None else int(cfg.get("b", 2000)),
            seed=args.seed if args.seed is not None else int(cfg.get("seed", DEFAULT_SEED)),
            margin=float(cfg.get("margin", -0.15)),
            alpha=float(cfg.get("alpha", 0.05)),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _cmd_sim_study(args) -> int:
    grid = _grid_from_config(_load_study_config(args.config), args)
    def progress(msg):
        print(msg, file=sys.stderr, flush=True)
    report = run_study(grid, threads=args.threads, progress=progress)
    json_path = f"{args.out}.json"
    csv_path = f"{args.out}.csv"
    report.write_json(json_path)
    report.write_csv(csv_path)
    print(f"wrote {json_path} and {csv_path}", file=sys.stderr)
    return 0


def _add_data_options(p):
    p.add_argument("input", help="comma-delimited data file with a header row")
    p.add_argument("--response", required=True, help="response column name")
    p.add_argument("--group", help="categorical group column")
    p.add_argument("--covariates", help="comma-separated numeric covariate columns")
    p.add_argument("--censor-col", help="0/1 censoring indicator column (default: mark y <= DL)")
    p.add_argument("--ref-level", help="reference level for the group factor (default first seen)")
    p.add_argument("--variant", choices=sorted(_VARIANTS), help="model variant (default inferred from bounds)")
    p.add_argument("--left-trunc", type=float, help="left truncation bound")
    p.add_argument("--dl", type=float, help="detection limit")
    p.add_argument("--variance", choices=["common", "per-group"], default="common")
    p.add_argument("--method", choices=["newton", "bfgs", "cg"], default="newton")
    p.add_argument("--line-search", choices=["armijo", "wolfe"], default="armijo")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--out", help="write output to this path instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trunccens",
        description="Maximum likelihood regression for left-censored, left-truncated normal data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model to a delimited data file")
    _add_data_options(p_fit)
    p_fit.add_argument(
        "--level",
        type=float,
        help="also print Wald intervals for the coefficients at this level (stderr)",
    )

    p_fd = sub.add_parser("fd-check", help="finite-difference check of the analytic derivatives")
    _add_data_options(p_fd)
    p_fd.add_argument("--step", type=float, help="finite-difference step (default cbrt(eps)-scaled)")

    p_exp = sub.add_parser("expected", help="expected censoring/truncation fractions over a grid")
    p_exp.add_argument("--mu", default="1.1,1.0,0.9,0.8,0.7", help="comma-separated means")
    p_exp.add_argument("--sigma", default="0.50,0.45,0.40", help="comma-separated standard deviations")
    p_exp.add_argument("--left-trunc", type=float, default=0.0)
    p_exp.add_argument("--dl", type=float, default=0.61)
    p_exp.add_argument("--format", choices=["csv", "json"], default="csv")
    p_exp.add_argument("--out")

    p_sim = sub.add_parser("simulate", help="draw truncated-normal samples")
    p_sim.add_argument("--mu", type=float, required=True)
    p_sim.add_argument("--sigma", type=float, required=True)
    p_sim.add_argument("--left-trunc", type=float)
    p_sim.add_argument("--dl", type=float, help="also censor the draws at this detection limit")
    p_sim.add_argument("--n", type=int, default=100)
    p_sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_sim.add_argument("--out")

    p_study = sub.add_parser("sim-study", help="run a simulation study from a config file")
    p_study.add_argument(
        "--config",
        required=True,
        help="key = value config file, or a bundled name: single_mean, two_population, noninferiority",
    )
    p_study.add_argument("--out", default="study", help="output prefix for .json/.csv files")
    p_study.add_argument("--threads", type=int, default=1)
    p_study.add_argument("--b", type=int, help="override the replication count")
    p_study.add_argument("--seed", type=int, help="override the config seed")

    return parser


_COMMANDS = {
    "fit": _cmd_fit,
    "fd-check": _cmd_fd_check,
    "expected": _cmd_expected,
    "simulate": _cmd_simulate,
    "sim-study": _cmd_sim_study,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
