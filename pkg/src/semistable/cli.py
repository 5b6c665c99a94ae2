"""Command-line interface.

Exit codes: 0 when every check passes, 1 on a statistical or numerical check
failure (reports are still written), 2 on usage, configuration or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .ar1 import simulate_ar1, thinning_gap
from .errors import RangeError, SemistableError
from .model import (
    cf,
    levy_exponent_closed,
    levy_exponent_quadrature,
    semistable_residual,
    ssd_factor_cf,
    validate_params,
)
from .sampler import build_truncation, sample_innovation, sample_path
from .verification import (
    SELFSIMILAR_T0,
    VerificationReport,
    check_semiselfsimilar,
    check_ssd_factor,
    check_stationarity,
)

DEFAULTS = {
    "alpha": 1.0,
    "b": 0.5,
    "eps_pert": 0.5,
    "c": 1.0,
    "delta": 0.01,
    "n": None,
    "seed": 0,
    "grid": None,
    "out": None,
    "threads": 1,
    "times": "0:1:100",
    "epoch_override": None,
    "extra_epoch": None,
    "t0": SELFSIMILAR_T0,
}

# keys that do not affect results; left out of sidecars so output bytes do not
# depend on where or how parallel a run was
UNRECORDED = ("out", "threads")

CHECKS = ("stationarity", "selfsimilar", "ssd")
RESIDUAL_TOL = 1e-8
QUADRATURE_TOL = 1e-6
AGREEMENT_TOL = 1e-6


class ConfigError(SemistableError):
    pass


# --- configuration ----------------------------------------------------------


def load_config_file(path) -> dict:
    """Read a flat JSON object, or the ``config`` block of a run sidecar."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if isinstance(data, dict) and isinstance(data.get("config"), dict) and "command" in data:
        data = data["config"]
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key, value in data.items():
        if isinstance(value, (dict, list)):
            raise ConfigError(f"config key {key} must be a scalar")
    return data


def resolve_config(args) -> dict:
    config = dict(DEFAULTS)
    if args.config:
        config.update(load_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    if config["out"] is None:
        config["out"] = os.environ.get("SEMISTABLE_OUT", "semistable_out")
    return config


def _int(config, key, minimum=0):
    value = config[key]
    try:
        ivalue = int(value)
    except (TypeError, ValueError):
        raise RangeError(key, f"expected an integer, got {value!r}") from None
    if isinstance(value, bool) or ivalue != value and str(ivalue) != str(value) or ivalue < minimum:
        raise RangeError(key, f"expected an integer >= {minimum}, got {value!r}")
    return ivalue


def _optional_float(config, key):
    value = config[key]
    if value is None:
        return None
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise RangeError(key, f"expected a real number, got {value!r}") from None
    if not (math.isfinite(x) and x > 0):
        raise RangeError(key, f"must be positive and finite, got {value!r}")
    return x


def parse_grid(text: str) -> np.ndarray:
    """``min:max:count[:log|lin]``."""
    parts = str(text).split(":")
    if len(parts) not in (3, 4):
        raise RangeError("grid", f"expected min:max:count[:log|lin], got {text!r}")
    kind = parts[3] if len(parts) == 4 else "log"
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise RangeError("grid", f"cannot parse {text!r}") from None
    if count < 1 or not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise RangeError("grid", f"invalid range or count in {text!r}")
    if kind == "log":
        if lo <= 0:
            raise RangeError("grid", "a log grid needs min > 0")
        return np.geomspace(lo, hi, count)
    if kind == "lin":
        return np.linspace(lo, hi, count)
    raise RangeError("grid", f"spacing must be log or lin, got {kind!r}")


def parse_times(text: str) -> np.ndarray:
    """``start:stop:steps`` -> ``steps + 1`` equally spaced times."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise RangeError("times", f"expected start:stop:steps, got {text!r}")
    try:
        start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise RangeError("times", f"cannot parse {text!r}") from None
    if steps < 0 or not (math.isfinite(start) and math.isfinite(stop)):
        raise RangeError("times", f"invalid times {text!r}")
    return np.linspace(start, stop, steps + 1)


class Run:
    """Validated configuration plus output bookkeeping for one command."""

    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = config
        self.params = validate_params(config["alpha"], config["b"], config["eps_pert"], config["c"])
        self.scheme = build_truncation(self.params, config["delta"])
        self.seed = _int(config, "seed")
        self.threads = _int(config, "threads", minimum=1)
        self.out = Path(config["out"])
        self.outputs: list[str] = []

    def grid(self, default: str) -> np.ndarray:
        return parse_grid(self.config["grid"] or default)

    def n(self, default: int, minimum: int = 0) -> int:
        if self.config["n"] is None:
            return default
        return _int(self.config, "n", minimum)

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs.append(name)
        return self.out / name

    def write_csv(self, name, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(x) for x in row])

    def write_json(self, name, payload):
        self.path(name).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")

    def write_sidecar(self, name, extra=None):
        payload = {
            "command": self.command,
            "config": {k: v for k, v in self.config.items() if k not in UNRECORDED},
            "derived": {"a": self.params.a, "omega": self.params.omega, "H": self.params.H},
            "scheme": self.scheme.as_dict(),
            "outputs": sorted(self.outputs),
            "package_version": __version__,
            "git_describe": _git_describe(),
        }
        if extra:
            payload.update(extra)
        self.write_json(name, payload)


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _git_describe() -> str:
    try:
        result = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=10,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return result.stdout.strip() if result.returncode == 0 and result.stdout.strip() else "unknown"


# --- commands ---------------------------------------------------------------


def cmd_verify_cf(run: Run) -> int:
    params = run.params
    grid = run.grid("0.01:100:200:log")
    scaled = params.b * grid
    psi_closed = levy_exponent_closed(np.concatenate([grid, scaled]), params)
    psi_quad = levy_exponent_quadrature(np.concatenate([grid, scaled]), params)
    m = grid.size
    residual = np.abs(psi_closed[:m] - params.a * psi_closed[m:])
    residual_quad = np.abs(psi_quad[:m] - params.a * psi_quad[m:])

    line = np.linspace(-50.0, 50.0, 201)
    agreement = float(np.max(np.abs(levy_exponent_closed(line, params) - levy_exponent_quadrature(line, params))))

    common = dict(n_samples=0, seed=None, params=params.as_dict())
    reports = [
        VerificationReport.from_statistic(
            "semistable_residual_closed", residual.max(), RESIDUAL_TOL,
            notes="max |psi(u) - a psi(bu)|, closed form", **common,
        ),
        VerificationReport.from_statistic(
            "semistable_residual_quadrature", residual_quad.max(), QUADRATURE_TOL,
            notes="max |psi(u) - a psi(bu)|, quadrature", **common,
        ),
        VerificationReport.from_statistic(
            "evaluator_agreement", agreement, AGREEMENT_TOL,
            notes="max |closed - quadrature| on 201 points in [-50, 50]", **common,
        ),
    ]
    extra = _optional_float(run.config, "extra_epoch")
    if extra is not None:
        reports.append(
            VerificationReport.from_statistic(
                "extra_epoch_residual", semistable_residual(grid, params, epoch=extra), RESIDUAL_TOL,
                notes=f"max |psi(u) - a' psi(a'^(-1/alpha) u)| at a' = {extra}", **common,
            )
        )

    run.write_csv(
        "verify_cf.csv",
        ["u", "psi_closed", "psi_quadrature", "residual"],
        zip(grid, psi_closed[:m], psi_quad[:m], residual),
    )
    passed = all(r.passed for r in reports)
    run.write_json("verify_cf.json", {"passed": passed, "checks": [r.to_dict() for r in reports]})
    run.write_sidecar("verify_cf.meta.json")
    for r in reports:
        print(r.summary())
    return 0 if passed else 1


def cmd_simulate(run: Run, what: str) -> int:
    params, scheme, seed = run.params, run.scheme, run.seed
    if what == "path":
        times = parse_times(run.config["times"])
        path = sample_path(params, scheme, times, seed)
        run.write_csv("path.csv", ["time", "value"], zip(path.times, path.values))
        run.write_sidecar("path.meta.json")
        print(f"wrote {times.size} rows to {run.out / 'path.csv'}")
    elif what == "ar1":
        series = simulate_ar1(params, scheme, run.n(1000), seed)
        run.write_csv("ar1.csv", ["index", "value"], enumerate(series.values))
        run.write_sidecar("ar1.meta.json")
        print(f"wrote {series.values.size} rows to {run.out / 'ar1.csv'}")
    else:
        eps = sample_innovation(params, scheme, seed, size=run.n(1000))
        run.write_csv("innovation.csv", ["index", "value"], enumerate(eps))
        run.write_sidecar("innovation.meta.json", {"innovation_time": params.a - 1.0})
        print(f"wrote {eps.size} rows to {run.out / 'innovation.csv'}")
    return 0


def _run_check(run: Run, which: str, rng) -> VerificationReport:
    params, scheme = run.params, run.scheme
    grid = run.grid("0.05:20:40:log")
    if which == "ssd":
        return check_ssd_factor(params, grid)
    if which == "stationarity":
        n_eff = run.n(10_000, minimum=1)
        gap = thinning_gap(params)
        sim_rng, boot_rng = rng.spawn(2)
        series = simulate_ar1(params, scheme, n_eff * gap, sim_rng)
        report = check_stationarity(series, grid, rng=boot_rng, min_samples=min(n_eff, 10_000))
        report.seed = run.seed
        return report
    n_paths = run.n(100_000, minimum=1)
    t0 = _optional_float(run.config, "t0")
    report = check_semiselfsimilar(
        params, scheme, t0, n_paths, rng,
        epoch=_optional_float(run.config, "epoch_override"),
        grid=grid, min_paths=min(n_paths, 10_000),
    )
    report.seed = run.seed
    return report


def cmd_check(run: Run, which: str) -> int:
    names = CHECKS if which == "all" else (which,)
    streams = np.random.default_rng(run.seed).spawn(len(CHECKS))
    stream_of = dict(zip(CHECKS, streams))
    with ThreadPoolExecutor(max_workers=run.threads) as pool:
        reports = list(pool.map(lambda name: _run_check(run, name, stream_of[name]), names))
    for name, report in zip(names, reports):
        run.write_json(f"check_{name}.json", report.to_dict())
        print(report.summary())
    passed = all(r.passed for r in reports)
    if which == "all":
        run.write_json("check_all.json", {"passed": passed, "checks": [r.to_dict() for r in reports]})
    run.write_sidecar(f"check_{which}.meta.json")
    return 0 if passed else 1


def cmd_plotdata(run: Run) -> int:
    params, scheme = run.params, run.scheme
    grid = run.grid("-10:10:201:lin")
    run.write_csv("cf.csv", ["u", "f"], zip(grid, cf(grid, 1.0, params)))
    run.write_csv("ssd_factor.csv", ["u", "f0"], zip(grid, ssd_factor_cf(grid, params)))

    if run.config["grid"]:
        mod_u = np.unique(np.abs(grid[grid != 0.0]))
    else:
        mod_u = np.geomspace(0.01, 100.0, 2000)
    modulation = -levy_exponent_closed(mod_u, params) / mod_u**params.alpha
    run.write_csv("modulation.csv", ["log_u", "modulation"], zip(np.log(mod_u), modulation))

    series = simulate_ar1(params, scheme, run.n(10_000), run.seed)
    lo, hi = np.quantile(series.values, [0.01, 0.99])
    counts, edges = np.histogram(series.values, bins=60, range=(lo, hi))
    run.write_csv("histogram.csv", ["left", "right", "count"], zip(edges[:-1], edges[1:], counts))
    outside = int(np.sum((series.values < lo) | (series.values > hi)))
    run.write_sidecar("plotdata.meta.json", {"histogram_outside_range": outside})
    print(f"wrote plot data to {run.out}")
    return 0


# --- entry point ------------------------------------------------------------


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float)
    common.add_argument("--b", type=float)
    common.add_argument("--eps-pert", dest="eps_pert", type=float)
    common.add_argument("--c", type=float)
    common.add_argument("--delta", type=float, help="small-jump truncation level")
    common.add_argument("--n", type=int, help="sample size (command specific)")
    common.add_argument("--seed", type=int)
    common.add_argument("--grid", help="frequency grid min:max:count[:log|lin]")
    common.add_argument("--out", help="output directory (default $SEMISTABLE_OUT or ./semistable_out)")
    common.add_argument("--threads", type=int)
    common.add_argument("--times", help="path time grid start:stop:steps")
    common.add_argument("--t0", type=float, help="base time of the self-similarity check")
    common.add_argument("--epoch-override", dest="epoch_override", type=float)
    common.add_argument("--extra-epoch", dest="extra_epoch", type=float)
    common.add_argument("--config", help="flat JSON config, or a sidecar from an earlier run")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="semistable", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify-cf", parents=[common], help="functional-equation and evaluator checks")
    sim = sub.add_parser("simulate", parents=[common], help="write simulated data as CSV")
    sim.add_argument("what", choices=("path", "ar1", "innovation"))
    chk = sub.add_parser("check", parents=[common], help="statistical checks")
    chk.add_argument("which", choices=CHECKS + ("all",))
    sub.add_parser("plotdata", parents=[common], help="CSV data for plots")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    if command == "simulate":
        command = f"simulate {args.what}"
    elif command == "check":
        command = f"check {args.which}"
    try:
        run = Run(command, resolve_config(args))
        if args.command == "verify-cf":
            return cmd_verify_cf(run)
        if args.command == "simulate":
            return cmd_simulate(run, args.what)
        if args.command == "check":
            return cmd_check(run, args.which)
        return cmd_plotdata(run)
    except (SemistableError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
