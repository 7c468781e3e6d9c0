"""Command-line interface: ``spectral-renyi {simulate|periodogram|divergence|estimate|experiment}``.

Exit status is 0 on success, 2 for configuration or argument errors and 3 for
numerical failures (including an estimate run that stops on a failure).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .divergence import DivergenceSpec, itakura_saito_discrete, renyi_discrete
from .errors import (
    CapabilityError,
    ConfigError,
    DomainError,
    InvalidArgumentError,
    LinearAlgebraError,
)
from .experiments import ExperimentConfig, run_experiment
from .grid import read_spectrum_csv, write_spectrum_csv
from .models import get_model
from .optimize import ArmijoConfig, Objective, gd_armijo, gd_fixed
from .sampling import (
    ContaminationSpec,
    RngStream,
    inject_trend,
    periodogram,
    read_series_csv,
    simulate_gaussian,
    smooth_daniell,
    write_series_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# Built-in values for options that a ``--config`` file may also supply.
DEFAULTS = {
    "simulate": {"model": "brune", "params": "1,1,1", "n": 1024, "stream": 0, "trend": []},
    "periodogram": {"smooth": None, "keep_mean": False},
    "divergence": {"alpha": 0.5, "floor": 1e-12, "include_zero": False},
    "estimate": {
        "alpha": 0.5,
        "model": "brune",
        "init": "1,0.1,1",
        "step": 0.005,
        "armijo": False,
        "max_iter": 10000,
        "grad_tol": 1e-3,
        "floor": 1e-12,
        "include_zero": False,
    },
    "experiment": {},
}


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _theta(model, value) -> list[float]:
    """Parse user-supplied parameters; values outside the admissible set are a usage error."""
    theta = _floats(value) if isinstance(value, str) else value
    try:
        model.check(theta)
    except (DomainError, InvalidArgumentError) as exc:
        raise ConfigError(str(exc)) from None
    return theta


def _spans(text) -> list[int] | None:
    if text is None:
        return None
    return [int(v) for v in _floats(text)] if isinstance(text, str) else [int(v) for v in text]


def _trend(text: str) -> tuple[float, float, str]:
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("trend must be Z:FREQ or Z:FREQ:PHASE")
    return float(parts[0]), float(parts[1]), parts[2] if len(parts) == 3 else "sin"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectral-renyi",
        description="Spectral Renyi divergences and robust spectral parameter estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file supplying option values")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="master seed")

    p = sub.add_parser("simulate", help="simulate a Gaussian series from a model spectrum")
    common(p)
    p.add_argument("--model", choices=["ar1", "brune"])
    p.add_argument("--params", help="comma-separated model parameters")
    p.add_argument("--n", type=int, help="series length")
    p.add_argument("--stream", type=int, help="stream id under the master seed")
    p.add_argument("--trend", type=_trend, action="append", help="add Z:FREQ[:sin|cos] trend (repeatable)")

    p = sub.add_parser("periodogram", help="periodogram (optionally smoothed) of a series CSV")
    common(p)
    p.add_argument("input", help="series CSV with header t,x")
    p.add_argument("--smooth", help="modified Daniell spans, e.g. 3,5")
    p.add_argument("--keep-mean", action="store_true", default=None, help="do not demean")

    p = sub.add_parser("divergence", help="divergence between two spectrum CSVs")
    common(p)
    p.add_argument("pilot", help="first spectrum CSV (pilot)")
    p.add_argument("model_spectrum", help="second spectrum CSV (model)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--floor", type=float, help="relative floor; 0 disables")
    p.add_argument("--include-zero", action="store_true", default=None)

    p = sub.add_parser("estimate", help="minimum-divergence fit of a model to a pilot CSV")
    common(p)
    p.add_argument("pilot", help="pilot spectrum CSV")
    p.add_argument("--alpha", type=float)
    p.add_argument("--model", choices=["ar1", "brune"])
    p.add_argument("--init", help="comma-separated initial parameters")
    p.add_argument("--step", type=float, help="fixed step size")
    p.add_argument("--armijo", action="store_true", default=None, help="use Armijo backtracking")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--grad-tol", type=float)
    p.add_argument("--floor", type=float)
    p.add_argument("--include-zero", action="store_true", default=None)

    p = sub.add_parser("experiment", help="run a configured experiment")
    common(p)
    p.add_argument("--kind", choices=["monte-carlo", "paths", "szego-convergence", "shift-study"],
                   help="experiment kind when not given in the config")
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    """CLI values override config-file values, which override built-in defaults."""
    opts = dict(DEFAULTS[args.command])
    if args.config and args.command != "experiment":
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration {args.config}: {exc}") from None
        opts.update({k.replace("-", "_"): v for k, v in data.items()})
    opts.update({k: v for k, v in vars(args).items() if v is not None})
    return opts


def _out(opts: dict) -> Path:
    out = Path(opts.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(o: dict) -> int:
    model = get_model(o["model"])
    theta = _theta(model, o["params"])
    x = simulate_gaussian(model.spectrum(theta), int(o["n"]), RngStream(int(o.get("seed", 0)), int(o["stream"])))
    if o["trend"]:
        x = inject_trend(x, ContaminationSpec.trend(o["trend"]))
    path = _out(o) / "series.csv"
    write_series_csv(path, x)
    print(json.dumps({"series": str(path), "n": len(x), "model": model.record(theta)}))
    return EXIT_OK


def cmd_periodogram(o: dict) -> int:
    x = read_series_csv(o["input"])
    I = periodogram(x, demean=not o["keep_mean"])
    spans = _spans(o["smooth"])
    if spans:
        I = smooth_daniell(I, spans)
    path = _out(o) / "periodogram.csv"
    write_spectrum_csv(path, I)
    print(json.dumps({"spectrum": str(path), "n": I.grid.n, "spans": spans}))
    return EXIT_OK


def _spec(o: dict) -> DivergenceSpec:
    return DivergenceSpec(float(o["alpha"]), exclude_zero=not o["include_zero"], floor=float(o["floor"]))


def cmd_divergence(o: dict) -> int:
    spec = _spec(o)
    pilot = read_spectrum_csv(o["pilot"], exclude_zero=spec.exclude_zero)
    model = read_spectrum_csv(o["model_spectrum"], exclude_zero=spec.exclude_zero)
    if spec.is_itakura_saito:
        value = itakura_saito_discrete(pilot, model, spec)
    else:
        value = renyi_discrete(pilot, model, spec)
    print(json.dumps({"alpha": spec.alpha, "value": value, "n": pilot.grid.n, "policy": spec.policy()}))
    return EXIT_OK


def cmd_estimate(o: dict) -> int:
    spec = _spec(o)
    model = get_model(o["model"])
    pilot = read_spectrum_csv(o["pilot"], exclude_zero=spec.exclude_zero)
    init = _theta(model, o["init"])
    objective = Objective(pilot, model, spec)
    max_iter, grad_tol = int(o["max_iter"]), float(o["grad_tol"])
    if o["armijo"]:
        path = gd_armijo(init, objective, ArmijoConfig(), max_iter=max_iter, grad_tol=grad_tol)
    else:
        path = gd_fixed(init, objective, float(o["step"]), max_iter=max_iter, grad_tol=grad_tol)
    csv_path = _out(o) / "path.csv"
    path.to_csv(csv_path)
    final = path.final
    print(json.dumps({
        "model": model.record(final),
        "alpha": spec.alpha,
        "stop_reason": path.stop_reason,
        "n_steps": path.n_steps,
        "objective": float(path.objective_values[-1]),
        "grad_norm": float(path.grad_norms[-1]),
        "path": str(csv_path),
    }))
    return EXIT_NUMERIC if path.failed else EXIT_OK


def cmd_experiment(o: dict) -> int:
    if o.get("config"):
        cfg = ExperimentConfig.from_json(o["config"], kind=o.get("kind"), seed=o.get("seed"), out=o.get("out"))
    elif o.get("kind"):
        data = {"kind": o["kind"], "out": o.get("out") or "."}
        if o.get("seed") is not None:
            data["seed"] = o["seed"]
        cfg = ExperimentConfig.from_dict(data)
    else:
        raise ConfigError("experiment needs --config or --kind")
    if cfg.out is None:
        cfg.out = "."
    result = run_experiment(cfg)
    print(json.dumps({"kind": cfg.kind, "out": str(cfg.out), **_summary(cfg.kind, result)}, allow_nan=True))
    return EXIT_OK


def _summary(kind: str, result) -> dict:
    if kind == "monte-carlo":
        return {
            "cells": [
                {"estimator": c.estimator, "init_index": c.init_index, "mean": c.mean, "sd": c.sd,
                 "n_flagged": c.n_flagged}
                for c in result.table.cells
            ]
        }
    if kind == "paths":
        return {"endpoint_spread": result.endpoint_spread}
    if kind == "szego-convergence":
        return {"observed_constant": {str(k): v for k, v in result.observed_constant.items()}}
    return {"spread": [[k[0], k[1], v] for k, v in result.spread.items()]}


COMMANDS = {
    "simulate": cmd_simulate,
    "periodogram": cmd_periodogram,
    "divergence": cmd_divergence,
    "estimate": cmd_estimate,
    "experiment": cmd_experiment,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](_resolve(args))
    except (ConfigError, InvalidArgumentError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, LinearAlgebraError, CapabilityError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
