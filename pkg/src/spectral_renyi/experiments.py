"""Configuration-driven experiments: Monte Carlo bias tables, optimization paths,
finite-n Gaussian convergence and contamination-shift studies.

Each runner takes an :class:`ExperimentConfig`, writes UTF-8 CSV/JSON files
into ``config.out`` (when set) and returns the same data in memory. Output is
a deterministic function of the configuration, including the master seed.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .divergence import (
    DivergenceSpec,
    contamination_shift,
    gaussian_gamma_finite,
    gaussian_renyi_finite,
    renyi_continuous,
)
from .errors import ConfigError, SpectralRenyiError
from .grid import SpectrumSamples
from .models import SpectralModel, ar1_plot_coordinates, get_model
from .optimize import ArmijoConfig, Objective, OptimPath, gd_armijo, gd_fixed
from .sampling import (
    RNG_ALGORITHM,
    ContaminationSpec,
    RngStream,
    inject_trend,
    periodogram,
    simulate_gaussian,
    smooth_daniell,
)

KINDS = ("monte-carlo", "paths", "szego-convergence", "shift-study")

#: Worker processes for Monte Carlo replications (default 1).
WORKERS_ENV = "SPECTRAL_RENYI_WORKERS"

#: Mean biases larger than this in magnitude get a blow-up flag.
BLOWUP_THRESHOLD = 10.0

LOG3 = math.log(3.0)

_BRUNE_INITS = [[1.0, 0.1, 1.0], [1.0, 1.0, 1.0], [1.0, 2.0, 1.0]]
_TABLE_ESTIMATORS = [
    {"alpha": 0.5, "pilot": "smoothed"},
    {"alpha": 0.75, "pilot": "smoothed"},
    {"alpha": 0.9, "pilot": "smoothed"},
    {"alpha": 1.0, "pilot": "raw"},
    {"alpha": 1.0, "pilot": "smoothed"},
]
TABLE_TRENDS = {
    "kind": "trend",
    "components": [[100.0, math.pi / 4, "sin"], [100.0, math.pi / 8, "sin"]],
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "monte-carlo": {
        "model": "brune",
        "truth": [1.0, 1.0, 1.0],
        "n": 1024,
        "replications": 100,
        "estimators": _TABLE_ESTIMATORS,
        "inits": _BRUNE_INITS,
        "contamination": None,
        "spans": [3, 5],
        "optimizer": {"method": "fixed", "step": 0.005, "max_iter": 10000, "grad_tol": 1e-3},
    },
    "paths": {
        # AR(1) in (log sigma, log((1+rho)/(1-rho))): truth (1, 0.5), start (2, 0).
        "model": "ar1",
        "truth": [0.0, LOG3],
        "n": 1000,
        "replications": 1,
        "estimators": [{"alpha": 0.5, "pilot": "raw"}, {"alpha": 1.0, "pilot": "raw"}],
        "inits": [[math.log(2.0), 0.0]],
        "contamination": {"kind": "sinusoid", "frequency": math.pi / 2, "z_values": [0.0, 1e2, 1e4]},
        "optimizer": {"method": "fixed", "step": 0.01, "max_iter": 5000, "grad_tol": 0.0},
    },
    "szego-convergence": {
        # AR(1) pair (1, 0.5) vs (1.2, -0.3).
        "model": "ar1",
        "truth": [0.0, LOG3],
        "other": [math.log(1.2), math.log(0.7 / 1.3)],
        "alphas": [0.5],
        "n_ladder": [64, 128, 256, 512],
    },
    "shift-study": {
        "model": "ar1",
        "truth": [0.0, LOG3],
        "n": 1024,
        "alphas": [0.5],
        "theta_grid": [[a, b] for a in (-0.5, 0.0, 0.5) for b in (0.5, LOG3, 1.5)],
        "contamination": {"kind": "pilot-additive", "frequency": math.pi / 4, "z_values": [1.0, 1e2, 1e4, 1e6]},
    },
}


@dataclass(frozen=True)
class EstimatorSpec:
    """A divergence order together with the pilot it is applied to."""

    alpha: float
    pilot: str = "smoothed"

    @property
    def label(self) -> str:
        base = "IS" if self.alpha == 1.0 else f"R{self.alpha:g}"
        return f"{base}-{self.pilot}"


@dataclass
class ExperimentConfig:
    kind: str
    model: str = "brune"
    truth: list[float] = field(default_factory=list)
    n: int = 1024
    replications: int = 1
    estimators: list[EstimatorSpec] = field(default_factory=list)
    inits: list[list[float]] = field(default_factory=list)
    contamination: dict | None = None
    spans: list[int] = field(default_factory=lambda: [3, 5])
    optimizer: dict = field(default_factory=dict)
    seed: int = 2024
    stream_ids: list[int] | None = None
    floor: float = 1e-12
    exclude_zero: bool = True
    other: list[float] = field(default_factory=list)
    alphas: list[float] = field(default_factory=list)
    n_ladder: list[int] = field(default_factory=list)
    theta_grid: list[list[float]] = field(default_factory=list)
    out: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """Fill unspecified fields from the defaults of the requested kind, then validate."""
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        kind = data.get("kind")
        if kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        merged = {**DEFAULTS[kind], **data}
        try:
            merged["estimators"] = [
                e if isinstance(e, EstimatorSpec) else EstimatorSpec(float(e["alpha"]), e.get("pilot", "smoothed"))
                for e in merged.get("estimators", [])
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid estimator entry: {exc}") from None
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path: str | os.PathLike, **overrides) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from None
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)

    def validate(self) -> None:
        try:
            model = get_model(self.model)
        except SpectralRenyiError as exc:
            raise ConfigError(str(exc)) from None

        def check_theta(theta, what):
            try:
                model.check(theta)
            except SpectralRenyiError as exc:
                raise ConfigError(f"{what}: {exc}") from None

        check_theta(self.truth, "truth")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.stream_ids is not None and len(self.stream_ids) != self.replications:
            raise ConfigError("stream_ids must list one id per replication")
        if int(self.n) < 2:
            raise ConfigError("n must be >= 2")
        for e in self.estimators:
            if not 0.0 < e.alpha <= 1.0 or e.pilot not in ("raw", "smoothed"):
                raise ConfigError(f"invalid estimator {e}")
        for a in self.alphas:
            if not 0.0 < a < 1.0:
                raise ConfigError(f"alphas must lie in (0, 1), got {a}")
        for i, t in enumerate(self.inits):
            check_theta(t, f"inits[{i}]")
        for i, t in enumerate(self.theta_grid):
            check_theta(t, f"theta_grid[{i}]")
        if self.kind == "szego-convergence":
            check_theta(self.other, "other")
            if not self.n_ladder or max(self.n_ladder) > 8192 or min(self.n_ladder) < 1:
                raise ConfigError("n_ladder must hold sizes in [1, 8192]")
        if self.kind in ("monte-carlo", "paths") and (not self.estimators or not self.inits):
            raise ConfigError(f"{self.kind} needs estimators and inits")
        if self.optimizer.get("method", "fixed") not in ("fixed", "armijo"):
            raise ConfigError("optimizer.method must be 'fixed' or 'armijo'")
        if self.contamination is not None:
            self._contamination()

    def _contamination(self) -> dict | None:
        c = self.contamination
        if c is None:
            return None
        kind = c.get("kind")
        try:
            if kind == "trend":
                ContaminationSpec.trend(c["components"])
            elif kind in ("sinusoid", "pilot-additive"):
                if not c.get("z_values") or not 0 < float(c["frequency"]) <= math.pi:
                    raise ConfigError(f"{kind} contamination needs z_values and a frequency in (0, pi]")
            else:
                raise ConfigError(f"unknown contamination kind {kind!r}")
        except (KeyError, TypeError, ValueError, SpectralRenyiError) as exc:
            raise ConfigError(f"invalid contamination: {exc}") from None
        return c

    def to_dict(self) -> dict:
        d = asdict(self)
        d["estimators"] = [asdict(e) for e in self.estimators]
        return d

    def run_optimizer(self, theta0, objective: Objective) -> OptimPath:
        opt = self.optimizer
        max_iter = int(opt.get("max_iter", 10000))
        grad_tol = float(opt.get("grad_tol", 1e-3))
        if opt.get("method", "fixed") == "armijo":
            keys = ("c", "beta", "gamma_max", "gamma_min")
            cfg = ArmijoConfig(**{k: float(opt[k]) for k in keys if k in opt})
            return gd_armijo(theta0, objective, cfg, max_iter=max_iter, grad_tol=grad_tol)
        return gd_fixed(theta0, objective, float(opt.get("step", 0.005)), max_iter=max_iter, grad_tol=grad_tol)


# --------------------------------------------------------------------- CSV I/O


def write_table(path: str | os.PathLike, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    """Write rows as CSV; floats use ``repr`` so they read back exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def read_table(path: str | os.PathLike) -> dict[str, list]:
    """Read a CSV written by :func:`write_table` into columns of ints, floats or strings."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    return {name: [_parse_cell(r[j]) for r in body] for j, name in enumerate(header)}


def _parse_cell(s: str):
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _outdir(cfg: ExperimentConfig) -> Path | None:
    if cfg.out is None:
        return None
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ----------------------------------------------------------------- Monte Carlo


@dataclass(frozen=True)
class BiasCell:
    """Summary of ``theta_hat - theta*`` for one estimator and initial value."""

    estimator: str
    alpha: float
    pilot: str
    init_index: int
    count: int
    n_flagged: int
    mean: tuple[float, ...]
    sd: tuple[float, ...]

    @property
    def blowup(self) -> tuple[bool, ...]:
        return tuple(abs(m) > BLOWUP_THRESHOLD for m in self.mean)


@dataclass
class BiasTable:
    cells: list[BiasCell]
    param_names: tuple[str, ...]

    def cell(self, estimator: str, init_index: int = 0) -> BiasCell:
        for c in self.cells:
            if c.estimator == estimator and c.init_index == init_index:
                return c
        raise KeyError((estimator, init_index))


@dataclass(frozen=True)
class ReplicationRecord:
    stream_id: int
    estimator: str
    alpha: float
    pilot: str
    init_index: int
    theta_hat: tuple[float, ...]
    bias: tuple[float, ...]
    stop_reason: str
    n_steps: int
    projections: int
    grad_norm: float
    objective: float
    failed: bool


@dataclass
class MonteCarloResult:
    table: BiasTable
    records: list[ReplicationRecord]


def _contaminated_series(cfg: ExperimentConfig, x):
    c = cfg.contamination
    if c is None:
        return x
    if c["kind"] == "trend":
        return inject_trend(x, ContaminationSpec.trend(c["components"]))
    raise ConfigError(f"monte-carlo supports trend contamination only, got {c['kind']!r}")


def _replicate(cfg: ExperimentConfig, stream_id: int) -> list[ReplicationRecord]:
    model = get_model(cfg.model)
    truth = np.asarray(cfg.truth, dtype=float)
    x = simulate_gaussian(model.spectrum(truth), int(cfg.n), RngStream(cfg.seed, stream_id))
    x = _contaminated_series(cfg, x)
    raw = periodogram(x, exclude_zero=cfg.exclude_zero)
    pilots = {"raw": raw}
    if any(e.pilot == "smoothed" for e in cfg.estimators):
        pilots["smoothed"] = smooth_daniell(raw, cfg.spans)
    out = []
    for est in cfg.estimators:
        spec = DivergenceSpec(est.alpha, exclude_zero=cfg.exclude_zero, floor=cfg.floor)
        objective = Objective(pilots[est.pilot], model, spec)
        for k, init in enumerate(cfg.inits):
            path = cfg.run_optimizer(init, objective)
            theta = path.final
            out.append(
                ReplicationRecord(
                    stream_id=stream_id,
                    estimator=est.label,
                    alpha=est.alpha,
                    pilot=est.pilot,
                    init_index=k,
                    theta_hat=tuple(map(float, theta)),
                    bias=tuple(map(float, theta - truth)),
                    stop_reason=path.stop_reason,
                    n_steps=path.n_steps,
                    projections=len(path.projections),
                    grad_norm=float(path.grad_norms[-1]),
                    objective=float(path.objective_values[-1]),
                    failed=path.failed,
                )
            )
    return out


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def summarize(records: Sequence[ReplicationRecord], cfg: ExperimentConfig) -> BiasTable:
    """Mean and sample sd of the bias per estimator and initial value.

    Runs that ended in projection or line-search failure (or non-finite values)
    are left out of the statistics and counted in ``n_flagged``.
    """
    records = sorted(records, key=lambda r: (r.stream_id, r.estimator, r.init_index))
    cells = []
    for est in cfg.estimators:
        for k in range(len(cfg.inits)):
            sel = [r for r in records if r.estimator == est.label and r.init_index == k]
            ok = np.array([r.bias for r in sel if not r.failed], dtype=float).reshape(-1, len(cfg.truth))
            mean = ok.mean(axis=0) if len(ok) else np.full(len(cfg.truth), np.nan)
            sd = ok.std(axis=0, ddof=1) if len(ok) > 1 else np.full(len(cfg.truth), np.nan)
            cells.append(
                BiasCell(est.label, est.alpha, est.pilot, k, len(sel), len(sel) - len(ok),
                         tuple(map(float, mean)), tuple(map(float, sd)))
            )
    return BiasTable(cells, get_model(cfg.model).param_names)


def run_monte_carlo(cfg: ExperimentConfig) -> MonteCarloResult:
    """Simulate, contaminate, estimate and tabulate biases over all replications.

    Every estimator sees the same simulated series within a replication.
    Replications are distributed over ``$SPECTRAL_RENYI_WORKERS`` processes;
    results are ordered by stream id before aggregation.
    """
    ids = list(cfg.stream_ids) if cfg.stream_ids is not None else list(range(cfg.replications))
    workers = _workers()
    if workers > 1 and len(ids) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_replicate, [cfg] * len(ids), ids))
    else:
        chunks = [_replicate(cfg, i) for i in ids]
    records = sorted((r for c in chunks for r in c), key=lambda r: (r.stream_id, r.estimator, r.init_index))
    table = summarize(records, cfg)
    out = _outdir(cfg)
    if out is not None:
        _write_monte_carlo(out, cfg, table, records)
    return MonteCarloResult(table, records)


def _write_monte_carlo(out: Path, cfg, table: BiasTable, records) -> None:
    names = table.param_names
    write_table(
        out / "replications.csv",
        ["stream_id", "estimator", "alpha", "pilot", "init_index",
         *[f"theta_hat_{p}" for p in names], *[f"bias_{p}" for p in names],
         "stop_reason", "n_steps", "projections", "grad_norm", "objective", "failed"],
        [[r.stream_id, r.estimator, r.alpha, r.pilot, r.init_index, *r.theta_hat, *r.bias,
          r.stop_reason, r.n_steps, r.projections, r.grad_norm, r.objective, int(r.failed)]
         for r in records],
    )
    write_table(
        out / "bias_table.csv",
        ["estimator", "alpha", "pilot", "init_index", "count", "n_flagged",
         *[f"mean_{p}" for p in names], *[f"sd_{p}" for p in names], *[f"gt10_{p}" for p in names]],
        [[c.estimator, c.alpha, c.pilot, c.init_index, c.count, c.n_flagged,
          *c.mean, *c.sd, *map(int, c.blowup)] for c in table.cells],
    )
    _write_json(out / "run.json", {"config": cfg.to_dict(), "rng": RNG_ALGORITHM})


# ----------------------------------------------------------------------- paths


@dataclass
class PathsResult:
    paths: dict[tuple[str, float], OptimPath]
    endpoint_spread: dict[str, float]


def _sinusoid(n: int, frequency: float, z: float) -> np.ndarray:
    """``sqrt(z) sin(frequency t)``, ``t = 1..n``."""
    return math.sqrt(z) * np.sin(frequency * np.arange(1, n + 1))


def run_paths(cfg: ExperimentConfig) -> PathsResult:
    """Full optimization paths per estimator and contamination level.

    The series is simulated once and each contamination level adds
    ``sqrt(z) sin(A t)`` to it. For AR(1) the paths are also reported in the
    display coordinates of :func:`ar1_plot_coordinates`.
    """
    model = get_model(cfg.model)
    n = int(cfg.n)
    truth = np.asarray(cfg.truth, dtype=float)
    x = simulate_gaussian(model.spectrum(truth), n, RngStream(cfg.seed, 0))
    c = cfg.contamination or {"kind": "sinusoid", "frequency": math.pi / 2, "z_values": [0.0]}
    if c["kind"] != "sinusoid":
        raise ConfigError("paths experiments take a 'sinusoid' contamination")
    z_values = [float(z) for z in c["z_values"]]
    theta0 = cfg.inits[0]
    paths: dict[tuple[str, float], OptimPath] = {}
    for est in cfg.estimators:
        spec = DivergenceSpec(est.alpha, exclude_zero=cfg.exclude_zero, floor=cfg.floor)
        for z in z_values:
            series = x.values + _sinusoid(n, float(c["frequency"]), z)
            pilot = periodogram(series, exclude_zero=cfg.exclude_zero)
            if est.pilot == "smoothed":
                pilot = smooth_daniell(pilot, cfg.spans)
            paths[(est.label, z)] = cfg.run_optimizer(theta0, Objective(pilot, model, spec))
    display = ar1_plot_coordinates if cfg.model == "ar1" else (lambda t: np.asarray(t, dtype=float))
    spread = {}
    for est in cfg.estimators:
        ends = [display(paths[(est.label, z)].final) for z in z_values]
        spread[est.label] = max(
            (float(np.linalg.norm(a - b)) for a in ends for b in ends), default=0.0
        )
    out = _outdir(cfg)
    if out is not None:
        _write_paths(out, cfg, model, paths, display, spread)
    return PathsResult(paths, spread)


def _write_paths(out: Path, cfg, model: SpectralModel, paths, display, spread) -> None:
    names = model.param_names
    rows, ends = [], []
    for (label, z), p in paths.items():
        disp = display(p.iterates)
        norms = p.grad_norms
        for k, theta in enumerate(p.iterates):
            step = float(p.step_sizes[k - 1]) if k else ""
            rows.append([label, z, k, *theta.tolist(), *disp[k].tolist(), float(norms[k]), step,
                         float(p.objective_values[k])])
        ends.append([label, z, *p.final.tolist(), *disp[-1].tolist(), p.stop_reason, p.n_steps])
    write_table(
        out / "paths.csv",
        ["estimator", "z", "iter", *names, *[f"plot_{p}" for p in names], "grad_norm", "step", "objective"],
        rows,
    )
    write_table(
        out / "endpoints.csv",
        ["estimator", "z", *names, *[f"plot_{p}" for p in names], "stop_reason", "n_steps"],
        ends,
    )
    _write_json(out / "run.json", {"config": cfg.to_dict(), "rng": RNG_ALGORITHM, "endpoint_spread": spread})


# ---------------------------------------------------------- Szego convergence


@dataclass(frozen=True)
class SzegoRow:
    n: int
    alpha: float
    gamma: float
    renyi_scaled: float
    gamma_scaled: float
    spectral: float
    renyi_abs_err: float
    gamma_ratio: float
    error: str = ""


@dataclass
class SzegoResult:
    rows: list[SzegoRow]
    observed_constant: dict[float, float]
    constant_sd: dict[float, float]


def run_szego_convergence(cfg: ExperimentConfig) -> SzegoResult:
    """Compare ``(2/n)`` times the finite-n Gaussian divergences with the spectral value.

    ``gamma = 1/alpha - 1``. The reported constant is the mean of the last three
    ratios ``(2/n) G_gamma / D_alpha`` on the ladder.
    """
    model = get_model(cfg.model)
    S = model.spectrum(cfg.truth)
    S_tilde = model.spectrum(cfg.other)
    rows = []
    for alpha in cfg.alphas:
        gamma = 1.0 / alpha - 1.0
        spectral = renyi_continuous(S, S_tilde, alpha)
        for n in sorted(int(v) for v in cfg.n_ladder):
            try:
                r = 2.0 / n * gaussian_renyi_finite(S, S_tilde, alpha, n)
                g = 2.0 / n * gaussian_gamma_finite(S, S_tilde, gamma, n)
                ratio = g / spectral if spectral > 0 else math.nan
                rows.append(SzegoRow(n, alpha, gamma, r, g, spectral, abs(r - spectral), ratio))
            except SpectralRenyiError as exc:
                nan = math.nan
                rows.append(SzegoRow(n, alpha, gamma, nan, nan, spectral, nan, nan, str(exc)))
    const, sd = {}, {}
    for alpha in cfg.alphas:
        tail = [r.gamma_ratio for r in rows if r.alpha == alpha and not r.error][-3:]
        const[alpha] = float(np.mean(tail)) if tail else math.nan
        sd[alpha] = float(np.std(tail, ddof=1)) if len(tail) > 1 else math.nan
    out = _outdir(cfg)
    if out is not None:
        write_table(out / "szego.csv", [f.name for f in fields(SzegoRow)],
                    [list(asdict(r).values()) for r in rows])
        _write_json(out / "run.json", {
            "config": cfg.to_dict(),
            "observed_constant": {str(a): v for a, v in const.items()},
            "constant_sd": {str(a): v for a, v in sd.items()},
        })
    return SzegoResult(rows, const, sd)


# ----------------------------------------------------------------- shift study


@dataclass(frozen=True)
class ShiftRow:
    theta: tuple[float, ...]
    z: float
    divergence: str
    alpha: float
    exact: float
    predicted: float
    leading: float
    multiplicity: int


@dataclass
class ShiftStudyResult:
    rows: list[ShiftRow]
    spread: dict[tuple[str, float], float]


def run_shift_study(cfg: ExperimentConfig) -> ShiftStudyResult:
    """Exact and predicted divergence shifts under pilot contamination over a theta grid.

    The pilot is the periodogram of one series simulated at ``truth``. The
    spread of the exact shift across the grid is reported per divergence and z.
    """
    model = get_model(cfg.model)
    n = int(cfg.n)
    x = simulate_gaussian(model.spectrum(cfg.truth), n, RngStream(cfg.seed, 0))
    pilot: SpectrumSamples = periodogram(x, exclude_zero=cfg.exclude_zero)
    c = cfg.contamination or DEFAULTS["shift-study"]["contamination"]
    omega = pilot.grid.nearest(float(c["frequency"]))
    z_values = [float(z) for z in c["z_values"]]
    specs = [("IS", DivergenceSpec(1.0, exclude_zero=cfg.exclude_zero, floor=cfg.floor))]
    specs += [(f"R{a:g}", DivergenceSpec(a, exclude_zero=cfg.exclude_zero, floor=cfg.floor)) for a in cfg.alphas]
    grid = cfg.theta_grid or [cfg.truth]
    rows = []
    for theta in grid:
        s = float(model.value(theta, np.array([omega]))[0])
        for z in z_values:
            for name, spec in specs:
                r = contamination_shift(pilot, s, omega, z, spec)
                rows.append(ShiftRow(tuple(map(float, theta)), z, name, spec.alpha,
                                     r.exact, r.predicted, r.leading, r.multiplicity))
    spread = {}
    for name, _ in specs:
        for z in z_values:
            vals = [r.exact for r in rows if r.divergence == name and r.z == z]
            spread[(name, z)] = float(max(vals) - min(vals))
    out = _outdir(cfg)
    if out is not None:
        names = model.param_names
        write_table(
            out / "shift.csv",
            [*names, "z", "divergence", "alpha", "exact", "predicted", "leading", "multiplicity"],
            [[*r.theta, r.z, r.divergence, r.alpha, r.exact, r.predicted, r.leading, r.multiplicity]
             for r in rows],
        )
        write_table(out / "shift_spread.csv", ["divergence", "z", "spread"],
                    [[k[0], k[1], v] for k, v in spread.items()])
        _write_json(out / "run.json", {"config": cfg.to_dict(), "omega_star": omega, "rng": RNG_ALGORITHM})
    return ShiftStudyResult(rows, spread)


RUNNERS = {
    "monte-carlo": run_monte_carlo,
    "paths": run_paths,
    "szego-convergence": run_szego_convergence,
    "shift-study": run_shift_study,
}


def run_experiment(cfg: ExperimentConfig):
    return RUNNERS[cfg.kind](cfg)
