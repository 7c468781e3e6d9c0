"""Minimum-divergence estimation by gradient descent.

The objective is ``theta -> D[pilot : S_theta]``. Everything is evaluated on
the nonnegative half of the grid with multiplicity weights, which equals the
full sum over the Fourier frequencies because pilot and model are even.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Callable, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from .divergence import DivergenceSpec, is_integrand, log_mixture, renyi_integrand
from .errors import DomainError, InvalidArgumentError
from .grid import SpectrumSamples
from .models import SpectralModel
from .sampling import contaminate_pilot

STOP_MAX_ITER = "max-iter"
STOP_GRAD_TOL = "grad-tol"
STOP_PROJECTION = "projection-failure"
STOP_LINE_SEARCH = "line-search-failure"
STOP_NON_FINITE = "non-finite"

#: Consecutive clamped iterates tolerated before a run is declared failed.
MAX_CONSECUTIVE_CLAMPS = 3


# Overflow to inf is expected far from the data; callers test finiteness.
_quiet_overflow = np.errstate(over="ignore", invalid="ignore")


class Objective:
    """``D_alpha^(n)[pilot : S_theta]`` as a function of ``theta``."""

    def __init__(self, pilot: SpectrumSamples, model: SpectralModel, spec: DivergenceSpec):
        self.pilot = pilot
        self.model = model
        self.spec = spec
        grid = pilot.grid
        mask = spec.mask(grid)
        idx = np.flatnonzero(mask & (grid.t >= 0))
        self.omega = grid.freqs[idx]
        self.weights = np.where(grid.mirror[idx] == idx, 1.0, 2.0)
        vals = pilot.floored(spec.floor).values[idx]
        if np.any(vals <= 0):
            raise DomainError("pilot must be positive on the included grid (enable the floor?)")
        self.log_pilot = np.log(vals)
        self.n = grid.n

    @property
    def alpha(self) -> float:
        return self.spec.alpha

    def contaminated(self, omega_star: float, z: float) -> "Objective":
        return Objective(contaminate_pilot(self.pilot, omega_star, z), self.model, self.spec)

    def _log_ratio(self, theta):
        return self.log_pilot - self.model.log_value(theta, self.omega)

    @_quiet_overflow
    def value(self, theta) -> float:
        d = self._log_ratio(theta)
        if self.spec.is_itakura_saito:
            return float(self.weights @ is_integrand(d) / self.n)
        a = self.alpha
        return float(self.weights @ renyi_integrand(d, a) / ((1.0 - a) * self.n))

    def _coefficients(self, d):
        """Per-frequency weights ``c`` with ``grad D = sum c * grad log S``."""
        if self.spec.is_itakura_saito:
            return -self.weights * np.expm1(d) / self.n
        a = self.alpha
        q = np.exp(-log_mixture(d, a))  # S_theta / (a S_theta + (1 - a) I)
        return -a / ((1.0 - a) * self.n) * self.weights * (1.0 - q)

    @_quiet_overflow
    def gradient(self, theta) -> np.ndarray:
        """``grad_theta D`` (the descent direction is its negative)."""
        d = self._log_ratio(theta)
        return self._coefficients(d) @ self.model.grad_log(theta, self.omega)

    @_quiet_overflow
    def value_and_gradient(self, theta) -> tuple[float, np.ndarray]:
        d = self._log_ratio(theta)
        g = self._coefficients(d) @ self.model.grad_log(theta, self.omega)
        if self.spec.is_itakura_saito:
            f = self.weights @ is_integrand(d) / self.n
        else:
            a = self.alpha
            f = self.weights @ renyi_integrand(d, a) / ((1.0 - a) * self.n)
        return float(f), g

    @_quiet_overflow
    def hessian(self, theta) -> np.ndarray:
        """``hess_theta D``: a rank-one-sum term plus a ``hess log S`` term."""
        d = self._log_ratio(theta)
        gl = self.model.grad_log(theta, self.omega)
        hl = self.model.hess_log(theta, self.omega)
        w = self.weights / self.n
        if self.spec.is_itakura_saito:
            r = np.exp(d)
            outer = np.einsum("k,ki,kj->ij", w * r, gl, gl)
            return outer + np.einsum("k,kij->ij", w * (1.0 - r), hl)
        a = self.alpha
        q = np.exp(-log_mixture(d, a))
        outer = np.einsum("k,ki,kj->ij", a * w * np.exp(d) * q * q, gl, gl)
        return outer - a / (1.0 - a) * np.einsum("k,kij->ij", w * (1.0 - q), hl)


def renyi_gradient(theta, objective: Objective) -> np.ndarray:
    """Ascent-free update direction ``-grad D_alpha`` for ``alpha < 1``."""
    if objective.spec.is_itakura_saito:
        raise InvalidArgumentError("renyi_gradient needs alpha < 1; use is_gradient")
    return -objective.gradient(theta)


def is_gradient(theta, objective: Objective) -> np.ndarray:
    """Update direction ``-grad D_1`` of the Itakura-Saito objective."""
    if not objective.spec.is_itakura_saito:
        raise InvalidArgumentError("is_gradient needs alpha = 1")
    return -objective.gradient(theta)


def renyi_hessian(theta, objective: Objective) -> np.ndarray:
    return objective.hessian(theta)


def smoothness_bound(U1: float, U2: float, alpha: float) -> float:
    """Gradient Lipschitz bound ``(U1**2 + U2) / (1 - alpha)``, uniform in the contamination."""
    if U1 < 0 or U2 < 0:
        raise InvalidArgumentError("U1 and U2 must be nonnegative")
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"smoothness bound needs alpha in (0, 1), got {alpha}")
    return (U1 * U1 + U2) / (1.0 - alpha)


@dataclass(frozen=True)
class ArmijoConfig:
    c: float = 0.5
    beta: float = 0.5
    gamma_max: float = 1.0
    gamma_min: float = 1e-10

    def __post_init__(self):
        if not (0 < self.c < 1 and 0 < self.beta < 1 and 0 < self.gamma_min < self.gamma_max):
            raise InvalidArgumentError(f"invalid Armijo configuration {self}")


@dataclass
class OptimPath:
    """Iterates, gradients of ``D`` at each iterate, accepted steps and why the run stopped.

    ``step_sizes[k]`` is the step taken from iterate ``k`` to ``k + 1``.
    """

    model_id: str
    iterates: np.ndarray
    gradients: np.ndarray
    objective_values: np.ndarray
    step_sizes: np.ndarray
    stop_reason: str
    projections: list[int] = field(default_factory=list)
    protocol: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def n_steps(self) -> int:
        return len(self.step_sizes)

    @property
    def grad_norms(self) -> np.ndarray:
        return np.linalg.norm(self.gradients, axis=1)

    @property
    def failed(self) -> bool:
        return self.stop_reason in (STOP_PROJECTION, STOP_LINE_SEARCH, STOP_NON_FINITE)

    def to_csv(self, path: Union[str, PathLike]) -> None:
        write_path_csv(path, self)


class _Recorder:
    def __init__(self, theta0):
        self.thetas = [np.array(theta0, dtype=float)]
        self.grads: list[np.ndarray] = []
        self.values: list[float] = []
        self.steps: list[float] = []
        self.projections: list[int] = []

    def finish(self, model: SpectralModel, reason: str, protocol: dict) -> OptimPath:
        d = len(self.thetas[0])
        k = len(self.grads)
        return OptimPath(
            model_id=model.name,
            iterates=np.array(self.thetas[:k]).reshape(k, d),
            gradients=np.array(self.grads).reshape(k, d),
            objective_values=np.array(self.values),
            step_sizes=np.array(self.steps[: max(k - 1, 0)]),
            stop_reason=reason,
            projections=self.projections,
            protocol=protocol,
        )


def _step_schedule(step) -> tuple[Callable[[int], float], dict]:
    if callable(step):
        return step, {"step": getattr(step, "__name__", "callable")}
    if np.ndim(step) == 0:
        g = float(step)
        if not g > 0:
            raise InvalidArgumentError(f"step size must be positive, got {step}")
        return (lambda k: g), {"step": g}
    seq = [float(s) for s in step]
    if any(not s > 0 for s in seq):
        raise InvalidArgumentError("step sizes must be positive")
    return (lambda k: seq[min(k, len(seq) - 1)]), {"step": seq}


def gd_fixed(
    theta0,
    objective: Objective,
    step: Union[float, Sequence[float], Callable[[int], float]] = 0.005,
    max_iter: int = 10000,
    grad_tol: float = 1e-3,
) -> OptimPath:
    """Gradient descent with a prescribed step schedule.

    ``step`` is a constant, a sequence (its last entry repeats) or a callable
    of the zero-based step index. The run stops after ``max_iter`` steps, when
    the gradient norm at the current iterate drops below ``grad_tol``, or after
    three consecutive iterates had to be clamped back into the parameter set.
    """
    model = objective.model
    schedule, protocol = _step_schedule(step)
    protocol = {"method": "fixed", **protocol, "max_iter": max_iter, "grad_tol": grad_tol}
    theta = model.check(theta0)
    rec = _Recorder(theta)
    clamps = 0
    k = 0
    while True:
        f, g = objective.value_and_gradient(theta)
        rec.grads.append(g)
        rec.values.append(f)
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            return rec.finish(model, STOP_NON_FINITE, protocol)
        if clamps >= MAX_CONSECUTIVE_CLAMPS:
            return rec.finish(model, STOP_PROJECTION, protocol)
        if np.linalg.norm(g) < grad_tol:
            return rec.finish(model, STOP_GRAD_TOL, protocol)
        if k >= max_iter:
            return rec.finish(model, STOP_MAX_ITER, protocol)
        gamma = schedule(k)
        theta, moved = model.project(theta - gamma * g)
        k += 1
        if moved:
            rec.projections.append(k)
            clamps += 1
        else:
            clamps = 0
        rec.steps.append(gamma)
        rec.thetas.append(theta)
        if not np.all(np.isfinite(theta)):
            rec.grads.append(np.full_like(g, np.nan))
            rec.values.append(np.nan)
            return rec.finish(model, STOP_NON_FINITE, protocol)


def gd_armijo(
    theta0,
    objective: Objective,
    config: ArmijoConfig = ArmijoConfig(),
    max_iter: int = 10000,
    grad_tol: float = 1e-3,
) -> OptimPath:
    """Gradient descent with backtracking until the Armijo sufficient-decrease test passes.

    A step ``gamma`` is accepted when
    ``D(theta - gamma g) <= D(theta) - c gamma ||g||**2``; trial steps start at
    ``gamma_max`` and shrink by ``beta``. If no step above ``gamma_min`` passes,
    the run stops with ``line-search-failure``.
    """
    model = objective.model
    protocol = {
        "method": "armijo",
        "c": config.c,
        "beta": config.beta,
        "gamma_max": config.gamma_max,
        "gamma_min": config.gamma_min,
        "max_iter": max_iter,
        "grad_tol": grad_tol,
    }
    theta = model.check(theta0)
    rec = _Recorder(theta)
    clamps = 0
    k = 0
    while True:
        f, g = objective.value_and_gradient(theta)
        rec.grads.append(g)
        rec.values.append(f)
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            return rec.finish(model, STOP_NON_FINITE, protocol)
        if clamps >= MAX_CONSECUTIVE_CLAMPS:
            return rec.finish(model, STOP_PROJECTION, protocol)
        gg = float(g @ g)
        if math.sqrt(gg) < grad_tol:
            return rec.finish(model, STOP_GRAD_TOL, protocol)
        if k >= max_iter:
            return rec.finish(model, STOP_MAX_ITER, protocol)
        gamma = config.gamma_max
        while gamma >= config.gamma_min:
            trial, moved = model.project(theta - gamma * g)
            if np.all(np.isfinite(trial)):
                ft = objective.value(trial)
                if ft <= f - config.c * gamma * gg:
                    break
            gamma *= config.beta
        else:
            return rec.finish(model, STOP_LINE_SEARCH, protocol)
        theta = trial
        k += 1
        if moved:
            rec.projections.append(k)
            clamps += 1
        else:
            clamps = 0
        rec.steps.append(gamma)
        rec.thetas.append(theta)


def armijo_holds(objective: Objective, theta, gamma: float, c: float) -> bool:
    """Whether ``gamma`` satisfies the Armijo condition with constant ``c`` at ``theta``."""
    f, g = objective.value_and_gradient(theta)
    trial, _ = objective.model.project(np.asarray(theta) - gamma * g)
    return objective.value(trial) <= f - c * gamma * float(g @ g)


def armijo_violations(path: OptimPath, objective: Objective, c: float) -> int:
    """Count recorded steps that fail the sufficient-decrease test with constant ``c``."""
    bad = 0
    for k, gamma in enumerate(path.step_sizes):
        g = path.gradients[k]
        lhs = objective.value(path.iterates[k + 1])
        if not lhs <= path.objective_values[k] - c * gamma * float(g @ g):
            bad += 1
    return bad


def path_distance(a: OptimPath, b: OptimPath, upto: int | None = None) -> float:
    """``max_{k <= upto} ||theta_a^(k) - theta_b^(k)||`` for paths run under one protocol."""
    if a.protocol != b.protocol or a.model_id != b.model_id:
        raise InvalidArgumentError("paths were produced under different protocols")
    if not np.array_equal(a.iterates[0], b.iterates[0]):
        raise InvalidArgumentError("paths start from different initial values")
    m = min(len(a.iterates), len(b.iterates)) - 1 if upto is None else upto
    if m < 0 or m >= len(a.iterates) or m >= len(b.iterates):
        raise InvalidArgumentError(f"upto={upto} exceeds the recorded path lengths")
    diff = a.iterates[: m + 1] - b.iterates[: m + 1]
    return float(np.max(np.linalg.norm(diff, axis=1)))


@dataclass
class InstabilityReport:
    """First-step and stationary-point sensitivity of the Itakura-Saito descent."""

    applicable: bool
    z: np.ndarray
    multiplicity: int
    first_step_distance: np.ndarray
    first_step_closed_form: np.ndarray
    first_step_rel_err: np.ndarray
    first_step_slope: float
    first_step_slope_closed_form: float
    stationary_points: np.ndarray
    stationary_residual: np.ndarray
    clean_grad_norm: np.ndarray
    clean_grad_predicted: np.ndarray
    clean_grad_r2: float
    min_sensitivity: float


def _sensitivity(model: SpectralModel, theta, omega_star: float) -> np.ndarray:
    """``grad log S_theta(omega*) / S_theta(omega*)``."""
    om = np.array([abs(omega_star)])
    return model.grad_log(theta, om)[0] * np.exp(-model.log_value(theta, om)[0])


def _r_squared(x: np.ndarray, y: np.ndarray) -> float:
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    tot = np.sum((y - y.mean()) ** 2)
    return float(1.0 - np.sum(resid**2) / tot) if tot > 0 else 1.0


def _stationary_point(objective: Objective, theta0, tol: float, max_iter: int) -> np.ndarray:
    """A stationary point of ``objective`` by trust-region Newton on the analytic derivatives."""
    res = minimize(
        objective.value,
        np.asarray(theta0, dtype=float),
        jac=objective.gradient,
        hess=objective.hessian,
        method="trust-exact",
        options={"gtol": tol, "maxiter": max_iter},
    )
    return res.x


def is_instability_probe(
    theta0,
    pilot: SpectrumSamples,
    model: SpectralModel,
    omega_star: float,
    z_ladder: Sequence[float] = (1e2, 1e3, 1e4),
    step: float = 0.01,
    theta_grid: Sequence | None = None,
    stationary_tol: float = 1e-8,
    stationary_max_iter: int = 1000,
    spec: DivergenceSpec | None = None,
) -> InstabilityReport:
    """Measure how an outlier of mass ``z`` at ``+-omega*`` moves the Itakura-Saito descent.

    Returns first-step distances between clean and contaminated runs next to
    their closed form ``step * z * mult / n * ||grad log S / S (omega*)||``, and
    the clean-objective gradient norm at each contaminated stationary point.
    """
    spec = spec or DivergenceSpec(1.0)
    if not spec.is_itakura_saito:
        raise InvalidArgumentError("the instability probe runs on the Itakura-Saito objective")
    clean = Objective(pilot, model, spec)
    theta0 = model.check(theta0)
    z = np.asarray(z_ladder, dtype=float)
    mult = pilot.grid.multiplicity(omega_star)
    n = pilot.grid.n
    grid_pts = [theta0] if theta_grid is None else [model.check(t) for t in theta_grid]
    min_sens = min(float(np.linalg.norm(_sensitivity(model, t, omega_star))) for t in grid_pts)
    applicable = min_sens > 0
    sens0 = float(np.linalg.norm(_sensitivity(model, theta0, omega_star)))
    g0 = clean.gradient(theta0)
    dist, closed, stat, resid, cg, pred = [], [], [], [], [], []
    for zi in z:
        obj = clean.contaminated(omega_star, zi)
        gz = obj.gradient(theta0)
        dist.append(float(np.linalg.norm(step * (gz - g0))))
        closed.append(step * zi * mult / n * sens0)
        ts = _stationary_point(obj, theta0, stationary_tol, stationary_max_iter)
        stat.append(ts)
        resid.append(float(np.linalg.norm(obj.gradient(ts))))
        cg.append(float(np.linalg.norm(clean.gradient(ts))))
        pred.append(zi * mult / n * float(np.linalg.norm(_sensitivity(model, ts, omega_star))))
    dist = np.array(dist)
    closed = np.array(closed)
    slope = float(np.polyfit(z, dist, 1)[0]) if len(z) > 1 else float(dist[0] / z[0])
    cg = np.array(cg)
    return InstabilityReport(
        applicable=applicable,
        z=z,
        multiplicity=mult,
        first_step_distance=dist,
        first_step_closed_form=closed,
        first_step_rel_err=np.abs(dist - closed) / np.where(closed > 0, closed, 1.0),
        first_step_slope=slope,
        first_step_slope_closed_form=step * mult / n * sens0,
        stationary_points=np.array(stat),
        stationary_residual=np.array(resid),
        clean_grad_norm=cg,
        clean_grad_predicted=np.array(pred),
        clean_grad_r2=_r_squared(z, cg) if len(z) > 2 else 1.0,
        min_sensitivity=min_sens,
    )


def write_path_csv(path: Union[str, PathLike], p: OptimPath) -> None:
    """``iter,theta_1..theta_d,grad_norm,step,objective``; ``step`` is the step leading to the row."""
    d = p.iterates.shape[1]
    norms = p.grad_norms
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", *[f"theta_{i + 1}" for i in range(d)], "grad_norm", "step", "objective"])
        for k, theta in enumerate(p.iterates):
            step = "" if k == 0 else repr(float(p.step_sizes[k - 1]))
            w.writerow([k, *[repr(float(v)) for v in theta], repr(float(norms[k])), step, repr(float(p.objective_values[k]))])


def read_path_csv(path: Union[str, PathLike]) -> dict[str, np.ndarray]:
    """Read a path CSV back into column arrays (``theta`` has shape ``(K+1, d)``)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    if header[0] != "iter" or header[-3:] != ["grad_norm", "step", "objective"]:
        raise InvalidArgumentError(f"{path}: not an optimization path CSV")
    body = rows[1:]
    d = len(header) - 4
    return {
        "iter": np.array([int(r[0]) for r in body]),
        "theta": np.array([[float(v) for v in r[1 : 1 + d]] for r in body]).reshape(len(body), d),
        "grad_norm": np.array([float(r[1 + d]) for r in body]),
        "step": np.array([float(r[2 + d]) if r[2 + d] else np.nan for r in body]),
        "objective": np.array([float(r[3 + d]) for r in body]),
    }
