"""Spectral Renyi and Itakura-Saito divergences and their finite-n Gaussian counterparts.

Argument order follows ``D[S : S_tilde]``: in estimation the first slot holds
the pilot (nonparametric) spectrum and the second the model. All integrands
are written in terms of ``d = log S - log S_tilde`` so that they vanish
exactly for equal inputs and stay finite for extreme ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, InvalidArgumentError, LinearAlgebraError
from .grid import FreqGrid, SpectrumSamples, autocovariance_from_spectrum

#: Largest Toeplitz order handled by the dense log-determinant oracle.
DENSE_CAP = 8192


@dataclass(frozen=True)
class DivergenceSpec:
    """Order and frequency policy of a spectral divergence.

    ``alpha = 1`` selects the Itakura-Saito divergence. ``exclude_zero=None``
    defers to the grid's own policy. ``floor`` clamps tabulated spectra below
    at ``floor * mean`` before taking logs; ``None`` disables it.
    """

    alpha: float = 0.5
    exclude_zero: bool | None = None
    floor: float | None = 1e-12

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidArgumentError(f"alpha must lie in (0, 1], got {self.alpha}")

    @property
    def is_itakura_saito(self) -> bool:
        return self.alpha == 1.0

    def mask(self, grid: FreqGrid) -> np.ndarray:
        if self.exclude_zero is None or grid.n == 1:
            return grid.included
        mask = np.ones(grid.n, dtype=bool)
        if self.exclude_zero:
            mask[grid.zero_index] = False
        return mask

    def policy(self) -> dict:
        return {"exclude_zero": self.exclude_zero, "floor": self.floor}


# --- pointwise integrands -------------------------------------------------------------


def log_mixture(d: np.ndarray, alpha: float) -> np.ndarray:
    """``log(alpha + (1 - alpha) exp(d))`` without overflow or cancellation."""
    d = np.asarray(d, dtype=float)
    out = np.empty_like(d)
    pos = d > 0
    out[pos] = d[pos] + np.log1p(alpha * np.expm1(-d[pos]))
    out[~pos] = np.log1p((1.0 - alpha) * np.expm1(d[~pos]))
    return out


def renyi_integrand(d: np.ndarray, alpha: float) -> np.ndarray:
    """``log(alpha S~ + (1-alpha) S) - alpha log S~ - (1-alpha) log S`` with ``d = log(S/S~)``."""
    return log_mixture(d, alpha) - (1.0 - alpha) * d


def is_integrand(d: np.ndarray) -> np.ndarray:
    """``S/S~ - 1 + log(S~/S)`` with ``d = log(S/S~)``."""
    return np.expm1(d) - d


# --- tabulated (discrete) divergences -------------------------------------------------


def _log_ratio(S: SpectrumSamples, S_tilde: SpectrumSamples, spec: DivergenceSpec):
    if S.grid.n != S_tilde.grid.n or not np.array_equal(S.freqs, S_tilde.freqs):
        raise InvalidArgumentError("spectra are tabulated on different grids")
    mask = spec.mask(S.grid)
    a = S.floored(spec.floor).values[mask]
    b = S_tilde.floored(spec.floor).values[mask]
    if np.any(a <= 0) or np.any(b <= 0):
        raise DomainError("divergence needs strictly positive spectra on the included grid")
    return np.log(a) - np.log(b)


def renyi_discrete(S: SpectrumSamples, S_tilde: SpectrumSamples, spec: DivergenceSpec) -> float:
    """Grid version ``D_alpha^(n)[S : S_tilde]``, normalized by the grid size ``n``."""
    if spec.is_itakura_saito:
        return itakura_saito_discrete(S, S_tilde, spec)
    d = _log_ratio(S, S_tilde, spec)
    a = spec.alpha
    return float(np.sum(renyi_integrand(d, a)) / ((1.0 - a) * S.grid.n))


def itakura_saito_discrete(S: SpectrumSamples, S_tilde: SpectrumSamples, spec: DivergenceSpec | None = None) -> float:
    """Grid version of ``D_1[S : S_tilde]``."""
    spec = DivergenceSpec(1.0) if spec is None else spec
    d = _log_ratio(S, S_tilde, spec)
    return float(np.sum(is_integrand(d)) / S.grid.n)


# --- quadrature form ------------------------------------------------------------------

SpectrumFunction = Callable[[np.ndarray], np.ndarray]


def renyi_continuous(S: SpectrumFunction, S_tilde: SpectrumFunction, alpha: float, order: int = 2**14) -> float:
    """``D_alpha[S : S_tilde]`` by the composite trapezoid rule on ``[0, pi]``.

    Both spectra are even, so the integral over ``[-pi, pi]`` is twice the
    half-line integral. A node where the log-ratio is undefined (the origin,
    for models that vanish there) takes the integrand's value just beside it.
    """
    if order < 16:
        raise InvalidArgumentError(f"quadrature order must be >= 16, got {order}")
    if not 0.0 < alpha <= 1.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 1], got {alpha}")
    omega = np.linspace(0.0, math.pi, order + 1)
    f = _continuous_integrand(S, S_tilde, alpha, omega)
    bad = ~np.isfinite(f)
    if np.any(bad):
        if np.any(omega[bad] != 0.0):
            raise DomainError("spectra must be positive on (0, pi]")
        f[bad] = _continuous_integrand(S, S_tilde, alpha, omega[1:2] * 1e-6)
    h = omega[1] - omega[0]
    integral = h * (np.sum(f) - 0.5 * (f[0] + f[-1]))
    return float(integral / math.pi)


def _continuous_integrand(S, S_tilde, alpha, omega):
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.log(np.asarray(S(omega), dtype=float)) - np.log(np.asarray(S_tilde(omega), dtype=float))
    out = np.full(d.shape, np.nan)
    ok = np.isfinite(d)
    if alpha == 1.0:
        out[ok] = is_integrand(d[ok])
    else:
        out[ok] = renyi_integrand(d[ok], alpha) / (1.0 - alpha)
    return out


# --- variational representations -----------------------------------------------------


def _check_open_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")


def _is_mean(a: np.ndarray, b: np.ndarray, n: int) -> float:
    return float(np.sum(is_integrand(np.log(a) - np.log(b))) / n)


def primal_objective(S: SpectrumSamples, S_tilde: SpectrumSamples, S_prime: SpectrumSamples, alpha: float, spec: DivergenceSpec | None = None) -> float:
    """``(alpha D_1[S~ : S'] + (1 - alpha) D_1[S : S']) / (1 - alpha)`` on the grid."""
    _check_open_alpha(alpha)
    spec = spec or DivergenceSpec(alpha)
    m = spec.mask(S.grid)
    n = S.grid.n
    a, b, c = (X.floored(spec.floor).values[m] for X in (S, S_tilde, S_prime))
    return (alpha * _is_mean(b, c, n) + (1.0 - alpha) * _is_mean(a, c, n)) / (1.0 - alpha)


def dual_objective(S: SpectrumSamples, S_tilde: SpectrumSamples, S_prime: SpectrumSamples, alpha: float, spec: DivergenceSpec | None = None) -> float:
    """``(alpha D_1[S' : S] + (1 - alpha) D_1[S' : S~]) / (1 - alpha)`` on the grid."""
    _check_open_alpha(alpha)
    spec = spec or DivergenceSpec(alpha)
    m = spec.mask(S.grid)
    n = S.grid.n
    a, b, c = (X.floored(spec.floor).values[m] for X in (S, S_tilde, S_prime))
    return (alpha * _is_mean(c, a, n) + (1.0 - alpha) * _is_mean(c, b, n)) / (1.0 - alpha)


def variational_primal(S: SpectrumSamples, S_tilde: SpectrumSamples, alpha: float, spec: DivergenceSpec | None = None):
    """Arithmetic-mixture minimizer ``alpha S~ + (1 - alpha) S`` and the objective there."""
    _check_open_alpha(alpha)
    mix = SpectrumSamples(S.grid, alpha * S_tilde.values + (1.0 - alpha) * S.values)
    return mix, primal_objective(S, S_tilde, mix, alpha, spec)


def variational_dual(S: SpectrumSamples, S_tilde: SpectrumSamples, alpha: float, spec: DivergenceSpec | None = None):
    """Harmonic-mixture minimizer ``(alpha/S + (1 - alpha)/S~)^-1`` and the objective there."""
    _check_open_alpha(alpha)
    with np.errstate(divide="ignore"):
        inv = alpha / S.values + (1.0 - alpha) / S_tilde.values
        harm = np.where(np.isfinite(inv) & (inv > 0), 1.0 / inv, 0.0)
    mix = SpectrumSamples(S.grid, harm)
    return mix, dual_objective(S, S_tilde, mix, alpha, spec)


# --- finite-n Gaussian oracles --------------------------------------------------------


def toeplitz_covariance(S, n: int) -> np.ndarray:
    """The ``n x n`` covariance ``Sigma_n(S)`` of a process with spectrum ``S``."""
    from scipy.linalg import toeplitz

    if n > DENSE_CAP:
        raise InvalidArgumentError(f"n={n} exceeds the dense Toeplitz cap {DENSE_CAP}")
    return toeplitz(autocovariance_from_spectrum(S, n - 1, n))


def logdet_spd(A: np.ndarray) -> float:
    """Log-determinant of a symmetric positive-definite matrix via Cholesky.

    Retries with diagonal jitter ``1e-12 * trace/n``, growing tenfold up to
    three times, before giving up.
    """
    n = A.shape[0]
    base = 1e-12 * np.trace(A) / n
    for k in range(4):
        jitter = 0.0 if k == 0 else base * 10.0 ** (k - 1)
        try:
            L = np.linalg.cholesky(A + jitter * np.eye(n) if jitter else A)
        except np.linalg.LinAlgError:
            continue
        return float(2.0 * np.sum(np.log(np.diag(L))))
    raise LinearAlgebraError("matrix is not positive definite even after jitter")


def gaussian_renyi_finite(S, S_tilde, alpha: float, n: int) -> float:
    """Renyi divergence of order ``alpha`` between the length-``n`` Gaussian laws.

    ``(1/(2(1-alpha))) log det(alpha Sig~ + (1-alpha) Sig) / (det Sig^(1-alpha) det Sig~^alpha)``.
    """
    _check_open_alpha(alpha)
    A = toeplitz_covariance(S, n)
    B = toeplitz_covariance(S_tilde, n)
    val = logdet_spd(alpha * B + (1.0 - alpha) * A) - (1.0 - alpha) * logdet_spd(A) - alpha * logdet_spd(B)
    return val / (2.0 * (1.0 - alpha))


def gaussian_gamma_finite(S, S_tilde, gamma: float, n: int) -> float:
    """Gamma-divergence between the length-``n`` Gaussian laws with spectra ``S``, ``S~``.

    Closed form ``2 G = (1/gamma)[log det Sig(Sbar) - gamma/(1+gamma) log det Sig(S)
    - 1/(1+gamma) log det Sig(S~)]`` with ``Sbar = (gamma S + S~)/(1+gamma)``.
    """
    if not gamma > 0:
        raise InvalidArgumentError(f"gamma must be positive, got {gamma}")
    A = toeplitz_covariance(S, n)
    B = toeplitz_covariance(S_tilde, n)
    wa = gamma / (1.0 + gamma)
    wb = 1.0 / (1.0 + gamma)
    two_g = (logdet_spd(wa * A + wb * B) - wa * logdet_spd(A) - wb * logdet_spd(B)) / gamma
    return 0.5 * two_g


# --- contamination shifts -------------------------------------------------------------


class ShiftResult(NamedTuple):
    """Change of ``D[pilot : model]`` when ``z`` is added to the pilot at ``+-omega*``.

    ``exact`` is the closed-form change of the two affected summands.
    ``predicted`` is its large-``z`` expansion (error vanishes as ``z`` grows);
    ``leading`` keeps only the ``z``-dependent growth term.
    """

    exact: float
    predicted: float
    leading: float
    multiplicity: int


def contamination_shift(pilot: SpectrumSamples, model_value: float, omega_star: float, z: float, spec: DivergenceSpec) -> ShiftResult:
    """Exact and asymptotic change of the divergence under pilot contamination.

    For Itakura-Saito the per-frequency change is ``(z/S_model - log(1 + z/I))/n``,
    expanded as ``(z/S_model - log z + log I)/n``. For Renyi it is
    ``[log(1 + (1-a) z / (a S_model + (1-a) I)) - (1-a) log(1 + z/I)] / ((1-a) n)``,
    whose expansion is ``(a/(1-a)) log z / n`` plus a bounded ``theta``-dependent constant.
    """
    if z < 0:
        raise InvalidArgumentError(f"z must be nonnegative, got {z}")
    grid = pilot.grid
    i = grid.index_of(omega_star)
    if not spec.mask(grid)[i]:
        raise InvalidArgumentError(f"omega*={omega_star} is excluded from the divergence sum")
    if not model_value > 0:
        raise DomainError("model spectrum must be positive at omega*")
    mult = grid.multiplicity(omega_star)
    n = grid.n
    I = float(pilot.floored(spec.floor).values[i])
    s = float(model_value)
    if spec.is_itakura_saito:
        per = z / s - math.log1p(z / I)
        lead = z / s - math.log(z) if z > 0 else 0.0
        pred = lead + math.log(I) if z > 0 else 0.0
        return ShiftResult(mult * per / n, mult * pred / n, mult * lead / n, mult)
    a = spec.alpha
    mix = a * s + (1.0 - a) * I
    per = (math.log1p((1.0 - a) * z / mix) - (1.0 - a) * math.log1p(z / I)) / (1.0 - a)
    if z > 0:
        lead = a / (1.0 - a) * math.log(z)
        pred = lead + (math.log(1.0 - a) - math.log(mix) + (1.0 - a) * math.log(I)) / (1.0 - a)
    else:
        lead = pred = 0.0
    return ShiftResult(mult * per / n, mult * pred / n, mult * lead / n, mult)
