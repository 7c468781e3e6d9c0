"""Parametric spectral families with analytic log-derivatives.

Every model exposes ``log_value``, ``grad_log`` and ``hess_log`` as vectorized
functions of the frequency, which is all the divergence objectives and the
optimizers need. New families plug in by subclassing :class:`SpectralModel`.
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .errors import DomainError, InvalidArgumentError, SingularFrequencyError
from .grid import FreqGrid

LOG_2PI = math.log(2.0 * math.pi)

# Clamp level for coordinates that must stay strictly positive.
POSITIVE_CLAMP = 1e-8


@dataclass(frozen=True)
class SpectralEval:
    """Model value and log-derivatives at a vector of frequencies.

    ``grad_log`` has shape ``(m, d)`` and ``hess_log`` shape ``(m, d, d)``.
    """

    value: np.ndarray
    grad_log: np.ndarray
    hess_log: np.ndarray


class SpectralModel(ABC):
    """A differentiable family ``theta -> S_theta(omega)``."""

    name: str
    param_names: tuple[str, ...]

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    def as_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise InvalidArgumentError(
                f"{self.name} expects {self.n_params} parameters, got shape {theta.shape}"
            )
        return theta

    def check(self, theta) -> np.ndarray:
        """Validate ``theta`` against the admissible set and return it as an array."""
        theta = self.as_theta(theta)
        if not np.all(np.isfinite(theta)):
            raise DomainError(f"{self.name} parameters must be finite, got {theta}")
        return theta

    def project(self, theta: np.ndarray) -> tuple[np.ndarray, bool]:
        """Map ``theta`` back into the admissible set; report whether it moved."""
        return theta, False

    @abstractmethod
    def log_value(self, theta, omega) -> np.ndarray: ...

    @abstractmethod
    def grad_log(self, theta, omega) -> np.ndarray: ...

    @abstractmethod
    def hess_log(self, theta, omega) -> np.ndarray: ...

    def value(self, theta, omega) -> np.ndarray:
        return np.exp(self.log_value(theta, omega))

    def evaluate(self, theta, omega) -> SpectralEval:
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        return SpectralEval(
            self.value(theta, omega), self.grad_log(theta, omega), self.hess_log(theta, omega)
        )

    def spectrum(self, theta):
        """The spectral density at ``theta`` as a vectorized callable of omega."""
        theta = self.check(theta)
        return lambda omega: self.value(theta, omega)

    def record(self, theta) -> dict:
        """Serializable ``{model, params}`` record."""
        return {"model": self.name, "params": [float(v) for v in self.as_theta(theta)]}


class AR1Model(SpectralModel):
    """AR(1) spectrum in unconstrained coordinates.

    ``theta = (log sigma, log((1 + rho) / (1 - rho)))`` so that
    ``S(omega) = sigma**2 / (2 pi (1 - 2 rho cos omega + rho**2))``.
    """

    name = "ar1"
    param_names = ("log_sigma", "logit_rho")

    def _parts(self, theta, omega):
        """``(log sigma, rho, 1 - rho, 1 + rho, 1 - cos omega, denominator)``.

        ``1 -+ rho`` come from the logistic function so they stay accurate when
        ``|rho|`` rounds to 1, and the denominator is written as
        ``(1 - rho)**2 + 2 rho (1 - cos omega)`` to avoid cancellation.
        """
        s, eta = self.check(theta)
        one_m = 2.0 * expit(-eta)
        one_p = 2.0 * expit(eta)
        rho = math.tanh(eta / 2.0)
        vers = 2.0 * np.sin(np.atleast_1d(np.asarray(omega, dtype=float)) / 2.0) ** 2
        return s, rho, one_m, one_p, vers, one_m * one_m + 2.0 * rho * vers

    def log_value(self, theta, omega):
        s, _, _, _, _, denom = self._parts(theta, omega)
        out = 2.0 * s - LOG_2PI - np.log(denom)
        return out if np.ndim(omega) else out.reshape(np.shape(omega))

    def grad_log(self, theta, omega):
        _, _, one_m, one_p, vers, denom = self._parts(theta, omega)
        g = np.empty(vers.shape + (2,))
        g[..., 0] = 2.0
        g[..., 1] = one_m * one_p * (one_m - vers) / denom  # (1 - rho^2)(cos w - rho) / denom
        return g

    def hess_log(self, theta, omega):
        _, rho, one_m, one_p, vers, denom = self._parts(theta, omega)
        c_minus_rho = one_m - vers
        one_m2 = one_m * one_p
        # d/drho of (1 - rho^2)(c - rho)/denom, chained with drho/deta = (1 - rho^2)/2
        dg = (-2.0 * rho * c_minus_rho - one_m2) / denom + 2.0 * one_m2 * c_minus_rho**2 / denom**2
        h = np.zeros(vers.shape + (2, 2))
        h[..., 1, 1] = dg * one_m2 / 2.0
        return h


def ar1_natural_to_unconstrained(sigma: float, rho: float) -> np.ndarray:
    """``(sigma, rho) -> (log sigma, log((1+rho)/(1-rho)))``."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if not -1.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (-1, 1), got {rho}")
    return np.array([math.log(sigma), math.log1p(rho) - math.log1p(-rho)])


def ar1_unconstrained_to_natural(theta) -> tuple[float, float]:
    """Inverse of :func:`ar1_natural_to_unconstrained`."""
    t1, t2 = np.asarray(theta, dtype=float)
    if not (np.isfinite(t1) and np.isfinite(t2)):
        raise DomainError(f"theta must be finite, got {theta}")
    return math.exp(t1), math.tanh(t2 / 2.0)


def ar1_plot_coordinates(theta) -> np.ndarray:
    """Display coordinates ``(log sigma, 2 (logistic(eta) - 1/2))``, i.e. ``(log sigma, rho)``.

    Works on a single ``theta`` or an array of shape ``(..., 2)``.
    """
    theta = np.asarray(theta, dtype=float)
    out = theta.copy()
    out[..., 1] = 2.0 * (1.0 / (1.0 + np.exp(-theta[..., 1])) - 0.5)
    return out


class BruneModel(SpectralModel):
    """Brune source spectrum with attenuation, for velocity records.

    ``S(omega) = omega**2 sigma**2 / (1 + (omega/omega_c)**2)**2 * exp(-|omega|/Q)``
    in raw ``(sigma, omega_c, Q)`` coordinates. The attenuation term uses
    ``|omega|`` so that the density is even on ``[-pi, pi]``.
    """

    name = "brune"
    param_names = ("sigma", "omega_c", "Q")

    def check(self, theta):
        theta = super().check(theta)
        if np.any(theta <= 0):
            raise DomainError(f"Brune parameters must be positive, got {theta}")
        return theta

    def project(self, theta):
        if np.all(theta > 0) or not np.all(np.isfinite(theta)):
            return theta, False
        return np.maximum(theta, POSITIVE_CLAMP), True

    @staticmethod
    def _abs_nonzero(omega):
        a = np.abs(np.asarray(omega, dtype=float))
        if np.any(a == 0):
            raise SingularFrequencyError("Brune log-spectrum is singular at omega = 0")
        return a

    def value(self, theta, omega):
        sigma, wc, q = self.check(theta)
        a = np.abs(np.asarray(omega, dtype=float))
        return a * a * sigma * sigma / (1.0 + (a / wc) ** 2) ** 2 * np.exp(-a / q)

    def log_value(self, theta, omega):
        sigma, wc, q = self.check(theta)
        a = self._abs_nonzero(omega)
        return 2.0 * np.log(a) + 2.0 * math.log(sigma) - 2.0 * np.log1p((a / wc) ** 2) - a / q

    def grad_log(self, theta, omega):
        sigma, wc, q = self.check(theta)
        a = np.atleast_1d(self._abs_nonzero(omega))
        u = (a / wc) ** 2
        g = np.empty(a.shape + (3,))
        g[..., 0] = 2.0 / sigma
        g[..., 1] = 4.0 * u / (wc * (1.0 + u))
        g[..., 2] = a / (q * q)
        return g

    def hess_log(self, theta, omega):
        sigma, wc, q = self.check(theta)
        a = np.atleast_1d(self._abs_nonzero(omega))
        u = (a / wc) ** 2
        h = np.zeros(a.shape + (3, 3))
        h[..., 0, 0] = -2.0 / (sigma * sigma)
        h[..., 1, 1] = -4.0 * u * (3.0 + u) / (wc * wc * (1.0 + u) ** 2)
        h[..., 2, 2] = -2.0 * a / q**3
        return h


class LogCoordinates(SpectralModel):
    """Reparametrize a positive-parameter model by ``phi = log(theta)``."""

    def __init__(self, base: SpectralModel):
        self.base = base
        self.name = f"log-{base.name}"
        self.param_names = tuple(f"log_{p}" for p in base.param_names)

    def _theta(self, phi):
        return np.exp(self.check(phi))

    def log_value(self, phi, omega):
        return self.base.log_value(self._theta(phi), omega)

    def value(self, phi, omega):
        return self.base.value(self._theta(phi), omega)

    def grad_log(self, phi, omega):
        theta = self._theta(phi)
        return self.base.grad_log(theta, omega) * theta

    def hess_log(self, phi, omega):
        theta = self._theta(phi)
        g = self.base.grad_log(theta, omega)
        h = self.base.hess_log(theta, omega) * np.multiply.outer(theta, theta)
        idx = np.arange(len(theta))
        h[..., idx, idx] += g * theta
        return h


MODELS: dict[str, type[SpectralModel]] = {"ar1": AR1Model, "brune": BruneModel}


def get_model(name: str, log_coordinates: bool = False) -> SpectralModel:
    try:
        model = MODELS[name]()
    except KeyError:
        raise InvalidArgumentError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
    return LogCoordinates(model) if log_coordinates else model


def model_from_record(record: dict) -> tuple[SpectralModel, np.ndarray]:
    """Inverse of :meth:`SpectralModel.record`."""
    model = get_model(record["model"])
    return model, model.check(record["params"])


def eval_ar1(theta, omega) -> SpectralEval:
    return AR1Model().evaluate(theta, omega)


def eval_brune(theta, omega) -> SpectralEval:
    return BruneModel().evaluate(theta, omega)


def model_bound_constants(
    model: SpectralModel,
    box: Sequence[tuple[float, float]],
    grid: FreqGrid,
    points_per_axis: int = 11,
) -> tuple[float, float]:
    """Lattice estimates of the smoothness constants ``(U1, U2)`` over a box.

    ``U1`` is the largest of ``||grad S||``, ``||grad log S||`` and
    ``||grad log S / S||`` over the theta lattice and the included grid
    frequencies; ``U2`` is the largest grid-average of the Hessian operator
    norm of ``log S``. Lattices built with ``k`` and ``10*(k-1)+1`` points are
    nested, so refinement can only increase both estimates.
    """
    box = [(float(lo), float(hi)) for lo, hi in box]
    if len(box) != model.n_params or any(not lo <= hi for lo, hi in box):
        raise InvalidArgumentError(f"box must give {model.n_params} (lo, hi) pairs")
    for corner in itertools.product(*box):
        model.check(corner)  # raises DomainError when the box leaves the admissible set
    idx, w = grid.half
    omega = grid.freqs[idx]
    axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in box]
    u1 = 0.0
    u2 = 0.0
    for theta in itertools.product(*axes):
        theta = np.array(theta)
        logs = model.log_value(theta, omega)
        s = np.exp(logs)
        g = model.grad_log(theta, omega)
        gn = np.linalg.norm(g, axis=-1)
        u1 = max(u1, float(np.max(gn)), float(np.max(s * gn)), float(np.max(gn / s)))
        hn = np.linalg.norm(model.hess_log(theta, omega), ord=2, axis=(-2, -1))
        u2 = max(u2, float(np.sum(w * hn) / grid.n))
    return u1, u2
