"""Frequency grids, tabulated spectra and basic spectral functionals.

All spectra are two-sided densities on ``[-pi, pi]`` in power per radian,
sampled at the Fourier frequencies ``2*pi*t/n`` for
``t = -ceil(n/2)+1, ..., floor(n/2)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from os import PathLike
from typing import Callable, Union

import numpy as np

from .errors import DomainError, InvalidArgumentError

SpectrumFunction = Callable[[np.ndarray], np.ndarray]

# Relative tolerance used when checking even symmetry of tabulated spectra.
EVEN_RTOL = 1e-9


@dataclass(frozen=True)
class FreqGrid:
    """The Fourier frequencies of a length-``n`` series, in ascending order.

    ``exclude_zero`` is a policy flag only: the grid always stores
    ``omega = 0``, but divergence sums skip it when the flag is set.
    """

    n: int
    exclude_zero: bool = True
    freqs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise InvalidArgumentError(f"grid size must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        freqs = 2.0 * np.pi * self.t / self.n
        freqs.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)

    @cached_property
    def t(self) -> np.ndarray:
        """Integer frequency indices, ``-ceil(n/2)+1 .. floor(n/2)``."""
        n = self.n
        return np.arange(-math.ceil(n / 2) + 1, n // 2 + 1)

    @property
    def zero_index(self) -> int:
        return math.ceil(self.n / 2) - 1

    @cached_property
    def fft_index(self) -> np.ndarray:
        """Position of each grid frequency in numpy's FFT output ordering."""
        return np.mod(self.t, self.n)

    @cached_property
    def mirror(self) -> np.ndarray:
        """Index of ``-omega`` for every grid frequency (0 and pi map to themselves)."""
        mt = -self.t
        mt = np.where(mt < self.t[0], self.t, mt)  # -pi is identified with pi
        return mt - self.t[0]

    @cached_property
    def included(self) -> np.ndarray:
        """Boolean mask of the frequencies that enter divergence sums."""
        mask = np.ones(self.n, dtype=bool)
        # n == 1 keeps {0}: excluding it would leave nothing to sum.
        if self.exclude_zero and self.n > 1:
            mask[self.zero_index] = False
        return mask

    @cached_property
    def half(self) -> tuple[np.ndarray, np.ndarray]:
        """Indices of included frequencies with ``omega >= 0`` and their multiplicities.

        Summing ``w * f(omega)`` over the half grid equals summing ``f`` over all
        included frequencies whenever ``f`` is even.
        """
        idx = np.flatnonzero(self.included & (self.t >= 0))
        w = np.where(self.mirror[idx] == idx, 1.0, 2.0)
        return idx, w

    def multiplicity(self, omega: float) -> int:
        """Number of grid points in ``{omega, -omega}`` (1 at 0 and pi, else 2)."""
        i = self.index_of(omega)
        return 1 if self.mirror[i] == i else 2

    def index_of(self, omega: float) -> int:
        """Grid index of ``omega``; raises if ``omega`` is not a grid frequency."""
        i = int(np.argmin(np.abs(self.freqs - omega)))
        if abs(self.freqs[i] - omega) > 1e-9 * max(1.0, abs(omega)):
            raise InvalidArgumentError(f"omega={omega!r} is not a Fourier frequency of n={self.n}")
        return i

    def nearest(self, omega: float) -> float:
        """The grid frequency closest to ``omega``."""
        return float(self.freqs[int(np.argmin(np.abs(self.freqs - omega)))])


def frequency_grid(n: int, exclude_zero: bool = True) -> FreqGrid:
    """Build the Fourier frequency grid of a length-``n`` series."""
    if isinstance(n, (int, np.integer)) and n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    return FreqGrid(n, exclude_zero)


@dataclass(frozen=True)
class SpectrumSamples:
    """A nonnegative even spectrum tabulated on a :class:`FreqGrid`."""

    grid: FreqGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise InvalidArgumentError(
                f"expected {self.grid.n} spectrum values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("spectrum values must be finite")
        if np.any(values < 0):
            raise DomainError("spectrum values must be nonnegative")
        mirrored = values[self.grid.mirror]
        scale = max(float(np.max(np.abs(values))), np.finfo(float).tiny)
        if np.any(np.abs(values - mirrored) > EVEN_RTOL * scale):
            raise InvalidArgumentError("spectrum values are not even in omega")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: FreqGrid, f: SpectrumFunction) -> "SpectrumSamples":
        return cls(grid, np.asarray(f(grid.freqs), dtype=float))

    @property
    def freqs(self) -> np.ndarray:
        return self.grid.freqs

    def floored(self, rel_floor: float | None) -> "SpectrumSamples":
        """Clamp values below at ``rel_floor * mean(values)``; ``None`` or 0 is a no-op."""
        if not rel_floor:
            return self
        level = rel_floor * float(np.mean(self.values))
        return SpectrumSamples(self.grid, np.maximum(self.values, level))

    def scaled(self, c: float) -> "SpectrumSamples":
        return SpectrumSamples(self.grid, c * self.values)

    def included_values(self) -> np.ndarray:
        return self.values[self.grid.included]


@dataclass(frozen=True)
class InnovationVariance:
    value: float

    def __float__(self) -> float:
        return self.value


def innovation_variance(S: SpectrumSamples) -> InnovationVariance:
    """Kolmogorov-Szego functional ``exp(mean log S)`` over the included frequencies.

    The value is in the spectrum's own units (power per radian), so an AR(1)
    with unit innovation standard deviation gives ``1 / (2 pi)``.
    """
    vals = S.included_values()
    if np.any(vals <= 0):
        raise DomainError("innovation variance needs a strictly positive spectrum")
    return InnovationVariance(float(np.exp(np.mean(np.log(vals)))))


def quadrature_size(n: int) -> int:
    """Size of the refined periodic grid used for autocovariance quadrature."""
    return max(8 * n, 4096)


def autocovariance_from_spectrum(
    S: Union[SpectrumSamples, SpectrumFunction],
    max_lag: int,
    n: int | None = None,
) -> np.ndarray:
    """Autocovariances ``R(0..max_lag)`` with ``R(h) = int cos(h w) S(w) dw``.

    ``S`` is either tabulated (the rule then runs on its own grid) or a
    vectorized callable, in which case ``n`` is the series length and the
    integral is evaluated on a periodic grid of ``max(8n, 4096)`` points.
    On a periodic integrand the composite trapezoid rule reduces to this
    equispaced sum, which the FFT evaluates for all lags at once.
    """
    if isinstance(S, SpectrumSamples):
        n_series = S.grid.n if n is None else n
        if max_lag < 0 or max_lag >= n_series or max_lag >= S.grid.n:
            raise InvalidArgumentError(f"max_lag={max_lag} must be in [0, n) for n={n_series}")
        m = S.grid.n
        vals = np.empty(m)
        vals[S.grid.fft_index] = S.values
    else:
        if n is None:
            raise InvalidArgumentError("a series length n is required for callable spectra")
        if max_lag < 0 or max_lag >= n:
            raise InvalidArgumentError(f"max_lag={max_lag} must be in [0, n) for n={n}")
        m = quadrature_size(n)
        g = FreqGrid(m, exclude_zero=False)
        vals = np.empty(m)
        vals[g.fft_index] = np.asarray(S(g.freqs), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DomainError("spectrum is not finite on the quadrature grid")
    R = np.fft.fft(vals).real * (2.0 * np.pi / m)
    return R[: max_lag + 1].copy()


def write_spectrum_csv(path: Union[str, PathLike], S: SpectrumSamples) -> None:
    """Write ``omega,value`` rows in ascending frequency."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["omega", "value"])
        for om, v in zip(S.freqs, S.values):
            w.writerow([repr(float(om)), repr(float(v))])


def read_spectrum_csv(path: Union[str, PathLike], exclude_zero: bool = True) -> SpectrumSamples:
    """Read a spectrum CSV written by :func:`write_spectrum_csv`."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["omega", "value"]:
        raise InvalidArgumentError(f"{path}: expected header 'omega,value'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float).reshape(-1, 2)
    grid = FreqGrid(len(data), exclude_zero)
    if not np.allclose(data[:, 0], grid.freqs, rtol=0, atol=1e-9):
        raise InvalidArgumentError(f"{path}: frequencies are not the Fourier grid of n={len(data)}")
    return SpectrumSamples(grid, data[:, 1])
