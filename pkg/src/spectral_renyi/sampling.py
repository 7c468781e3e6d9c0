"""Gaussian simulation, periodograms, smoothing and frequency-domain contamination."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Callable, NamedTuple, Sequence, Union

import numpy as np

from .errors import CapabilityError, InvalidArgumentError
from .grid import FreqGrid, SpectrumSamples, autocovariance_from_spectrum

#: Recorded alongside experiment output so runs can be reproduced bit for bit.
RNG_ALGORITHM = "numpy.random.PCG64 seeded by SeedSequence(entropy=seed, spawn_key=(stream_id,))"

#: Largest series length for which the dense square-root sampler is attempted.
DENSE_CAP = 8192


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream: replication ``stream_id`` of master ``seed``."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class TimeSeries:
    """Observations ``x_1..x_n`` at unit sampling rate."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or len(v) < 2:
            raise InvalidArgumentError("a time series needs at least 2 observations")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("time series values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)


class TrendComponent(NamedTuple):
    z: float
    frequency: float
    phase: str = "sin"


@dataclass(frozen=True)
class ContaminationSpec:
    """Either a direct pilot perturbation or additive periodic trends."""

    kind: str
    omega: float | None = None
    z: float | None = None
    components: tuple[TrendComponent, ...] = field(default=())

    def __post_init__(self):
        if self.kind == "pilot-additive":
            if self.omega is None or self.z is None or self.z < 0:
                raise InvalidArgumentError("pilot contamination needs omega and z >= 0")
        elif self.kind == "trend":
            comps = tuple(TrendComponent(*c) for c in self.components)
            for c in comps:
                if c.z < 0 or not 0 < c.frequency < math.pi or c.phase not in ("sin", "cos"):
                    raise InvalidArgumentError(f"invalid trend component {c}")
            object.__setattr__(self, "components", comps)
        else:
            raise InvalidArgumentError(f"unknown contamination kind {self.kind!r}")

    @classmethod
    def pilot(cls, omega: float, z: float) -> "ContaminationSpec":
        return cls("pilot-additive", omega=omega, z=z)

    @classmethod
    def trend(cls, components: Sequence) -> "ContaminationSpec":
        return cls("trend", components=tuple(components))


SpectrumLike = Union[SpectrumSamples, Callable[[np.ndarray], np.ndarray]]


def circulant_eigenvalues(acov: np.ndarray) -> np.ndarray:
    """Eigenvalues of the minimal circulant embedding of ``Toeplitz(acov)``."""
    row = np.concatenate([acov, acov[-2:0:-1]]) if len(acov) > 2 else acov.copy()
    return np.fft.fft(row).real


def simulate_gaussian(S: SpectrumLike, n: int, rng: RngStream) -> TimeSeries:
    """Draw a zero-mean stationary Gaussian series of length ``n`` with spectrum ``S``.

    The covariance is exactly ``Toeplitz(autocovariance_from_spectrum(S))``.
    Circulant embedding is used when the embedding is nonnegative definite;
    otherwise a dense symmetric square root (up to ``n = 8192``).
    """
    if n < 2:
        raise InvalidArgumentError("n must be at least 2")
    acov = autocovariance_from_spectrum(S, n - 1, n)
    gen = rng.generator()
    lam = circulant_eigenvalues(acov)
    if lam.min() >= -1e-10 * lam.max():
        m = len(lam)
        lam = np.clip(lam, 0.0, None)
        w = gen.standard_normal(m) + 1j * gen.standard_normal(m)
        y = np.fft.fft(np.sqrt(lam / m) * w)
        return TimeSeries(y.real[:n])
    if n > DENSE_CAP:
        raise CapabilityError(
            f"circulant embedding is indefinite and n={n} exceeds the dense cap {DENSE_CAP}"
        )
    return TimeSeries(_dense_sample(acov, gen))


def _dense_sample(acov: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    from scipy.linalg import toeplitz

    vals, vecs = np.linalg.eigh(toeplitz(acov))
    root = vecs * np.sqrt(np.clip(vals, 0.0, None))
    return root @ gen.standard_normal(len(acov))


def periodogram(x: TimeSeries | np.ndarray, demean: bool = True, exclude_zero: bool = True) -> SpectrumSamples:
    """``I(omega) = |sum_t x_t exp(-i t omega)|**2 / (2 pi n)`` on the Fourier grid."""
    v = np.asarray(x.values if isinstance(x, TimeSeries) else x, dtype=float)
    if len(v) < 2:
        raise InvalidArgumentError("periodogram needs at least 2 observations")
    if demean:
        v = v - v.mean()
    n = len(v)
    power = np.abs(np.fft.fft(v)) ** 2 / (2.0 * math.pi * n)
    grid = FreqGrid(n, exclude_zero)
    vals = power[grid.fft_index]
    vals = 0.5 * (vals + vals[grid.mirror])  # exact evenness despite FFT rounding
    return SpectrumSamples(grid, vals)


def modified_daniell_kernel(m: int) -> np.ndarray:
    """Weights ``1/(2m)`` for ``|j| < m`` and ``1/(4m)`` at ``j = +-m`` (length ``2m+1``)."""
    if m < 1:
        raise InvalidArgumentError(f"span must be >= 1, got {m}")
    k = np.full(2 * m + 1, 1.0 / (2 * m))
    k[0] = k[-1] = 1.0 / (4 * m)
    return k


def daniell_kernel(spans: Sequence[int]) -> np.ndarray:
    """Convolution of modified Daniell kernels, one per span."""
    k = np.ones(1)
    for m in spans:
        k = np.convolve(k, modified_daniell_kernel(int(m)))
    return k


def smooth_daniell(I: SpectrumSamples, spans: Sequence[int] = (3, 5)) -> SpectrumSamples:
    """Circularly convolve a spectrum with composed modified Daniell kernels."""
    spans = [int(m) for m in spans]
    if not spans or any(m < 1 for m in spans):
        raise InvalidArgumentError(f"spans must be positive integers, got {spans}")
    n = I.grid.n
    half = sum(spans)
    if 2 * half + 1 >= n:
        raise InvalidArgumentError(f"spans {spans} need more than {2 * half + 1} frequencies, n={n}")
    k = daniell_kernel(spans)
    out = np.zeros(n)
    for j, wj in zip(range(-half, half + 1), k):
        out += wj * np.roll(I.values, j)
    out = 0.5 * (out + out[I.grid.mirror])
    return SpectrumSamples(I.grid, out)


def contaminate_pilot(I: SpectrumSamples, omega_star: float, z: float) -> SpectrumSamples:
    """Add ``z`` at ``+-omega_star`` (once when ``omega_star`` is 0 or pi)."""
    if z < 0:
        raise InvalidArgumentError(f"z must be nonnegative, got {z}")
    i = I.grid.index_of(omega_star)
    vals = np.array(I.values)
    vals[i] += z
    j = I.grid.mirror[i]
    if j != i:
        vals[j] += z
    return SpectrumSamples(I.grid, vals)


def trend_signal(n: int, components: Sequence[TrendComponent]) -> np.ndarray:
    """``sum_j sqrt(8 pi z_j / n) * phase(A_j t)`` for ``t = 1..n``."""
    t = np.arange(1, n + 1, dtype=float)
    out = np.zeros(n)
    for c in (TrendComponent(*c) for c in components):
        f = np.sin if c.phase == "sin" else np.cos
        out += math.sqrt(8.0 * math.pi * c.z / n) * f(c.frequency * t)
    return out


def inject_trend(x: TimeSeries, spec: ContaminationSpec) -> TimeSeries:
    """Add deterministic periodic components to a series."""
    if spec.kind != "trend":
        raise InvalidArgumentError("inject_trend needs a trend contamination spec")
    return TimeSeries(x.values + trend_signal(len(x), spec.components))


def write_series_csv(path: Union[str, PathLike], x: TimeSeries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x"])
        for t, v in enumerate(x.values, start=1):
            w.writerow([t, repr(float(v))])


def read_series_csv(path: Union[str, PathLike]) -> TimeSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["t", "x"]:
        raise InvalidArgumentError(f"{path}: expected header 't,x'")
    return TimeSeries(np.array([float(r[1]) for r in rows[1:]]))
