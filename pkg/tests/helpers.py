import numpy as np

from spectral_renyi import FreqGrid, SpectrumSamples


def random_positive_spectrum(rng, n, spread=2.0):
    """An even, strictly positive random spectrum on the n-point Fourier grid."""
    grid = FreqGrid(n)
    half = np.exp(spread * rng.standard_normal(n))
    vals = 0.5 * (half + half[grid.mirror])
    return SpectrumSamples(grid, vals)


def random_ar1_theta(rng):
    return np.array([rng.uniform(-1, 1), rng.uniform(-2.5, 2.5)])


def random_brune_theta(rng):
    return np.array([rng.uniform(0.5, 2), rng.uniform(0.3, 2.5), rng.uniform(0.5, 3)])

