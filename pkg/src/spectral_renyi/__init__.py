"""Spectral Rényi divergences and robust minimum-divergence spectral estimation."""

from .divergence import (
    DivergenceSpec,
    contamination_shift,
    gaussian_gamma_finite,
    gaussian_renyi_finite,
    itakura_saito_discrete,
    renyi_continuous,
    renyi_discrete,
    variational_dual,
    variational_primal,
)
from .errors import (
    CapabilityError,
    ConfigError,
    DomainError,
    InvalidArgumentError,
    LinearAlgebraError,
    SingularFrequencyError,
    SpectralRenyiError,
)
from .grid import (
    FreqGrid,
    SpectrumSamples,
    autocovariance_from_spectrum,
    frequency_grid,
    innovation_variance,
)
from .models import (
    AR1Model,
    BruneModel,
    SpectralModel,
    ar1_natural_to_unconstrained,
    ar1_unconstrained_to_natural,
    get_model,
    model_bound_constants,
)
from .optimize import (
    ArmijoConfig,
    Objective,
    OptimPath,
    gd_armijo,
    gd_fixed,
    is_gradient,
    is_instability_probe,
    path_distance,
    renyi_gradient,
    renyi_hessian,
    smoothness_bound,
)
from .sampling import (
    ContaminationSpec,
    RngStream,
    TimeSeries,
    contaminate_pilot,
    inject_trend,
    periodogram,
    simulate_gaussian,
    smooth_daniell,
)

__version__ = "0.1.0"

__all__ = [
    "DivergenceSpec",
    "contamination_shift",
    "gaussian_gamma_finite",
    "gaussian_renyi_finite",
    "itakura_saito_discrete",
    "renyi_continuous",
    "renyi_discrete",
    "variational_dual",
    "variational_primal",
    "CapabilityError",
    "ConfigError",
    "DomainError",
    "InvalidArgumentError",
    "LinearAlgebraError",
    "SingularFrequencyError",
    "SpectralRenyiError",
    "FreqGrid",
    "SpectrumSamples",
    "autocovariance_from_spectrum",
    "frequency_grid",
    "innovation_variance",
    "AR1Model",
    "BruneModel",
    "SpectralModel",
    "ar1_natural_to_unconstrained",
    "ar1_unconstrained_to_natural",
    "get_model",
    "model_bound_constants",
    "ArmijoConfig",
    "Objective",
    "OptimPath",
    "gd_armijo",
    "gd_fixed",
    "is_gradient",
    "is_instability_probe",
    "path_distance",
    "renyi_gradient",
    "renyi_hessian",
    "smoothness_bound",
    "ContaminationSpec",
    "RngStream",
    "TimeSeries",
    "contaminate_pilot",
    "inject_trend",
    "periodogram",
    "simulate_gaussian",
    "smooth_daniell",
]
