"""Trapped electron (geonium) beyond the dipole approximation.

Modules
-------
model_core
    Configuration types and parameter derivations.
numerics
    Polynomials, quadrature, small linear algebra, grids and peaks.
linear_drive
    Linear-coupling regime: mean trajectory, spectra, marginals.
steady_state_dynamics
    Quadratic regime: steady state, noise spectra, squeezing, stability.
cat_states
    Conditional cyclotron cats, Wigner functions, Kerr cat.
decoherence
    Thermal readout: characteristics, I_mn integrals, decohered Wigner functions.
cli
    Figure-reproduction command line.
"""

from .errors import (ConfigError, DegeneracyError, DomainError, GeoniumError, HierarchyError,
                     InstabilityError, IntegrationError, NumericalError, SingularMatrixError,
                     SteadyStateError, TruncationError, UnsupportedLimitError)
from .model_core import (BathParams, CatConfig, DissipationConfig, DriveConfig, ModeFrequencies,
                         ModelConfig, NumericsConfig, TrapParameters, load_config, parse_config)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DegeneracyError", "DomainError", "GeoniumError", "HierarchyError",
    "InstabilityError", "IntegrationError", "NumericalError", "SingularMatrixError",
    "SteadyStateError", "TruncationError", "UnsupportedLimitError",
    "BathParams", "CatConfig", "DissipationConfig", "DriveConfig", "ModeFrequencies",
    "ModelConfig", "NumericsConfig", "TrapParameters", "load_config", "parse_config",
]
