"""Sojourn-time densities of the M/M/1 processor-sharing queue.

Exact numerical inversion, fixed-load and heavy-traffic asymptotic
regimes, dominant singularities, and a Monte Carlo simulator.
"""

from .exact import (
    atom_mass,
    conditional_cdf,
    conditional_density,
    invert_density,
    lattice_atom,
    mean_sojourn,
    unconditional_density,
    waiting_lt,
    waiting_moments,
)
from .model import (
    ConvergenceError,
    DensityValue,
    DomainError,
    InversionConfig,
    MM1PSError,
    ModelParams,
    PoleProximityError,
    RunawayError,
    SolverError,
    UnsupportedOrderError,
)
from .regimes_fixed import classify_regime, flatto_tail, tail_constants
from .simulator import SimConfig, SojournSample, sample_sojourn
from .singularities import dominant_singularity, heavy_roots, psi_from_sigma

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DensityValue",
    "DomainError",
    "InversionConfig",
    "MM1PSError",
    "ModelParams",
    "PoleProximityError",
    "RunawayError",
    "SimConfig",
    "SojournSample",
    "SolverError",
    "UnsupportedOrderError",
    "atom_mass",
    "classify_regime",
    "conditional_cdf",
    "conditional_density",
    "dominant_singularity",
    "flatto_tail",
    "heavy_roots",
    "invert_density",
    "lattice_atom",
    "mean_sojourn",
    "psi_from_sigma",
    "sample_sojourn",
    "tail_constants",
    "unconditional_density",
    "waiting_lt",
    "waiting_moments",
]
