"""Pseudospectral NLS solver, time-derivative calculus and modified-energy diagnostics."""

__version__ = "0.1.0"

from .spectral import GridSpec, SpectralField, hamiltonian, mass, sobolev_norm  # noqa: E402
from .integrator import NLSParams, Trajectory, evolve  # noqa: E402
from .energies import EnergySpec, identity_check  # noqa: E402
from .initial import InitSpec, make_initial  # noqa: E402

__all__ = [
    "__version__",
    "GridSpec",
    "SpectralField",
    "hamiltonian",
    "mass",
    "sobolev_norm",
    "NLSParams",
    "Trajectory",
    "evolve",
    "EnergySpec",
    "identity_check",
    "InitSpec",
    "make_initial",
]
