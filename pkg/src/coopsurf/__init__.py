"""Cooperative radiation of atom arrays above a dielectric surface."""

__version__ = "0.1.0"

from .coupling import (
    FROM_BARE,
    FROM_SHIFTED,
    AtomArray,
    CouplingMatrices,
    EvolutionMatrix,
    build_matrices,
    casimir_shift_and_rate,
    evolution_matrix,
    extract_c3,
    mode_spectrum,
)
from .dielectric import SAPPHIRE, VACUUM, permittivity, surface_response
from .dynamics import (
    DriveField,
    fit_decay,
    fluorescence,
    free_decay,
    simulate_decay,
    steady_state,
    sweep_decay_vs_height,
)
from .green_surface import REDUCED_SCALE, PHYSICAL_SCALE, SommerfeldConfig

__all__ = [
    "FROM_BARE", "FROM_SHIFTED", "AtomArray", "CouplingMatrices", "EvolutionMatrix",
    "build_matrices", "casimir_shift_and_rate", "evolution_matrix", "extract_c3", "mode_spectrum",
    "SAPPHIRE", "VACUUM", "permittivity", "surface_response",
    "DriveField", "fit_decay", "fluorescence", "free_decay", "simulate_decay", "steady_state",
    "sweep_decay_vs_height", "REDUCED_SCALE", "PHYSICAL_SCALE", "SommerfeldConfig",
]
