"""Few-body solver for identical bosons at a narrow Feshbach resonance."""

from .model import (
    DimerSolution,
    MomentumDistribution,
    ResonanceParams,
    SolverError,
    StmSolution,
    TrimerLevel,
    validate_params,
)
from .numerics import RadialGrid, build_log_gauss_grid
from .threebody import (
    efimov_channel_root,
    energy_relation_residual_trimer,
    reconstruct_nk,
    solve_amplitude,
    solve_levels,
    spectrum_grid,
    thomas_collapse_probe,
)
from .twobody import dimer_kappa, dimer_nk, dimer_observables, energy_relation_residual_dimer, f0, f_eps

__version__ = "0.1.0"

__all__ = [
    "DimerSolution",
    "MomentumDistribution",
    "ResonanceParams",
    "SolverError",
    "StmSolution",
    "TrimerLevel",
    "validate_params",
    "RadialGrid",
    "build_log_gauss_grid",
    "efimov_channel_root",
    "energy_relation_residual_trimer",
    "reconstruct_nk",
    "solve_amplitude",
    "solve_levels",
    "spectrum_grid",
    "thomas_collapse_probe",
    "dimer_kappa",
    "dimer_nk",
    "dimer_observables",
    "energy_relation_residual_dimer",
    "f0",
    "f_eps",
]
