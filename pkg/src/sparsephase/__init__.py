"""Phase retrieval with a sparsity constraint on the pupil phase.

The solver combines Gerchberg-Saxton iterations with a hard-thresholding
step applied to the phase, and is equivalent to cyclic projections onto
three constraint sets.
"""

from sparsephase.grid import SupportSet, frobenius_norm, principal_arg, zero_norm
from sparsephase.transform import DiversityOperator, dft2, idft2
from sparsephase.constraints import (
    ProblemInstance,
    brute_force_sparse_phase_projection,
    distance_to_set,
    project_amplitude,
    project_fourier_magnitude,
    project_modulus,
    project_sparse_phase,
    select_support,
)
from sparsephase.solver import (
    IterationTrace,
    SolverConfig,
    SolverResult,
    cyclic_step,
    estimate_linear_rate,
    gs_step,
    run,
    srop_step,
)
from sparsephase.simulate import SimulationSpec, simulate_instance
from sparsephase.metrics import change_norm, measured_sparsity, rms_phase_error

__version__ = "0.1.0"

__all__ = [
    "SupportSet",
    "frobenius_norm",
    "principal_arg",
    "zero_norm",
    "DiversityOperator",
    "dft2",
    "idft2",
    "ProblemInstance",
    "brute_force_sparse_phase_projection",
    "distance_to_set",
    "project_amplitude",
    "project_fourier_magnitude",
    "project_modulus",
    "project_sparse_phase",
    "select_support",
    "IterationTrace",
    "SolverConfig",
    "SolverResult",
    "cyclic_step",
    "estimate_linear_rate",
    "gs_step",
    "run",
    "srop_step",
    "SimulationSpec",
    "simulate_instance",
    "change_norm",
    "measured_sparsity",
    "rms_phase_error",
]
