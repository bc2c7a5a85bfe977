"""L1 semi-implicit solvers for time-fractional reaction-diffusion equations."""

from ._validation import FracstepError, NonFiniteError, SolverFault
from .fractional_time import (
    L1Weights,
    SolutionHistory,
    TimeGrid,
    compute_weights,
    discrete_caputo,
    history_combination,
    step_coefficient,
)
from .models import (
    BoundsMonitor,
    PredatorPreyParams,
    check_constraints,
    cosine_perturbation,
    equilibrium_solve,
    reaction_f,
    reaction_g,
    run_system,
    step_system,
)
from .scheme import ScalarProblem, SchemeState, run_scalar, stability_advisory, step_scalar
from .spatial import Boundary, SpaceGrid, TridiagonalSystem, assemble_system, laplacian_apply, thomas_solve
from .verify import (
    ManufacturedCase,
    cosine_neumann_case,
    error_at_T,
    sine_dirichlet_case,
    spatial_study,
    temporal_study,
)

__version__ = "0.1.0"
