"""Continuous-time quantum search on the hypercube.

Quantum walk, adiabatic and hybrid interpolated schedules, with dephasing,
multi-run strategy optimisation and problem-misspecification analysis.
"""

__version__ = "0.1.0"

from .exceptions import (
    CapacityError,
    ConvergenceError,
    HybridSearchError,
    InfeasibleError,
    NumericalError,
)
from .model import (
    ACModel,
    HamiltonianMatrix,
    Representation,
    SearchSystem,
    Storage,
    build_ac_hamiltonian,
    build_full_hamiltonian,
    build_line_hamiltonian,
    gauge_map,
)
from .schedules import (
    HybridSpec,
    Schedule,
    ScheduleKind,
    ac_schedule,
    analytic_schedule,
    hybrid_coefficients,
    linear_schedule,
    numeric_schedule,
    optimal_beta,
    optimal_gamma,
    r1,
    r2,
)
from .spectral import (
    GapProfile,
    MinGapResult,
    OverlapReport,
    approx_gap,
    eigenvalue_equation_roots,
    gap_profile,
    ground_overlaps,
    min_gap,
    transition_width,
)
from .dynamics import (
    EvolutionConfig,
    EvolutionResult,
    evolve_closed,
    evolve_open,
    qw_first_peak,
)
from .strategy import (
    FitModel,
    FitResult,
    MisspecConfig,
    MisspecKind,
    StrategyOutcome,
    misspec_gap,
    misspec_position,
    multirun_optimize,
    noisy_strategy,
    scaling_fit,
)
