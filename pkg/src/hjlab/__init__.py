"""hjlab: grid solver and regularity lab for degenerate fully nonlinear
Hamilton-Jacobi equations with superlinear Hamiltonians."""

from .grid import Grid, GridFunction, load_grid_function
from .hamiltonians import (
    CustomHamiltonian,
    Hamiltonian,
    PowerHamiltonian,
    gamma_exponent,
    h_eval,
    verify_growth,
    verify_p_continuity,
    verify_x_continuity,
)
from .operators import (
    Bellman,
    CustomOperator,
    EllipticOperator,
    NegativeTrace,
    PucciMinus,
    PucciPlus,
    WeightedTrace,
    check_a1,
    check_homogeneity,
    check_lemma_equivalence,
    operator_eval,
)
from .discretize import (
    DiscreteProblem,
    discrete_residual,
    gradient_one_sided,
    hessian_central,
    numerical_hamiltonian_lf,
)
from .regularity import (
    ModulusReport,
    StructuralConstants,
    barrier_phi,
    barrier_supersolution_check,
    estimate_exponent,
    holder_seminorm,
    theoretical_K,
    theoretical_L,
)
from .report import CheckReport, EquivalenceReport
from .solver import (
    NanAbortError,
    SolveOutcome,
    SolveParams,
    comparison_check,
    solve_dirichlet,
)
from .symmat import SymMat, positive_part, spectral_norm, sym_eigen
from .twophase import (
    FixedPointOutcome,
    OuterNonConvergenceError,
    PhaseDecomposition,
    TwoPhaseProblem,
    clamp_indicator,
    default_eps_schedule,
    epsilon_continuation,
    extract_phases,
    fixed_point_solve,
    mollify,
    residual_band_check,
    two_phase_rhs,
)

__version__ = "0.1.0"
