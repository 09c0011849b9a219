"""Positive stationary solutions of a discretized heat equation with a
nonlinear Neumann flux.

The stationary problem on a uniform mesh of n nodes is solved two ways:

* by shooting in the single unknown u1 (:mod:`.shooting`), which is exact up
  to a scalar root find and serves as the reference, and
* by Newton homotopy continuation in beta = 1/alpha (:mod:`.homotopy`),
  which costs O(n) per step through a tridiagonal Jacobian (:mod:`.jacobian`).

:mod:`.dynamics` integrates the time-dependent problem as a cross-check and
:mod:`.cli` exposes everything from the command line.  The hot loops live in
a compiled extension with a pure-Python fallback; ``BACKEND`` names the one
in use.
"""

__version__ = "0.1.0"

from ._core import BACKEND
from .dynamics import DynamicsConfig, DynamicsResult, integrate_to_steady, rhs
from .errors import *  # noqa: F401,F403
from .homotopy import (
    ContinuationConfig,
    NewtonResult,
    PathPoint,
    SolveReport,
    TheoreticalConstants,
    continuation_solve,
    delta_beta,
    initial_point,
    newton_solve,
    path_trace,
    phase2_iterations,
    select_beta_lower,
    theoretical_schedule,
)
from .jacobian import (
    ConditionSample,
    CramerReport,
    FactorizedInverse,
    TridiagonalMatrix,
    assemble,
    condition_phi_prime,
    condition_sweep,
    cramer_identity_check,
    determinant,
    inverse_factorized,
    leading_minors,
    residual,
    solve_tridiagonal,
)
from .nonlinearity import (
    NonlinearityPair,
    PowerLawPair,
    ValidationReport,
    c_alpha,
    eval_g,
    evaluate,
    g_inverse,
    growth_constant,
    pair_from_config,
    register_pair,
    validate_pair,
)
from .shooting import (
    Mesh,
    ShootingTrajectory,
    SolutionBounds,
    bracket_u1,
    flux_balance_residual,
    minimal_equation,
    oracle_solution,
    ratio_monotonicity_probe,
    shoot,
    solution_bounds,
    solve_u1_oracle,
)
