"""Smallest conic singular values of matrices over polyhedral cones.

The central quantity is sigma_min(A; K), the minimum of ||A x|| over unit
vectors constrained to a polyhedral cone K.  The package computes it by
maximizing the Lagrangian dual function over the polar cone with a
quasi-Newton method, certifies results through the duality gap, and ships
brute-force oracles plus a sensor-placement design demo built on the same
solver.
"""

from .cones import (
    ConeG,
    ConeH,
    LeftInverses,
    cone_h,
    format_cone_g,
    format_cone_h,
    left_inverses,
    load_cone_file,
    member_g,
    member_h,
    nnqp_bb,
    polar_g,
    polar_h,
    project_g,
    project_h,
)
from .dual_solver import (
    ConicSvResult,
    DualState,
    SolverOptions,
    bfgs_update_inverse,
    duality_gap,
    qn_step,
    recover_primal,
    solve,
    supergradient,
)
from .gridapp import (
    MeasurementModel,
    RealifiedModel,
    design_objective,
    greedy_design,
    information_matrix,
    load_model_file,
    load_vector_file,
    realify,
    tangent_cone,
)
from .oracle import OracleResult, grid_oracle, pg_oracle, sphere_qp_scan
from .rng import SplitMix64, child_seed
from .sphere_qp import (
    EigsplitIndex,
    SpectralDecomposition,
    SphereQpSolution,
    classify,
    decompose_gram,
    dual_value,
    eigsplit,
    secular_root,
    solution_representative,
    solve_sphere_qp,
)

__version__ = "0.1.0"
