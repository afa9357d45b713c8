"""Grid discretization, operator assembly, solves, and covariance routes."""

from .covariance import (
    BrascampLiebReport,
    brascamp_lieb_check,
    covariance_direct,
    covariance_hs,
    one_form_flux,
)
from .grid import (
    GibbsQuadrature,
    GridFunction,
    GridSpec,
    GridVectorField,
    build_grid,
    discrete_gradient,
    gibbs_quadrature,
    interior_mask,
    node_phi,
)
from .operators import (
    assemble_A0,
    assemble_A1,
    assemble_W0,
    ground_state_vector,
    hessian_coupling,
    kernel_residual,
    witten_equivalence_check,
)
from .solve import (
    OneFormSolution,
    SolverConvergenceError,
    ZeroMeanSolution,
    solve_one_form,
    solve_zero_mean,
)

__all__ = [
    "BrascampLiebReport", "GibbsQuadrature", "GridFunction", "GridSpec",
    "GridVectorField", "OneFormSolution", "SolverConvergenceError",
    "ZeroMeanSolution", "assemble_A0", "assemble_A1", "assemble_W0",
    "brascamp_lieb_check", "build_grid", "covariance_direct", "covariance_hs",
    "discrete_gradient", "gibbs_quadrature", "ground_state_vector",
    "hessian_coupling", "interior_mask", "kernel_residual", "node_phi",
    "one_form_flux", "solve_one_form", "solve_zero_mean",
    "witten_equivalence_check",
]
