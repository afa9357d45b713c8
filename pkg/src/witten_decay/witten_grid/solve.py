"""Iterative solves of the 0-form and 1-form systems.

Both systems are solved after exact diagonal conjugation by e^{-Phi/2} (the
"W picture"), where the operator is self-adjoint up to the O(h^2) commutation
error of the centered stencils.  The 0-form system is singular in the limit
h -> 0 (kernel spanned by e^{-Phi/2} after conjugation), so that direction is
deflated during the iteration and the returned solution is re-centered to
exact zero Gibbs mean.  Residuals are therefore reported in the Gibbs-weighted
norm modulo constants: the constant component of the raw residual is the
discrete centering mismatch, an O(h^2) artifact recorded separately.

The one-form operator is strictly positive definite when the convexity
certificate is admissible; no deflation is applied there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..model import HamiltonianSpec
from .grid import GibbsQuadrature, GridFunction, GridSpec, GridVectorField, gibbs_quadrature
from .operators import assemble_A0, assemble_A1, ground_state_vector

DEFAULT_TOL = 1e-8


class SolverConvergenceError(RuntimeError):
    """Raised when the iteration cap is reached before the tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(eq=False)
class ZeroMeanSolution:
    field: GridFunction
    residual: float          # relative, Gibbs-weighted, modulo constants
    raw_residual: float      # relative, Gibbs-weighted, constants included
    constant_shift: float    # Gibbs mean of the raw residual
    matvecs: int


@dataclass(eq=False)
class OneFormSolution:
    field: GridVectorField
    residual: float          # relative, Gibbs-weighted (componentwise stacked)
    matvecs: int


def _iteration_cap(n_unknowns: int) -> int:
    return max(200, int(20.0 * np.sqrt(n_unknowns)))


class _CountingOperator(spla.LinearOperator):
    def __init__(self, shape, matvec):
        super().__init__(dtype=float, shape=shape)
        self._mv = matvec
        self.count = 0

    def _matvec(self, v):
        self.count += 1
        return self._mv(v)


def _krylov_solve(op, rhs, tol, cap):
    """lgmres with the matvec budget enforced through the outer iteration count."""
    inner = 30
    outer = max(2, int(np.ceil(cap / (inner + 1))))
    x, _ = spla.lgmres(op, rhs, rtol=tol, atol=0.0, maxiter=outer, inner_m=inner)
    return x


def solve_zero_mean(h: HamiltonianSpec, spec: GridSpec, g: GridFunction,
                    tol: float = DEFAULT_TOL, maxiter: int | None = None,
                    quad: GibbsQuadrature | None = None) -> ZeroMeanSolution:
    """Solve A0 v = g - <g> with <v> = 0 under the Gibbs mean.

    The conjugated system is deflated along the sampled e^{-Phi/2} direction
    and the solution re-centered exactly.  Raises SolverConvergenceError with
    the final residual if the matvec cap (20 sqrt(N) by default) is exhausted.
    """
    g.assert_finite()
    quad = quad or gibbs_quadrature(h, spec)
    n = spec.n_nodes
    b = g.values - quad.mean(g.values)

    d = ground_state_vector(h, spec)
    a0 = assemble_A0(h, spec)
    w_op = (sp.diags(d) @ a0 @ sp.diags(1.0 / d)).tocsr()
    q = d * b
    u0 = d / np.linalg.norm(d)

    def project(v):
        return v - u0 * (u0 @ v)

    op = _CountingOperator((n, n), lambda v: project(w_op @ project(v)))
    cap = maxiter if maxiter is not None else _iteration_cap(n)
    rhs = project(q)
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        v = GridFunction(spec, np.zeros(n))
        return ZeroMeanSolution(field=v, residual=0.0, raw_residual=0.0,
                                constant_shift=0.0, matvecs=0)

    u = project(_krylov_solve(op, rhs, tol, cap))
    v = u / d
    v = v - quad.mean(v)

    r = a0 @ v - b
    shift = quad.mean(r)
    b_norm = quad.mu_norm(b)
    deflated = quad.mu_norm(r - shift) / b_norm
    raw = quad.mu_norm(r) / b_norm
    if not np.isfinite(deflated) or deflated > tol * 10.0:
        raise SolverConvergenceError(
            f"zero-mean solve stalled at relative residual {deflated:.3e} "
            f"after {op.count} matvecs (tol {tol:.1e}); "
            "a non-admissible Hamiltonian or an undersized matvec budget can cause this",
            residual=float(deflated), iterations=op.count)
    out = GridFunction(spec, v)
    out.assert_finite()
    return ZeroMeanSolution(field=out, residual=float(deflated), raw_residual=float(raw),
                            constant_shift=float(shift), matvecs=op.count)


def solve_one_form(h: HamiltonianSpec, spec: GridSpec, q: GridVectorField,
                   tol: float = DEFAULT_TOL, maxiter: int | None = None,
                   quad: GibbsQuadrature | None = None) -> OneFormSolution:
    """Solve A1 w = q for a vector field.

    Strictly positive definite for admissible models, so no kernel handling.
    Indefiniteness (non-convex Phi) surfaces as a diagnosed non-convergence.
    """
    q.assert_finite()
    quad = quad or gibbs_quadrature(h, spec)
    m, n = spec.dim, spec.n_nodes

    d = ground_state_vector(h, spec)
    a1 = assemble_A1(h, spec)
    d_full = np.tile(d, m)
    w1 = (sp.diags(d_full) @ a1 @ sp.diags(1.0 / d_full)).tocsr()
    rhs = (q.values * d[None, :]).ravel()
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return OneFormSolution(field=GridVectorField(spec, np.zeros((m, n))), residual=0.0, matvecs=0)

    op = _CountingOperator((m * n, m * n), lambda v: w1 @ v)
    cap = maxiter if maxiter is not None else _iteration_cap(m * n)
    u = _krylov_solve(op, rhs, tol, cap)
    rel = float(np.linalg.norm(w1 @ u - rhs) / rhs_norm)
    if not np.isfinite(rel) or rel > tol * 10.0:
        rng = np.random.default_rng(0)
        z = rng.normal(size=m * n)
        rayleigh = float(z @ (w1 @ z) / (z @ z))
        hint = "operator looks indefinite (non-convex Phi?)" if rayleigh <= 0 else \
            "matvec budget exhausted"
        raise SolverConvergenceError(
            f"one-form solve stalled at relative residual {rel:.3e} after {op.count} matvecs; {hint}",
            residual=rel, iterations=op.count)
    w = GridVectorField(spec, (u.reshape(m, n) / d[None, :]))
    w.assert_finite()
    return OneFormSolution(field=w, residual=rel, matvecs=op.count)
