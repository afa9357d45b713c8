"""Covariances under the Gibbs measure by quadrature and by the one-form solve.

Two independent routes to cov(g, h):

* direct      quadrature of (g - <g>)(h - <h>) against the normalized weights,
* one-form    solve A1 w = grad g, then cov(g, h) = < w . grad h >.

The Brascamp-Lieb comparison bounds the variance by the Gibbs mean of
grad g . (Hess Phi)^{-1} grad g, computed by nodewise dense solves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import HamiltonianSpec, hess_dense_batch
from .grid import GibbsQuadrature, GridFunction, GridSpec, build_grid, discrete_gradient, gibbs_quadrature
from .solve import solve_one_form


def covariance_direct(h: HamiltonianSpec, spec: GridSpec, g: GridFunction,
                      hfun: GridFunction, quad: GibbsQuadrature | None = None) -> float:
    quad = quad or gibbs_quadrature(h, spec)
    return quad.covariance(g.values, hfun.values)


def one_form_flux(h: HamiltonianSpec, spec: GridSpec, g: GridFunction,
                  tol: float = 1e-8, quad: GibbsQuadrature | None = None):
    """Solve A1 w = grad g once; reusable across second observables."""
    return solve_one_form(h, spec, discrete_gradient(g), tol=tol, quad=quad)


def covariance_hs(h: HamiltonianSpec, spec: GridSpec, g: GridFunction, hfun: GridFunction,
                  tol: float = 1e-8, quad: GibbsQuadrature | None = None,
                  flux=None) -> float:
    """cov(g, h) via the one-form inverse applied to grad g.

    Pass a precomputed ``flux`` (from one_form_flux) to amortize the solve
    across several second observables.
    """
    quad = quad or gibbs_quadrature(h, spec)
    if flux is None:
        flux = one_form_flux(h, spec, g, tol=tol, quad=quad)
    grad_h = discrete_gradient(hfun)
    integrand = np.einsum("kn,kn->n", flux.field.values, grad_h.values)
    return quad.mean(integrand)


@dataclass(frozen=True)
class BrascampLiebReport:
    variance: float
    bl_bound: float
    passed: bool
    tol: float


def brascamp_lieb_check(h: HamiltonianSpec, spec: GridSpec, g: GridFunction,
                        tol: float = 1e-6, quad: GibbsQuadrature | None = None) -> BrascampLiebReport:
    """variance(g) <= < grad g . (Hess Phi)^{-1} grad g > for convex Phi."""
    quad = quad or gibbs_quadrature(h, spec)
    variance = covariance_direct(h, spec, g, g, quad=quad)
    pts = build_grid(spec)
    hess = hess_dense_batch(h, pts)
    grad = discrete_gradient(g).values.T  # (N, m)
    try:
        y = np.linalg.solve(hess, grad[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError("singular Hessian at a grid node (non-convex input)") from exc
    bound = quad.mean(np.einsum("nk,nk->n", grad, y))
    return BrascampLiebReport(variance=variance, bl_bound=bound,
                              passed=bool(variance <= bound * (1.0 + tol)), tol=tol)
