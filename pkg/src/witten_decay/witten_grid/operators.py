"""Sparse assembly of the drift and Witten forms of the Gibbs generator.

A0 = -Laplace + grad Phi . grad         (0-forms)
A1 = A0 (x) Id + Hess Phi               (vector fields, Hessian coupling per node)
W0 = -Laplace + |grad Phi|^2/4 - Laplace Phi / 2

All second-order centered stencils, homogeneous Dirichlet values outside the
box, no upwinding: the convective term is mild at the resolutions in play and
second order keeps the grad/A0 commutation error at O(h^2).  W0 and A0 are
related by the unitary conjugation W0 = e^{-Phi/2} A0 e^{Phi/2}; the discrete
stencils reproduce it to O(h^2), which witten_equivalence_check measures.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from ..model import HamiltonianSpec, hess_entry_values, phi_grad, phi_laplacian
from .grid import GridFunction, GridSpec, build_grid, gibbs_quadrature, interior_mask, node_phi


def _axis_second_difference(n: int, h: float) -> sp.csr_matrix:
    e = np.ones(n)
    return (sp.diags([-e[:-1], 2.0 * e, -e[:-1]], [-1, 0, 1]) / h**2).tocsr()


def _axis_first_difference(n: int, h: float) -> sp.csr_matrix:
    e = np.ones(n - 1)
    return (sp.diags([-e, e], [-1, 1]) / (2.0 * h)).tocsr()


def _kron_on_axis(mat: sp.spmatrix, axis: int, m: int, n: int) -> sp.csr_matrix:
    out = None
    for k in range(m):
        blk = mat if k == axis else sp.identity(n, format="csr")
        out = blk if out is None else sp.kron(out, blk, format="csr")
    return out.tocsr()


@lru_cache(maxsize=8)
def _neg_laplacian(spec: GridSpec) -> sp.csr_matrix:
    n, m, h = spec.points_per_axis, spec.dim, spec.spacing
    out = None
    d2 = _axis_second_difference(n, h)
    for k in range(m):
        t = _kron_on_axis(d2, k, m, n)
        out = t if out is None else out + t
    return out.tocsr()


@lru_cache(maxsize=8)
def _partials(spec: GridSpec) -> tuple[sp.csr_matrix, ...]:
    n, m, h = spec.points_per_axis, spec.dim, spec.spacing
    d1 = _axis_first_difference(n, h)
    return tuple(_kron_on_axis(d1, k, m, n) for k in range(m))


@lru_cache(maxsize=8)
def assemble_A0(h: HamiltonianSpec, spec: GridSpec) -> sp.csr_matrix:
    """Drift form -Laplace + grad Phi . grad on grid functions."""
    pts = build_grid(spec)
    grad = phi_grad(h, pts)
    out = _neg_laplacian(spec).copy()
    for k, dk in enumerate(_partials(spec)):
        out = out + sp.diags(grad[:, k]) @ dk
    return out.tocsr()


@lru_cache(maxsize=8)
def assemble_W0(h: HamiltonianSpec, spec: GridSpec) -> sp.csr_matrix:
    """Witten form -Laplace + (|grad Phi|^2/4 - Laplace Phi/2)."""
    pts = build_grid(spec)
    grad = phi_grad(h, pts)
    pot = np.sum(grad * grad, axis=1) / 4.0 - phi_laplacian(h, pts) / 2.0
    return (_neg_laplacian(spec) + sp.diags(pot)).tocsr()


def hessian_coupling(h: HamiltonianSpec, spec: GridSpec) -> sp.csr_matrix:
    """Pointwise Hess Phi(x_p) coupling across components, (m N, m N)."""
    pts = build_grid(spec)
    n_nodes = spec.n_nodes
    rows, cols, vals = [], [], []
    node_idx = np.arange(n_nodes)
    for a, b, v in hess_entry_values(h, pts):
        rows.append(a * n_nodes + node_idx)
        cols.append(b * n_nodes + node_idx)
        vals.append(v)
        if a != b:
            rows.append(b * n_nodes + node_idx)
            cols.append(a * n_nodes + node_idx)
            vals.append(v)
    size = spec.dim * n_nodes
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size))


@lru_cache(maxsize=8)
def assemble_A1(h: HamiltonianSpec, spec: GridSpec) -> sp.csr_matrix:
    """Vector-field operator: A0 acting componentwise plus Hessian coupling.

    Component-major layout: a field u is stored as u.ravel() of shape (m, N).
    """
    a0 = assemble_A0(h, spec)
    return (sp.block_diag([a0] * spec.dim, format="csr") + hessian_coupling(h, spec)).tocsr()


def ground_state_vector(h: HamiltonianSpec, spec: GridSpec) -> np.ndarray:
    """Node-sampled e^{-(Phi - min Phi)/2}: the shifted kernel direction of W0."""
    phi = node_phi(h, spec)
    return np.exp(-(phi - phi.min()) / 2.0)


def witten_equivalence_check(h: HamiltonianSpec, spec: GridSpec, v: GridFunction,
                             interior_margin: float = 1.0) -> float:
    """Sup discrepancy of W0(e^{-Phi/2} v) - e^{-Phi/2} A0 v away from the walls.

    O(h^2) for smooth v; the margin keeps the Dirichlet boundary layer out of
    the sup.
    """
    v.assert_finite()
    e = ground_state_vector(h, spec)
    lhs = assemble_W0(h, spec) @ (e * v.values)
    rhs = e * (assemble_A0(h, spec) @ v.values)
    mask = interior_mask(spec, interior_margin)
    return float(np.abs(lhs - rhs)[mask].max())


def kernel_residual(h: HamiltonianSpec, spec: GridSpec) -> float:
    """Relative Gibbs-weighted norm of W0 applied to its continuum kernel."""
    quad = gibbs_quadrature(h, spec)
    e = ground_state_vector(h, spec)
    return quad.mu_norm(assemble_W0(h, spec) @ e) / quad.mu_norm(e)
