"""Staggered-grid finite-difference operators with the solver's boundary
conditions.

Layout conventions follow :mod:`chve.grid`.  The operators are built so the
discrete adjointness

    <grad_cc(phi), v>_faces = -<phi, div_fc(v)>_cells

holds exactly (to rounding) for any phi and any no-slip v, with both inner
products weighted by the cell area hx*hy.  That identity is what turns the
telescoping flux sums into exact mass conservation downstream, so every
reduction here keeps a fixed summation order.

Boundary conditions baked in:

* ``grad_cc`` puts 0 on boundary-normal faces (homogeneous Neumann);
* ``laplacian_neumann`` is a conservative flux form; assembled rows sum to 0;
* ``velocity_gradient`` uses reflected ghost values (v = 0 on walls);
* the advection operators use a conservative flux form with a kappa = 1/3
  upwind-biased face reconstruction, falling back to plain upwind on faces
  that lack the second upwind neighbor.

Sparse assemblies (:func:`gradient_matrices`, :func:`laplacian_matrix`) mirror
the matrix-free kernels one for one; ``OperatorMatrix`` tags the layouts.
Scalars are flattened C-order, index ``i * ny + j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import GridSpec, PreconditionError, ScalarField, StaggeredVectorField, TensorField

# Scale hook for the mutation spot-check in the test suite: the dense oracle
# comparison must fail when this is perturbed away from 1.
_STENCIL_SCALE = 1.0


@dataclass(frozen=True)
class OperatorMatrix:
    """Sparse operator between field layouts, with layout tags.

    Layout tags: ``cc`` cell-center scalar, ``fcx``/``fcy`` x/y faces,
    ``fc`` both face sets stacked (u then w).
    """

    matrix: sp.spmatrix
    row_layout: str
    col_layout: str


# ---------------------------------------------------------------------------
# gradient / divergence / Laplacian


def grad_cc(phi: ScalarField) -> StaggeredVectorField:
    """Two-point gradient of a cell field onto faces; boundary faces get 0."""
    g = phi.grid
    p = phi.values
    gu = np.zeros((g.nx + 1, g.ny))
    gw = np.zeros((g.nx, g.ny + 1))
    gu[1:-1, :] = _STENCIL_SCALE * (p[1:, :] - p[:-1, :]) / g.hx
    gw[:, 1:-1] = _STENCIL_SCALE * (p[:, 1:] - p[:, :-1]) / g.hy
    return StaggeredVectorField(g, gu, gw)


def div_fc(v: StaggeredVectorField) -> ScalarField:
    """Conservative flux divergence of a face field onto cells."""
    g = v.grid
    d = (v.u[1:, :] - v.u[:-1, :]) / g.hx + (v.w[:, 1:] - v.w[:, :-1]) / g.hy
    return ScalarField(g, d)


def face_average(phi: ScalarField):
    """Arithmetic average of a cell scalar onto interior faces.

    Returns (on_xfaces, on_yfaces) with boundary faces set to 0; used for
    variable coefficients and for face-sampling scalar prefactors.
    """
    g = phi.grid
    p = phi.values
    ax = np.zeros((g.nx + 1, g.ny))
    ay = np.zeros((g.nx, g.ny + 1))
    ax[1:-1, :] = 0.5 * (p[1:, :] + p[:-1, :])
    ay[:, 1:-1] = 0.5 * (p[:, 1:] + p[:, :-1])
    return ax, ay


def laplacian_neumann(phi: ScalarField, coeff: ScalarField | None = None) -> ScalarField:
    """div(coeff * grad phi) with zero-flux boundary.

    coeff (optional) is a strictly positive cell field, averaged onto faces
    arithmetically.  Matrix-free twin of :func:`laplacian_matrix`.
    """
    g = phi.grid
    grad = grad_cc(phi)
    if coeff is None:
        return div_fc(grad)
    cvals = coeff.values
    if np.min(cvals) <= 0.0:
        raise PreconditionError("laplacian coefficient must be strictly positive")
    cx, cy = face_average(coeff)
    flux = StaggeredVectorField(g, cx * grad.u, cy * grad.w)
    return div_fc(flux)


def gradient_matrices(grid: GridSpec) -> tuple[OperatorMatrix, OperatorMatrix, OperatorMatrix]:
    """Sparse (Gx, Gy, D): cell->xfaces, cell->yfaces, faces->cells.

    D acts on the stacked face vector [u.ravel(), w.ravel()] and equals
    -[Gx; Gy]^T up to the uniform area weight, which the adjointness test
    checks directly.
    """
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    ncell = nx * ny
    nu, nw = (nx + 1) * ny, nx * (ny + 1)

    def cid(i, j):
        return i * ny + j

    rows, cols, vals = [], [], []
    for i in range(1, nx):
        for j in range(ny):
            r = i * ny + j
            rows += [r, r]
            cols += [cid(i, j), cid(i - 1, j)]
            vals += [_STENCIL_SCALE / hx, -_STENCIL_SCALE / hx]
    Gx = sp.csr_matrix((vals, (rows, cols)), shape=(nu, ncell))

    rows, cols, vals = [], [], []
    for i in range(nx):
        for j in range(1, ny):
            r = i * (ny + 1) + j
            rows += [r, r]
            cols += [cid(i, j), cid(i, j - 1)]
            vals += [_STENCIL_SCALE / hy, -_STENCIL_SCALE / hy]
    Gy = sp.csr_matrix((vals, (rows, cols)), shape=(nw, ncell))

    rows, cols, vals = [], [], []
    for i in range(nx):
        for j in range(ny):
            r = cid(i, j)
            rows += [r, r]
            cols += [(i + 1) * ny + j, i * ny + j]
            vals += [1.0 / hx, -1.0 / hx]
            rows += [r, r]
            cols += [nu + i * (ny + 1) + j + 1, nu + i * (ny + 1) + j]
            vals += [1.0 / hy, -1.0 / hy]
    D = sp.csr_matrix((vals, (rows, cols)), shape=(ncell, nu + nw))

    return (OperatorMatrix(Gx, "fcx", "cc"),
            OperatorMatrix(Gy, "fcy", "cc"),
            OperatorMatrix(D, "cc", "fc"))


def laplacian_matrix(grid: GridSpec, coeff: np.ndarray | None = None) -> sp.csr_matrix:
    """Assembled zero-flux Laplacian div(coeff grad .), rows summing to 0."""
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    if coeff is None:
        cx = np.ones((nx + 1, ny))
        cy = np.ones((nx, ny + 1))
    else:
        if np.min(coeff) <= 0.0:
            raise PreconditionError("laplacian coefficient must be strictly positive")
        cx = np.zeros((nx + 1, ny))
        cy = np.zeros((nx, ny + 1))
        cx[1:-1, :] = 0.5 * (coeff[1:, :] + coeff[:-1, :])
        cy[:, 1:-1] = 0.5 * (coeff[:, 1:] + coeff[:, :-1])

    n = nx * ny
    idx = np.arange(n).reshape(nx, ny)
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    sx = _STENCIL_SCALE / (hx * hx)
    sy = _STENCIL_SCALE / (hy * hy)
    for i in range(nx):
        for j in range(ny):
            r = idx[i, j]
            if i + 1 < nx:
                w = cx[i + 1, j] * sx
                add(r, idx[i + 1, j], w)
                add(r, r, -w)
            if i > 0:
                w = cx[i, j] * sx
                add(r, idx[i - 1, j], w)
                add(r, r, -w)
            if j + 1 < ny:
                w = cy[i, j + 1] * sy
                add(r, idx[i, j + 1], w)
                add(r, r, -w)
            if j > 0:
                w = cy[i, j] * sy
                add(r, idx[i, j - 1], w)
                add(r, r, -w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


# ---------------------------------------------------------------------------
# velocity gradient at cell centers


def velocity_gradient(v: StaggeredVectorField) -> TensorField:
    """All four components of grad v interpolated to cell centers.

    Diagonal entries are native face differences; off-diagonal entries are
    corner (node) differences averaged to the cell, with reflected ghost
    values enforcing v = 0 on the walls.  trace(output) equals div_fc(v)
    exactly.
    """
    g = v.grid
    nx, ny, hx, hy = g.nx, g.ny, g.hx, g.hy
    dudx = (v.u[1:, :] - v.u[:-1, :]) / hx
    dwdy = (v.w[:, 1:] - v.w[:, :-1]) / hy

    # du/dy at nodes (nx+1, ny+1); ghost u = -u across walls
    dudy_n = np.zeros((nx + 1, ny + 1))
    dudy_n[:, 1:-1] = (v.u[:, 1:] - v.u[:, :-1]) / hy
    dudy_n[:, 0] = 2.0 * v.u[:, 0] / hy
    dudy_n[:, -1] = -2.0 * v.u[:, -1] / hy
    dudy = 0.25 * (dudy_n[:-1, :-1] + dudy_n[1:, :-1] + dudy_n[:-1, 1:] + dudy_n[1:, 1:])

    dwdx_n = np.zeros((nx + 1, ny + 1))
    dwdx_n[1:-1, :] = (v.w[1:, :] - v.w[:-1, :]) / hx
    dwdx_n[0, :] = 2.0 * v.w[0, :] / hx
    dwdx_n[-1, :] = -2.0 * v.w[-1, :] / hx
    dwdx = 0.25 * (dwdx_n[:-1, :-1] + dwdx_n[1:, :-1] + dwdx_n[:-1, 1:] + dwdx_n[1:, 1:])

    c = np.empty((nx, ny, 2, 2))
    c[:, :, 0, 0] = dudx
    c[:, :, 0, 1] = dudy
    c[:, :, 1, 0] = dwdx
    c[:, :, 1, 1] = dwdy
    return TensorField(g, c)


# ---------------------------------------------------------------------------
# conservative upwind-biased advection

_DIV_TOL = 1e-8


def _face_reconstruct(q, vel, axis):
    """kappa = 1/3 upwind-biased face values of cell data q along axis.

    q has cells on ``axis`` (length n); returns values on the n+1 faces of
    that axis, zero on the two boundary faces (where the normal velocity
    vanishes anyway).  Faces whose far upwind neighbor would leave the grid
    fall back to first-order upwind.  vel carries the face normal velocity
    and only its sign is used.
    """
    q = np.moveaxis(q, axis, 0)
    vel = np.moveaxis(vel, axis, 0)
    n = q.shape[0]
    out = np.zeros_like(vel)

    qc = q[:-1]      # upwind cell when vel >= 0   (faces 1..n-1)
    qd = q[1:]       # downwind cell when vel >= 0
    pos = vel[1:-1] >= 0.0

    # first-order fallback
    lo = np.where(pos, qc, qd)

    if n >= 3:
        hi_pos = np.full_like(qc, np.nan)
        hi_neg = np.full_like(qc, np.nan)
        # vel >= 0: cells (W, C, D) = q[k-2], q[k-1], q[k] for face k >= 2
        hi_pos[1:] = qc[1:] + 0.25 * ((1.0 - 1.0 / 3.0) * (qc[1:] - q[:-2])
                                      + (1.0 + 1.0 / 3.0) * (qd[1:] - qc[1:]))
        # vel < 0: mirrored, needs q[k+1] so face k <= n-2
        hi_neg[:-1] = qd[:-1] + 0.25 * ((1.0 - 1.0 / 3.0) * (qd[:-1] - q[2:])
                                        + (1.0 + 1.0 / 3.0) * (qc[:-1] - qd[:-1]))
        hi = np.where(pos, hi_pos, hi_neg)
        out[1:-1] = np.where(np.isnan(hi), lo, hi)
    else:
        out[1:-1] = lo
    return np.moveaxis(out, 0, axis)


def _advect_stack(v: StaggeredVectorField, q: np.ndarray) -> np.ndarray:
    """div(v q) for a stack of cell fields q with shape (nx, ny, ...)."""
    g = v.grid
    extra = q.shape[2:]
    u = v.u.reshape(v.u.shape + (1,) * len(extra))
    w = v.w.reshape(v.w.shape + (1,) * len(extra))
    qx = _face_reconstruct(q, np.broadcast_to(u, (g.nx + 1, g.ny) + extra), axis=0)
    qy = _face_reconstruct(q, np.broadcast_to(w, (g.nx, g.ny + 1) + extra), axis=1)
    fx = u * qx
    fy = w * qy
    return (fx[1:, :] - fx[:-1, :]) / g.hx + (fy[:, 1:] - fy[:, :-1]) / g.hy


def _require_solenoidal(v: StaggeredVectorField):
    r = float(np.max(np.abs(div_fc(v).values)))
    if r > _DIV_TOL:
        raise PreconditionError(f"advecting velocity has div residual {r:.3e} > {_DIV_TOL}")


def advect_scalar(v: StaggeredVectorField, phi: ScalarField) -> ScalarField:
    """Conservative approximation of v . grad(phi) for solenoidal v.

    Flux form div(v phi); the cell-area sum of the output telescopes to
    the (zero) boundary flux for any no-slip v, regardless of the face
    reconstruction.
    """
    _require_solenoidal(v)
    return ScalarField(v.grid, _advect_stack(v, phi.values))


def advect_tensor(v: StaggeredVectorField, F: TensorField) -> TensorField:
    """Componentwise conservative transport term div(v F)."""
    _require_solenoidal(v)
    return TensorField(v.grid, _advect_stack(v, F.comps))
