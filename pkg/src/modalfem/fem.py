"""Q1 Lagrangian finite elements on structured meshes.

Assembly of stiffness/mass/load, symmetric Dirichlet elimination,
point evaluation, and L2/H1 error norms.  Stiffness and load use
2-point Gauss per axis, error norms 3-point.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .mesh import StructuredMesh

__all__ = [
    "FeSpace",
    "assemble_stiffness",
    "assemble_mass",
    "assemble_load",
    "apply_dirichlet",
    "evaluate",
    "interpolate",
    "error_norms",
    "coeff_norms",
]


class FeSpace:
    """Continuous piecewise multilinear (Q1) space; one dof per vertex."""

    degree = 1

    def __init__(self, mesh: StructuredMesh):
        self.mesh = mesh
        self.n_dofs = mesh.n_vertices
        self._conn = None

    @property
    def dim(self) -> int:
        return self.mesh.dim

    def cell_dofs(self) -> np.ndarray:
        """Dof connectivity for all cells, shape (n_cells, 2^dim)."""
        if self._conn is None:
            self._conn = self.mesh.cell_vertex_ids(self.mesh.all_cells())
        return self._conn

    def dof_coords(self) -> np.ndarray:
        return self.mesh.vertex_coords()


def gauss_rule_01(npts: int):
    """Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return (x + 1.0) / 2.0, w / 2.0


def tensor_rule(dim: int, npts: int):
    """Tensor Gauss rule on the unit cell [0,1]^dim; weights sum to 1."""
    x1, w1 = gauss_rule_01(npts)
    pts = np.stack(
        [g.ravel() for g in np.meshgrid(*([x1] * dim), indexing="ij")], axis=1
    )
    wts = np.prod(
        np.stack([g.ravel() for g in np.meshgrid(*([w1] * dim), indexing="ij")], axis=1),
        axis=1,
    )
    return pts, wts


def shape_values(pts: np.ndarray) -> np.ndarray:
    """Q1 shape functions at reference points, shape (q, 2^dim).

    Corner c has local coordinates given by the bits of c (x fastest),
    matching StructuredMesh.cell_vertex_ids.
    """
    pts = np.atleast_2d(pts)
    q, dim = pts.shape
    nloc = 2**dim
    vals = np.ones((q, nloc))
    for c in range(nloc):
        for d in range(dim):
            xi = pts[:, d]
            vals[:, c] *= xi if (c >> d) & 1 else 1.0 - xi
    return vals


def shape_gradients(pts: np.ndarray) -> np.ndarray:
    """Reference gradients of Q1 shape functions, shape (q, 2^dim, dim)."""
    pts = np.atleast_2d(pts)
    q, dim = pts.shape
    nloc = 2**dim
    grads = np.empty((q, nloc, dim))
    for c in range(nloc):
        for d in range(dim):
            g = np.ones(q)
            for e in range(dim):
                xi = pts[:, e]
                if e == d:
                    g *= 1.0 if (c >> e) & 1 else -1.0
                else:
                    g *= xi if (c >> e) & 1 else 1.0 - xi
            grads[:, c, d] = g
    return grads


def element_matrices(dim: int, dx: np.ndarray, npts: int = 2):
    """Stiffness and mass matrices of a single cell with edge lengths dx."""
    pts, wts = tensor_rule(dim, npts)
    N = shape_values(pts)
    dN = shape_gradients(pts) / dx[None, None, :]
    detj = float(np.prod(dx))
    K = np.einsum("q,qad,qbd->ab", wts, dN, dN) * detj
    M = np.einsum("q,qa,qb->ab", wts, N, N) * detj
    return K, M


def _assemble_from_element(space: FeSpace, el: np.ndarray) -> sp.csr_matrix:
    conn = space.cell_dofs()
    nloc = conn.shape[1]
    rows = np.repeat(conn, nloc, axis=1).ravel()
    cols = np.tile(conn, (1, nloc)).ravel()
    vals = np.tile(el.ravel(), conn.shape[0])
    A = sp.coo_matrix(
        (vals, (rows, cols)), shape=(space.n_dofs, space.n_dofs)
    ).tocsr()
    A.sum_duplicates()
    return A


def assemble_stiffness(space: FeSpace) -> sp.csr_matrix:
    K_el, _ = element_matrices(space.dim, space.mesh.dx)
    return _assemble_from_element(space, K_el)


def assemble_mass(space: FeSpace) -> sp.csr_matrix:
    _, M_el = element_matrices(space.dim, space.mesh.dx)
    return _assemble_from_element(space, M_el)


def assemble_load(space: FeSpace, f) -> np.ndarray:
    """Load vector (f, psi_j) by cellwise 2-point Gauss quadrature.

    f maps points of shape (n, dim) to values of shape (n,); a scalar
    constant is also accepted.
    """
    mesh = space.mesh
    pts, wts = tensor_rule(space.dim, 2)
    N = shape_values(pts)
    detj = float(np.prod(mesh.dx))
    conn = space.cell_dofs()
    lowers = mesh.cell_lower_corners(mesh.all_cells())
    # physical quadrature points: (n_cells, q, dim)
    phys = lowers[:, None, :] + pts[None, :, :] * mesh.dx[None, None, :]
    if callable(f):
        fvals = f(phys.reshape(-1, space.dim)).reshape(phys.shape[:2])
    else:
        fvals = np.full(phys.shape[:2], float(f))
    contrib = (fvals * wts[None, :] * detj) @ N
    b = np.zeros(space.n_dofs)
    np.add.at(b, conn, contrib)
    return b


def apply_dirichlet(A: sp.csr_matrix, b: np.ndarray, space: FeSpace, g):
    """Fix outer-boundary dofs to interpolated g via symmetric elimination.

    Returns (A_c, b_c, bd_ids, bd_vals).  Rows and columns of boundary
    dofs are zeroed, the diagonal set to 1, and the rhs adjusted so the
    system stays symmetric.
    """
    bd = space.mesh.boundary_vertex_ids()
    coords = space.dof_coords()[bd]
    if callable(g):
        vals = np.asarray(g(coords), dtype=float)
    else:
        vals = np.full(bd.shape[0], float(g))
    b_c = b - A[:, bd] @ vals
    mask = np.ones(space.n_dofs)
    mask[bd] = 0.0
    D = sp.diags(mask)
    A_c = (D @ A @ D).tocsr()
    A_c += sp.coo_matrix(
        (np.ones(bd.shape[0]), (bd, bd)), shape=A.shape
    ).tocsr()
    b_c[bd] = vals
    return A_c.tocsr(), b_c, bd, vals


def interpolation_data(space: FeSpace, points: np.ndarray):
    """Per-point dof ids and Q1 shape values, shapes (n, 2^dim) each."""
    mesh = space.mesh
    points = np.atleast_2d(points)
    cells = mesh.cells_containing_points(points)
    lowers = mesh.cell_lower_corners(cells)
    local = (points - lowers) / mesh.dx
    dofs = mesh.cell_vertex_ids(cells)
    return dofs, shape_values(local)


def evaluate(space: FeSpace, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate the FE function at arbitrary points inside the domain."""
    dofs, vals = interpolation_data(space, points)
    return np.einsum("na,na->n", coeffs[dofs], vals)


def interpolate(space: FeSpace, fn) -> np.ndarray:
    """Vertex interpolant of a scalar field."""
    coords = space.dof_coords()
    if callable(fn):
        return np.asarray(fn(coords), dtype=float)
    return np.full(space.n_dofs, float(fn))


def error_norms(space: FeSpace, coeffs: np.ndarray, exact, exact_grad=None, npts: int = 3):
    """(L2, H1-seminorm) error of the FE function against an exact field.

    Cellwise tensor Gauss quadrature with npts points per axis; the exact
    field is evaluated pointwise, so piecewise-defined solutions are
    handled by their own side test.
    """
    mesh = space.mesh
    pts, wts = tensor_rule(space.dim, npts)
    N = shape_values(pts)
    dN = shape_gradients(pts) / mesh.dx[None, None, :]
    detj = float(np.prod(mesh.dx))
    conn = space.cell_dofs()
    cf = coeffs[conn]  # (n_cells, nloc)
    uh = cf @ N.T  # (n_cells, q)
    lowers = mesh.cell_lower_corners(mesh.all_cells())
    phys = (lowers[:, None, :] + pts[None, :, :] * mesh.dx[None, None, :]).reshape(
        -1, space.dim
    )
    ue = np.asarray(exact(phys)).reshape(uh.shape)
    l2sq = float(np.sum(((uh - ue) ** 2) @ wts) * detj)
    h1sq = 0.0
    if exact_grad is not None:
        guh = np.einsum("ca,qad->cqd", cf, dN)
        ge = np.asarray(exact_grad(phys)).reshape(guh.shape)
        h1sq = float(np.sum(np.einsum("cqd,q->c", (guh - ge) ** 2, wts)) * detj)
    return np.sqrt(l2sq), np.sqrt(h1sq)


def coeff_norms(space: FeSpace, coeffs: np.ndarray, K: sp.csr_matrix, M: sp.csr_matrix):
    """(L2, H1-seminorm) of a FE function from assembled Gram matrices."""
    l2 = float(np.sqrt(max(coeffs @ (M @ coeffs), 0.0)))
    h1 = float(np.sqrt(max(coeffs @ (K @ coeffs), 0.0)))
    return l2, h1
