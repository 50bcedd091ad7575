"""Coupling blocks between the bulk Q1 space and multiplier spaces.

Builds the constraint matrix C (multiplier x bulk), the constraint rhs
G, the Robin perturbation block M_kappa, and the assembled symmetric
saddle system [[A, C^T], [C, -M_kappa]].

Boundary integrals are unnormalized (surface integrals, not averages),
so the recovered multiplier field keeps its normal-jump interpretation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fem import FeSpace, interpolation_data
from .modal import BoundaryQuadrature, ModalBasis

__all__ = [
    "assemble_coupling",
    "assemble_constraint_rhs",
    "assemble_robin",
    "multiplier_gram",
    "SaddleSystem",
    "build_saddle_system",
]


def _coupling_from_basis_matrix(
    space: FeSpace, points: np.ndarray, weights: np.ndarray, B: np.ndarray
) -> sp.csr_matrix:
    """C[r, j] = sum_q w_q B[q, r] psi_j(x_q) as a sparse matrix."""
    dofs, shp = interpolation_data(space, points)
    q, nloc = shp.shape
    n_rows = B.shape[1]
    wB = B * weights[:, None]  # (q, n_rows)
    vals = np.einsum("qr,qa->qra", wB, shp).ravel()
    rows = np.repeat(np.tile(np.arange(n_rows), q), nloc)
    cols = np.repeat(dofs, n_rows, axis=0).ravel()
    C = sp.coo_matrix((vals, (rows, cols)), shape=(n_rows, space.n_dofs)).tocsr()
    C.sum_duplicates()
    return C


def assemble_coupling(
    space: FeSpace, quad: BoundaryQuadrature, basis: ModalBasis
) -> sp.csr_matrix:
    """Constraint matrix with rows indexed (axial node, mode) -> a*N + k."""
    B = quad.multiplier_matrix(basis)
    return _coupling_from_basis_matrix(space, quad.points, quad.weights, B)


def assemble_constraint_rhs(g, basis: ModalBasis, quad: BoundaryQuadrature) -> np.ndarray:
    """G[r] = sum_q w_q g(x_q) B[q, r]."""
    if callable(g):
        gvals = np.asarray(g(quad.points), dtype=float)
    else:
        gvals = np.full(quad.points.shape[0], float(g))
    B = quad.multiplier_matrix(basis)
    return B.T @ (quad.weights * gvals)


def multiplier_gram(basis: ModalBasis, quad: BoundaryQuadrature) -> np.ndarray:
    """Gram matrix of the multiplier basis in the surface L2 product.

    For a 2D disk this is diag(2*pi*eps * c_i).
    """
    B = quad.multiplier_matrix(basis)
    return (B * quad.weights[:, None]).T @ B


def assemble_robin(basis: ModalBasis, quad: BoundaryQuadrature, kappa: float) -> np.ndarray:
    if kappa < 0:
        raise ValueError("Robin parameter kappa must be >= 0")
    n = quad.n_multiplier_dofs(basis)
    if kappa == 0.0:
        return np.zeros((n, n))
    return kappa * multiplier_gram(basis, quad)


@dataclass
class SaddleSystem:
    """Assembled symmetric indefinite block system [[A, C^T], [C, -M]]."""

    A: sp.csr_matrix  # bulk block, Dirichlet-constrained
    C: sp.csr_matrix  # stacked coupling rows over inclusions
    M: np.ndarray  # multiplier perturbation block (dense, block diagonal)
    F: np.ndarray
    G: np.ndarray
    mult_offsets: list = field(default_factory=list)  # per-inclusion row offsets

    @property
    def n_bulk(self) -> int:
        return self.A.shape[0]

    @property
    def n_mult(self) -> int:
        return self.C.shape[0]

    def full_matrix(self) -> sp.csr_matrix:
        blocks = [[self.A, self.C.T], [self.C, None]]
        if self.n_mult:
            blocks[1][1] = sp.csr_matrix(-self.M)
        return sp.bmat(blocks, format="csr")

    def full_rhs(self) -> np.ndarray:
        return np.concatenate([self.F, self.G])


def build_saddle_system(
    A_c: sp.csr_matrix,
    F_c: np.ndarray,
    couplings,
    rhs_vectors,
    robin_blocks=None,
    dirichlet_ids: np.ndarray | None = None,
    dirichlet_vals: np.ndarray | None = None,
) -> SaddleSystem:
    """Stack per-inclusion blocks and make them consistent with the
    eliminated outer-boundary dofs.

    Coupling entries hitting eliminated dofs are zeroed and their
    contribution moved to the constraint rhs.
    """
    n_bulk = A_c.shape[0]
    if not couplings:
        C = sp.csr_matrix((0, n_bulk))
        return SaddleSystem(A=A_c, C=C, M=np.zeros((0, 0)), F=F_c, G=np.zeros(0))
    offsets = list(np.cumsum([0] + [c.shape[0] for c in couplings]))[:-1]
    C = sp.vstack(couplings, format="csr")
    G = np.concatenate([np.asarray(g, dtype=float) for g in rhs_vectors])
    if C.shape[0] != G.shape[0]:
        raise ValueError("coupling rows and constraint rhs sizes do not match")
    if dirichlet_ids is not None and dirichlet_ids.size:
        G = G - C[:, dirichlet_ids] @ dirichlet_vals
        mask = np.ones(n_bulk)
        mask[dirichlet_ids] = 0.0
        C = (C @ sp.diags(mask)).tocsr()
    if robin_blocks is None:
        M = np.zeros((C.shape[0], C.shape[0]))
    else:
        M = np.zeros((C.shape[0], C.shape[0]))
        pos = 0
        for blk in robin_blocks:
            k = blk.shape[0]
            M[pos : pos + k, pos : pos + k] = blk
            pos += k
        if pos != C.shape[0]:
            raise ValueError("Robin blocks do not cover the multiplier space")
    return SaddleSystem(A=A_c, C=C, M=M, F=F_c, G=G, mult_offsets=offsets)
