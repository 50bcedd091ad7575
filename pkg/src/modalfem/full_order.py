"""Full-order Lagrange multiplier reference solver (2D disks only).

The multiplier is discretized directly on the circle with periodic P1
elements; 4-point Gauss per segment with quadrature points mapped onto
the circle (not polygon chords).  Serves as the oracle against which
the modal reduction is measured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .coupling import SaddleSystem, _coupling_from_basis_matrix, build_saddle_system
from .fem import FeSpace
from .modal import Disk2D, GeometryError
from .solve import BulkSolver, SolveReport, solve_saddle

__all__ = ["InterfaceMesh", "assemble_interface_coupling", "solve_full_order", "reduction_gap"]

DEFAULT_SEGMENTS = 64


@dataclass(frozen=True)
class InterfaceMesh:
    """Closed periodic P1 mesh on a circle with M equal segments."""

    segments: int

    def __post_init__(self):
        if self.segments < 16:
            raise GeometryError("interface mesh needs at least 16 segments")

    @property
    def n_nodes(self) -> int:
        return self.segments

    def node_angles(self) -> np.ndarray:
        return np.arange(self.segments) * (2.0 * np.pi / self.segments)


def _interface_quadrature(
    disk: Disk2D, imesh: InterfaceMesh, n_gauss: int = 4, subdiv: int = 1
):
    """Quadrature angles/weights on the circle and periodic P1 hat values.

    Each multiplier segment is split into `subdiv` equal arcs with an
    n_gauss rule on each, so the piecewise-linear bulk trace can be
    resolved even when the bulk mesh is finer than the interface mesh.
    """
    M = imesh.segments
    subdiv = max(1, int(subdiv))
    dtheta = 2.0 * np.pi / M
    gx, gw = np.polynomial.legendre.leggauss(n_gauss)
    gx = (gx + 1.0) / 2.0
    gw = gw / 2.0
    # local coordinates within a segment, subdivided
    tloc = ((np.arange(subdiv)[:, None] + gx[None, :]) / subdiv).ravel()
    wloc = np.tile(gw / subdiv, subdiv)
    npts = tloc.shape[0]
    seg = np.arange(M)
    theta = (seg[:, None] + tloc[None, :]).ravel() * dtheta
    w = np.tile(wloc, M) * dtheta * disk.radius
    t = np.tile(tloc, M)
    chi = np.zeros((M * npts, M))
    rows = np.arange(M * npts)
    left = np.repeat(seg, npts)
    right = (left + 1) % M
    chi[rows, left] = 1.0 - t
    chi[rows, right] = t
    pts = np.stack(
        [
            disk.center[0] + disk.radius * np.cos(theta),
            disk.center[1] + disk.radius * np.sin(theta),
        ],
        axis=1,
    )
    return pts, w, chi, theta


def _subdiv_for(space: FeSpace, disk: Disk2D, imesh: InterfaceMesh) -> int:
    """Sub-arcs per segment so a quadrature piece spans at most h/4."""
    seg_len = 2.0 * np.pi * disk.radius / imesh.segments
    return max(1, int(np.ceil(4.0 * seg_len / space.mesh.h)))


def assemble_interface_coupling(
    space: FeSpace, disk: Disk2D, imesh: InterfaceMesh
) -> sp.csr_matrix:
    """Rows int_Gamma chi_a psi_j dGamma of the full-order constraint."""
    pts, w, chi, _ = _interface_quadrature(
        disk, imesh, subdiv=_subdiv_for(space, disk, imesh)
    )
    return _coupling_from_basis_matrix(space, pts, w, chi)


def _interface_rhs(g, disk: Disk2D, imesh: InterfaceMesh, subdiv: int = 1) -> np.ndarray:
    pts, w, chi, _ = _interface_quadrature(disk, imesh, subdiv=subdiv)
    gvals = np.asarray(g(pts), dtype=float) if callable(g) else np.full(
        pts.shape[0], float(g)
    )
    return chi.T @ (w * gvals)


def solve_full_order(
    space: FeSpace,
    disks,
    A_c: sp.csr_matrix,
    F_c: np.ndarray,
    g_list,
    dirichlet_ids: np.ndarray,
    dirichlet_vals: np.ndarray,
    imeshes=None,
    tol: float = 1e-10,
    bulk_solver: BulkSolver | None = None,
) -> SolveReport:
    """Saddle solve with the multiplier carried nodewise on each circle."""
    if space.dim != 2:
        raise GeometryError("full-order oracle is 2D only")
    disks = list(disks)
    for d in disks:
        if not isinstance(d, Disk2D):
            raise GeometryError("full-order oracle supports Disk2D inclusions only")
    if imeshes is None:
        imeshes = [InterfaceMesh(DEFAULT_SEGMENTS) for _ in disks]
    couplings = [
        assemble_interface_coupling(space, d, im) for d, im in zip(disks, imeshes)
    ]
    rhs = [
        _interface_rhs(g, d, im, subdiv=_subdiv_for(space, d, im))
        for g, d, im in zip(g_list, disks, imeshes)
    ]
    system = build_saddle_system(
        A_c,
        F_c,
        couplings,
        rhs,
        dirichlet_ids=dirichlet_ids,
        dirichlet_vals=dirichlet_vals,
    )
    return solve_saddle(system, tol=tol, path="schur", bulk_solver=bulk_solver)


def reduction_gap(space: FeSpace, u_a: np.ndarray, u_b: np.ndarray, K, M):
    """(L2, H1-seminorm) of the difference of two bulk fields on the
    same space, via the assembled Gram matrices."""
    if u_a.shape != u_b.shape or u_a.shape[0] != space.n_dofs:
        raise ValueError("fields live on different spaces")
    d = u_a - u_b
    l2 = float(np.sqrt(max(d @ (M @ d), 0.0)))
    h1 = float(np.sqrt(max(d @ (K @ d), 0.0)))
    return l2, h1
