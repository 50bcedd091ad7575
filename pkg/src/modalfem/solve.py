"""Solvers for the saddle system and the discrete inf-sup estimator.

The default path eliminates the bulk block: the multiplier space is
small, so the Schur complement C A^-1 C^T + M is formed column by
column and solved densely.  Bulk solves use a sparse LU for moderate
sizes and smoothed-aggregation-free classical AMG (CG-accelerated) for
large ones.  A direct factorization of the full indefinite block
matrix is available as an alternative path.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coupling import SaddleSystem

__all__ = [
    "SolverError",
    "SolveReport",
    "InfSupEstimate",
    "BulkSolver",
    "solve_saddle",
    "estimate_infsup",
]

_SPLU_LIMIT = 250_000


class SolverError(Exception):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass
class SolveReport:
    u: np.ndarray
    lam: np.ndarray
    residual: float
    seconds: float
    path: str


@dataclass
class InfSupEstimate:
    beta: float
    eigen_residual: float
    params: dict


class BulkSolver:
    """Reusable solver for the (SPD, Dirichlet-constrained) bulk block."""

    def __init__(self, A: sp.csr_matrix, path: str = "auto", tol: float = 1e-12):
        self.A = A.tocsr()
        self.tol = tol
        if path == "auto":
            path = "splu" if A.shape[0] <= _SPLU_LIMIT else "amg"
        self.path = path
        if path == "splu":
            self._lu = spla.splu(A.tocsc())
        elif path == "amg":
            import pyamg

            self._ml = pyamg.ruge_stuben_solver(self.A)
        else:
            raise ValueError(f"unknown bulk solver path {path!r}")

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self.path == "splu":
            return self._lu.solve(b)
        nb = np.linalg.norm(b)
        if nb == 0.0:
            return np.zeros_like(b)
        x = self._ml.solve(b, tol=self.tol, accel="cg", maxiter=400)
        res = np.linalg.norm(b - self.A @ x) / nb
        if res > max(self.tol * 100, 1e-9):
            raise SolverError(
                f"AMG bulk solve did not converge (residual {res:.2e})", residual=res
            )
        return x

    def solve_many(self, B: np.ndarray) -> np.ndarray:
        """Solve for each column of a dense rhs block."""
        if self.path == "splu":
            return self._lu.solve(B)
        return np.column_stack([self.solve(B[:, j]) for j in range(B.shape[1])])


def _relative_residual(system: SaddleSystem, u, lam) -> float:
    K = system.full_matrix()
    rhs = system.full_rhs()
    x = np.concatenate([u, lam])
    nr = np.linalg.norm(rhs)
    if nr == 0.0:
        return float(np.linalg.norm(K @ x))
    return float(np.linalg.norm(K @ x - rhs) / nr)


def solve_saddle(
    system: SaddleSystem,
    tol: float = 1e-10,
    path: str = "schur",
    bulk_solver: BulkSolver | None = None,
) -> SolveReport:
    """Solve [[A, C^T], [C, -M]] (u, lam) = (F, G) to relative residual tol."""
    if not 0.0 < tol < 1.0:
        raise ValueError("tolerance must lie in (0, 1)")
    t0 = time.perf_counter()
    if path == "schur":
        if bulk_solver is None:
            bulk_solver = BulkSolver(system.A, tol=min(tol * 1e-2, 1e-12))
        uF = bulk_solver.solve(system.F)
        if system.n_mult == 0:
            u, lam = uF, np.zeros(0)
        else:
            Ct = np.asarray(system.C.T.todense())
            X = bulk_solver.solve_many(Ct)
            S = system.C @ X + system.M
            rhs = system.C @ uF - system.G
            try:
                lam = la.solve(S, rhs, assume_a="sym")
            except la.LinAlgError as exc:
                raise SolverError(
                    f"Schur complement of the multiplier block is singular: {exc}"
                ) from exc
            u = uF - X @ lam
    elif path == "direct":
        K = system.full_matrix().tocsc()
        try:
            x = spla.spsolve(K, system.full_rhs())
        except RuntimeError as exc:
            raise SolverError(f"direct factorization failed: {exc}") from exc
        u, lam = x[: system.n_bulk], x[system.n_bulk :]
    else:
        raise ValueError(f"unknown solver path {path!r}")
    res = _relative_residual(system, u, lam)
    seconds = time.perf_counter() - t0
    if not np.isfinite(res) or res > tol:
        raise SolverError(
            f"saddle solve residual {res:.2e} exceeds tolerance {tol:.2e}",
            residual=res,
        )
    return SolveReport(u=u, lam=lam, residual=res, seconds=seconds, path=path)


def estimate_infsup(
    A_norm: sp.csr_matrix,
    C: sp.csr_matrix,
    M_Q: np.ndarray,
    params: dict | None = None,
) -> InfSupEstimate:
    """Discrete inf-sup constant beta = sqrt(lambda_min) of
    C A_norm^-1 C^T x = lambda M_Q x.

    A_norm is an H1-type bulk Gram matrix, M_Q the multiplier Gram.  The
    multiplier space is small, so the eigenproblem is solved densely.
    """
    solver = BulkSolver(A_norm)
    Ct = np.asarray(C.T.todense())
    X = solver.solve_many(Ct)
    S = C @ X
    S = 0.5 * (S + S.T)
    M_Q = np.asarray(M_Q)
    try:
        w, V = la.eigh(S, 0.5 * (M_Q + M_Q.T))
    except la.LinAlgError as exc:
        raise SolverError(f"inf-sup eigenproblem failed: {exc}") from exc
    lam_min = float(w[0])
    v = V[:, 0]
    resid = float(np.linalg.norm(S @ v - lam_min * (M_Q @ v)) / np.linalg.norm(v))
    beta = float(np.sqrt(max(lam_min, 0.0)))
    return InfSupEstimate(beta=beta, eigen_residual=resid, params=dict(params or {}))
