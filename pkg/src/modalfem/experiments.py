"""Experiment drivers: single cases, parameter sweeps, and rate fits.

A case is (problem, level, eps, n, kappa, method).  Bulk matrices and
factorizations depend only on (domain, level), so they are cached and
shared across the cases of a sweep.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import fem
from .coupling import (
    assemble_constraint_rhs,
    assemble_coupling,
    assemble_robin,
    build_saddle_system,
    multiplier_gram,
)
from .full_order import InterfaceMesh, reduction_gap, solve_full_order
from .mesh import BoxDomain, StructuredMesh
from .modal import (
    BoundaryQuadrature,
    CylinderZ3D,
    Disk2D,
    GeometryError,
    ModalBasis,
    build_boundary_quadrature,
    grid_crossing_angles,
    weighted_average,
)
from .problems import Problem, make_problem
from .solve import BulkSolver, estimate_infsup, solve_saddle

__all__ = [
    "SweepSpec",
    "run_case",
    "sweep",
    "robin_consistency_case",
    "three_cylinder_case",
    "fit_loglog",
    "clear_caches",
]

RESIDUAL_TAIL_MODES = 4  # probe modes n+1 .. n+4 of the boundary mismatch


@dataclass(frozen=True)
class SweepSpec:
    problem: str
    levels: tuple
    epsilons: tuple
    orders: tuple
    kappas: tuple = (0.0,)
    method: str = "reduced"
    solver_path: str = "schur"
    solver_tol: float = 1e-10


class _BulkContext:
    """Mesh, space, raw operators, and the constrained bulk factorization
    for one (domain, level).  Everything here is problem-independent."""

    def __init__(self, domain: BoxDomain, level: int):
        self.mesh = StructuredMesh(domain, level)
        self.space = fem.FeSpace(self.mesh)
        self.K = fem.assemble_stiffness(self.space)
        self.M = fem.assemble_mass(self.space)
        self.bd = self.mesh.boundary_vertex_ids()
        zero = np.zeros(self.space.n_dofs)
        self.A_c, _, _, _ = fem.apply_dirichlet(self.K, zero, self.space, 0.0)
        self._solver = None
        self._norm_solver_mat = None

    @property
    def solver(self) -> BulkSolver:
        if self._solver is None:
            self._solver = BulkSolver(self.A_c)
        return self._solver

    def constrained_rhs(self, f, g_outer):
        """Load vector with outer Dirichlet data eliminated."""
        b = (
            fem.assemble_load(self.space, f)
            if (callable(f) or f)
            else np.zeros(self.space.n_dofs)
        )
        coords = self.space.dof_coords()[self.bd]
        vals = (
            np.asarray(g_outer(coords), dtype=float)
            if callable(g_outer)
            else np.full(self.bd.shape[0], float(g_outer))
        )
        b = b - self.K[:, self.bd] @ vals
        b[self.bd] = vals
        return b, vals

    def h1_gram_constrained(self):
        """Stiffness + mass with outer Dirichlet elimination (H1_0 Gram)."""
        A_norm, _, _, _ = fem.apply_dirichlet(
            self.K + self.M, np.zeros(self.space.n_dofs), self.space, 0.0
        )
        return A_norm


_bulk_cache: dict = {}


def _bulk_context(domain: BoxDomain, level: int) -> _BulkContext:
    key = (domain.lower, domain.upper, level)
    if key not in _bulk_cache:
        _bulk_cache[key] = _BulkContext(domain, level)
    return _bulk_cache[key]


def clear_caches() -> None:
    _bulk_cache.clear()


def _axial_nodes(mesh: StructuredMesh, inc: CylinderZ3D) -> np.ndarray:
    """Axial P1 nodes on the cylinder axis, conforming to the mesh z-planes."""
    planes = mesh.z_planes()
    tol = 1e-9 * mesh.h
    sel = planes[(planes >= inc.z0 - tol) & (planes <= inc.z1 + tol)]
    if sel.size < 2 or not (
        np.isclose(sel[0], inc.z0, atol=tol) and np.isclose(sel[-1], inc.z1, atol=tol)
    ):
        raise GeometryError(
            f"cylinder axis [{inc.z0}, {inc.z1}] does not conform to the mesh z-planes"
        )
    return sel


def _mesh_crossing_angles(mesh: StructuredMesh, inc) -> np.ndarray:
    """Angles where the inclusion circle crosses mesh grid lines; the
    bulk trace is a smooth function of theta between two crossings."""
    center = inc.center if isinstance(inc, Disk2D) else inc.center_xy
    lo = mesh.domain.lower
    x_lines = lo[0] + mesh.dx[0] * np.arange(mesh.verts_per_side)
    y_lines = lo[1] + mesh.dx[1] * np.arange(mesh.verts_per_side)
    keep_x = np.abs(x_lines - center[0]) < inc.radius
    keep_y = np.abs(y_lines - center[1]) < inc.radius
    return grid_crossing_angles(center, inc.radius, x_lines[keep_x], y_lines[keep_y])


def _inclusion_quadrature(
    mesh: StructuredMesh, inc, basis: ModalBasis
) -> BoundaryQuadrature:
    bp = _mesh_crossing_angles(mesh, inc)
    if isinstance(inc, Disk2D):
        return build_boundary_quadrature(inc, basis, angular_breakpoints=bp)
    return build_boundary_quadrature(
        inc, basis, axial_nodes=_axial_nodes(mesh, inc), angular_breakpoints=bp
    )


def _assemble_case(ctx: _BulkContext, prob: Problem, basis: ModalBasis, kappa: float):
    quads = [_inclusion_quadrature(ctx.mesh, inc, basis) for inc in prob.inclusions]
    couplings = [assemble_coupling(ctx.space, q, basis) for q in quads]
    rhs = [
        assemble_constraint_rhs(g, basis, q)
        for g, q in zip(prob.g_inclusion, quads)
    ]
    robin = [assemble_robin(basis, q, kappa) for q in quads]
    F_c, bd_vals = ctx.constrained_rhs(prob.f, prob.g_outer)
    system = build_saddle_system(
        ctx.A_c,
        F_c,
        couplings,
        rhs,
        robin_blocks=robin,
        dirichlet_ids=ctx.bd,
        dirichlet_vals=bd_vals,
    )
    return system, quads


def constraint_residual(
    ctx: _BulkContext, prob: Problem, u: np.ndarray, n: int
) -> float:
    """Surrogate for the dual norm of the boundary mismatch g - u_h|Gamma:
    weighted modal moments up to order n + RESIDUAL_TAIL_MODES with
    weights sqrt(1 + order), combined in l2 over all inclusions."""
    probe = ModalBasis(n + RESIDUAL_TAIL_MODES)
    total = 0.0
    for inc, g in zip(prob.inclusions, prob.g_inclusion):
        quad = _inclusion_quadrature(ctx.mesh, inc, probe)
        gvals = (
            np.asarray(g(quad.points), dtype=float)
            if callable(g)
            else np.full(quad.points.shape[0], float(g))
        )
        mismatch = gvals - fem.evaluate(ctx.space, u, quad.points)
        for k in range(probe.N):
            order = int(probe.orders[k])
            avg = weighted_average(mismatch, probe, quad, k)
            if quad.chi is None:
                total += (1.0 + order) * float(avg) ** 2
            else:
                # axial L2 norm of the moment profile via lumped mass
                lumped = quad.chi.T @ quad.weights / (2.0 * np.pi * inc.radius)
                total += (1.0 + order) * float(np.sum(lumped * np.asarray(avg) ** 2))
    return math.sqrt(total)


def residual_tail(ctx: _BulkContext, prob: Problem, u: np.ndarray, n: int) -> float:
    """Same surrogate restricted to the truncated modes n+1 .. n+4."""
    probe = ModalBasis(n + RESIDUAL_TAIL_MODES)
    total = 0.0
    for inc, g in zip(prob.inclusions, prob.g_inclusion):
        quad = _inclusion_quadrature(ctx.mesh, inc, probe)
        gvals = (
            np.asarray(g(quad.points), dtype=float)
            if callable(g)
            else np.full(quad.points.shape[0], float(g))
        )
        mismatch = gvals - fem.evaluate(ctx.space, u, quad.points)
        for k in range(probe.N):
            order = int(probe.orders[k])
            if order <= n:
                continue
            avg = weighted_average(mismatch, probe, quad, k)
            if quad.chi is None:
                total += (1.0 + order) * float(avg) ** 2
            else:
                lumped = quad.chi.T @ quad.weights / (2.0 * np.pi * inc.radius)
                total += (1.0 + order) * float(np.sum(lumped * np.asarray(avg) ** 2))
    return math.sqrt(total)


def _lambda0(sol_lam: np.ndarray, offsets, quads, basis: ModalBasis) -> float:
    """Mode-0 multiplier coefficient of the first inclusion, oriented as
    the inner-minus-outer normal-derivative jump (positive for sources)."""
    if sol_lam.size == 0:
        return math.nan
    start = offsets[0] if offsets else 0
    quad = quads[0]
    if quad.axial_nodes is None:
        return float(-sol_lam[start])
    prof = sol_lam[start : start + quad.n_axial_nodes * basis.N].reshape(-1, basis.N)
    return float(-np.mean(prof[:, 0]))


def run_case(
    problem: str | Problem,
    level: int,
    eps: float,
    n: int,
    kappa: float = 0.0,
    method: str = "reduced",
    solver_path: str = "schur",
    solver_tol: float = 1e-10,
    full_segments: int = 64,
) -> dict:
    """Assemble, solve, and post-process one case; returns a report row."""
    prob = problem if isinstance(problem, Problem) else make_problem(problem, eps)
    basis = ModalBasis(n)
    ctx = _bulk_context(prob.domain, level)
    row = {
        "problem": prob.pid,
        "method": method,
        "level": level,
        "h": ctx.mesh.h,
        "epsilon": eps,
        "n": n,
        "N": basis.N,
        "kappa": kappa,
        "dofs_bulk": ctx.space.n_dofs,
        "dofs_lambda": None,
        "err_L2": None,
        "err_H1": None,
        "constraint_res": None,
        "gap_L2": None,
        "gap_H1": None,
        "lambda0": None,
        "max_u": None,
        "solve_seconds": None,
    }
    seconds = 0.0
    u_reduced = None
    if method in ("reduced", "both"):
        system, quads = _assemble_case(ctx, prob, basis, kappa)
        bulk = ctx.solver if solver_path == "schur" else None
        sol = solve_saddle(
            system, tol=solver_tol, path=solver_path, bulk_solver=bulk
        )
        seconds += sol.seconds
        u_reduced = sol.u
        row["dofs_lambda"] = system.n_mult
        row["lambda0"] = _lambda0(sol.lam, system.mult_offsets, quads, basis)
        row["max_u"] = float(np.max(sol.u))
        row["constraint_res"] = constraint_residual(ctx, prob, sol.u, n)
        if prob.has_exact:
            l2, h1 = fem.error_norms(
                ctx.space, sol.u, prob.exact, prob.exact_grad
            )
            row["err_L2"], row["err_H1"] = l2, h1
    if method in ("full", "both"):
        if prob.domain.dim != 2:
            raise GeometryError("full-order oracle is available in 2D only")
        F_c, bd_vals = ctx.constrained_rhs(prob.f, prob.g_outer)
        imeshes = [InterfaceMesh(full_segments) for _ in prob.inclusions]
        fsol = solve_full_order(
            ctx.space,
            prob.inclusions,
            ctx.A_c,
            F_c,
            prob.g_inclusion,
            ctx.bd,
            bd_vals,
            imeshes=imeshes,
            tol=solver_tol,
            bulk_solver=ctx.solver if solver_path == "schur" else None,
        )
        seconds += fsol.seconds
        if method == "full":
            row["dofs_lambda"] = fsol.lam.shape[0]
            row["max_u"] = float(np.max(fsol.u))
            row["constraint_res"] = constraint_residual(ctx, prob, fsol.u, n)
            if prob.has_exact:
                l2, h1 = fem.error_norms(
                    ctx.space, fsol.u, prob.exact, prob.exact_grad
                )
                row["err_L2"], row["err_H1"] = l2, h1
        else:
            gl2, gh1 = reduction_gap(ctx.space, u_reduced, fsol.u, ctx.K, ctx.M)
            row["gap_L2"], row["gap_H1"] = gl2, gh1
    row["solve_seconds"] = seconds
    return row


def fit_loglog(x, y):
    """Least-squares slope of log(y) vs log(x); returns (slope, r_squared).

    Requires at least 3 points; fits with R^2 < 0.9 should be treated as
    unreliable by the caller.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[0] < 3:
        raise ValueError("rate fits need at least 3 points")
    if np.any(y <= 0) or np.any(x <= 0):
        raise ValueError("log-log fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, _, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(coef[0]), r2


_CASE_SORT_KEY = ("problem", "level", "epsilon", "n", "kappa", "method")


def _run_case_tuple(args):
    key, kwargs = args
    try:
        return key, run_case(**kwargs), None
    except Exception as exc:  # per-row failure; sweep continues
        return key, None, f"{type(exc).__name__}: {exc}"


def sweep(spec: SweepSpec, workers: int = 1):
    """Run the Cartesian product of cases; returns (rows, fits, errors).

    Rate fits are computed along the level axis for each (eps, n) and
    along the eps axis for each (level, n), whenever >= 3 cases with
    positive errors are available.
    """
    cases = []
    for level in spec.levels:
        for eps in spec.epsilons:
            for n in spec.orders:
                for kappa in spec.kappas:
                    kwargs = dict(
                        problem=spec.problem,
                        level=level,
                        eps=eps,
                        n=n,
                        kappa=kappa,
                        method=spec.method,
                        solver_path=spec.solver_path,
                        solver_tol=spec.solver_tol,
                    )
                    key = (spec.problem, level, eps, n, kappa, spec.method)
                    cases.append((key, kwargs))
    rows, errors = [], []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_case_tuple, cases))
    else:
        results = [_run_case_tuple(c) for c in cases]
    for key, row, err in sorted(results, key=lambda t: t[0]):
        if err is None:
            rows.append(row)
        else:
            errors.append({"case": key, "error": err})
    fits = _sweep_fits(rows)
    return rows, fits, errors


def _sweep_fits(rows):
    fits = []
    ok = [r for r in rows if r.get("err_L2") not in (None, 0.0)]

    def groupby(keys):
        groups = {}
        for r in ok:
            groups.setdefault(tuple(r[k] for k in keys), []).append(r)
        return groups

    for (eps, n), grp in groupby(("epsilon", "n")).items():
        if len(grp) < 3:
            continue
        hs = [r["h"] for r in grp]
        for norm in ("err_L2", "err_H1"):
            try:
                slope, r2 = fit_loglog(hs, [r[norm] for r in grp])
            except ValueError:
                continue
            fits.append(
                {
                    "axis": "h",
                    "epsilon": eps,
                    "n": n,
                    "norm": norm,
                    "rate": slope,
                    "r_squared": r2,
                    "reliable": r2 >= 0.9,
                }
            )
    for (level, n), grp in groupby(("level", "n")).items():
        if len(grp) < 3:
            continue
        es = [r["epsilon"] for r in grp]
        for norm in ("err_L2", "err_H1"):
            try:
                slope, r2 = fit_loglog(es, [r[norm] for r in grp])
            except ValueError:
                continue
            fits.append(
                {
                    "axis": "epsilon",
                    "level": level,
                    "n": n,
                    "norm": norm,
                    "rate": slope,
                    "r_squared": r2,
                    "reliable": r2 >= 0.9,
                }
            )
    return fits


def robin_consistency_case(
    problem: str,
    level: int,
    eps: float,
    n: int,
    kappas,
    solver_path: str = "schur",
    solver_tol: float = 1e-10,
):
    """Solve the Robin variant for each kappa and compare to kappa = 0.

    Returns (rows, diffs) where diffs[i] is the L2 distance between the
    kappa_i solution and the Dirichlet (kappa = 0) solution.
    """
    prob = make_problem(problem, eps)
    basis = ModalBasis(n)
    ctx = _bulk_context(prob.domain, level)
    system0, _ = _assemble_case(ctx, prob, basis, 0.0)
    bulk = ctx.solver if solver_path == "schur" else None
    sol0 = solve_saddle(system0, tol=solver_tol, path=solver_path, bulk_solver=bulk)
    rows, diffs = [], []
    for kappa in kappas:
        row = run_case(
            prob,
            level,
            eps,
            n,
            kappa=kappa,
            solver_path=solver_path,
            solver_tol=solver_tol,
        )
        system_k, _ = _assemble_case(ctx, prob, basis, kappa)
        sol_k = solve_saddle(
            system_k, tol=solver_tol, path=solver_path, bulk_solver=bulk
        )
        d, _ = reduction_gap(ctx.space, sol_k.u, sol0.u, ctx.K, ctx.M)
        diffs.append(d)
        rows.append(row)
    return rows, diffs


def three_cylinder_case(
    level: int,
    eps: float,
    n: int,
    solver_path: str = "schur",
    solver_tol: float = 1e-10,
):
    """Reduced solve of the 3D three-cylinder preset.

    Returns (row, extras) with the maximum-principle indicator max(u_h)
    and the mode-0 boundary average of u_h on each cylinder.
    """
    prob = make_problem("THREE_CYL", eps)
    row = run_case(
        prob, level, eps, n, solver_path=solver_path, solver_tol=solver_tol
    )
    ctx = _bulk_context(prob.domain, level)
    basis = ModalBasis(n)
    system, quads = _assemble_case(ctx, prob, basis, 0.0)
    bulk = ctx.solver if solver_path == "schur" else None
    sol = solve_saddle(system, tol=solver_tol, path=solver_path, bulk_solver=bulk)
    averages = []
    for quad in quads:
        uvals = fem.evaluate(ctx.space, sol.u, quad.points)
        averages.append(np.asarray(weighted_average(uvals, basis, quad, 0)))
    extras = {
        "max_u": float(np.max(sol.u)),
        "mode0_boundary_averages": averages,
        "u": sol.u,
        "mesh": ctx.mesh,
    }
    return row, extras


def infsup_study(problem: str, level: int, eps: float, orders, kappa: float = 0.0):
    """Inf-sup estimates for a list of mode orders at fixed (level, eps)."""
    prob = make_problem(problem, eps)
    ctx = _bulk_context(prob.domain, level)
    A_norm = ctx.h1_gram_constrained()
    out = []
    for n in orders:
        basis = ModalBasis(n)
        system, quads = _assemble_case(ctx, prob, basis, kappa)
        M_Q = _multiplier_norm_gram(quads, basis)
        est = estimate_infsup(
            A_norm, system.C, M_Q, params={"level": level, "eps": eps, "n": n}
        )
        out.append(est)
    return out


def _multiplier_norm_gram(quads, basis: ModalBasis) -> np.ndarray:
    """Block-diagonal multiplier Gram used as the inf-sup norm matrix."""
    blocks = [multiplier_gram(basis, q) for q in quads]
    size = sum(b.shape[0] for b in blocks)
    M = np.zeros((size, size))
    pos = 0
    for b in blocks:
        k = b.shape[0]
        M[pos : pos + k, pos : pos + k] = b
        pos += k
    return M
