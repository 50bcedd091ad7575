"""Manufactured problems and geometry presets.

The 2D exact solutions are harmonic away from the inclusion boundary
and are represented as real parts of holomorphic functions, which also
gives exact gradients: for u = Re F(z), (u_x, u_y) = (Re F', -Im F').
Fields are piecewise, selected by the side test rho >< eps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import BoxDomain
from .modal import CylinderZ3D, Disk2D, GeometryError, inclusions_overlap

__all__ = ["Problem", "make_problem", "PROBLEM_IDS", "UnsupportedProblemError"]

PROBLEM_IDS = ("D1", "D2", "D3", "TWO_INC", "THREE_CYL")

SQUARE = BoxDomain(lower=(-1.0, -1.0), upper=(1.0, 1.0))
CUBE = BoxDomain(lower=(-1.0, -1.0, -1.0), upper=(1.0, 1.0, 1.0))


class UnsupportedProblemError(Exception):
    pass


@dataclass(frozen=True)
class Problem:
    pid: str
    domain: BoxDomain
    inclusions: tuple
    g_inclusion: tuple  # one boundary datum per inclusion
    g_outer: object  # callable or constant
    f: object  # bulk source, callable or constant
    exact: object = None  # callable(points) -> values, or None
    exact_grad: object = None

    @property
    def has_exact(self) -> bool:
        return self.exact is not None

    def exact_eval(self, points):
        """(values, gradients) of the exact solution at given points."""
        if not self.has_exact:
            raise UnsupportedProblemError(f"{self.pid} has no exact solution")
        p = np.atleast_2d(points)
        return self.exact(p), self.exact_grad(p)


def _piecewise_holomorphic(eps, F_int, dF_int, F_ext, dF_ext):
    """Exact value/gradient evaluators from interior/exterior holomorphic
    representations u = Re F(z), split at rho = eps."""

    def val(points):
        p = np.atleast_2d(points)
        z = p[:, 0] + 1j * p[:, 1]
        inside = np.abs(z) < eps
        out = np.empty(p.shape[0])
        if np.any(inside):
            out[inside] = np.real(F_int(z[inside]))
        if np.any(~inside):
            out[~inside] = np.real(F_ext(z[~inside]))
        return out

    def grad(points):
        p = np.atleast_2d(points)
        z = p[:, 0] + 1j * p[:, 1]
        inside = np.abs(z) < eps
        d = np.empty(p.shape[0], dtype=complex)
        if np.any(inside):
            d[inside] = dF_int(z[inside])
        if np.any(~inside):
            d[~inside] = dF_ext(z[~inside])
        return np.stack([np.real(d), -np.imag(d)], axis=1)

    return val, grad


def _check_geometry(domain: BoxDomain, inclusions) -> None:
    if inclusions_overlap(list(inclusions)):
        raise GeometryError("inclusions overlap")
    lo, up = np.asarray(domain.lower), np.asarray(domain.upper)
    for inc in inclusions:
        if isinstance(inc, Disk2D):
            c = np.asarray(inc.center)
            if np.any(c - inc.radius <= lo) or np.any(c + inc.radius >= up):
                raise GeometryError(f"inclusion {inc} is not strictly inside {domain}")
        else:
            c = np.asarray(inc.center_xy)
            if (
                np.any(c - inc.radius <= lo[:2])
                or np.any(c + inc.radius >= up[:2])
                or inc.z0 <= lo[2]
                or inc.z1 >= up[2]
            ):
                raise GeometryError(f"inclusion {inc} is not strictly inside {domain}")


def make_problem(pid: str, eps: float) -> Problem:
    """Build one of the preset problems at inclusion radius eps."""
    if pid not in PROBLEM_IDS:
        raise UnsupportedProblemError(f"unknown problem id {pid!r}")
    if pid == "D1":
        # truncated fundamental solution: -ln(rho) outside, -ln(eps) inside
        log_eps = np.log(eps)
        val, grad = _piecewise_holomorphic(
            eps,
            F_int=lambda z: np.full_like(z, -log_eps),
            dF_int=lambda z: np.zeros_like(z),
            F_ext=lambda z: -np.log(z),
            dF_ext=lambda z: -1.0 / z,
        )
        incs = (Disk2D(center=(0.0, 0.0), radius=eps),)
        prob = Problem(
            pid=pid,
            domain=SQUARE,
            inclusions=incs,
            g_inclusion=(-log_eps,),
            g_outer=val,
            f=0.0,
            exact=val,
            exact_grad=grad,
        )
    elif pid == "D2":
        # u = x inside, x*eps^2/rho^2 outside; zero-average boundary datum
        val, grad = _piecewise_holomorphic(
            eps,
            F_int=lambda z: z,
            dF_int=lambda z: np.ones_like(z),
            F_ext=lambda z: eps**2 / z,
            dF_ext=lambda z: -(eps**2) / z**2,
        )
        incs = (Disk2D(center=(0.0, 0.0), radius=eps),)
        prob = Problem(
            pid=pid,
            domain=SQUARE,
            inclusions=incs,
            g_inclusion=(val,),
            g_outer=val,
            f=0.0,
            exact=val,
            exact_grad=grad,
        )
    elif pid == "D3":
        # cubic harmonic inside, matched multipole + log expansion outside
        log_eps = np.log(eps)
        val, grad = _piecewise_holomorphic(
            eps,
            F_int=lambda z: 2.0 * z**3 - z**2 + z + 1.0,
            dF_int=lambda z: 6.0 * z**2 - 2.0 * z + 1.0,
            F_ext=lambda z: 2.0 * eps**6 / z**3
            - eps**4 / z**2
            + eps**2 / z
            + np.log(z) / log_eps,
            dF_ext=lambda z: -6.0 * eps**6 / z**4
            + 2.0 * eps**4 / z**3
            - eps**2 / z**2
            + 1.0 / (z * log_eps),
        )
        incs = (Disk2D(center=(0.0, 0.0), radius=eps),)
        prob = Problem(
            pid=pid,
            domain=SQUARE,
            inclusions=incs,
            g_inclusion=(val,),
            g_outer=val,
            f=0.0,
            exact=val,
            exact_grad=grad,
        )
    elif pid == "TWO_INC":
        incs = (
            Disk2D(center=(-0.4, 0.0), radius=eps),
            Disk2D(center=(0.4, 0.0), radius=eps),
        )
        prob = Problem(
            pid=pid,
            domain=SQUARE,
            inclusions=incs,
            g_inclusion=(1.0, 1.0),
            g_outer=0.0,
            f=0.0,
        )
    else:  # THREE_CYL
        incs = (
            CylinderZ3D(center_xy=(-0.4, -0.4), z0=-0.25, z1=0.25, radius=eps),
            CylinderZ3D(center_xy=(0.4, -0.4), z0=-0.5, z1=0.0, radius=eps),
            CylinderZ3D(center_xy=(0.0, 0.4), z0=0.0, z1=0.5, radius=eps),
        )
        prob = Problem(
            pid=pid,
            domain=CUBE,
            inclusions=incs,
            g_inclusion=(1.0, 1.0, 1.0),
            g_outer=0.0,
            f=0.0,
        )
    _check_geometry(prob.domain, prob.inclusions)
    return prob


def custom_problem(domain: BoxDomain, inclusions, g_inclusion, g_outer=0.0, f=0.0) -> Problem:
    """User-defined problem with constant boundary data per inclusion."""
    incs = tuple(inclusions)
    g = tuple(g_inclusion)
    if len(g) != len(incs):
        raise GeometryError("need one inclusion-boundary datum per inclusion")
    prob = Problem(
        pid="CUSTOM",
        domain=domain,
        inclusions=incs,
        g_inclusion=g,
        g_outer=g_outer,
        f=f,
    )
    _check_geometry(domain, incs)
    return prob
