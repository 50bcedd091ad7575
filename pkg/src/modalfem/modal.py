"""Inclusion geometry, Fourier weight functions, and boundary quadrature.

The multiplier space on the boundary of a disk (2D) or z-aligned
cylinder (3D) is spanned by the angular modes
[1, cos(theta), sin(theta), ..., cos(n*theta), sin(n*theta)], N = 2n+1
modes in total, tensorised with a P1 space on the cylinder axis in 3D.
The average/extension/projection operators between boundary fields and
modal coefficients are implemented on top of an equally spaced angular
trapezoid rule, which integrates all mode products exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Disk2D",
    "CylinderZ3D",
    "ModalBasis",
    "BoundaryQuadrature",
    "GeometryError",
    "build_boundary_quadrature",
    "grid_crossing_angles",
    "weighted_average",
    "modal_project",
    "modal_extend",
    "inclusions_overlap",
]


class GeometryError(Exception):
    pass


@dataclass(frozen=True)
class Disk2D:
    """Circular inclusion of radius eps centred at `center`."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if len(self.center) != 2:
            raise GeometryError("Disk2D center must be 2D")
        if self.radius <= 0:
            raise GeometryError("inclusion radius must be positive")

    @property
    def dim(self) -> int:
        return 2

    @property
    def boundary_measure(self) -> float:
        return 2.0 * np.pi * self.radius


@dataclass(frozen=True)
class CylinderZ3D:
    """Cylinder of radius eps with axis parallel to the z axis.

    The axis segment runs from (cx, cy, z0) to (cx, cy, z1).
    """

    center_xy: tuple
    z0: float
    z1: float
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center_xy", tuple(float(c) for c in self.center_xy))
        object.__setattr__(self, "z0", float(self.z0))
        object.__setattr__(self, "z1", float(self.z1))
        object.__setattr__(self, "radius", float(self.radius))
        if len(self.center_xy) != 2:
            raise GeometryError("CylinderZ3D center_xy must be 2D")
        if self.radius <= 0:
            raise GeometryError("inclusion radius must be positive")
        if self.z1 <= self.z0:
            raise GeometryError("cylinder axis segment must have z1 > z0")

    @property
    def dim(self) -> int:
        return 3

    @property
    def length(self) -> float:
        return self.z1 - self.z0

    @property
    def boundary_measure(self) -> float:
        """Lateral surface area (end caps carry no multiplier)."""
        return 2.0 * np.pi * self.radius * self.length


def inclusions_overlap(incs) -> bool:
    """True if any pair of inclusions is not disjoint."""
    for a in range(len(incs)):
        for b in range(a + 1, len(incs)):
            ia, ib = incs[a], incs[b]
            if isinstance(ia, Disk2D):
                d = np.hypot(
                    ia.center[0] - ib.center[0], ia.center[1] - ib.center[1]
                )
                if d < ia.radius + ib.radius:
                    return True
            else:
                d = np.hypot(
                    ia.center_xy[0] - ib.center_xy[0],
                    ia.center_xy[1] - ib.center_xy[1],
                )
                z_gap = max(ia.z0, ib.z0) > min(ia.z1, ib.z1)
                if d < ia.radius + ib.radius and not z_gap:
                    return True
    return False


class ModalBasis:
    """Angular Fourier modes up to order n; N = 2n+1 modes.

    Mode index k maps to: k=0 -> 1; odd k -> cos(i*theta); even k>0 ->
    sin(i*theta), with order i = (k+1)//2.  The normalized angular
    averages of mode products are c_i * delta, with c_0 = 1 and
    c_i = 1/2 for i >= 1.
    """

    def __init__(self, n: int):
        if n < 0:
            raise ValueError("highest Fourier order must be >= 0")
        self.n = n
        self.N = 2 * n + 1
        orders = np.array([0] + [((k + 1) // 2) for k in range(1, self.N)])
        self.orders = orders
        self.c = np.where(orders == 0, 1.0, 0.5)

    def mode_eval(self, index: int, theta) -> np.ndarray:
        if not 0 <= index < self.N:
            raise IndexError(f"mode index {index} out of range [0, {self.N})")
        theta = np.asarray(theta, dtype=float)
        if index == 0:
            return np.ones_like(theta)
        i = (index + 1) // 2
        return np.cos(i * theta) if index % 2 == 1 else np.sin(i * theta)

    def eval_all(self, theta) -> np.ndarray:
        """Mode values at angles, shape (len(theta), N)."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.empty((theta.shape[0], self.N))
        out[:, 0] = 1.0
        for i in range(1, self.n + 1):
            out[:, 2 * i - 1] = np.cos(i * theta)
            out[:, 2 * i] = np.sin(i * theta)
        return out


@dataclass(frozen=True)
class BoundaryQuadrature:
    """Quadrature on the inclusion boundary.

    2D: equally spaced angular trapezoid points on the circle.
    3D: tensor of the angular rule with 2-point Gauss per axial element
    of the P1 multiplier mesh on the cylinder axis.  `chi` holds the P1
    axial basis values at the quadrature points (None in 2D).
    """

    points: np.ndarray  # (q, dim)
    weights: np.ndarray  # (q,)
    theta: np.ndarray  # (q,)
    z: np.ndarray | None = None  # (q,) axial coordinate, 3D only
    axial_nodes: np.ndarray | None = None  # (K+1,), 3D only
    chi: np.ndarray | None = None  # (q, K+1), 3D only

    @property
    def n_angular(self) -> int:
        return self.theta.shape[0] if self.z is None else np.unique(self.theta).shape[0]

    @property
    def n_axial_nodes(self) -> int:
        return 0 if self.axial_nodes is None else self.axial_nodes.shape[0]

    def n_multiplier_dofs(self, basis: ModalBasis) -> int:
        if self.axial_nodes is None:
            return basis.N
        return basis.N * self.n_axial_nodes

    def multiplier_matrix(self, basis: ModalBasis) -> np.ndarray:
        """Multiplier basis values at quadrature points, shape (q, n_mult).

        Column ordering: mode-major in 2D; (axial node a, mode k) ->
        a*N + k in 3D.
        """
        phi = basis.eval_all(self.theta)
        if self.chi is None:
            return phi
        q = self.theta.shape[0]
        out = np.einsum("qa,qk->qak", self.chi, phi)
        return out.reshape(q, -1)


def _angular_points(basis: ModalBasis, n_angular: int | None) -> np.ndarray:
    m = max(16, 4 * basis.n + 4) if n_angular is None else int(n_angular)
    return np.arange(m) * (2.0 * np.pi / m), m


def grid_crossing_angles(center, radius, x_lines, y_lines) -> np.ndarray:
    """Angles where the circle crosses vertical/horizontal grid lines.

    Returned sorted in [0, 2*pi); the integrand of boundary integrals
    against piecewise-polynomial bulk functions is smooth between
    consecutive crossings.
    """
    cx, cy = center
    two_pi = 2.0 * np.pi
    angs = []
    for X in np.atleast_1d(x_lines):
        c = (float(X) - cx) / radius
        if -1.0 < c < 1.0:
            a = float(np.arccos(c))
            angs.extend([a, two_pi - a])
    for Y in np.atleast_1d(y_lines):
        s = (float(Y) - cy) / radius
        if -1.0 < s < 1.0:
            a = float(np.arcsin(s))
            angs.extend([a % two_pi, (np.pi - a) % two_pi])
    return np.unique(np.asarray(angs, dtype=float))


def _arc_gauss_angles(breakpoints, max_len: float, n_gauss: int = 4):
    """Composite Gauss rule on [0, 2*pi) split at the given angles.

    Arcs longer than max_len are subdivided.  Returns (theta, weights)
    with sum(weights) = 2*pi.
    """
    two_pi = 2.0 * np.pi
    bp = np.sort(np.asarray(breakpoints, dtype=float) % two_pi)
    if bp.size == 0:
        bp = np.array([0.0])
    ext = np.append(bp, bp[0] + two_pi)
    gx, gw = np.polynomial.legendre.leggauss(n_gauss)
    gx = (gx + 1.0) / 2.0
    gw = gw / 2.0
    thetas, weights = [], []
    for a, b in zip(ext[:-1], ext[1:]):
        length = b - a
        if length <= 1e-14:
            continue
        pieces = max(1, int(np.ceil(length / max_len)))
        sub = length / pieces
        for j in range(pieces):
            a0 = a + sub * j
            thetas.append(a0 + sub * gx)
            weights.append(sub * gw)
    theta = np.concatenate(thetas) % two_pi
    return theta, np.concatenate(weights)


def build_boundary_quadrature(
    inc,
    basis: ModalBasis,
    axial_nodes=None,
    n_angular: int | None = None,
    angular_breakpoints=None,
) -> BoundaryQuadrature:
    """Boundary quadrature for a disk or z-aligned cylinder.

    By default the angular rule is the equally spaced trapezoid, which is
    exact for products of the basis modes.  If `angular_breakpoints` is
    given (angles where the integrand loses smoothness, e.g. grid-line
    crossings), a composite per-arc Gauss rule is used instead.

    For cylinders `axial_nodes` gives the P1 multiplier mesh on the axis
    segment; it must start/end at the segment endpoints.
    """
    theta1, m = _angular_points(basis, n_angular)
    w_theta = np.full(m, 2.0 * np.pi / m)
    if angular_breakpoints is not None:
        theta1, w_theta = _arc_gauss_angles(angular_breakpoints, 2.0 * np.pi / m)
    if isinstance(inc, Disk2D):
        eps = inc.radius
        pts = np.stack(
            [
                inc.center[0] + eps * np.cos(theta1),
                inc.center[1] + eps * np.sin(theta1),
            ],
            axis=1,
        )
        return BoundaryQuadrature(points=pts, weights=eps * w_theta, theta=theta1)
    if not isinstance(inc, CylinderZ3D):
        raise GeometryError(f"unsupported inclusion type {type(inc)!r}")
    if axial_nodes is None:
        axial_nodes = np.array([inc.z0, inc.z1])
    axial_nodes = np.asarray(axial_nodes, dtype=float)
    if axial_nodes.ndim != 1 or axial_nodes.shape[0] < 2:
        raise GeometryError("cylinder needs at least two axial nodes")
    if not (
        np.isclose(axial_nodes[0], inc.z0) and np.isclose(axial_nodes[-1], inc.z1)
    ):
        raise GeometryError("axial nodes must span the cylinder axis segment")
    eps = inc.radius
    gz = np.array([-1.0, 1.0]) / np.sqrt(3.0)  # 2-point Gauss on [-1, 1]
    n_el = axial_nodes.shape[0] - 1
    z_list, wz_list, chi_list = [], [], []
    for e in range(n_el):
        z0, z1 = axial_nodes[e], axial_nodes[e + 1]
        zm, hl = 0.5 * (z0 + z1), 0.5 * (z1 - z0)
        ze = zm + hl * gz
        we = np.full(2, hl)  # Gauss weights are 1 on [-1, 1]
        ch = np.zeros((2, axial_nodes.shape[0]))
        t = (ze - z0) / (z1 - z0)
        ch[:, e] = 1.0 - t
        ch[:, e + 1] = t
        z_list.append(ze)
        wz_list.append(we)
        chi_list.append(ch)
    z_ax = np.concatenate(z_list)
    w_ax = np.concatenate(wz_list)
    chi_ax = np.vstack(chi_list)
    # tensorise: axial index slow, angular fast
    m_eff = theta1.shape[0]
    theta = np.tile(theta1, z_ax.shape[0])
    z = np.repeat(z_ax, m_eff)
    w = np.repeat(w_ax, m_eff) * np.tile(eps * w_theta, z_ax.shape[0])
    chi = np.repeat(chi_ax, m_eff, axis=0)
    pts = np.stack(
        [
            inc.center_xy[0] + eps * np.cos(theta),
            inc.center_xy[1] + eps * np.sin(theta),
            z,
        ],
        axis=1,
    )
    return BoundaryQuadrature(
        points=pts, weights=w, theta=theta, z=z, axial_nodes=axial_nodes, chi=chi
    )


def weighted_average(values, basis: ModalBasis, quad: BoundaryQuadrature, index: int):
    """Normalized weighted angular average of a boundary-sampled field.

    Returns a scalar for a disk and a per-axial-node profile (via
    mass-lumped axial projection) for a cylinder.
    """
    values = np.asarray(values, dtype=float)
    phi = basis.mode_eval(index, quad.theta)
    if quad.chi is None:
        return float(np.sum(quad.weights * values * phi) / np.sum(quad.weights))
    num = quad.chi.T @ (quad.weights * values * phi)
    den = quad.chi.T @ quad.weights
    return num / den


def modal_project(values, basis: ModalBasis, quad: BoundaryQuadrature) -> np.ndarray:
    """Operator P: boundary field -> modal coefficients {c_i^-1 avg_i q}.

    Shape (N,) for a disk, (n_axial_nodes, N) for a cylinder.
    """
    cols = [
        np.asarray(weighted_average(values, basis, quad, k)) / basis.c[k]
        for k in range(basis.N)
    ]
    return np.stack(cols, axis=-1)


def modal_extend(coeffs, basis: ModalBasis, theta) -> np.ndarray:
    """Operator R^T on a cross-section: sum_k coeffs[k] * mode_k(theta)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[-1] != basis.N:
        raise ValueError(f"expected {basis.N} modal coefficients, got {coeffs.shape}")
    return basis.eval_all(theta) @ coeffs
