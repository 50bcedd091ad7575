"""Structured tensor-product meshes on axis-aligned box domains.

Meshes are dyadic: level L subdivides each axis into 2^L equal cells.
All objects are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BoxDomain",
    "StructuredMesh",
    "MeshError",
    "OutOfDomainError",
    "CapacityError",
    "build_box_mesh",
]

# Vertex ids must fit in int32 for sparse index arrays.
_MAX_VERTICES = 2**31 - 1


class MeshError(Exception):
    pass


class OutOfDomainError(MeshError):
    pass


class CapacityError(MeshError):
    pass


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box [lower, upper] in 2 or 3 dimensions."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        up = tuple(float(v) for v in self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        if len(lo) != len(up):
            raise MeshError("lower and upper corners have different dimensions")
        if len(lo) not in (2, 3):
            raise MeshError(f"dimension must be 2 or 3, got {len(lo)}")
        if not all(u > l for l, u in zip(lo, up)):
            raise MeshError("upper corner must strictly dominate lower corner")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def sides(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        p = np.atleast_2d(points)
        lo = np.asarray(self.lower) - tol
        up = np.asarray(self.upper) + tol
        return np.all((p >= lo) & (p <= up), axis=1)


class StructuredMesh:
    """Uniform quadrilateral/hexahedral grid with 2^level cells per axis.

    Vertices are numbered lexicographically with the x index running
    fastest: id = i + nv*j (+ nv^2*k in 3D).  Cell multi-indices follow
    the same convention.
    """

    def __init__(self, domain: BoxDomain, level: int):
        if level < 0:
            raise MeshError("refinement level must be non-negative")
        ncell = 2**level
        nvert = ncell + 1
        if nvert ** domain.dim > _MAX_VERTICES:
            raise CapacityError(
                f"level {level} in {domain.dim}D exceeds addressable vertex count"
            )
        self.domain = domain
        self.level = level
        self.cells_per_side = ncell
        self.verts_per_side = nvert
        self.dx = domain.sides / ncell

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def h(self) -> float:
        """Cell edge length (largest axis spacing for anisotropic boxes)."""
        return float(self.dx.max())

    @property
    def n_cells(self) -> int:
        return self.cells_per_side**self.dim

    @property
    def n_vertices(self) -> int:
        return self.verts_per_side**self.dim

    def vertex_coords(self) -> np.ndarray:
        """All vertex coordinates, shape (n_vertices, dim), x fastest."""
        axes = [
            np.linspace(self.domain.lower[d], self.domain.upper[d], self.verts_per_side)
            for d in range(self.dim)
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel(order="F") for g in grids], axis=1)

    def all_cells(self) -> np.ndarray:
        """Multi-indices of all cells, shape (n_cells, dim), x fastest."""
        nc = self.cells_per_side
        ids = np.arange(self.n_cells)
        out = np.empty((self.n_cells, self.dim), dtype=np.int64)
        for d in range(self.dim):
            out[:, d] = ids % nc
            ids = ids // nc
        return out

    def cell_lower_corners(self, cells: np.ndarray) -> np.ndarray:
        return np.asarray(self.domain.lower) + cells * self.dx

    def cell_vertex_ids(self, cells: np.ndarray) -> np.ndarray:
        """Vertex ids of each cell, shape (n, 2^dim), local x-fastest order."""
        cells = np.atleast_2d(cells)
        nv = self.verts_per_side
        nloc = 2**self.dim
        corners = np.empty((cells.shape[0], nloc), dtype=np.int64)
        for c in range(nloc):
            idx = np.zeros(cells.shape[0], dtype=np.int64)
            stride = 1
            for d in range(self.dim):
                off = (c >> d) & 1
                idx += (cells[:, d] + off) * stride
                stride *= nv
            corners[:, c] = idx
        return corners

    def cells_containing_points(self, points: np.ndarray) -> np.ndarray:
        """Cell multi-index for each point; face points tie-break to the
        lexicographically smaller cell."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        lo = np.asarray(self.domain.lower)
        up = np.asarray(self.domain.upper)
        tol = 1e-12 * self.h
        if not np.all((p >= lo - tol) & (p <= up + tol)):
            bad = np.argmax(~np.all((p >= lo - tol) & (p <= up + tol), axis=1))
            raise OutOfDomainError(f"point {p[bad]} outside domain box")
        t = (p - lo) / self.dx
        cells = np.ceil(t).astype(np.int64) - 1
        np.clip(cells, 0, self.cells_per_side - 1, out=cells)
        return cells

    def cell_containing_point(self, point) -> tuple:
        return tuple(self.cells_containing_points(np.asarray(point))[0])

    def refine(self) -> "StructuredMesh":
        return StructuredMesh(self.domain, self.level + 1)

    def boundary_vertex_ids(self) -> np.ndarray:
        """Ids of vertices lying on the outer box boundary."""
        nv = self.verts_per_side
        ids = np.arange(self.n_vertices)
        rem = ids.copy()
        on_bd = np.zeros(self.n_vertices, dtype=bool)
        for _ in range(self.dim):
            comp = rem % nv
            rem = rem // nv
            on_bd |= (comp == 0) | (comp == nv - 1)
        return ids[on_bd]

    def z_planes(self) -> np.ndarray:
        """Coordinates of the mesh planes along the last axis."""
        return np.linspace(
            self.domain.lower[-1], self.domain.upper[-1], self.verts_per_side
        )


def build_box_mesh(domain: BoxDomain, level: int) -> StructuredMesh:
    return StructuredMesh(domain, level)


def refine_globally(mesh: StructuredMesh) -> StructuredMesh:
    return mesh.refine()
