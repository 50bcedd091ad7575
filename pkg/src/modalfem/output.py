"""Deterministic CSV and legacy-VTK writers.

Floats are serialized with repr (shortest round-trip form), rows are
sorted by a fixed key, and files always end with a newline, so repeated
runs of the same configuration produce byte-identical output.
"""

from __future__ import annotations

import numpy as np

from .mesh import StructuredMesh

__all__ = ["CSV_HEADER", "format_rows", "emit_csv", "emit_vtk"]

CSV_HEADER = (
    "problem,method,level,h,epsilon,n,N,kappa,dofs_bulk,dofs_lambda,"
    "err_L2,err_H1,constraint_res,gap_L2,gap_H1,lambda0,max_u,solve_seconds"
)

_COLUMNS = CSV_HEADER.split(",")

_SORT_KEY = ("problem", "level", "epsilon", "n", "kappa", "method")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if value != value:  # NaN marks an unavailable quantity
            return ""
        return repr(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def format_rows(rows) -> str:
    """CSV text for a list of report-row dicts, sorted deterministically."""
    ordered = sorted(rows, key=lambda r: tuple(r[k] for k in _SORT_KEY))
    lines = [CSV_HEADER]
    for r in ordered:
        lines.append(",".join(_cell(r.get(c)) for c in _COLUMNS))
    return "\n".join(lines) + "\n"


def emit_csv(path, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_rows(rows))


def emit_vtk(path, mesh: StructuredMesh, u: np.ndarray, name: str = "u") -> None:
    """Legacy ASCII structured-grid VTK file with one point scalar field.

    Points follow the dof ordering (x fastest); 2D meshes are written as
    a single z = 0 plane.
    """
    u = np.asarray(u, dtype=float)
    if u.shape[0] != mesh.n_vertices:
        raise ValueError("field size does not match the mesh vertex count")
    nv = mesh.cells_per_side + 1
    dims = (nv, nv, 1) if mesh.dim == 2 else (nv, nv, nv)
    coords = mesh.vertex_coords()
    lines = [
        "# vtk DataFile Version 3.0",
        "structured scalar field",
        "ASCII",
        "DATASET STRUCTURED_GRID",
        f"DIMENSIONS {dims[0]} {dims[1]} {dims[2]}",
        f"POINTS {mesh.n_vertices} double",
    ]
    for p in coords:
        z = p[2] if mesh.dim == 3 else 0.0
        lines.append(f"{repr(float(p[0]))} {repr(float(p[1]))} {repr(float(z))}")
    lines.append(f"POINT_DATA {mesh.n_vertices}")
    lines.append(f"SCALARS {name} double 1")
    lines.append("LOOKUP_TABLE default")
    for v in u:
        lines.append(repr(float(v)))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
