import math

import numpy as np
import pytest

from modalfem.mesh import BoxDomain, StructuredMesh
from modalfem.output import CSV_HEADER, emit_csv, emit_vtk, format_rows


def make_row(**over):
    row = {
        "problem": "D1",
        "method": "reduced",
        "level": 4,
        "h": 0.125,
        "epsilon": 0.2,
        "n": 0,
        "N": 1,
        "kappa": 0.0,
        "dofs_bulk": 289,
        "dofs_lambda": 1,
        "err_L2": 0.1,
        "err_H1": 0.2,
        "constraint_res": 1e-3,
        "gap_L2": None,
        "gap_H1": None,
        "lambda0": 5.0,
        "max_u": 1.7,
        "solve_seconds": 0.01,
    }
    row.update(over)
    return row


def test_header_contract():
    assert CSV_HEADER == (
        "problem,method,level,h,epsilon,n,N,kappa,dofs_bulk,dofs_lambda,"
        "err_L2,err_H1,constraint_res,gap_L2,gap_H1,lambda0,max_u,solve_seconds"
    )


def test_rows_sorted_and_none_blank():
    rows = [make_row(level=5), make_row(level=4)]
    text = format_rows(rows)
    lines = text.splitlines()
    assert lines[0] == CSV_HEADER
    assert lines[1].split(",")[2] == "4"
    assert lines[2].split(",")[2] == "5"
    # None and NaN serialize as empty cells
    assert ",,," in lines[1]
    text2 = format_rows([make_row(err_L2=math.nan)])
    assert text2.splitlines()[1].split(",")[10] == ""


def test_float_round_trip():
    value = 0.1 + 0.2  # not exactly representable in decimal
    text = format_rows([make_row(err_L2=value)])
    cell = text.splitlines()[1].split(",")[10]
    assert float(cell) == value


def test_csv_deterministic(tmp_path):
    rows = [make_row(level=5), make_row(level=4), make_row(epsilon=0.1)]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(p1, rows)
    emit_csv(p2, list(reversed(rows)))
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.read_bytes().endswith(b"\n")


def test_vtk_structure_2d(tmp_path):
    mesh = StructuredMesh(BoxDomain(lower=(-1.0, -1.0), upper=(1.0, 1.0)), 2)
    u = np.arange(mesh.n_vertices, dtype=float)
    path = tmp_path / "field.vtk"
    emit_vtk(path, mesh, u)
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[3] == "DATASET STRUCTURED_GRID"
    assert lines[4] == "DIMENSIONS 5 5 1"
    assert lines[5] == "POINTS 25 double"
    assert lines[6] == "-1.0 -1.0 0.0"
    assert "POINT_DATA 25" in lines
    assert "SCALARS u double 1" in lines
    assert lines[-1] == "24.0"


def test_vtk_rejects_mismatched_field(tmp_path):
    mesh = StructuredMesh(BoxDomain(lower=(-1.0, -1.0), upper=(1.0, 1.0)), 1)
    with pytest.raises(ValueError):
        emit_vtk(tmp_path / "x.vtk", mesh, np.zeros(3))


def test_vtk_deterministic(tmp_path):
    mesh = StructuredMesh(BoxDomain(lower=(-1.0, -1.0, -1.0), upper=(1.0, 1.0, 1.0)), 1)
    u = np.linspace(0, 1, mesh.n_vertices)
    p1, p2 = tmp_path / "a.vtk", tmp_path / "b.vtk"
    emit_vtk(p1, mesh, u)
    emit_vtk(p2, mesh, u)
    assert p1.read_bytes() == p2.read_bytes()
