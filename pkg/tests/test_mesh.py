import numpy as np
import pytest

from modalfem.mesh import (
    BoxDomain,
    CapacityError,
    MeshError,
    OutOfDomainError,
    StructuredMesh,
    build_box_mesh,
    refine_globally,
)

SQUARE = BoxDomain(lower=(-1.0, -1.0), upper=(1.0, 1.0))
CUBE = BoxDomain(lower=(-1.0, -1.0, -1.0), upper=(1.0, 1.0, 1.0))


def test_domain_validation():
    with pytest.raises(MeshError):
        BoxDomain(lower=(0.0,), upper=(1.0,))
    with pytest.raises(MeshError):
        BoxDomain(lower=(0.0, 0.0), upper=(1.0, 0.0))
    with pytest.raises(MeshError):
        BoxDomain(lower=(0.0, 0.0, 0.0), upper=(1.0, 1.0))
    assert SQUARE.dim == 2 and CUBE.dim == 3
    assert SQUARE.volume == pytest.approx(4.0)


def test_vertex_counts_and_spacing():
    mesh = StructuredMesh(SQUARE, 3)
    assert mesh.n_vertices == 9 * 9
    assert mesh.n_cells == 64
    assert mesh.h == pytest.approx(0.25)
    mesh3 = StructuredMesh(CUBE, 2)
    assert mesh3.n_vertices == 5**3
    coords = mesh.vertex_coords()
    # lexicographic, x fastest
    assert np.allclose(coords[0], [-1, -1])
    assert np.allclose(coords[1], [-0.75, -1])
    assert np.allclose(coords[9], [-1, -0.75])


def test_point_location_interior():
    mesh = StructuredMesh(SQUARE, 1)
    # interior of first cell
    assert mesh.cell_containing_point((-0.5, -0.5)) == (0, 0)
    assert mesh.cell_containing_point((0.5, -0.5)) == (1, 0)


def test_point_location_tie_break_to_smaller_cell():
    mesh = StructuredMesh(SQUARE, 2)
    # point exactly on an interior face belongs to the lower-index cell
    assert mesh.cell_containing_point((0.0, -0.75)) == (1, 0)
    assert mesh.cell_containing_point((-0.75, 0.0)) == (0, 1)
    # domain corners clip into valid cells
    assert mesh.cell_containing_point((-1.0, -1.0)) == (0, 0)
    assert mesh.cell_containing_point((1.0, 1.0)) == (3, 3)


def test_point_location_out_of_domain():
    mesh = StructuredMesh(SQUARE, 2)
    with pytest.raises(OutOfDomainError):
        mesh.cells_containing_points(np.array([[1.5, 0.0]]))


def test_cell_vertex_ids_orientation():
    mesh = StructuredMesh(SQUARE, 1)
    ids = mesh.cell_vertex_ids(np.array([[0, 0]]))[0]
    # local corner order: x fastest
    assert list(ids) == [0, 1, 3, 4]
    mesh3 = StructuredMesh(CUBE, 1)
    ids3 = mesh3.cell_vertex_ids(np.array([[0, 0, 0]]))[0]
    assert list(ids3) == [0, 1, 3, 4, 9, 10, 12, 13]


def test_boundary_vertices():
    mesh = StructuredMesh(SQUARE, 2)
    bd = mesh.boundary_vertex_ids()
    assert bd.shape[0] == 4 * 4  # perimeter vertices of a 5x5 grid
    coords = mesh.vertex_coords()[bd]
    assert np.all(np.max(np.abs(coords), axis=1) == pytest.approx(1.0))


def test_capacity_guard():
    with pytest.raises(CapacityError):
        StructuredMesh(CUBE, 11)


def test_refine_and_z_planes():
    mesh = build_box_mesh(CUBE, 2)
    fine = refine_globally(mesh)
    assert fine.level == 3
    planes = fine.z_planes()
    assert planes.shape[0] == 9
    assert planes[0] == -1.0 and planes[-1] == 1.0
    assert 0.25 in planes
