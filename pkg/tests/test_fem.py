import numpy as np
import pytest
import scipy.sparse.linalg as spla

from modalfem import fem
from modalfem.mesh import BoxDomain, StructuredMesh

SQUARE = BoxDomain(lower=(-1.0, -1.0), upper=(1.0, 1.0))


def make_space(level, domain=SQUARE):
    return fem.FeSpace(StructuredMesh(domain, level))


def test_stiffness_kernel_and_energy():
    space = make_space(2)
    K = fem.assemble_stiffness(space)
    ones = np.ones(space.n_dofs)
    assert np.linalg.norm(K @ ones) < 1e-12
    # energy of the interpolant of u = x equals the integral of |grad x|^2
    x = space.dof_coords()[:, 0]
    assert x @ (K @ x) == pytest.approx(4.0, abs=1e-12)


def test_mass_total_volume():
    space = make_space(3)
    M = fem.assemble_mass(space)
    ones = np.ones(space.n_dofs)
    assert ones @ (M @ ones) == pytest.approx(4.0, abs=1e-12)
    cube = BoxDomain(lower=(0.0, 0.0, 0.0), upper=(1.0, 1.0, 1.0))
    space3 = make_space(2, cube)
    M3 = fem.assemble_mass(space3)
    ones3 = np.ones(space3.n_dofs)
    assert ones3 @ (M3 @ ones3) == pytest.approx(1.0, abs=1e-13)


def test_load_constant_source():
    space = make_space(3)
    b = fem.assemble_load(space, 2.0)
    assert b.sum() == pytest.approx(8.0, abs=1e-12)


def test_interpolation_error_rate():
    exact = lambda p: np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])
    errs = []
    for level in (3, 4, 5):
        space = make_space(level)
        coeffs = fem.interpolate(space, exact)
        l2, _ = fem.error_norms(space, coeffs, exact)
        errs.append(l2)
    rates = np.diff(np.log(errs)) / np.log(0.5)
    assert np.all(np.abs(rates - 2.0) < 0.1)


def test_dirichlet_reproduces_linear_solution():
    # u = x is harmonic and lies in the Q1 space, so the solve is exact
    space = make_space(3)
    K = fem.assemble_stiffness(space)
    b = np.zeros(space.n_dofs)
    A_c, b_c, bd, vals = fem.apply_dirichlet(K, b, space, lambda p: p[:, 0])
    u = spla.spsolve(A_c.tocsc(), b_c)
    assert np.allclose(u, space.dof_coords()[:, 0], atol=1e-12)
    # symmetry of the eliminated system
    assert abs(A_c - A_c.T).max() < 1e-14


def test_evaluate_matches_nodal_values():
    space = make_space(2)
    coeffs = fem.interpolate(space, lambda p: p[:, 0] + 2 * p[:, 1])
    pts = np.array([[-0.3, 0.2], [0.9, -0.9], [0.0, 0.0]])
    vals = fem.evaluate(space, coeffs, pts)
    assert np.allclose(vals, pts[:, 0] + 2 * pts[:, 1], atol=1e-13)


def test_error_norms_zero_for_represented_field():
    space = make_space(2)
    coeffs = fem.interpolate(space, lambda p: 3.0 - p[:, 1])
    l2, h1 = fem.error_norms(
        space,
        coeffs,
        lambda p: 3.0 - p[:, 1],
        lambda p: np.tile([0.0, -1.0], (p.shape[0], 1)),
    )
    assert l2 < 1e-13 and h1 < 1e-12


def test_coeff_norms_match_quadrature_norms():
    space = make_space(3)
    K = fem.assemble_stiffness(space)
    M = fem.assemble_mass(space)
    coeffs = fem.interpolate(space, lambda p: p[:, 0] ** 2)
    l2, h1 = fem.coeff_norms(space, coeffs, K, M)
    zl2, zh1 = fem.error_norms(
        space, coeffs, lambda p: np.zeros(p.shape[0]), lambda p: np.zeros_like(p)
    )
    assert l2 == pytest.approx(zl2, rel=1e-10)
    assert h1 == pytest.approx(zh1, rel=1e-10)
