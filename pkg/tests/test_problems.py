import numpy as np
import pytest

from modalfem.mesh import BoxDomain
from modalfem.modal import Disk2D, GeometryError
from modalfem.problems import (
    PROBLEM_IDS,
    UnsupportedProblemError,
    custom_problem,
    make_problem,
)

EPS = 0.2


def sample_points(rng, n, eps, margin):
    """Random points in the square, away from the interface and the origin."""
    pts = []
    while len(pts) < n:
        p = rng.uniform(-0.95, 0.95, size=2)
        r = np.hypot(p[0], p[1])
        if abs(r - eps) > margin and r > margin:
            pts.append(p)
    return np.array(pts)


@pytest.mark.parametrize("pid", ["D1", "D2", "D3"])
def test_exact_solutions_are_harmonic(pid):
    # five-point finite difference Laplacian at random sample points
    prob = make_problem(pid, EPS)
    rng = np.random.default_rng(42)
    h = 1e-4
    pts = sample_points(rng, 100, EPS, margin=2 * h)
    lap = (
        prob.exact(pts + [h, 0])
        + prob.exact(pts - [h, 0])
        + prob.exact(pts + [0, h])
        + prob.exact(pts - [0, h])
        - 4 * prob.exact(pts)
    ) / h**2
    assert np.max(np.abs(lap)) < 1e-4


@pytest.mark.parametrize("pid", ["D1", "D2", "D3"])
def test_exact_gradient_consistency(pid):
    prob = make_problem(pid, EPS)
    rng = np.random.default_rng(3)
    h = 1e-6
    pts = sample_points(rng, 50, EPS, margin=2e-3)
    gx = (prob.exact(pts + [h, 0]) - prob.exact(pts - [h, 0])) / (2 * h)
    gy = (prob.exact(pts + [0, h]) - prob.exact(pts - [0, h])) / (2 * h)
    grad = prob.exact_grad(pts)
    assert np.max(np.abs(grad[:, 0] - gx)) < 1e-6
    assert np.max(np.abs(grad[:, 1] - gy)) < 1e-6


def test_d1_interface_values():
    prob = make_problem("D1", EPS)
    theta = np.linspace(0, 2 * np.pi, 13)
    inner = 0.5 * EPS * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    assert np.allclose(prob.exact(inner), -np.log(EPS), atol=1e-13)
    assert prob.g_inclusion[0] == pytest.approx(-np.log(EPS))


def test_d2_trace_and_continuity():
    prob = make_problem("D2", EPS)
    theta = np.linspace(0, 2 * np.pi, 13)
    on = EPS * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    # trace from both sides equals eps*cos(theta)
    assert np.allclose(prob.exact(on * 0.999999), EPS * np.cos(theta), atol=1e-5)
    assert np.allclose(prob.exact(on * 1.000001), EPS * np.cos(theta), atol=1e-5)


def test_d3_trace_matches_polynomial_datum():
    prob = make_problem("D3", EPS)
    theta = np.linspace(0.1, 2 * np.pi, 17)
    x = EPS * np.cos(theta)
    y = EPS * np.sin(theta)
    expected = 2 * x**3 - x**2 - 6 * x * y**2 + x + y**2 + 1
    pts = np.stack([x, y], axis=1)
    got = prob.exact(pts * 0.999999)
    assert np.allclose(got, expected, atol=1e-5)


def test_presets_geometry():
    two = make_problem("TWO_INC", 0.2)
    assert len(two.inclusions) == 2
    assert not two.has_exact
    with pytest.raises(UnsupportedProblemError):
        two.exact_eval(np.zeros((1, 2)))
    three = make_problem("THREE_CYL", 0.2)
    assert three.domain.dim == 3
    assert len(three.inclusions) == 3
    heights = [c.z1 - c.z0 for c in three.inclusions]
    assert np.allclose(heights, 0.5)


def test_invalid_problems_rejected():
    with pytest.raises(UnsupportedProblemError):
        make_problem("D9", 0.2)
    # inclusions touching the outer boundary are invalid
    with pytest.raises(GeometryError):
        make_problem("D1", 1.0)
    with pytest.raises(GeometryError):
        make_problem("TWO_INC", 0.5)


def test_custom_problem_validation():
    box = BoxDomain(lower=(-1.0, -1.0), upper=(1.0, 1.0))
    disks = [Disk2D(center=(0.0, 0.0), radius=0.1)]
    prob = custom_problem(box, disks, [2.0])
    assert prob.pid == "CUSTOM"
    with pytest.raises(GeometryError):
        custom_problem(box, disks, [1.0, 2.0])


def test_problem_id_list():
    assert PROBLEM_IDS == ("D1", "D2", "D3", "TWO_INC", "THREE_CYL")
