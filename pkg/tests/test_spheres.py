import numpy as np
import pytest
from hypothesis import given, strategies as st

from pbrays.errors import EvaluationError
from pbrays.geometry.spheres import (boundary_samples, builtin_sphere, check_sphere, ellipsoid,
                                     interior_samples, normal, round_sphere, sphere_directions,
                                     star_curve)
from pbrays.hamiltonian import fd_jacobian


@pytest.mark.parametrize("S", [round_sphere(1), round_sphere(2), round_sphere(3),
                               ellipsoid([1.0, 0.5]), star_curve()], ids=lambda S: f"{S.name}{S.n_dim}")
def test_boundary_samples_lie_on_sphere(S, rng):
    y = boundary_samples(S, 64, rng)
    assert np.allclose(S.f(y), 0.0, atol=1e-10)
    assert check_sphere(S, 128, rng=rng).passed


def test_unit_circle_normals():
    S = round_sphere(2)
    assert np.allclose(normal(S, [1.0, 0.0]), [1.0, 0.0])
    assert np.allclose(normal(S, [0.0, -1.0]), [0.0, -1.0])


@given(st.floats(0, 2 * np.pi))
def test_star_normal_is_outward_and_unit(phi):
    S = star_curve()
    r = 0.6 + 0.25 * np.cos(3 * phi)
    y = r * np.array([np.cos(phi), np.sin(phi)])
    nu = normal(S, y)
    assert np.linalg.norm(nu) == pytest.approx(1.0)
    assert np.dot(nu, y) > 0
    # tangent of the polar curve is orthogonal to the normal
    dr = -0.75 * np.sin(3 * phi)
    tangent = np.array([dr * np.cos(phi) - r * np.sin(phi), dr * np.sin(phi) + r * np.cos(phi)])
    assert abs(np.dot(nu, tangent)) < 1e-8 * np.linalg.norm(tangent)


def test_star_is_nonconvex():
    S = star_curve()
    a = boundary_samples(S, 512)
    # some chord midpoint between boundary points lies outside: not convex
    mids = 0.5 * (a[:, None] + a[None, :]).reshape(-1, 2)
    assert np.any(S.f(mids) > 0.0)


def test_star_hessian_matches_fd(rng):
    S = star_curve()
    y = rng.uniform(-1, 1, (10, 2))
    assert np.allclose(S.hess(y), fd_jacobian(S.grad, y, 1e-5, symmetrize=True), atol=1e-6)


def test_interior_samples_inside(rng):
    for S in (round_sphere(1), star_curve(), round_sphere(3)):
        y = interior_samples(S, 100, rng)
        assert np.all(S.inside(y))


def test_sphere_directions_unit():
    d = sphere_directions(50, 3)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)


def test_builtin_sphere_registry():
    assert builtin_sphere("ellipse", {"axes": [2.0, 1.0]}).bounding_radius == pytest.approx(2.0)
    with pytest.raises(ValueError):
        builtin_sphere("torus")
    with pytest.raises(ValueError):
        builtin_sphere("unit-sphere", {"wrong": 1})


def test_missing_hessian_raises():
    S = round_sphere(2)
    from dataclasses import replace
    with pytest.raises(EvaluationError):
        replace(S, defining_hess=None).hess(np.zeros(2))
