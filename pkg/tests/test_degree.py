import numpy as np
import pytest
from hypothesis import given, strategies as st

from pbrays.errors import DegreeUndefinedError, UnreliableResultError
from pbrays.geometry.degree import brouwer_degree, degree_details, solid_angles
from pbrays.geometry.rays import displacement_map
from pbrays.geometry.spheres import round_sphere, star_curve
from pbrays.hamiltonian import decoupled_pendulum


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_identity_and_reflection(n):
    S = round_sphere(n)
    assert brouwer_degree(lambda y: y, S, 64) == 1
    assert brouwer_degree(lambda y: -y, S, 64) == (-1) ** n


def test_complex_square_has_degree_two():
    def z2(y):
        return np.stack([y[..., 0] ** 2 - y[..., 1] ** 2, 2 * y[..., 0] * y[..., 1]], axis=-1)
    assert brouwer_degree(z2, round_sphere(2), 128) == 2


def test_zero_outside_gives_degree_zero():
    S = round_sphere(2)
    assert brouwer_degree(lambda y: y + np.array([3.0, 0.0]), S, 64) == 0


def test_zero_on_boundary_is_undefined():
    with pytest.raises(DegreeUndefinedError):
        degree_details(lambda y: y - np.array([1.0, 0.0]), round_sphere(2), 64)


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_linear_map_degree_is_sign_of_determinant(a):
    A = np.array(a).reshape(2, 2)
    det = np.linalg.det(A)
    if abs(det) < 0.05:
        return
    # badly conditioned maps may be refused, but never given a wrong integer
    try:
        d = brouwer_degree(lambda y: y @ A.T, round_sphere(2), 128)
    except UnreliableResultError:
        assert np.linalg.cond(A) > 10
        return
    assert d == int(np.sign(det))


def test_solid_angle_of_octant():
    e = np.eye(3)
    assert solid_angles(e[0], e[1], e[2]) == pytest.approx(np.pi / 2)


def test_pendulum_displacement_degree(pendulum2):
    assert brouwer_degree(displacement_map(pendulum2, np.zeros(2)), round_sphere(2)) == 1
    rev = decoupled_pendulum(3, reverse=True)
    assert brouwer_degree(displacement_map(rev, np.zeros(3)), round_sphere(3), 64) == -1


def test_star_degree(pendulum2):
    assert brouwer_degree(displacement_map(pendulum2, [1.0, 2.0]), star_curve()) == 1
