import numpy as np
import pytest

from pbrays.geometry.rays import base_angles, check_avoiding_rays, ray_margins
from pbrays.geometry.spheres import round_sphere
from pbrays.hamiltonian import decoupled_pendulum


def test_ray_margin_geometry():
    nu = np.array([[1.0, 0.0]] * 3)
    theta = np.array([[2.0, 0.0], [-1.0, 0.0], [0.0, 3.0]])
    m_out = ray_margins(theta, nu, "outward")
    m_in = ray_margins(theta, nu, "inward")
    assert m_out[0] == 0.0 and m_in[1] == 0.0
    assert m_out[1] == pytest.approx(1.0)       # distance 1 from the ray, scaled by max(|theta|, 1)
    assert m_out[2] == pytest.approx(1.0)
    assert m_in[0] == pytest.approx(1.0)


def test_base_angles_deterministic():
    a = base_angles(8, 2)
    assert np.array_equal(a, base_angles(8, 2))
    assert np.array_equal(a[0], [0.0, 0.0])
    assert np.all((a >= 0) & (a < 2 * np.pi))


def test_pendulum_inward_passes(pendulum2, circle):
    rep = check_avoiding_rays(pendulum2, circle, "inward", 256, 4)
    assert rep.verdict and rep.min_margin > 0.5
    assert len(rep.samples) == 256 * 4


def test_pendulum_outward_fails_with_witness(pendulum2, circle):
    rep = check_avoiding_rays(pendulum2, circle, "outward", 256, 4)
    assert not rep.verdict and rep.verifiable
    assert rep.min_margin == 0.0 and rep.n_contained > 0
    w = rep.worst
    assert np.allclose(np.linalg.norm(w.y0), 1.0)


def test_reversed_pendulum_swaps_sides(circle):
    sys = decoupled_pendulum(2, reverse=True)
    assert check_avoiding_rays(sys, circle, "outward", 128, 2).verdict
    assert not check_avoiding_rays(sys, circle, "inward", 128, 2).verdict


def test_free_flow_has_displacement_on_the_forbidden_ray(circle):
    # eps = 0: theta = T y is exactly the outward normal direction
    rep = check_avoiding_rays(decoupled_pendulum(2, eps=0.0), circle, "outward", 64, 2)
    assert not rep.verdict


def test_one_dimensional_case(pendulum1):
    S = round_sphere(1)
    assert check_avoiding_rays(pendulum1, S, "inward", 16, 4).verdict
    assert not check_avoiding_rays(pendulum1, S, "outward", 16, 4).verdict


def test_star_inward(pendulum2, star):
    rep = check_avoiding_rays(pendulum2, star, "inward", 256, 4)
    assert rep.verdict and rep.min_margin > 0.1


def test_invalid_side(pendulum2, circle):
    with pytest.raises(ValueError):
        check_avoiding_rays(pendulum2, circle, "sideways")


def test_report_serializes(pendulum2, circle):
    d = check_avoiding_rays(pendulum2, circle, "inward", 32, 1).as_dict(max_samples=3)
    assert d["verdict"] and len(d["worst_samples"]) == 3


def test_three_dimensional_degree_obstruction():
    # sampling misses the isolated contacts with the outward ray; the degree does not
    S = round_sphere(3)
    fwd = check_avoiding_rays(decoupled_pendulum(3), S, "outward", 256, 2)
    assert not fwd.verdict and fwd.verifiable
    assert "degree obstruction" in fwd.message
    rev = check_avoiding_rays(decoupled_pendulum(3, reverse=True), S, "outward", 256, 2)
    assert rev.verdict and rev.degrees == [-1, -1]
    assert check_avoiding_rays(decoupled_pendulum(3), S, "inward", 256, 2).degrees == [1, 1]
