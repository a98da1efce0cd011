import numpy as np
import pytest

from pbrays.hamiltonian import coupled_pendulum, decoupled_pendulum
from pbrays.varcrit.action import (ActionFunctional, action, action_gradient, action_hessian,
                                   loop_from_orbit)
from pbrays.varcrit.loopspace import LoopPoint, build_loop_space, build_splitting


@pytest.fixture(scope="module")
def setup():
    sys = decoupled_pendulum(2, 1.0, 0.1)
    sp = build_loop_space(2, 4)
    return sys, sp, build_splitting(sp)


def _central_fd(fun, u, h=1e-6):
    g = np.zeros_like(u)
    for i in range(len(u)):
        d = np.zeros_like(u)
        d[i] = h
        g[i] = (fun(u + d) - fun(u - d)) / (2 * h)
    return g


def test_values_at_equilibria(setup):
    sys, sp, split = setup
    z = np.zeros(sp.dim_e)
    assert action(sys, sp, split, LoopPoint([0, 0], z)) == pytest.approx(0.0, abs=1e-15)
    assert action(sys, sp, split, LoopPoint([np.pi, np.pi], z)) == pytest.approx(0.4)
    ge, gv = action_gradient(sys, sp, split, LoopPoint([np.pi, 0.0], z))
    assert np.allclose(ge, 0, atol=1e-14) and np.allclose(gv, 0, atol=1e-14)


def test_single_mode_action():
    # free particle: only the quadratic form contributes
    sys = decoupled_pendulum(1, 1.0, 0.0)
    sp = build_loop_space(1, 2)
    split = build_splitting(sp)
    e = np.zeros(sp.dim_e)
    e[sp.index(1, "xc")] = 1.0
    e[sp.index(1, "ys")] = -1.0
    val = action(sys, sp, split, LoopPoint([0.0], e))
    F = ActionFunctional(sys, sp, split)
    assert val == pytest.approx(-1.0 + F.psi(LoopPoint([0.0], e).as_vector()))


def test_gradient_and_hessian_vs_fd(rng):
    sys = coupled_pendulum(2, 1.0, 0.2, 0.1)
    sp = build_loop_space(2, 3)
    F = ActionFunctional(sys, sp, build_splitting(sp))
    for _ in range(5):
        u = rng.normal(size=sp.dim) * 0.5
        g = F.gradient(u)
        fd = _central_fd(F.value, u)
        assert np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12) < 1e-6
        H = F.hessian(u)
        Hfd = np.array([_central_fd(lambda w: F.gradient(w)[i], u) for i in range(sp.dim)])
        assert np.max(np.abs(H - Hfd)) < 1e-5
    assert action_hessian(sys, sp, F.splitting, LoopPoint(u[sp.dim_e:], u[:sp.dim_e])).shape == (sp.dim, sp.dim)


def test_batched_evaluation(setup, rng):
    sys, sp, split = setup
    F = ActionFunctional(sys, sp, split)
    U = rng.normal(size=(3, 2, sp.dim))
    assert F.value(U).shape == (3, 2)
    assert np.allclose(F.gradient(U)[1, 0], F.gradient(U[1, 0]))


def test_loop_of_true_orbit_is_nearly_critical():
    sys = decoupled_pendulum(1, 1.0, 0.1)
    sp = build_loop_space(1, 12)
    split = build_splitting(sp)
    p = loop_from_orbit(sys, sp, [np.pi, 0.0])
    ge, gv = action_gradient(sys, sp, split, p)
    assert np.linalg.norm(np.r_[ge, gv]) < 1e-10


def test_mismatched_dimensions():
    sp = build_loop_space(1, 2)
    with pytest.raises(ValueError):
        ActionFunctional(decoupled_pendulum(2), sp, build_splitting(sp))
