import numpy as np
import pytest

from pbrays.errors import ReductionNotApplicableError
from pbrays.hamiltonian import decoupled_pendulum
from pbrays.varcrit.action import ActionFunctional
from pbrays.varcrit.loopspace import build_loop_space, build_splitting
from pbrays.varcrit.reduction import TailReduction, reduce_tail
from pbrays.varcrit.search import find_critical_points, make_seeds, wrapped_delta


@pytest.fixture(scope="module")
def k16():
    sys = decoupled_pendulum(2, 1.0, 0.1)
    sp = build_loop_space(2, 16)
    return sys, sp, build_splitting(sp)


def test_tail_map_contracts(k16, rng):
    sys, sp, split = k16
    n_low = sp.dim_low(4)
    for _ in range(4):
        f = 0.3 * rng.normal(size=n_low)
        v = rng.uniform(0, 2 * np.pi, 2)
        res = reduce_tail(sys, sp, split, 4, f, v)
        assert res.factor < 0.5 and res.update_norm < 1e-12


def test_reduced_critical_point_is_full_critical(k16):
    sys, sp, split = k16
    F = ActionFunctional(sys, sp, split)
    red = TailReduction(F, 4)
    f0 = np.zeros(sp.dim_low(4))
    f0[:2] = 0.01
    u, res, _ = red.find_critical_point(f0, np.array([0.1, 3.0]))
    assert res < 1e-10
    assert np.linalg.norm(F.gradient(u)) < 1e-8
    assert np.allclose(u[sp.dim_e:] % (2 * np.pi), [0.0, np.pi], atol=1e-8)


def test_reduction_refuses_when_not_contracting():
    sys = decoupled_pendulum(1, 1.0, 400.0)
    sp = build_loop_space(1, 6)
    with pytest.raises(ReductionNotApplicableError) as err:
        reduce_tail(sys, sp, build_splitting(sp), 1, np.full(sp.dim_low(1), 0.5), np.array([1.0]))
    assert err.value.factor >= 1.0


def test_wrapped_delta():
    d = wrapped_delta(np.array([0.0, 0.1]), np.array([0.0, 2 * np.pi - 0.1]), 1)
    assert np.allclose(d, [0.0, 0.2])


def test_seeds_start_with_lattice_corners(rng):
    sp = build_loop_space(2, 2)
    S = make_seeds(sp, 10, rng)
    assert S.shape == (10, sp.dim)
    assert np.allclose(S[:4, :sp.dim_e], 0.0)
    assert {tuple(s) for s in np.round(S[:4, sp.dim_e:], 6)} == {(0, 0), (0, 3.141593), (3.141593, 0), (3.141593, 3.141593)}


def test_search_finds_the_four_equilibria():
    sys = decoupled_pendulum(2, 1.0, 0.1)
    sp = build_loop_space(2, 8)
    res = find_critical_points(sys, sp, build_splitting(sp), budget=64)
    vs = sorted(tuple(np.round(c.point.v, 6)) for c in res.points)
    assert vs == [(0, 0), (0, 3.141593), (3.141593, 0), (3.141593, 3.141593)]
    assert all(c.residual < 1e-10 for c in res.points)
    assert [round(c.action, 8) for c in res.points] == [0.0, 0.2, 0.2, 0.4]


def test_search_independent_of_worker_count():
    sys = decoupled_pendulum(1, 1.0, 0.1)
    sp = build_loop_space(1, 6)
    split = build_splitting(sp)
    a = find_critical_points(sys, sp, split, budget=24, rng=np.random.default_rng(3), workers=1)
    b = find_critical_points(sys, sp, split, budget=24, rng=np.random.default_rng(3), workers=4)
    assert [c.point.as_vector().tolist() for c in a] == [c.point.as_vector().tolist() for c in b]


def test_search_budget_validation(k16):
    with pytest.raises(ValueError):
        find_critical_points(*k16, budget=0)
