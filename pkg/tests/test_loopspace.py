import numpy as np
import pytest
from hypothesis import given, strategies as st

from pbrays.hamiltonian import symplectic_matrix
from pbrays.varcrit.loopspace import LoopPoint, build_loop_space, build_splitting, form_matrix

CASES = [(1, 4), (2, 8), (3, 4)]


@pytest.mark.parametrize("n,K", CASES)
@pytest.mark.parametrize("weight", ["h12", "l2"])
def test_renormalized_spectrum(n, K, weight):
    sp = build_loop_space(n, K, weight=weight)
    split = build_splitting(sp)
    ev = np.sort(np.linalg.eigvalsh(split.L_matrix))
    expect = np.r_[-np.ones(2 * n * K), np.zeros(n), np.ones(2 * n * K)]
    assert np.max(np.abs(ev - expect)) < 1e-10
    assert np.max(np.abs(split.L_matrix - (split.proj_plus - split.proj_minus))) < 1e-10
    I = split.proj_minus + split.proj_zero + split.proj_plus
    assert np.allclose(I, np.eye(sp.dim_e), atol=1e-12)
    assert split.dims == (2 * n * K, n, 2 * n * K)
    assert split.eps0 == 1.0
    assert split.eps0_raw == pytest.approx(1.0 if weight == "h12" else 2 * np.pi)


def _action_form_by_quadrature(sp, e, f):
    # int_0^1 <J z'(t), w(t)> dt, with z' by central differences of the series
    M = 4 * sp.n_nodes
    t = np.arange(M) / M
    h = 1e-6
    dz = (sp.evaluate(e, np.zeros(sp.n_dof), t + h) - sp.evaluate(e, np.zeros(sp.n_dof), t - h)) / (2 * h)
    w = sp.evaluate(f, np.zeros(sp.n_dof), t)
    J = symplectic_matrix(sp.n_dof)
    return float(np.mean(np.einsum("ti,ij,tj->t", dz, J.T, w)))


@pytest.mark.parametrize("weight", ["h12", "l2"])
def test_form_matrix_is_the_action_form(weight, rng):
    sp = build_loop_space(2, 3, weight=weight)
    B = form_matrix(sp)
    for _ in range(3):
        e, f = rng.normal(size=(2, sp.dim_e))
        assert e @ B @ f == pytest.approx(_action_form_by_quadrature(sp, e, f), rel=1e-6, abs=1e-8)


def test_h12_gram_is_identity():
    sp = build_loop_space(2, 5)
    assert np.allclose(sp.gram(), np.eye(sp.dim_e), atol=1e-12)


@given(st.integers(1, 3), st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_analyze_inverts_synthesize(n, K, seed):
    sp = build_loop_space(n, K)
    e = np.random.default_rng(seed).normal(size=sp.dim_e)
    assert np.allclose(sp.analyze(sp.synthesize(e)), e, atol=1e-12)


def test_evaluate_matches_nodes(rng):
    sp = build_loop_space(2, 4)
    e, v = rng.normal(size=sp.dim_e), np.array([0.5, 1.0])
    assert np.allclose(sp.evaluate(e, v, sp.nodes), sp.synthesize(e, v), atol=1e-12)
    assert np.allclose(sp.state_at_zero(LoopPoint(v, e)), sp.synthesize(e, v)[0])


def test_loop_point_wraps_angles():
    p = LoopPoint([2 * np.pi + 0.5, -0.5], np.zeros(3))
    assert np.allclose(p.v, [0.5, 2 * np.pi - 0.5])
    with pytest.raises(ValueError):
        LoopPoint([np.nan], np.zeros(1))


def test_bad_discretizations():
    with pytest.raises(ValueError):
        build_loop_space(1, 4, n_nodes=10)
    with pytest.raises(ValueError):
        build_loop_space(1, 0)
    with pytest.raises(ValueError):
        build_loop_space(1, 2, weight="h1")
