import numpy as np
import pytest
from hypothesis import given, strategies as st

from pbrays.census import (Box, cluster_distinct, lattice_distance, oracle_fixed_points,
                           same_class_sets, verify_counts)
from pbrays.flow import refine_periodic
from pbrays.geometry.spheres import round_sphere
from pbrays.hamiltonian import PhasePoint, coupled_pendulum, decoupled_pendulum
from pbrays.orbit import OrbitRecord
from pbrays.pipeline import run_census

TWO_PI = 2 * np.pi
coords = st.floats(-10, 10, allow_nan=False)


@given(st.lists(coords, min_size=4, max_size=4), st.lists(st.integers(-3, 3), min_size=2, max_size=2))
def test_lattice_distance_ignores_angle_translates(z, k):
    z = np.array(z)
    shifted = z + np.r_[TWO_PI * np.array(k), 0.0, 0.0]
    assert lattice_distance(z, shifted, 2) == pytest.approx(0.0, abs=1e-9)


@given(st.lists(coords, min_size=4, max_size=4), st.lists(coords, min_size=4, max_size=4))
def test_lattice_distance_symmetric_and_bounded(a, b):
    a, b = np.array(a), np.array(b)
    d = lattice_distance(a, b, 2)
    assert d == pytest.approx(lattice_distance(b, a, 2))
    assert d <= np.linalg.norm(a - b) + 1e-9


def _rec(x, y, mu=None):
    r = OrbitRecord(PhasePoint(x, y), 0.0, (0,) * len(x), converged=True)
    if mu is not None:
        r.multipliers = np.asarray(mu, dtype=complex)
    return r


def test_clustering_merges_translates_and_reduces_representative():
    orbits = [_rec([TWO_PI + 0.5], [0.0]), _rec([0.5], [0.0]), _rec([3.0], [0.0])]
    cl = cluster_distinct(orbits, 1e-4)
    assert len(cl) == 2
    assert all(0 <= c.representative.z0.x[0] < TWO_PI for c in cl)
    assert sorted(len(c.members) for c in cl) == [1, 2]


def test_ambiguous_pairs_flagged():
    cl = cluster_distinct([_rec([1.0], [0.0]), _rec([1.00015], [0.0])], 1e-4)
    assert len(cl) == 1 and cl[0].ambiguous


def test_trajectory_check_separates_distinct_orbits(pendulum1):
    a = refine_periodic(pendulum1, [0.0, 0.0])
    b = refine_periodic(pendulum1, [3.1, 0.0])
    assert len(cluster_distinct([a, b], 1e-4, pendulum1)) == 2


def test_same_class_sets():
    a = cluster_distinct([_rec([0.0], [0.0]), _rec([np.pi], [0.0])])
    b = cluster_distinct([_rec([TWO_PI * 2 + np.pi], [0.0]), _rec([0.0], [0.0])])
    eq, ua, ub = same_class_sets(a, b)
    assert eq and not ua and not ub
    eq, ua, _ = same_class_sets(a, b[:1])
    assert not eq and len(ua) == 1


def test_verify_counts_logic():
    S = round_sphere(1)
    good = cluster_distinct([_rec([0.0], [0.0], [0.5, 2.0]), _rec([np.pi], [0.0], [0.3, 3.3])])
    v = verify_counts(good, S, 1)
    assert v.meets_cl and v.meets_sb and v.all_nondegenerate
    near = cluster_distinct([_rec([0.0], [0.0], [1.0001, 0.9999]), _rec([np.pi], [0.0], [0.3, 3.3])])
    v = verify_counts(near, S, 1)
    assert v.meets_cl and v.meets_sb is None and v.all_nondegenerate is False
    outside = cluster_distinct([_rec([0.0], [5.0], [0.5, 2.0])])
    v = verify_counts(outside, S, 1)
    assert v.n_interior == 0 and not v.meets_cl


def test_oracle_one_degree_of_freedom(pendulum1):
    res = oracle_fixed_points(pendulum1, round_sphere(1), 64)
    xs = sorted(np.round([o.z0.x[0] for o in res.orbits], 8))
    assert xs == [0.0, round(np.pi, 8)]
    assert not res.incomplete and not res.degenerate_family


def test_oracle_two_degrees_agrees_with_variational():
    sys = coupled_pendulum(2, 1.0, 0.1, 0.02)
    S = round_sphere(2)
    run = run_census(sys, S, cutoff=8, budget=64, with_oracle=True, oracle_grid=12)
    assert run.agreement
    assert len(run.classes) == 4
    assert run.verdict.meets_cl and run.verdict.meets_sb


def test_oracle_budget_marks_incomplete(pendulum2):
    res = oracle_fixed_points(pendulum2, round_sphere(2), 12, budget=1000)
    assert res.incomplete


def test_oracle_flags_free_particle_family():
    res = oracle_fixed_points(decoupled_pendulum(1, 1.0, 0.0), Box([-0.5], [0.5]), 16)
    assert res.degenerate_family


def test_box_validation():
    with pytest.raises(ValueError):
        Box([1.0], [0.0])
    assert Box([-1, -1], [1, 1]).inside(np.zeros(2))
