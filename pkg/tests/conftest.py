import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pbrays.geometry.spheres import round_sphere, star_curve
from pbrays.hamiltonian import decoupled_pendulum

settings.register_profile("repo", derandomize=True, deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results):
        ok, desc = results[key]
        terminalreporter.write_line(f"criterion {key:2d}: {'PASS' if ok else 'FAIL'}  {desc}")


@pytest.fixture
def criterion(request):
    """Record and print the outcome of one acceptance criterion, then assert it."""
    store = request.config.stash[_ACCEPTANCE]

    def _record(number, ok, desc):
        ok = bool(ok)
        store[number] = (ok, desc)
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {desc}")
        assert ok, f"criterion {number} failed: {desc}"

    return _record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def pendulum2():
    return decoupled_pendulum(2, 1.0, 0.1)


@pytest.fixture(scope="session")
def pendulum1():
    return decoupled_pendulum(1, 1.0, 0.1)


@pytest.fixture(scope="session")
def circle():
    return round_sphere(2)


@pytest.fixture(scope="session")
def star():
    return star_curve()
