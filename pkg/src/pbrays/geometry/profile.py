"""Time-dependent cut-off r(t, eta) built from a basket function.

    r(t, eta) = h(eta) * [(1 - sigma(|eta|)) * (T / tau) * b(t / tau) + sigma(|eta|)]

with the C2 bump b(s) = 140 s^3 (1 - s)^3 on [0, 1] (unit mass, zero
outside) and a C-infinity step sigma that is 0 for |eta| <= big_r and 1 for
|eta| >= r0.  The time average of r is h(eta) for every eta, r vanishes for
t > tau inside the ball of radius big_r, and r = h for |eta| >= r0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConstructionError
from ..hamiltonian import _smooth_step
from .basket import BasketFunction
from .spheres import sphere_directions

QUAD_DEFECT_LIMIT = 1e-8


def bump(s):
    s = np.asarray(s, dtype=float)
    return np.where((s > 0) & (s < 1), 140.0 * s**3 * (1.0 - s) ** 3, 0.0)


@dataclass(frozen=True)
class TimeProfile:
    basket: BasketFunction
    tau: float
    period: float
    big_r: float
    r0: float

    def sigma(self, eta):
        rad = np.linalg.norm(np.asarray(eta, dtype=float), axis=-1)
        return _smooth_step((rad - self.big_r) / (self.r0 - self.big_r))[0]

    def __call__(self, t, eta):
        eta = np.asarray(eta, dtype=float)
        t = np.asarray(t, dtype=float)
        sg = self.sigma(eta)
        w = (1.0 - sg) * (self.period / self.tau) * bump(t / self.tau) + sg
        return self.basket.eval(eta) * w


@dataclass
class ProfileReport:
    star_defect: float        # max |r| off the support set
    average_defect: float     # max |(1/T) int r dt - h|
    far_defect: float         # max |r - h| for |eta| >= r0
    passed: bool

    def as_dict(self):
        return dict(self.__dict__)


def _gauss(a, b, n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def verify_time_profile(prof: TimeProfile, n_t: int = 64, n_r: int = 64,
                        n_directions: int = 8, tol: float = QUAD_DEFECT_LIMIT) -> ProfileReport:
    """Check the three defining properties on an (n_t x n_r) grid per direction.

    Radii run from 0 to 2 r0, so the grid crosses the interior of S, the
    collar, the blend zone and the far region.  Time averages use
    Gauss-Legendre rules on [0, tau] and [tau, T]; the integrand is a
    polynomial of degree 6 in t on each piece, so 8 nodes are exact.
    """
    T, tau = prof.period, prof.tau
    S = prof.basket.sphere
    u = sphere_directions(n_directions, S.n_dim)
    radii = np.linspace(0.0, 2.0 * prof.r0, n_r)
    eta = radii[None, :, None] * u[:, None, :]             # (dirs, n_r, N)
    ts = np.linspace(0.0, T, n_t)
    r_grid = prof(ts[:, None, None], eta[None])             # (n_t, dirs, n_r)
    h = prof.basket.eval(eta)

    rad = np.linalg.norm(eta, axis=-1)
    off = (ts[:, None, None] > tau) & (rad[None] <= prof.big_r)
    off |= np.broadcast_to(S.f(eta)[None] <= 0, off.shape)
    star = float(np.max(np.abs(r_grid[off]))) if off.any() else 0.0

    t1, w1 = _gauss(0.0, tau, 8)
    t2, w2 = _gauss(tau, T, 8)
    integral = (np.tensordot(w1, prof(t1[:, None, None], eta[None]), axes=(0, 0))
                + np.tensordot(w2, prof(t2[:, None, None], eta[None]), axes=(0, 0)))
    avg = float(np.max(np.abs(integral / T - h)))

    far = rad >= prof.r0
    far_def = float(np.max(np.abs(r_grid[:, far] - h[far][None]))) if far.any() else 0.0
    ok = star == 0.0 and avg < tol and far_def == 0.0
    return ProfileReport(star, avg, far_def, bool(ok))


def build_time_profile(h: BasketFunction, tau: float, T: float, big_r: float, r0: float,
                       verify: bool = True) -> TimeProfile:
    if not 0.0 < tau < T:
        raise ValueError("need 0 < tau < T")
    if not r0 > big_r > h.sphere.bounding_radius:
        raise ValueError("need r0 > big_r > bounding radius of the sphere")
    prof = TimeProfile(h, float(tau), float(T), float(big_r), float(r0))
    if verify:
        rep = verify_time_profile(prof)
        if not rep.passed:
            raise ConstructionError(f"time profile rejected: {rep}")
    return prof
