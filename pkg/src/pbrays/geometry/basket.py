"""Basket functions h = g o f for an embedded sphere S = {f = 0}.

The profile g is built in closed form from a power-law envelope of

    m(r) = (r + 1) * max{|grad f| + ||Hess f|| : f(y) = r},

sampled on level sets S_r.  If ``m_hat(r) <= M (1 + r)^p`` on the sampled
grid, then for r >= 1 we take

    g'(r) = c (1 + r)^(-q),   q = max(2p, 2),   c = min(2^p / (2M), 1 / (q M^2)),

which gives 0 < g' < 1/m_hat and -1/m_hat^2 < g'' < 0 there.  On [0, 1]
g' is a quintic that vanishes to second order at 0, matches value and
slope of the tail at 1, and carries exactly the mass needed for
g(infinity) = 1.  The envelope is extrapolated beyond the sampled range
by the same power law.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import ConstructionError
from .spheres import EmbeddedSphere, boundary_samples, interior_samples, normal, sphere_directions


@dataclass(frozen=True)
class GProfile:
    """C2 profile g on R with g = 0 for r <= 0, g -> 1 as r -> infinity."""

    M: float
    p: float
    q: float
    c: float
    A: float
    v1: float
    s1: float
    grid_r: np.ndarray = field(repr=False)
    grid_m: np.ndarray = field(repr=False)

    def _tail_at(self, r):
        return self.c * (1.0 + r) ** (-self.q)

    def g(self, r):
        r = np.asarray(r, dtype=float)
        A, v1, s1, c, q = self.A, self.v1, self.s1, self.c, self.q
        u = np.clip(r, 0.0, 1.0)
        inner = A * (u**3 / 3 - u**4 / 2 + u**5 / 5) + v1 * (u**3 - u**4 / 2) + s1 * (u**4 / 4 - u**3 / 3)
        g1 = A / 30 + v1 / 2 - s1 / 12
        w = np.maximum(r, 1.0)
        outer = g1 + c / (q - 1) * (2.0 ** (1 - q) - (1.0 + w) ** (1 - q))
        return np.where(r <= 0, 0.0, np.where(r <= 1, inner, outer))

    def dg(self, r):
        r = np.asarray(r, dtype=float)
        u = np.clip(r, 0.0, 1.0)
        inner = self.A * u**2 * (1 - u) ** 2 + u**2 * (self.v1 * (3 - 2 * u) + self.s1 * (u - 1))
        return np.where(r <= 0, 0.0, np.where(r <= 1, inner, self._tail_at(np.maximum(r, 1.0))))

    def d2g(self, r):
        r = np.asarray(r, dtype=float)
        u = np.clip(r, 0.0, 1.0)
        inner = (self.A * (2 * u - 6 * u**2 + 4 * u**3) + self.v1 * (6 * u - 6 * u**2)
                 + self.s1 * (3 * u**2 - 2 * u))
        w = np.maximum(r, 1.0)
        outer = -self.q * self.c * (1.0 + w) ** (-self.q - 1)
        return np.where(r <= 0, 0.0, np.where(r <= 1, inner, outer))

    def m_envelope(self, r):
        return self.M * (1.0 + np.asarray(r, dtype=float)) ** self.p


@dataclass(frozen=True)
class BasketFunction:
    sphere: EmbeddedSphere
    g_profile: GProfile
    # Optional reparametrization phi of the level value (used for planted defects).
    phi: Optional[object] = None

    def _level(self, y):
        f = self.sphere.f(y)
        if self.phi is None:
            return f, np.ones_like(f), np.zeros_like(f)
        return self.phi(f)

    def eval(self, y):
        y = np.asarray(y, dtype=float)
        f = self.sphere.f(y)
        s = self._level(y)[0]
        return np.where(f > 0, self.g_profile.g(s), 0.0)

    def grad(self, y):
        y = np.asarray(y, dtype=float)
        f = self.sphere.f(y)
        s, ds, _ = self._level(y)
        gf = self.sphere.grad(y)
        coef = np.where(f > 0, self.g_profile.dg(s) * ds, 0.0)
        return coef[..., None] * gf

    def hess(self, y):
        y = np.asarray(y, dtype=float)
        f = self.sphere.f(y)
        s, ds, d2s = self._level(y)
        gf = self.sphere.grad(y)
        Hf = self.sphere.hess(y)
        d1 = self.g_profile.dg(s) * ds
        d2 = self.g_profile.d2g(s) * ds**2 + self.g_profile.dg(s) * d2s
        out = d2[..., None, None] * gf[..., :, None] * gf[..., None, :] + d1[..., None, None] * Hf
        return np.where((f > 0)[..., None, None], out, 0.0)

    __call__ = eval


# ---------------------------------------------------------------------------
# construction


def level_set_m(S: EmbeddedSphere, levels, n_directions: int = 256, rng=None) -> np.ndarray:
    """Sampled m(r) at each level (max over quasi-uniform points of S_r)."""
    u = sphere_directions(n_directions, S.n_dim, rng)
    out = np.empty(len(levels))
    for i, r in enumerate(levels):
        pts = S.level_points(u, float(r))
        gn = np.linalg.norm(S.grad(pts), axis=-1)
        hn = np.linalg.norm(S.hess(pts), ord=2, axis=(-2, -1))
        val = (r + 1.0) * np.max(gn + hn)
        if not np.isfinite(val) or val > 1e12:
            raise ConstructionError(f"m(r) unbounded at level r = {r:.6g}")
        out[i] = val
    return out


def build_basket(S: EmbeddedSphere, n_levels: int = 96, n_directions: int = 256,
                 r_max: Optional[float] = None, rng=None) -> BasketFunction:
    """Construct a basket function for S from sampled level-set data."""
    if S.defining_hess is None:
        raise ConstructionError(f"sphere {S.name} has no defining Hessian")
    if r_max is None:
        u = sphere_directions(n_directions, S.n_dim, rng)
        r_max = 4.0 * float(np.max(S.f(200.0 * S.bounding_radius * u)))
    levels = np.concatenate([[0.0], np.geomspace(1e-3, max(r_max, 10.0), n_levels - 1)])
    m_hat = level_set_m(S, levels, n_directions, rng)

    lr = np.log1p(levels)
    big = levels >= 1.0
    slope = np.polyfit(lr[big], np.log(m_hat[big]), 1)[0] if big.sum() >= 2 else 1.0
    p = max(1.05 * float(slope), 0.0)
    M = 1.02 * float(np.max(m_hat / (1.0 + levels) ** p))
    q = max(2.0 * p, 2.0)
    c = min(2.0**p / (2.0 * M), 1.0 / (q * M * M))
    tail_mass = c * 2.0 ** (1 - q) / (q - 1)
    v1 = c * 2.0 ** (-q)
    s1 = -c * q * 2.0 ** (-q - 1)
    A = 30.0 * (1.0 - tail_mass - v1 / 2 + s1 / 12)
    if A <= 0:
        raise ConstructionError("tail mass exceeds 1; envelope too small to normalize")
    prof = GProfile(M, p, q, c, A, v1, s1, levels, m_hat)
    return BasketFunction(S, prof)


def notch_reparam(r0: float, width: float):
    """C1 map phi with phi' > 0 except phi'(r0) = 0 (one planted defect)."""
    w = float(width)

    def phi(r):
        r = np.asarray(r, dtype=float)
        d = r - r0
        inside = np.abs(d) <= w
        val = np.where(r < r0 - w, r, np.where(inside, (r0 - w) + (d**3 + w**3) / (3 * w * w),
                                              r - 4 * w / 3))
        dval = np.where(inside, d**2 / w**2, 1.0)
        d2val = np.where(inside, 2 * d / w**2, 0.0)
        return val, dval, d2val

    return phi


def planted_defect(h: BasketFunction, r0: float, width: Optional[float] = None) -> BasketFunction:
    """Copy of h whose gradient vanishes on the level set f = r0."""
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    w = 0.25 * r0 if width is None else width
    return BasketFunction(h.sphere, h.g_profile, phi=notch_reparam(r0, w))


# ---------------------------------------------------------------------------
# verification


@dataclass
class AxiomResult:
    passed: bool
    worst: float
    witness: Optional[list] = None
    note: str = ""

    def as_dict(self):
        return {"passed": bool(self.passed), "worst": float(self.worst),
                "witness": self.witness, "note": self.note}


@dataclass
class BasketReport:
    axioms: Dict[str, AxiomResult]

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.axioms.values())

    def as_dict(self):
        return {"passed": self.passed, "axioms": {k: v.as_dict() for k, v in self.axioms.items()}}


def _radial_ratio(h: BasketFunction, u, radius):
    y = h.sphere.center_hint + radius * u
    gh = np.linalg.norm(h.grad(y), axis=-1)
    gf = np.linalg.norm(h.sphere.grad(y), axis=-1)
    return gh / gf


def verify_basket(h: BasketFunction, tol: float = 1e-3, n_samples: int = 512,
                  tail_tol: float = 1e-2, rng=None) -> BasketReport:
    """Sampled checks of the four basket axioms with worst-case witnesses.

    (b) looks at |grad h| along rays through the exterior.  Besides a plain
    zero test it refines every interior local minimum of |grad h| / |grad f|
    and fails when the minimum is below ``tol`` times the smaller of the two
    neighbouring maxima, which catches a gradient that vanishes on a single
    level set between samples.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    S = h.sphere
    R = S.bounding_radius
    out = {}

    # (a) interior
    yi = interior_samples(S, n_samples, rng)
    yi = yi[S.f(yi) < 0]
    va = np.abs(h.eval(yi))
    ia = int(np.argmax(va)) if len(va) else 0
    out["a"] = AxiomResult(bool(len(va) == 0 or va.max() < tol), float(va.max()) if len(va) else 0.0,
                           yi[ia].tolist() if len(va) else None)

    # (b) exterior, along rays from the sphere to 100 R
    n_rays = max(8, min(64, n_samples // 8))
    u = sphere_directions(n_rays, S.n_dim, rng)
    rb = S.ray_radius(u)
    worst_b, wit_b, note_b = np.inf, None, ""
    ok_b = True
    for k in range(len(u)):
        radii = rb[k] + np.geomspace(1e-4 * R, 100.0 * R, 600)
        ratio = _radial_ratio(h, u[k], radii[:, None])
        gnorm = ratio * np.linalg.norm(S.grad(S.center_hint + radii[:, None] * u[k]), axis=-1)
        j0 = int(np.argmin(gnorm))
        if gnorm[j0] <= 0.0 and ok_b:
            ok_b, worst_b, note_b = False, 0.0, "grad h = 0"
            wit_b = (S.center_hint + radii[j0] * u[k]).tolist()
        interior = np.where((ratio[1:-1] <= ratio[:-2]) & (ratio[1:-1] <= ratio[2:]))[0] + 1
        for j in interior:
            res = minimize_scalar(lambda s: float(_radial_ratio(h, u[k], np.array([[s]]))[0]),
                                  bounds=(radii[j - 1], radii[j + 1]), method="bounded",
                                  options={"xatol": 1e-12 * radii[j]})
            left, right = ratio[:j].max(), ratio[j + 1:].max()
            depth = res.fun / max(min(left, right), 1e-300)
            if depth < worst_b:
                worst_b = float(depth)
                wit_b = (S.center_hint + res.x * u[k]).tolist()
            if depth < tol:
                ok_b = False
                note_b = "interior gradient collapse"
    out["b"] = AxiomResult(ok_b, float(worst_b) if np.isfinite(worst_b) else 1.0, wit_b, note_b)

    # (c) direction of grad h at collar points against nu at the foot point
    y0 = boundary_samples(S, n_samples, rng)
    nu0 = normal(S, y0)
    worst_c, wit_c = 0.0, None
    for delta in (1e-7, 1e-6):
        yc = y0 + delta * R * nu0
        gh = h.grad(yc)
        gh = gh / np.linalg.norm(gh, axis=-1, keepdims=True)
        foot = S.project(yc)
        nf = S.grad(foot)
        nf = nf / np.linalg.norm(nf, axis=-1, keepdims=True)
        ang = np.arccos(np.clip(np.sum(gh * nf, axis=-1), -1.0, 1.0))
        j = int(np.argmax(ang))
        if ang[j] >= worst_c:
            worst_c, wit_c = float(ang[j]), yc[j].tolist()
    out["c"] = AxiomResult(bool(worst_c < tol), worst_c, wit_c)

    # (d) flattening at 100 R
    yd = 100.0 * R * sphere_directions(n_rays, S.n_dim, rng)
    e1 = np.abs(h.eval(yd) - 1.0)
    e2 = np.linalg.norm(h.grad(yd), axis=-1)
    e3 = np.linalg.norm(h.hess(yd), ord=2, axis=(-2, -1))
    stack = np.stack([e1, e2, e3])
    j = int(np.argmax(stack.max(axis=0)))
    worst_d = float(stack.max())
    out["d"] = AxiomResult(bool(worst_d < tail_tol), worst_d, yd[j].tolist(),
                           f"|h-1|={e1.max():.2e}, |grad h|={e2.max():.2e}, |Hess h|={e3.max():.2e}")
    return BasketReport(out)


@dataclass
class GInequalityReport:
    passed: bool
    worst_upper: float     # max over grid of g' * m_hat   (needs < 1)
    worst_lower: float     # max over grid of -g'' * m_hat^2 (needs < 1)
    max_g2: float          # max g'' on r >= 1 (needs < 0)
    min_g1: float          # min g' on r >= 1 (needs > 0)

    def as_dict(self):
        return dict(self.__dict__)


def check_g_inequalities(h: BasketFunction) -> GInequalityReport:
    """-1/m_hat^2 < g'' < 0 < g' < 1/m_hat at every construction grid point r >= 1."""
    gp = h.g_profile
    r = gp.grid_r[gp.grid_r >= 1.0]
    m = gp.grid_m[gp.grid_r >= 1.0]
    d1, d2 = gp.dg(r), gp.d2g(r)
    up = float(np.max(d1 * m)) if len(r) else 0.0
    lo = float(np.max(-d2 * m * m)) if len(r) else 0.0
    ok = bool(len(r) > 0 and up < 1 and lo < 1 and d2.max() < 0 and d1.min() > 0)
    return GInequalityReport(ok, up, lo, float(d2.max()) if len(r) else 0.0,
                             float(d1.min()) if len(r) else 0.0)
