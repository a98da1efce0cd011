"""Embedded spheres given as regular zero level sets f(y) = 0.

``f`` is negative inside, positive outside.  Evaluators broadcast over the
leading axes of ``y`` (shape ``(..., N)``).  Sampling routines assume the
sphere and its exterior level sets are star-shaped with respect to
``center_hint``, which holds for every built-in fixture.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import DegenerateNormalError, EvaluationError


@dataclass(frozen=True)
class EmbeddedSphere:
    n_dim: int
    defining_fn: Callable
    defining_grad: Callable
    defining_hess: Optional[Callable]
    bounding_radius: float
    center_hint: np.ndarray
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def f(self, y):
        return self.defining_fn(np.asarray(y, dtype=float))

    def grad(self, y):
        return self.defining_grad(np.asarray(y, dtype=float))

    def hess(self, y):
        if self.defining_hess is None:
            raise EvaluationError(f"sphere {self.name} has no defining Hessian")
        return self.defining_hess(np.asarray(y, dtype=float))

    def inside(self, y):
        return self.f(y) < 0.0

    # -- level-set geometry ---------------------------------------------

    def ray_radius(self, directions, level: float = 0.0, iters: int = 80) -> np.ndarray:
        """Distance rho from center_hint along each unit direction with f = level."""
        u = np.atleast_2d(np.asarray(directions, dtype=float))
        c = np.asarray(self.center_hint, dtype=float)
        lo = np.zeros(len(u))
        hi = np.full(len(u), max(self.bounding_radius, 1e-12))
        for _ in range(200):
            bad = self.f(c + hi[:, None] * u) <= level
            if not bad.any():
                break
            hi[bad] *= 2.0
        else:
            raise EvaluationError(f"level {level} of {self.name} not reached along some ray")
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            above = self.f(c + mid[:, None] * u) > level
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        return 0.5 * (lo + hi)

    def level_points(self, directions, level: float = 0.0) -> np.ndarray:
        u = np.atleast_2d(np.asarray(directions, dtype=float))
        return self.center_hint + self.ray_radius(u, level)[:, None] * u

    def project(self, y, iters: int = 30) -> np.ndarray:
        """Foot point on S along the gradient flow of f (Newton steps)."""
        y = np.array(y, dtype=float)
        for _ in range(iters):
            fv = self.f(y)
            g = self.grad(y)
            y = y - (fv / np.sum(g * g, axis=-1))[..., None] * g
            if np.max(np.abs(fv)) < 1e-15:
                break
        return y


# ---------------------------------------------------------------------------
# direction sets


def circle_directions(n: int, offset: float = 0.0) -> np.ndarray:
    phi = offset + 2.0 * np.pi * np.arange(n) / n
    return np.stack([np.cos(phi), np.sin(phi)], axis=1)


def fibonacci_directions(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    zc = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + 5**0.5) * i
    r = np.sqrt(1.0 - zc**2)
    return np.stack([r * np.cos(phi), r * np.sin(phi), zc], axis=1)


def random_directions(n: int, dim: int, rng) -> np.ndarray:
    u = rng.normal(size=(n, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def sphere_directions(n: int, dim: int, rng=None) -> np.ndarray:
    if dim == 1:
        return np.array([[-1.0], [1.0]])
    if dim == 2:
        return circle_directions(n)
    if dim == 3:
        return fibonacci_directions(n)
    rng = np.random.default_rng(0) if rng is None else rng
    return random_directions(n, dim, rng)


def boundary_samples(S: EmbeddedSphere, n: int, rng=None) -> np.ndarray:
    """Quasi-uniform points on S.

    N = 1 returns the two boundary points; N = 2 is uniform in arclength and
    ordered counterclockwise; N >= 3 projects quasi-uniform directions.
    """
    if S.n_dim == 1:
        return S.level_points(np.array([[-1.0], [1.0]]))
    if S.n_dim == 2:
        fine = max(8 * n, 2048)
        phi = 2.0 * np.pi * np.arange(fine + 1) / fine
        pts = S.level_points(np.stack([np.cos(phi), np.sin(phi)], axis=1))
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        target = s[-1] * np.arange(n) / n
        phi_t = np.interp(target, s, phi)
        return S.level_points(np.stack([np.cos(phi_t), np.sin(phi_t)], axis=1))
    return S.level_points(sphere_directions(n, S.n_dim, rng))


def interior_samples(S: EmbeddedSphere, n: int, rng) -> np.ndarray:
    """Random points of the closed interior (radially scaled boundary points)."""
    if S.n_dim == 1:
        u = np.where(rng.random(n) < 0.5, -1.0, 1.0)[:, None]
    else:
        u = random_directions(n, S.n_dim, rng)
    rho = S.ray_radius(u)
    scale = rng.uniform(0.0, 1.0, len(u)) ** (1.0 / S.n_dim)
    return S.center_hint + (scale * rho)[:, None] * u


# ---------------------------------------------------------------------------
# operations


def normal(S: EmbeddedSphere, y, tol: float = 1e-8, delta: Optional[float] = None) -> np.ndarray:
    """Unit outward normal grad f / |grad f| at a point of S."""
    y = np.asarray(y, dtype=float)
    fv = S.f(y)
    if np.any(np.abs(fv) >= tol):
        raise ValueError(f"point not on {S.name}: |f| = {np.max(np.abs(fv)):.3e}")
    g = S.grad(y)
    gn = np.linalg.norm(g, axis=-1, keepdims=True)
    if np.any(gn < 1e-10):
        raise DegenerateNormalError(f"|grad f| below 1e-10 on {S.name}")
    nu = g / gn
    delta = 1e-4 * S.bounding_radius if delta is None else delta
    if np.any(S.f(y + delta * nu) <= 0.0):
        raise DegenerateNormalError(f"normal of {S.name} not outward at tested point")
    return nu


@dataclass
class SphereReport:
    center_inside: bool
    outside_at_2r: bool
    min_collar_grad: float
    zero_set_bounded: bool
    passed: bool


def check_sphere(S: EmbeddedSphere, n: int = 512, delta: float = 1e-2, rng=None) -> SphereReport:
    """Finite-sample checks of the EmbeddedSphere invariants."""
    rng = np.random.default_rng(0) if rng is None else rng
    c_in = bool(S.f(S.center_hint) < 0)
    u = sphere_directions(n, S.n_dim, rng)
    far = 2.0 * S.bounding_radius * u
    out = bool(np.all(S.f(far) > 0))
    pts = S.level_points(u)
    bounded = bool(np.all(np.linalg.norm(pts, axis=1) <= S.bounding_radius * (1 + 1e-9)))
    collar = np.concatenate([S.level_points(u, lv) for lv in (-delta, delta)] + [pts])
    mg = float(np.min(np.linalg.norm(S.grad(collar), axis=-1)))
    return SphereReport(c_in, out, mg, bounded, c_in and out and bounded and mg > 0)


# ---------------------------------------------------------------------------
# built-in spheres


def ellipsoid(axes) -> EmbeddedSphere:
    """f(y) = sum (y_i / a_i)^2 - 1."""
    a = np.asarray(axes, dtype=float)
    if np.any(a <= 0):
        raise ValueError("semi-axes must be positive")
    n = len(a)
    w = 1.0 / a**2

    def f(y):
        return np.sum(w * y * y, axis=-1) - 1.0

    def g(y):
        return 2.0 * w * y

    def h(y):
        return np.broadcast_to(2.0 * np.diag(w), y.shape[:-1] + (n, n)).copy()

    return EmbeddedSphere(n, f, g, h, float(a.max()), np.zeros(n), name="ellipse",
                          params={"axes": a.tolist()})


def round_sphere(n_dim: int, radius: float = 1.0) -> EmbeddedSphere:
    S = ellipsoid([radius] * n_dim)
    return EmbeddedSphere(n_dim, S.defining_fn, S.defining_grad, S.defining_hess, float(radius),
                          np.zeros(n_dim), name="unit-sphere", params={"N": n_dim, "radius": radius})


def star_curve(a: float = 0.6, b: float = 0.25, lobes: int = 3) -> EmbeddedSphere:
    """Planar curve rho = a + b cos(lobes * phi), defined by f = rho - a - b cos(lobes phi).

    Non-convex when a^2 < b (a - b) lobes^2 near the inner lobes; for the default
    parameters the curvature changes sign.  f is smooth away from the origin.
    """
    if not (a > b > 0 or (a > 0 and b == 0)):
        raise ValueError("need a > b >= 0 for a simple star curve")
    m = float(lobes)

    def _polar(y):
        rho = np.hypot(y[..., 0], y[..., 1])
        phi = np.arctan2(y[..., 1], y[..., 0])
        return rho, phi

    def f(y):
        rho, phi = _polar(y)
        return rho - a - b * np.cos(m * phi)

    def g(y):
        rho, phi = _polar(y)
        safe = np.where(rho > 0, rho, 1.0)
        e_rho = y / safe[..., None]
        grad_phi = np.stack([-y[..., 1], y[..., 0]], axis=-1) / (safe**2)[..., None]
        out = e_rho + (b * m * np.sin(m * phi))[..., None] * grad_phi
        return np.where((rho > 0)[..., None], out, 0.0)

    def h(y):
        rho, phi = _polar(y)
        safe = np.where(rho > 0, rho, 1.0)
        y1, y2 = y[..., 0], y[..., 1]
        gphi = np.stack([-y2, y1], axis=-1) / (safe**2)[..., None]
        e_phi = np.stack([-y2, y1], axis=-1) / safe[..., None]
        h_rho = e_phi[..., :, None] * e_phi[..., None, :] / safe[..., None, None]
        r4 = (safe**4)[..., None, None]
        h_phi = np.stack([np.stack([2 * y1 * y2, y2**2 - y1**2], -1),
                          np.stack([y2**2 - y1**2, -2 * y1 * y2], -1)], -2) / r4
        f_phi = (b * m * np.sin(m * phi))[..., None, None]
        f_phiphi = (b * m * m * np.cos(m * phi))[..., None, None]
        out = f_phiphi * gphi[..., :, None] * gphi[..., None, :] + h_rho + f_phi * h_phi
        return np.where((rho > 0)[..., None, None], out, 0.0)

    return EmbeddedSphere(2, f, g, h, float(a + b), np.zeros(2), name="star-3-lobe",
                          params={"a": a, "b": b, "lobes": lobes})


BUILTIN_SPHERES = ("unit-sphere", "ellipse", "star-3-lobe")


def builtin_sphere(name: str, params: Optional[dict] = None) -> EmbeddedSphere:
    p = dict(params or {})
    if name == "unit-sphere":
        S = round_sphere(int(p.pop("N", 2)), float(p.pop("radius", 1.0)))
    elif name == "ellipse":
        S = ellipsoid(p.pop("axes", [1.0, 0.5]))
    elif name == "star-3-lobe":
        S = star_curve(float(p.pop("a", 0.6)), float(p.pop("b", 0.25)), int(p.pop("lobes", 3)))
    else:
        raise ValueError(f"unknown sphere {name!r}; expected one of {BUILTIN_SPHERES}")
    if p:
        raise ValueError(f"unknown parameters for {name}: {sorted(p)}")
    return S
