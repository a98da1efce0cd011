"""Hamiltonian systems on [0, T] x R^{2N}, 2*pi-periodic in the angles.

All evaluators broadcast over leading axes: ``z`` has shape ``(..., 2N)``
with ``z[..., :N]`` the angles ``x`` and ``z[..., N:]`` the momenta ``y``.
``eval`` returns shape ``(...)``, ``grad`` ``(..., 2N)`` and ``hess``
``(..., 2N, 2N)``.  Time ``t`` is a scalar or broadcasts against ``(...)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .errors import EvaluationError

TWO_PI = 2.0 * np.pi


def symplectic_matrix(n_dof: int) -> np.ndarray:
    """Standard J = [[0, I], [-I, 0]]."""
    eye = np.eye(n_dof)
    zero = np.zeros((n_dof, n_dof))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True)
class PhasePoint:
    """A point ``(x, y)``; angles are stored unreduced."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("phase point entries must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    @classmethod
    def from_array(cls, z) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        n = z.shape[-1] // 2
        return cls(z[:n], z[n:])


def as_state(z) -> np.ndarray:
    if isinstance(z, PhasePoint):
        return z.z
    return np.asarray(z, dtype=float)


@dataclass(frozen=True)
class HamiltonianSystem:
    n_dof: int
    period: float
    eval: Callable
    grad: Callable
    hess: Optional[Callable] = None
    smoothness: str = "C2"
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n_dof < 1:
            raise ValueError("n_dof must be >= 1")
        if not self.period > 0:
            raise ValueError("period must be positive")
        if self.smoothness not in ("C1", "C2"):
            raise ValueError("smoothness must be 'C1' or 'C2'")

    @property
    def dim(self) -> int:
        return 2 * self.n_dof

    @property
    def has_hessian(self) -> bool:
        return self.hess is not None

    def hessian(self, t, z, fd_step: float = 1e-6) -> np.ndarray:
        """Analytic Hessian, or central differences of ``grad`` when absent.

        The fallback is accurate to roughly ``fd_step**2`` in the entries.
        """
        z = np.asarray(z, dtype=float)
        if self.hess is not None:
            return self.hess(t, z)
        return fd_jacobian(lambda w: self.grad(t, w), z, fd_step, symmetrize=True)

    def rescaled(self) -> "HamiltonianSystem":
        """Same dynamics on the unit time interval: H1(s, z) = T * H(T s, z)."""
        T = float(self.period)
        if T == 1.0:
            return self
        hess = None
        if self.hess is not None:
            hess = lambda s, z: T * self.hess(T * np.asarray(s), z)
        return HamiltonianSystem(
            n_dof=self.n_dof,
            period=1.0,
            eval=lambda s, z: T * self.eval(T * np.asarray(s), z),
            grad=lambda s, z: T * self.grad(T * np.asarray(s), z),
            hess=hess,
            smoothness=self.smoothness,
            name=f"{self.name}[T=1]",
            params=dict(self.params),
        )


def fd_jacobian(func, z, step, symmetrize=False):
    """Central-difference Jacobian of a vector field over the last axis of z."""
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    cols = []
    for j in range(d):
        h = step * np.maximum(1.0, np.abs(z[..., j]))[..., None]
        e = np.zeros(d)
        e[j] = 1.0
        cols.append((func(z + h * e) - func(z - h * e)) / (2.0 * h))
    jac = np.stack(cols, axis=-1)
    if symmetrize:
        jac = 0.5 * (jac + np.swapaxes(jac, -1, -2))
    return jac


# 6th-order central stencil for first derivatives.
_FD6 = ((1, 3 / 4), (2, -3 / 20), (3, 1 / 60))


def fd_gradient(func, z, step=1e-3):
    """High-order central-difference gradient of a scalar function."""
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    out = np.empty_like(z)
    for j in range(d):
        h = step * np.maximum(1.0, np.abs(z[..., j]))
        e = np.zeros(d)
        e[j] = 1.0
        acc = 0.0
        for m, c in _FD6:
            dz = (m * h)[..., None] * e
            acc = acc + c * (func(z + dz) - func(z - dz))
        out[..., j] = acc / h
    return out


def symplectic_field(sys: HamiltonianSystem, t, z) -> np.ndarray:
    """J grad H, i.e. (dH/dy, -dH/dx)."""
    z = as_state(z)
    g = np.asarray(sys.grad(t, z), dtype=float)
    if not np.all(np.isfinite(g)):
        raise EvaluationError(f"non-finite gradient of {sys.name}", t=t, z=z)
    n = sys.n_dof
    return np.concatenate([g[..., n:], -g[..., :n]], axis=-1)


@dataclass
class AdmissibilityReport:
    n_samples: int
    tol: float
    periodicity_defect: float
    gradient_defect: float
    passed: bool
    worst_periodicity_sample: Optional[np.ndarray] = None
    worst_gradient_sample: Optional[np.ndarray] = None

    def as_dict(self):
        return {
            "n_samples": self.n_samples,
            "tol": self.tol,
            "periodicity_defect": self.periodicity_defect,
            "gradient_defect": self.gradient_defect,
            "passed": self.passed,
        }


def check_admissible(sys: HamiltonianSystem, n_samples: int = 1000, tol: float = 1e-8,
                     rng=None, y_scale: float = 3.0) -> AdmissibilityReport:
    """Sample periodicity in each x_i and gradient/finite-difference agreement.

    The gradient defect is ``max |grad - fd| / max(1, |grad|_inf)`` per sample.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(0) if rng is None else rng
    n = sys.n_dof
    ts = rng.uniform(0.0, sys.period, n_samples)
    x = rng.uniform(0.0, TWO_PI, (n_samples, n))
    y = rng.uniform(-y_scale, y_scale, (n_samples, n))
    z = np.concatenate([x, y], axis=1)

    h0 = np.asarray(sys.eval(ts, z), dtype=float)
    if not np.all(np.isfinite(h0)):
        raise EvaluationError(f"non-finite value of {sys.name}")
    per = np.zeros(n_samples)
    for i in range(n):
        shifted = z.copy()
        shifted[:, i] += TWO_PI
        per = np.maximum(per, np.abs(sys.eval(ts, shifted) - h0))

    g = np.asarray(sys.grad(ts, z), dtype=float)
    fd = fd_gradient(lambda w: sys.eval(ts, w), z)
    gdef = np.max(np.abs(g - fd), axis=1) / np.maximum(1.0, np.max(np.abs(g), axis=1))

    pd, gd = float(per.max()), float(gdef.max())
    return AdmissibilityReport(
        n_samples=n_samples, tol=tol, periodicity_defect=pd, gradient_defect=gd,
        passed=bool(pd < tol and gd < tol),
        worst_periodicity_sample=z[int(per.argmax())],
        worst_gradient_sample=z[int(gdef.argmax())],
    )


# --------------------------------------------------------------------------
# built-in systems


def _tcol(t):
    return np.asarray(t, dtype=float)[..., None]


def decoupled_pendulum(n_dof: int = 2, period: float = 1.0, eps: float = 0.1,
                       reverse: bool = False) -> HamiltonianSystem:
    """H = sum(y_i^2/2 + eps (1 - cos x_i)).

    ``reverse=True`` gives the reverse-momentum variant -H(t, x, -y), whose
    angular displacement points roughly along -y.
    """
    if n_dof < 1 or eps < 0:
        raise ValueError("need n_dof >= 1 and eps >= 0")
    n = n_dof
    sgn = -1.0 if reverse else 1.0

    def H(t, z):
        x, y = z[..., :n], z[..., n:]
        return sgn * np.sum(0.5 * y**2 + eps * (1.0 - np.cos(x)), axis=-1)

    def dH(t, z):
        x, y = z[..., :n], z[..., n:]
        return sgn * np.concatenate([eps * np.sin(x), y], axis=-1)

    def d2H(t, z):
        x = z[..., :n]
        diag = np.concatenate([eps * np.cos(x), np.ones_like(x)], axis=-1)
        return sgn * (diag[..., :, None] * np.eye(2 * n))

    return HamiltonianSystem(n, float(period), H, dH, d2H, "C2",
                             name="decoupled-pendulum-reversed" if reverse else "decoupled-pendulum",
                             params={"N": n, "T": period, "eps": eps, "reverse": reverse})


def coupled_pendulum(n_dof: int = 2, period: float = 1.0, eps: float = 0.1,
                     kappa: float = 0.02) -> HamiltonianSystem:
    """Pendulum chain with nearest-neighbour coupling kappa (1 - cos(x_{i+1} - x_i)).

    For N = 2 the equilibrium (pi, pi) degenerates at kappa = eps / 2 (a
    pitchfork), so keep kappa well away from that value in fixtures.
    """
    if n_dof < 1 or eps < 0 or kappa < 0:
        raise ValueError("need n_dof >= 1, eps >= 0, kappa >= 0")
    n = n_dof
    # incidence matrix of the chain: (n-1, n)
    D = np.zeros((max(n - 1, 0), n))
    for i in range(n - 1):
        D[i, i], D[i, i + 1] = -1.0, 1.0

    def H(t, z):
        x, y = z[..., :n], z[..., n:]
        val = np.sum(0.5 * y**2 + eps * (1.0 - np.cos(x)), axis=-1)
        if n > 1:
            val = val + kappa * np.sum(1.0 - np.cos(x @ D.T), axis=-1)
        return val

    def dH(t, z):
        x, y = z[..., :n], z[..., n:]
        gx = eps * np.sin(x)
        if n > 1:
            gx = gx + kappa * np.sin(x @ D.T) @ D
        return np.concatenate([gx, y], axis=-1)

    def d2H(t, z):
        x = z[..., :n]
        out = np.zeros(z.shape[:-1] + (2 * n, 2 * n))
        hxx = eps * np.cos(x)[..., :, None] * np.eye(n)
        if n > 1:
            c = kappa * np.cos(x @ D.T)
            hxx = hxx + np.einsum("ki,...k,kj->...ij", D, c, D)
        out[..., :n, :n] = hxx
        out[..., n:, n:] = np.eye(n)
        return out

    return HamiltonianSystem(n, float(period), H, dH, d2H, "C2", name="coupled-pendulum",
                             params={"N": n, "T": period, "eps": eps, "kappa": kappa})


def broken_linear(n_dof: int = 1, period: float = 1.0) -> HamiltonianSystem:
    """H = x_1: not periodic in x, used to exercise admissibility failures."""
    n = n_dof

    def H(t, z):
        return z[..., 0] + 0.0 * np.asarray(t)

    def dH(t, z):
        g = np.zeros_like(z)
        g[..., 0] = 1.0
        return g

    def d2H(t, z):
        return np.zeros(z.shape + (2 * n,))

    return HamiltonianSystem(n, float(period), H, dH, d2H, "C2", name="broken-linear")


# --------------------------------------------------------------------------
# Hamiltonians that are constant-in-(t, x) outside a ball in y


def _smooth_step(u):
    """C-infinity step 1 / (1 + exp(1/u - 1/(1-u))) on [0, 1] with two derivatives."""
    u = np.asarray(u, dtype=float)
    uc = np.clip(u, 1e-6, 1.0 - 1e-6)
    q = 1.0 / uc - 1.0 / (1.0 - uc)
    dq = -1.0 / uc**2 - 1.0 / (1.0 - uc) ** 2
    d2q = 2.0 / uc**3 - 2.0 / (1.0 - uc) ** 3
    s = expit(-q)
    w = s * expit(q)
    ds = -w * dq
    d2s = -ds * (1.0 - 2.0 * s) * dq - w * d2q
    inside = (u > 0.0) & (u < 1.0)
    s = np.where(inside, s, (u >= 1.0).astype(float))
    return s, np.where(inside, ds, 0.0), np.where(inside, d2s, 0.0)


@dataclass(frozen=True)
class RationalTail:
    """h(y) = ell - c / (1 + |y|^2); tends to ell from below."""

    ell: float
    c: float = 1.0

    def value(self, y):
        s = np.sum(y * y, axis=-1)
        return self.ell - self.c / (1.0 + s)

    def grad(self, y):
        s = np.sum(y * y, axis=-1)[..., None]
        return 2.0 * self.c * y / (1.0 + s) ** 2

    def hess(self, y):
        n = y.shape[-1]
        s = np.sum(y * y, axis=-1)[..., None, None]
        yy = y[..., :, None] * y[..., None, :]
        return 2.0 * self.c * (np.eye(n) / (1.0 + s) ** 2 - 4.0 * yy / (1.0 + s) ** 3)


@dataclass(frozen=True, kw_only=True)
class SzumodProfile(HamiltonianSystem):
    """A system equal to ``tail(y)`` for ``|y| >= r0`` and to ``base`` deep inside."""

    base: HamiltonianSystem
    r0: float
    tail: RationalTail
    ell: float

    def h_tail(self, y):
        return self.tail.value(np.asarray(y, dtype=float))


def blend_with_tail(base: HamiltonianSystem, tail: RationalTail, r0: float,
                    r_inner: Optional[float] = None) -> SzumodProfile:
    """(1 - chi) * base + chi * tail with chi a smooth step in |y|^2 on [r_inner, r0]."""
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    r_inner = 0.5 * r0 if r_inner is None else r_inner
    if not 0 < r_inner < r0:
        raise ValueError("need 0 < r_inner < r0")
    n = base.n_dof
    s1, s0 = r_inner**2, r0**2
    width = s0 - s1

    def chi(y):
        s, ds, d2s = _smooth_step((np.sum(y * y, axis=-1) - s1) / width)
        return s, ds / width, d2s / width**2

    def H(t, z):
        y = z[..., n:]
        c, _, _ = chi(y)
        b = base.eval(t, z)
        return (1.0 - c) * b + c * tail.value(y)

    def dH(t, z):
        y = z[..., n:]
        c, dc, _ = chi(y)
        b, gb = base.eval(t, z), base.grad(t, z)
        tv, tg = tail.value(y), tail.grad(y)
        c_, dc_ = c[..., None], dc[..., None]
        gx = (1.0 - c_) * gb[..., :n]
        gy = (1.0 - c_) * gb[..., n:] + c_ * tg + 2.0 * dc_ * y * (tv - b)[..., None]
        return np.concatenate([gx, gy], axis=-1)

    def d2H(t, z):
        y = z[..., n:]
        c, dc, d2c = chi(y)
        b, gb, hb = base.eval(t, z), base.grad(t, z), base.hessian(t, z)
        tv, tg, th = tail.value(y), tail.grad(y), tail.hess(y)
        c2, dc2, d2c2 = c[..., None, None], dc[..., None, None], d2c[..., None, None]
        gbx, gby = gb[..., :n], gb[..., n:]
        diff = (tv - b)[..., None, None]
        out = (1.0 - c2) * hb
        # x-y blocks
        cross = -2.0 * dc2 * gbx[..., :, None] * y[..., None, :]
        out[..., :n, n:] += cross
        out[..., n:, :n] += np.swapaxes(cross, -1, -2)
        dg = tg - gby
        yy = (c2 * th
              + 2.0 * dc2 * (y[..., :, None] * dg[..., None, :] + dg[..., :, None] * y[..., None, :])
              + 4.0 * d2c2 * y[..., :, None] * y[..., None, :] * diff
              + 2.0 * dc2 * diff * np.eye(n))
        out[..., n:, n:] += yy
        return out

    return SzumodProfile(
        n_dof=n, period=base.period, eval=H, grad=dH, hess=d2H, smoothness="C2",
        name="szumod-family",
        params={"N": n, "T": base.period, "R0": r0, "ell": tail.ell, "c": tail.c,
                "r_inner": r_inner, **{f"base.{k}": v for k, v in base.params.items()}},
        base=base, r0=float(r0), tail=tail, ell=float(tail.ell),
    )


def forced_pendulum(n_dof: int, period: float, eps: float, delta: float) -> HamiltonianSystem:
    """Pendulum whose potential is modulated by 1 + delta sin(2 pi t / T)."""
    n = n_dof
    om = TWO_PI / period

    def mod(t):
        return 1.0 + delta * np.sin(om * _tcol(t))

    def H(t, z):
        x, y = z[..., :n], z[..., n:]
        return np.sum(0.5 * y**2 + eps * mod(t) * (1.0 - np.cos(x)), axis=-1)

    def dH(t, z):
        x, y = z[..., :n], z[..., n:]
        return np.concatenate([eps * mod(t) * np.sin(x), y], axis=-1)

    def d2H(t, z):
        x = z[..., :n]
        diag = np.concatenate([eps * mod(t) * np.cos(x), np.ones_like(x)], axis=-1)
        return diag[..., :, None] * np.eye(2 * n)

    return HamiltonianSystem(n, float(period), H, dH, d2H, "C2", name="forced-pendulum",
                             params={"N": n, "T": period, "eps": eps, "delta": delta})


def szumod_family(n_dof: int = 2, period: float = 1.0, eps: float = 0.1, r0: float = 3.0,
                  ell: float = 1.0, c: float = 1.0, delta: float = 0.5,
                  r_inner: Optional[float] = None) -> SzumodProfile:
    base = forced_pendulum(n_dof, period, eps, delta)
    return blend_with_tail(base, RationalTail(ell=ell, c=c), r0, r_inner)


@dataclass
class TailReport:
    h1_defect: float
    h2_min_gap: float
    h2_monotone: bool
    grad_decay: bool
    hess_decay: bool
    passed: bool

    def as_dict(self):
        return dict(self.__dict__)


def check_szumod(profile: SzumodProfile, n_rays: int = 32, n_radii: int = 200,
                 radius_factor: float = 100.0, rng=None) -> TailReport:
    """Finite-sample checks of the tail hypotheses along radial rays in y."""
    rng = np.random.default_rng(1) if rng is None else rng
    n = profile.n_dof
    dirs = rng.normal(size=(n_rays, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = np.geomspace(profile.r0, radius_factor * profile.r0, n_radii)
    y = radii[None, :, None] * dirs[:, None, :]
    x = rng.uniform(0, TWO_PI, (n_rays, n_radii, n))
    t = rng.uniform(0, profile.period, (n_rays, n_radii))
    z = np.concatenate([x, y], axis=-1)

    h1 = float(np.max(np.abs(profile.eval(t, z) - profile.tail.value(y))))
    gap = np.abs(profile.tail.value(y) - profile.ell)
    gnorm = np.linalg.norm(profile.tail.grad(y), axis=-1)
    hnorm = np.linalg.norm(profile.tail.hess(y), ord=2, axis=(-2, -1))
    monotone = bool(np.all(np.diff(gap, axis=1) < 0))
    gdec = bool(np.all(gnorm[:, -1] < 1e-2 * gnorm[:, 0]))
    hdec = bool(np.all(hnorm[:, -1] < 1e-2 * hnorm[:, 0]))
    ok = h1 < 1e-12 and gap.min() > 0 and monotone and gdec and hdec
    return TailReport(h1, float(gap.min()), monotone, gdec, hdec, bool(ok))


BUILTIN_SYSTEMS = ("decoupled-pendulum", "coupled-pendulum", "szumod-family", "broken-linear")


def builtin_system(name: str, params: Optional[dict] = None) -> HamiltonianSystem:
    """Construct a named fixture system from a parameter map."""
    p = dict(params or {})
    n = int(p.pop("N", 2))
    T = float(p.pop("T", 1.0))
    eps = float(p.pop("eps", 0.1))
    if n < 1:
        raise ValueError("N must be >= 1")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if T <= 0:
        raise ValueError("T must be positive")
    if name == "decoupled-pendulum":
        sys = decoupled_pendulum(n, T, eps, reverse=bool(p.pop("reverse", False)))
    elif name == "coupled-pendulum":
        sys = coupled_pendulum(n, T, eps, float(p.pop("kappa", 0.02)))
    elif name == "szumod-family":
        sys = szumod_family(n, T, eps, r0=float(p.pop("R0", 3.0)), ell=float(p.pop("ell", 1.0)),
                            c=float(p.pop("c", 1.0)), delta=float(p.pop("delta", 0.5)),
                            r_inner=p.pop("r_inner", None))
    elif name == "broken-linear":
        sys = broken_linear(n, T)
    else:
        raise ValueError(f"unknown system {name!r}; expected one of {BUILTIN_SYSTEMS}")
    if p:
        raise ValueError(f"unknown parameters for {name}: {sorted(p)}")
    return sys
