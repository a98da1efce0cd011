"""Avoiding inward/outward rays conditions for the time-T displacement.

For a boundary point ``y0`` of S and a base angle ``x0`` the displacement is
``theta = x(T) - x(0)`` of the solution starting at ``(x0, y0)``.  The
outward condition forbids ``theta`` on the ray ``{lambda nu(y0)}``; the
inward condition forbids ``{-lambda nu(y0)}``.

Sampling alone cannot see a contact with the ray when N >= 3, because the
contact set is generically a finite set of points on S.  There the check
also uses a degree obstruction: if theta avoids the rays {s lambda nu} then
(1 - t) theta - t s nu never vanishes on S, so deg theta must equal
deg(-s nu), i.e. 1 for the inward side and (-1)^N for the outward side.
A different degree proves that some ray is met.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.stats import qmc

from .._parallel import parallel_map
from ..errors import (DegreeUndefinedError, EvaluationError, IntegrationError,
                      UnreliableResultError)
from ..flow import DEFAULT_TOL, flow_map, poincare_map
from ..hamiltonian import TWO_PI, HamiltonianSystem
from .degree import degree_details
from .spheres import EmbeddedSphere, boundary_samples, interior_samples, normal

log = logging.getLogger(__name__)

SIDES = ("inward", "outward")


@dataclass
class RaySample:
    y0: np.ndarray
    x0: np.ndarray
    theta: np.ndarray
    margin: float

    def as_dict(self):
        return {"y0": self.y0.tolist(), "x0": self.x0.tolist(),
                "theta": self.theta.tolist(), "margin": float(self.margin)}


@dataclass
class RaysReport:
    side: str
    samples: List[RaySample]
    min_margin: float
    verdict: bool
    verifiable: bool = True
    tol: float = 0.0
    n_contained: int = 0
    message: str = ""
    base_angles: Optional[np.ndarray] = field(default=None, repr=False)
    degrees: Optional[List[Optional[int]]] = None

    @property
    def worst(self) -> Optional[RaySample]:
        if not self.samples:
            return None
        return min(self.samples, key=lambda s: s.margin)

    def as_dict(self, max_samples: int = 20) -> dict:
        ordered = sorted(self.samples, key=lambda s: s.margin)
        return {
            "side": self.side,
            "verdict": bool(self.verdict),
            "verifiable": bool(self.verifiable),
            "min_margin": float(self.min_margin) if np.isfinite(self.min_margin) else None,
            "tol": self.tol,
            "n_samples": len(self.samples),
            "n_contained": int(self.n_contained),
            "message": self.message,
            "worst_samples": [s.as_dict() for s in ordered[:max_samples]],
            "degrees": self.degrees,
        }


def base_angles(n_angles: int, n_dof: int) -> np.ndarray:
    """Deterministic quasi-uniform angles in [0, 2 pi)^N; the first one is 0."""
    pts = qmc.Halton(d=n_dof, scramble=False).random(n_angles)
    return TWO_PI * pts


def displacement_map(sys: HamiltonianSystem, x0, tol: float = DEFAULT_TOL):
    """``y -> theta(x0, y)`` evaluated in batches (``y`` of shape (..., N))."""
    x0 = np.asarray(x0, dtype=float)

    def theta(y):
        y = np.asarray(y, dtype=float)
        z = np.concatenate([np.broadcast_to(x0, y.shape), y], axis=-1)
        return poincare_map(sys, z, tol)[0]

    return theta


def ray_margins(theta: np.ndarray, nu: np.ndarray, side: str) -> np.ndarray:
    """Distance from theta to the forbidden ray, scaled by 1/max(|theta|, 1)."""
    s = 1.0 if side == "outward" else -1.0
    d = s * nu
    p = np.sum(theta * d, axis=-1)
    perp = theta - p[..., None] * d
    dist = np.where(p > 0, np.linalg.norm(perp, axis=-1), np.linalg.norm(theta, axis=-1))
    return dist / np.maximum(np.linalg.norm(theta, axis=-1), 1.0)


def _planar_crossings(theta: np.ndarray, nu: np.ndarray, side: str) -> np.ndarray:
    """Mark consecutive boundary samples between which theta crosses the ray (N = 2).

    The samples are ordered along the curve, so a sign change of
    ``theta x nu`` with ``theta`` on the forbidden side means the continuous
    displacement meets the ray somewhere between them.
    """
    s = 1.0 if side == "outward" else -1.0
    cross = theta[..., 0] * nu[..., 1] - theta[..., 1] * nu[..., 0]
    along = s * np.sum(theta * nu, axis=-1)
    nxt = np.roll(cross, -1, axis=-1)
    nxt_along = np.roll(along, -1, axis=-1)
    hit = (np.sign(cross) != np.sign(nxt)) & (along > 0) & (nxt_along > 0)
    return hit | np.roll(hit, 1, axis=-1)


def check_avoiding_rays(sys: HamiltonianSystem, S: EmbeddedSphere, side: str = "inward",
                        n_boundary: int = 256, n_angles: int = 8, tol: float = 0.0,
                        integrator_tol: float = DEFAULT_TOL, n_interior: int = 64,
                        rng=None, workers: Optional[int] = None,
                        degree_resolution: int = 64) -> RaysReport:
    """Sample the avoiding-rays condition on ``S`` for the flow of ``sys``.

    A pass needs every sampled margin strictly above ``tol``.  Margins below
    ``10 * integrator_tol`` carry no information and are set to zero, as are
    samples adjacent to a detected crossing of the ray when N = 2.  Any
    integration failure (boundary or interior) makes the report not
    verifiable, and such a report never passes.  For N >= 3 a sampled pass
    is confirmed by the degree obstruction at every base angle.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    if n_boundary < 1 or n_angles < 1:
        raise ValueError("sampling counts must be >= 1")
    if S.n_dim != sys.n_dof:
        raise ValueError(f"sphere dimension {S.n_dim} != n_dof {sys.n_dof}")
    rng = np.random.default_rng(0) if rng is None else rng
    n = sys.n_dof
    xs = base_angles(n_angles, n)
    ys = boundary_samples(S, n_boundary, rng)
    nu = normal(S, ys)

    def run(x0):
        z = np.concatenate([np.broadcast_to(x0, ys.shape), ys], axis=-1)
        return poincare_map(sys, z, integrator_tol)[0]

    def interior(i):
        yi = interior_samples(S, n_interior, np.random.default_rng([i, 17]))
        xi = np.broadcast_to(xs[i % len(xs)], yi.shape)
        flow_map(sys, np.concatenate([xi, yi], axis=-1), integrator_tol)
        return True

    try:
        thetas = np.stack(parallel_map(run, list(xs), workers))  # (n_angles, n_boundary, N)
        parallel_map(interior, range(min(4, n_angles)), workers)
    except (IntegrationError, EvaluationError) as exc:
        log.warning("rays check not verifiable: %s", exc)
        return RaysReport(side, [], float("nan"), False, verifiable=False, tol=tol,
                          message=f"integration failure: {exc}", base_angles=xs)

    margins = ray_margins(thetas, nu[None], side)
    floor = 10.0 * integrator_tol
    margins = np.where(margins < floor, 0.0, margins)
    contained = margins == 0.0
    if n == 2 and len(ys) > 1:
        crossing = _planar_crossings(thetas, nu[None], side)
        contained |= crossing
        margins = np.where(crossing, 0.0, margins)

    samples = [RaySample(ys[j].copy(), xs[i].copy(), thetas[i, j].copy(), float(margins[i, j]))
               for i in range(len(xs)) for j in range(len(ys))]
    mm = float(margins.min())
    verdict = bool(mm > tol)
    msg = "" if verdict else ("forbidden ray met" if contained.any() else "margin at or below tolerance")
    degrees = None
    verifiable = True
    if verdict and n >= 3:
        expect = 1 if side == "inward" else (-1) ** n
        degrees = []
        for x0 in xs:
            try:
                d = degree_details(displacement_map(sys, x0, integrator_tol), S,
                                   degree_resolution, rng=rng).degree
            except DegreeUndefinedError:
                d = None          # theta vanishes on S, so it lies on both rays
            except UnreliableResultError as exc:
                verdict, verifiable, msg = False, False, f"degree obstruction not computable: {exc}"
                break
            degrees.append(d)
            if d != expect:
                verdict = False
                msg = (f"degree obstruction: deg theta(x0, .) = {d} at x0 = {np.round(x0, 6).tolist()}, "
                       f"but avoiding the {side} rays forces {expect}")
                break
    return RaysReport(side, samples, mm, verdict, verifiable, tol, int(contained.sum()), msg, xs,
                      degrees)
