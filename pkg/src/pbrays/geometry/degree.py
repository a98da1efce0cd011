"""Brouwer degree deg(theta, int S, 0) for maps given by batched samples.

N = 1 reads off the endpoint signs, N = 2 is the winding number of theta
along the boundary curve and N = 3 sums signed solid angles over a
triangulated boundary.  For N >= 4 the degree is counted at a small regular
value as the signed number of preimages found by Newton's method.  Each
method is repeated at doubled resolution and the two answers must agree.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import DegreeUndefinedError, UnreliableResultError
from ..hamiltonian import fd_jacobian
from .spheres import EmbeddedSphere, boundary_samples, interior_samples

ZERO_FACTOR = 1e-8


@dataclass
class DegreeResult:
    degree: int
    resolution: int
    min_boundary_norm: float
    raw: float  # un-rounded winding sum (or preimage count) at the finest resolution

    def as_dict(self):
        return {"degree": self.degree, "resolution": self.resolution,
                "min_boundary_norm": self.min_boundary_norm, "raw": self.raw}


def _check_boundary(values, scale):
    norms = np.linalg.norm(values, axis=-1)
    mn = float(norms.min())
    if mn < ZERO_FACTOR * scale:
        raise DegreeUndefinedError(f"map nearly vanishes on the boundary: min |theta| = {mn:.3e}")
    return mn


def _degree_1d(theta_map, S, scale):
    pts = boundary_samples(S, 2)          # left, right
    vals = np.asarray(theta_map(pts), dtype=float).reshape(2, 1)
    mn = _check_boundary(vals, scale)
    d = (np.sign(vals[1, 0]) - np.sign(vals[0, 0])) / 2.0
    return int(d), float(d), mn


def _winding(theta_map, S, n, scale):
    pts = boundary_samples(S, n)          # counterclockwise
    vals = np.asarray(theta_map(pts), dtype=float)
    mn = _check_boundary(vals, scale)
    ang = np.arctan2(vals[:, 1], vals[:, 0])
    dphi = np.diff(np.concatenate([ang, ang[:1]]))
    dphi = (dphi + np.pi) % (2 * np.pi) - np.pi
    if np.max(np.abs(dphi)) > 0.5 * np.pi:
        raise UnreliableResultError(f"boundary polygon too coarse at resolution {n}")
    raw = float(np.sum(dphi) / (2 * np.pi))
    return int(np.rint(raw)), raw, mn


def uv_triangulation(n_lat: int, n_lon: int):
    """Unit directions and outward-oriented triangles of a latitude/longitude mesh."""
    polar = np.linspace(0.0, np.pi, n_lat + 1)[1:-1]
    lon = 2 * np.pi * np.arange(n_lon) / n_lon
    P, L = np.meshgrid(polar, lon, indexing="ij")
    ring = np.stack([np.sin(P) * np.cos(L), np.sin(P) * np.sin(L), np.cos(P)], axis=-1).reshape(-1, 3)
    dirs = np.concatenate([[[0.0, 0.0, 1.0]], ring, [[0.0, 0.0, -1.0]]])
    north, south = 0, len(dirs) - 1

    def idx(i, j):
        return 1 + i * n_lon + (j % n_lon)

    tris = []
    for j in range(n_lon):
        tris.append((north, idx(0, j), idx(0, j + 1)))
        tris.append((south, idx(n_lat - 2, j + 1), idx(n_lat - 2, j)))
    for i in range(n_lat - 2):
        for j in range(n_lon):
            a, b, c, d = idx(i, j), idx(i, j + 1), idx(i + 1, j), idx(i + 1, j + 1)
            tris.append((a, c, d))
            tris.append((a, d, b))
    return dirs, np.array(tris)


def solid_angles(a, b, c):
    """Signed solid angles subtended at the origin by triangles (a, b, c)."""
    la, lb, lc = (np.linalg.norm(v, axis=-1) for v in (a, b, c))
    num = np.einsum("...i,...i->...", a, np.cross(b, c))
    den = (la * lb * lc + np.einsum("...i,...i->...", a, b) * lc
           + np.einsum("...i,...i->...", a, c) * lb + np.einsum("...i,...i->...", b, c) * la)
    return 2.0 * np.arctan2(num, den)


def _solid_angle_degree(theta_map, S, n, scale):
    dirs, tris = uv_triangulation(max(4, n // 2), max(4, n))
    pts = S.level_points(dirs)
    vals = np.asarray(theta_map(pts), dtype=float)
    mn = _check_boundary(vals, scale)
    omega = solid_angles(vals[tris[:, 0]], vals[tris[:, 1]], vals[tris[:, 2]])
    raw = float(np.sum(omega) / (4 * np.pi))
    return int(np.rint(raw)), raw, mn


def _preimage_degree(theta_map, S, n, scale, rng, fd_step=1e-6, newton_tol=1e-10):
    """Signed count of preimages of a small random regular value."""
    N = S.n_dim
    bvals = np.asarray(theta_map(boundary_samples(S, 4 * n, rng)), dtype=float)
    mn = _check_boundary(bvals, scale)
    target = 1e-3 * mn * rng.normal(size=N) / np.sqrt(N)
    y = interior_samples(S, n, rng)
    for _ in range(40):
        F = np.asarray(theta_map(y), dtype=float) - target
        if np.max(np.linalg.norm(F, axis=-1)) < newton_tol * scale:
            break
        Jm = fd_jacobian(theta_map, y, fd_step)
        step = (np.linalg.pinv(Jm) @ F[..., None])[..., 0]
        y = y - np.clip(step, -S.bounding_radius, S.bounding_radius)
    F = np.asarray(theta_map(y), dtype=float) - target
    ok = (np.linalg.norm(F, axis=-1) < 1e-8 * scale) & S.inside(y)
    roots = []
    for p in y[ok]:
        if all(np.linalg.norm(p - q) > 1e-6 * S.bounding_radius for q in roots):
            roots.append(p)
    if not roots:
        return 0, 0.0, mn
    R = np.array(roots)
    dets = np.linalg.det(fd_jacobian(theta_map, R, fd_step))
    if np.any(np.abs(dets) < 1e-12):
        raise UnreliableResultError("target value is not regular")
    raw = float(np.sum(np.sign(dets)))
    return int(raw), raw, mn


def degree_details(theta_map: Callable, S: EmbeddedSphere, resolution: int = 256,
                   scale: Optional[float] = None, rng=None, refine: bool = True) -> DegreeResult:
    N = S.n_dim
    if scale is None:
        probe = np.asarray(theta_map(boundary_samples(S, 64 if N > 1 else 2)), dtype=float)
        scale = max(1.0, float(np.median(np.linalg.norm(probe, axis=-1))))

    def at(res):
        if N == 1:
            return _degree_1d(theta_map, S, scale)
        if N == 2:
            return _winding(theta_map, S, res, scale)
        if N == 3:
            return _solid_angle_degree(theta_map, S, int(np.sqrt(res)) * 2, scale)
        gen = np.random.default_rng(0) if rng is None else rng
        seed = int(gen.integers(2**31))
        return _preimage_degree(theta_map, S, res, scale, np.random.default_rng(seed))

    d1, raw1, mn1 = at(resolution)
    if not refine or N == 1:
        return DegreeResult(d1, resolution, mn1, raw1)
    d2, raw2, mn2 = at(2 * resolution)
    if d1 != d2:
        raise UnreliableResultError(f"degree changed under refinement: {d1} at {resolution}, "
                                    f"{d2} at {2 * resolution}")
    return DegreeResult(d2, 2 * resolution, min(mn1, mn2), raw2)


def brouwer_degree(theta_map: Callable, S: EmbeddedSphere, resolution: int = 256,
                   scale: Optional[float] = None, rng=None) -> int:
    """Degree of theta_map on int S at 0 (resolution doubled once as a check)."""
    return degree_details(theta_map, S, resolution, scale, rng).degree
