"""Multi-start deflated Newton search for critical points of the action.

Seeds are processed in fixed-size batches.  Every seed in a batch is
deflated against the solutions accepted from earlier batches, the batch is
then merged in seed order, so the outcome does not depend on the number of
worker threads.

Deflation multiplies the gradient by prod_i (1 / d_i^2 + 1), with d_i the
distance to the i-th known solution measured with the angle difference
wrapped into (-pi, pi]; lattice translates of a found solution are
therefore repelled as well.  The Newton step of the deflated system is the
undeflated step rescaled by 1 / (1 - <grad log m, step>).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .._parallel import parallel_map
from ..errors import EvaluationError
from ..hamiltonian import TWO_PI
from .action import ActionFunctional
from .loopspace import LoopPoint

log = logging.getLogger(__name__)

BATCH = 32
STALL_ITER = 25
STALL_RESIDUAL = 1e-2


@dataclass
class CriticalPoint:
    point: LoopPoint
    residual: float
    iterations: int
    seed_index: int
    action: float = float("nan")

    def as_dict(self):
        return {"v": self.point.v.tolist(), "residual": self.residual,
                "iterations": self.iterations, "seed": self.seed_index,
                "action": self.action, "e_norm": float(np.linalg.norm(self.point.e))}


@dataclass
class SearchResult:
    points: List[CriticalPoint]
    n_seeds: int
    n_failed: int
    failures: List[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def wrapped_delta(u, w, n_e):
    """u - w with the torus coordinates wrapped into (-pi, pi]."""
    d = np.asarray(u, dtype=float) - np.asarray(w, dtype=float)
    d[..., n_e:] = (d[..., n_e:] + np.pi) % TWO_PI - np.pi
    return d


def make_seeds(space, budget: int, rng, extra: Optional[Sequence] = None, e_scale: float = 0.05):
    """Torus grid in v (lattice-symmetric points first) crossed with small random e."""
    n = space.n_dof
    seeds = []
    if extra is not None:
        for s in extra:
            seeds.append(np.asarray(s.as_vector() if isinstance(s, LoopPoint) else s, dtype=float))
    corners = np.array(np.meshgrid(*[[0.0, np.pi]] * n, indexing="ij")).reshape(n, -1).T
    per = max(2, int(np.ceil(max(budget, 1) ** (1.0 / n))))
    grid = np.array(np.meshgrid(*[TWO_PI * (np.arange(per) + 0.5) / per] * n,
                                indexing="ij")).reshape(n, -1).T
    vs = np.concatenate([corners, grid])
    w = np.sqrt(space.coefficient_weights)
    i = 0
    while len(seeds) < budget:
        v = vs[i % len(vs)]
        scale = 0.0 if i < len(corners) else e_scale
        e = scale * rng.normal(size=space.dim_e) / w
        seeds.append(np.concatenate([e, v]))
        i += 1
    return np.array(seeds)


def _newton_batch(F: ActionFunctional, U, known, newton_tol, max_iter, max_step):
    n_e = F.space.dim_e
    U = np.array(U, dtype=float)
    active = np.ones(len(U), bool)
    iters = np.zeros(len(U), int)
    res = np.full(len(U), np.inf)
    for it in range(max_iter):
        try:
            G = F.gradient(U)
        except EvaluationError:
            G = np.full_like(U, np.nan)
        res = np.where(np.all(np.isfinite(G), axis=-1), np.linalg.norm(G, axis=-1), np.inf)
        active &= np.isfinite(res) & (res >= newton_tol)
        if it >= STALL_ITER:
            active &= res < STALL_RESIDUAL     # clearly outside any Newton basin
        if not active.any():
            break
        idx = np.where(active)[0]
        Hm = F.hessian(U[idx])
        try:
            step = -np.linalg.solve(Hm, G[idx][..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = -(np.linalg.pinv(Hm, rcond=1e-12) @ G[idx][..., None])[..., 0]
        if len(known):
            K = np.asarray(known)
            d = wrapped_delta(U[idx][:, None, :], K[None, :, :], n_e)
            d2 = np.sum(d * d, axis=-1)
            glog = -2.0 * np.sum(d / (d2 * (1.0 + d2))[..., None], axis=1)
            denom = 1.0 - np.sum(glog * step, axis=-1)
            denom = np.where(np.abs(denom) < 1e-8, 1e-8, denom)
            step = step / denom[:, None]
        nrm = np.linalg.norm(step, axis=-1)
        step *= np.minimum(1.0, max_step / np.maximum(nrm, 1e-300))[:, None]
        U[idx] += step
        iters[idx] += 1
    G = F.gradient(U)
    res = np.linalg.norm(G, axis=-1)
    return U, res, iters


def find_critical_points(sys, space, splitting, budget: int = 200, newton_tol: float = 1e-10,
                         rng=None, extra_seeds=None, max_iter: int = 60, deflation: bool = True,
                         distinct_tol: float = 1e-4, max_step: float = 1.0,
                         workers: Optional[int] = None) -> SearchResult:
    """All converged critical points found from ``budget`` seeds (deduplicated)."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    F = ActionFunctional(sys, space, splitting)
    rng = np.random.default_rng(0) if rng is None else rng
    seeds = make_seeds(F.space, budget, rng, extra_seeds)
    n_e = F.space.dim_e
    found: List[np.ndarray] = []
    out: List[CriticalPoint] = []
    n_failed = 0
    batches = [seeds[i:i + BATCH] for i in range(0, len(seeds), BATCH)]
    offset = 0
    # batches are deflated against earlier batches only; chunks of a batch run in parallel
    for b in batches:
        known = list(found) if deflation else []
        chunks = [b[i:i + 8] for i in range(0, len(b), 8)]
        parts = parallel_map(lambda c: _newton_batch(F, c, known, newton_tol, max_iter, max_step),
                             chunks, workers)
        U = np.concatenate([p[0] for p in parts])
        res = np.concatenate([p[1] for p in parts])
        its = np.concatenate([p[2] for p in parts])
        for j in range(len(U)):
            if not res[j] < newton_tol:
                n_failed += 1
                continue
            u = U[j]
            if any(np.linalg.norm(wrapped_delta(u, w, n_e)) < distinct_tol for w in found):
                continue
            found.append(u.copy())
            p = LoopPoint(u[n_e:], u[:n_e])
            out.append(CriticalPoint(p, float(res[j]), int(its[j]), offset + j, float(F.value(u))))
        offset += len(U)
    out.sort(key=lambda c: (round(c.action, 10), tuple(np.round(c.point.v, 8))))
    return SearchResult(out, len(seeds), n_failed)
