"""Counting geometrically distinct periodic solutions.

Two solutions are the same class when they differ by a lattice translate
(2 pi m in the angles).  The oracle here is deliberately independent of the
variational machinery: it grids the time-T map over [0, 2 pi)^N x Y and
Newton-refines every cell in which all displacement components change sign.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from ._parallel import parallel_map
from .errors import IntegrationError
from .flow import DEFAULT_TOL, NONDEGENERACY_THRESHOLD, flow_map, refine_periodic
from .geometry.spheres import EmbeddedSphere
from .hamiltonian import TWO_PI, HamiltonianSystem
from .orbit import OrbitRecord

log = logging.getLogger(__name__)

N_TRAJ_TIMES = 16
VERDICT_THRESHOLD = 1e-3


def lattice_distance(a, b, n_dof: int) -> float:
    """min over m of |(x - x' - 2 pi m, y - y')|."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    d[..., :n_dof] = (d[..., :n_dof] + np.pi) % TWO_PI - np.pi
    return np.linalg.norm(d, axis=-1)


def _lattice_shift(a, b, n_dof):
    diff = np.asarray(a[:n_dof]) - np.asarray(b[:n_dof])
    return TWO_PI * np.rint(diff / TWO_PI)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


@dataclass
class OrbitClass:
    class_id: int
    representative: OrbitRecord
    members: List[OrbitRecord]
    ambiguous: bool = False

    def as_dict(self):
        d = self.representative.as_dict()
        d.update({"class_id": self.class_id, "n_members": len(self.members),
                  "ambiguous": self.ambiguous})
        return d


def cluster_distinct(orbits: Sequence[OrbitRecord], metric_tol: float = 1e-4,
                     sys: Optional[HamiltonianSystem] = None,
                     integrator_tol: float = DEFAULT_TOL) -> List[OrbitClass]:
    """Union-find clustering modulo the angle lattice.

    With ``sys`` given, close pairs must also have time-T trajectories that
    stay within ``metric_tol`` of each other (after the lattice shift) at
    16 interior times.  Pairs whose initial distance lies in
    [metric_tol, 2 metric_tol) are merged as well and flagged ambiguous.
    """
    orbits = list(orbits)
    if not orbits:
        return []
    n = len(orbits[0].z0.x)
    Z = np.array([o.z for o in orbits])
    D = lattice_distance(Z[:, None, :], Z[None, :, :], n)
    traj = None
    if sys is not None and len(orbits) > 1:
        ts = sys.period * (np.arange(1, N_TRAJ_TIMES + 1) / (N_TRAJ_TIMES + 1))
        try:
            _, traj = flow_map(sys, Z, integrator_tol, t_eval=ts)
        except IntegrationError as exc:
            log.warning("trajectory comparison skipped: %s", exc)
    uf = _UnionFind(len(orbits))
    ambiguous = np.zeros(len(orbits), bool)
    for i, j in itertools.combinations(range(len(orbits)), 2):
        if D[i, j] >= 2 * metric_tol:
            continue
        if D[i, j] >= metric_tol:
            ambiguous[i] = ambiguous[j] = True
            uf.union(i, j)
            continue
        if traj is not None:
            shift = np.concatenate([_lattice_shift(Z[i], Z[j], n), np.zeros(n)])
            gap = np.max(np.linalg.norm(traj[:, i] - traj[:, j] - shift, axis=-1))
            if gap >= metric_tol:
                ambiguous[i] = ambiguous[j] = True
        uf.union(i, j)

    groups = {}
    for i in range(len(orbits)):
        groups.setdefault(uf.find(i), []).append(i)
    classes = []
    for members in groups.values():
        reduced = [orbits[i].reduced() for i in members]
        rep = min(reduced, key=lambda o: tuple(np.round(np.concatenate([o.z0.x, o.z0.y]), 12)))
        classes.append((rep, [orbits[i] for i in members], bool(ambiguous[members].any())))
    classes.sort(key=lambda c: tuple(np.round(c[0].z, 8)))
    out = []
    for cid, (rep, members, amb) in enumerate(classes):
        rep.class_id = cid
        for m in members:
            m.class_id = cid
        out.append(OrbitClass(cid, rep, members, amb))
    return out


def same_class_sets(a: Sequence[OrbitClass], b: Sequence[OrbitClass], metric_tol: float = 1e-4):
    """(equal, unmatched_in_a, unmatched_in_b) under the lattice metric."""
    if not a or not b:
        return (len(a) == len(b)), [c.class_id for c in a], [c.class_id for c in b]
    n = len(a[0].representative.z0.x)
    A = np.array([c.representative.z for c in a])
    B = np.array([c.representative.z for c in b])
    D = lattice_distance(A[:, None, :], B[None, :, :], n)
    ua = [a[i].class_id for i in range(len(a)) if D[i].min() >= metric_tol]
    ub = [b[j].class_id for j in range(len(b)) if D[:, j].min() >= metric_tol]
    return (not ua and not ub and len(a) == len(b)), ua, ub


# ---------------------------------------------------------------------------
# oracle


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if np.any(self.hi <= self.lo):
            raise ValueError("box needs hi > lo")

    def inside(self, y):
        y = np.asarray(y, dtype=float)
        return np.all((y > self.lo) & (y < self.hi), axis=-1)


YDomain = Union[Box, EmbeddedSphere]


def _domain_bounds(dom: YDomain, n: int):
    if isinstance(dom, Box):
        return dom.lo, dom.hi
    c = np.asarray(dom.center_hint, dtype=float)
    r = dom.bounding_radius * 1.02
    return c - r, c + r


def _cell_extrema(F, n):
    """Min and max of F over the 2^(2N) corners of every grid cell.

    Axes 0..N-1 are periodic angles (cells wrap), axes N..2N-1 are y (the
    last layer has no upper neighbour and is dropped).
    """
    lo, hi = F, F
    for ax in range(2 * n):
        if ax < n:
            lo = np.minimum(lo, np.roll(lo, -1, axis=ax))
            hi = np.maximum(hi, np.roll(hi, -1, axis=ax))
        else:
            sl_a = [slice(None)] * lo.ndim
            sl_b = [slice(None)] * lo.ndim
            sl_a[ax], sl_b[ax] = slice(0, -1), slice(1, None)
            lo = np.minimum(lo[tuple(sl_a)], lo[tuple(sl_b)])
            hi = np.maximum(hi[tuple(sl_a)], hi[tuple(sl_b)])
    return lo, hi


@dataclass
class OracleResult:
    orbits: List[OrbitRecord]
    incomplete: bool
    degenerate_family: bool
    n_grid: int
    n_candidates: int
    n_refined: int
    messages: List[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.orbits)

    def __len__(self):
        return len(self.orbits)


def oracle_fixed_points(sys: HamiltonianSystem, y_domain: YDomain, grid_per_dim: int = 16,
                        newton_tol: float = 1e-10, budget: int = 2_000_000,
                        max_refine: int = 4096, integrator_tol: float = 1e-10,
                        metric_tol: float = 1e-4, threshold: float = NONDEGENERACY_THRESHOLD,
                        small_norm: float = 1e-2, workers: Optional[int] = None) -> OracleResult:
    """Brute-force fixed points of the time-T map (mod the lattice) with y(0) in y_domain."""
    if grid_per_dim < 4:
        raise ValueError("grid_per_dim must be >= 4")
    n = sys.n_dof
    g = int(grid_per_dim)
    total = g ** (2 * n)
    msgs = []
    incomplete = False
    lo, hi = _domain_bounds(y_domain, n)
    xs = TWO_PI * np.arange(g) / g
    ys = [np.linspace(lo[i], hi[i], g) for i in range(n)]
    axes = [xs] * n + ys
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)      # (g,)*2N + (2N,)
    flat = mesh.reshape(-1, 2 * n)
    if total > budget:
        incomplete = True
        msgs.append(f"grid of {total} points exceeds budget {budget}; evaluated a prefix only")
    n_eval = min(total, budget)
    chunk = 4096
    pieces = [flat[i:min(i + chunk, n_eval)] for i in range(0, n_eval, chunk)]

    def disp(z):
        zT = flow_map(sys, z, integrator_tol)
        th = zT[:, :n] - z[:, :n]
        th = th - TWO_PI * np.rint(th / TWO_PI)
        return np.concatenate([th, zT[:, n:] - z[:, n:]], axis=-1)

    try:
        vals = np.concatenate(parallel_map(disp, pieces, workers))
    except IntegrationError as exc:
        return OracleResult([], True, False, 0, 0, 0, [f"integration failure: {exc}"])
    F = np.full((total, 2 * n), np.nan)
    F[:n_eval] = vals
    F = F.reshape(mesh.shape)

    cand = np.ones(mesh.shape[:n] + tuple(s - 1 for s in mesh.shape[n:2 * n]), bool)
    for c in range(2 * n):
        cmin, cmax = _cell_extrema(F[..., c], n)
        ok = (cmin <= 0) & (cmax >= 0)
        if c < n:
            ok &= (cmax - cmin) < np.pi      # wrapped-angle jumps are not sign changes
        cand &= np.nan_to_num(ok, nan=False).astype(bool)
    norm = np.linalg.norm(F, axis=-1)
    nmin, _ = _cell_extrema(norm, n)
    cand |= nmin < small_norm
    idx = np.argwhere(cand)
    n_cand = len(idx)
    if n_cand > max_refine:
        incomplete = True
        msgs.append(f"{n_cand} candidate cells exceed refinement budget {max_refine}")
        idx = idx[:max_refine]
    step = np.concatenate([np.full(n, TWO_PI / g), (hi - lo) / (g - 1)])
    starts = mesh[tuple(idx.T)] + 0.5 * step

    def refine(z0):
        return refine_periodic(sys, z0, newton_tol, tol=min(1e-12, integrator_tol),
                               threshold=threshold)

    recs = parallel_map(refine, list(starts), workers)
    good = [r for r in recs if r.converged and bool(_inside(y_domain, r.z0.y))]
    for r in good:
        r.source = "oracle"
    degenerate = any((r.nondegenerate is False) or r.singular for r in good)
    classes = cluster_distinct(good, metric_tol, sys, integrator_tol)
    reps = [c.representative for c in classes]
    if degenerate:
        msgs.append("degenerate fixed points found: solution set may be a continuum")
    return OracleResult(reps, incomplete, degenerate, n_eval, n_cand, len(recs), msgs)


def _inside(dom: YDomain, y):
    if isinstance(dom, Box):
        return dom.inside(y)
    return dom.inside(np.asarray(y, dtype=float)[None])[0]


# ---------------------------------------------------------------------------
# verdict


@dataclass
class CensusVerdict:
    n_classes: int
    n_interior: int
    bound_cl: int
    bound_sb: int
    all_nondegenerate: Optional[bool]
    meets_cl: bool
    meets_sb: Optional[bool]
    interiority: List[bool]
    threshold: float
    warnings: List[str] = field(default_factory=list)

    def as_dict(self):
        return dict(self.__dict__)


def verify_counts(classes: Sequence[OrbitClass], S: YDomain, n_dof: int,
                  threshold: float = VERDICT_THRESHOLD) -> CensusVerdict:
    """Compare the interior class count with N + 1 and, if all are nondegenerate, 2^N."""
    inter = [bool(_inside(S, c.representative.z0.y)) for c in classes]
    n_int = int(sum(inter))
    warns = []
    margins = []
    for c, ins in zip(classes, inter):
        if not ins:
            continue
        mu = c.representative.multipliers
        margins.append(None if mu is None else float(np.min(np.abs(np.asarray(mu) - 1.0))))
    if n_int == 0:
        all_nd = None
    elif any(m is None for m in margins):
        all_nd = None
        warns.append("multipliers missing for some classes; 2^N bound not applicable")
    else:
        all_nd = bool(all(m > threshold for m in margins))
        if not all_nd:
            warns.append(f"some multiplier within {threshold:g} of 1; 2^N bound not applicable")
    meets_cl = n_int >= n_dof + 1
    meets_sb = (n_int >= 2 ** n_dof) if all_nd else None
    if not meets_cl:
        warns.append("fewer than N+1 interior classes: undersearch or counterexample candidate")
    if any(c.ambiguous for c in classes):
        warns.append("ambiguous class pairs merged conservatively")
    return CensusVerdict(len(classes), n_int, n_dof + 1, 2 ** n_dof, all_nd, bool(meets_cl),
                         meets_sb, inter, threshold, warns)
