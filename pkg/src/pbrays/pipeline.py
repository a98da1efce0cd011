"""End-to-end orbit census: variational search, shooting, clustering, verdict."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

from ._parallel import parallel_map
from .census import (OracleResult, OrbitClass, CensusVerdict, cluster_distinct,
                     oracle_fixed_points, same_class_sets, verify_counts)
from .flow import NONDEGENERACY_THRESHOLD, refine_periodic
from .geometry.spheres import EmbeddedSphere
from .hamiltonian import HamiltonianSystem
from .orbit import OrbitRecord
from .varcrit.loopspace import build_loop_space, build_splitting
from .varcrit.search import SearchResult, find_critical_points

log = logging.getLogger(__name__)


@dataclass
class VariationalRun:
    records: List[OrbitRecord]
    search: SearchResult
    failures: List[str] = field(default_factory=list)


def variational_orbits(sys: HamiltonianSystem, cutoff: int = 16, budget: int = 200,
                       newton_tol: float = 1e-10, integrator_tol: float = 1e-10,
                       n_nodes: Optional[int] = None, rng=None,
                       threshold: float = NONDEGENERACY_THRESHOLD,
                       workers: Optional[int] = None) -> VariationalRun:
    """Critical points of the truncated action, refined to true periodic orbits by shooting."""
    space = build_loop_space(sys.n_dof, cutoff, n_nodes)
    split = build_splitting(space)
    res = find_critical_points(sys, space, split, budget, newton_tol, rng=rng, workers=workers)

    def refine(cp):
        z0 = space.state_at_zero(cp.point)
        rec = refine_periodic(sys, z0, newton_tol, tol=min(1e-12, integrator_tol), threshold=threshold)
        rec.loop = cp.point
        rec.action = cp.action
        rec.source = "variational"
        return rec

    recs = parallel_map(refine, res.points, workers)
    good, failures = [], []
    for cp, r in zip(res.points, recs):
        if r.converged and r.residual < 1e-6:
            good.append(r)
        else:
            failures.append(f"seed {cp.seed_index}: shooting failed ({r.message or 'residual'})")
    return VariationalRun(good, res, failures)


@dataclass
class CensusRun:
    classes: List[OrbitClass]
    verdict: CensusVerdict
    degenerate_family: bool
    variational: VariationalRun
    oracle: Optional[OracleResult] = None
    oracle_classes: Optional[List[OrbitClass]] = None
    agreement: Optional[bool] = None
    unmatched: Optional[dict] = None

    def as_dict(self):
        d = {
            "n_classes": len(self.classes),
            "classes": [c.as_dict() for c in self.classes],
            "verdict": self.verdict.as_dict(),
            "degenerate_family": self.degenerate_family,
            "search": {"n_seeds": self.variational.search.n_seeds,
                       "n_unconverged": self.variational.search.n_failed,
                       "n_critical_points": len(self.variational.search.points),
                       "shooting_failures": self.variational.failures},
        }
        if self.oracle is not None:
            d["oracle"] = {
                "n_classes": len(self.oracle_classes or []),
                "classes": [c.as_dict() for c in self.oracle_classes or []],
                "incomplete": self.oracle.incomplete,
                "degenerate_family": self.oracle.degenerate_family,
                "n_grid": self.oracle.n_grid,
                "n_candidates": self.oracle.n_candidates,
                "messages": self.oracle.messages,
            }
            d["oracle_agreement"] = self.agreement
            d["unmatched"] = self.unmatched
        return d


def run_census(sys: HamiltonianSystem, S: EmbeddedSphere, cutoff: int = 16, budget: int = 200,
               newton_tol: float = 1e-10, integrator_tol: float = 1e-10, metric_tol: float = 1e-4,
               verdict_threshold: float = 1e-3, with_oracle: bool = False, oracle_grid: int = 12,
               oracle_budget: int = 2_000_000, n_nodes: Optional[int] = None, rng=None,
               workers: Optional[int] = None) -> CensusRun:
    var = variational_orbits(sys, cutoff, budget, newton_tol, integrator_tol, n_nodes, rng,
                             workers=workers)
    classes = cluster_distinct(var.records, metric_tol, sys, integrator_tol)
    interior = [c for c in classes if S.inside(c.representative.z0.y[None])[0]]
    verdict = verify_counts(classes, S, sys.n_dof, verdict_threshold)
    degenerate = any(r.nondegenerate is False or r.singular for r in var.records)
    if degenerate:
        verdict.warnings.append("degenerate solutions found: possible continuum of periodic orbits")
    run = CensusRun(classes, verdict, degenerate, var)
    if with_oracle:
        orc = oracle_fixed_points(sys, S, oracle_grid, newton_tol, budget=oracle_budget,
                                  integrator_tol=integrator_tol, metric_tol=metric_tol,
                                  workers=workers)
        ocl = cluster_distinct(orc.orbits, metric_tol, sys, integrator_tol)
        eq, ua, ub = same_class_sets(interior, ocl, metric_tol)
        run.oracle, run.oracle_classes, run.agreement = orc, ocl, bool(eq)
        run.unmatched = {"variational": ua, "oracle": ub}
    return run
