"""Hamiltonian flow, time-T map, monodromy and shooting refinement."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import integrate as rk
from .errors import CapabilityError, IntegrationError
from .hamiltonian import TWO_PI, HamiltonianSystem, PhasePoint, as_state, symplectic_field, symplectic_matrix
from .orbit import OrbitRecord

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
NONDEGENERACY_THRESHOLD = 1e-6
PERIODIC_RESIDUAL_THRESHOLD = 1e-6


@dataclass
class Trajectory:
    times: np.ndarray
    states: List[PhasePoint]
    solution: rk.Solution = field(repr=False)
    est_error: float = 0.0

    def interpolant(self, t) -> PhasePoint:
        return PhasePoint.from_array(self.solution(t))

    def __call__(self, t) -> np.ndarray:
        return self.solution(t)

    def derivative(self, t) -> np.ndarray:
        return self.solution.derivative(t)

    @property
    def final(self) -> PhasePoint:
        return self.states[-1]


@dataclass
class MonodromyResult:
    matrix: np.ndarray
    multipliers: np.ndarray
    nondegenerate: bool
    margin: float
    threshold: float
    z_final: np.ndarray
    periodic_residual: float
    k: Tuple[int, ...]
    symplectic_defect: float
    warnings: List[str] = field(default_factory=list)


def _rhs(sys: HamiltonianSystem):
    return lambda t, z: symplectic_field(sys, t, z)


def integrate(sys: HamiltonianSystem, z0, tol: float = DEFAULT_TOL) -> Trajectory:
    """Trajectory over [0, T] with dense output."""
    z0 = as_state(z0)
    sol = rk.solve(_rhs(sys), 0.0, sys.period, z0, tol, dense=True)
    times = np.array([s.t for s in sol.steps] + [sys.period])
    states = [PhasePoint.from_array(s.y) for s in sol.steps] + [PhasePoint.from_array(sol.y1)]
    return Trajectory(times, states, sol, max(sol.max_defect, tol))


def flow_map(sys: HamiltonianSystem, z0, tol: float = DEFAULT_TOL, t0: float = 0.0,
             t1: Optional[float] = None, t_eval=None):
    """z(t1) for a batch of initial conditions (leading axes of z0)."""
    t1 = sys.period if t1 is None else t1
    sol = rk.solve(_rhs(sys), t0, t1, as_state(z0), tol, t_eval=t_eval)
    if t_eval is not None:
        return sol.y1, sol.y_eval
    return sol.y1


def poincare_map(sys: HamiltonianSystem, z0, tol: float = DEFAULT_TOL):
    """Return (theta, y_final) with theta = x(T) - x(0), no angle reduction."""
    z0 = as_state(z0)
    zT = flow_map(sys, z0, tol)
    n = sys.n_dof
    return zT[..., :n] - z0[..., :n], zT[..., n:]


def nearest_winding(theta) -> np.ndarray:
    return np.rint(np.asarray(theta) / TWO_PI).astype(int)


def _variational_rhs(sys: HamiltonianSystem, fd_fallback: bool, fd_step: float):
    if not sys.has_hessian and not fd_fallback:
        raise CapabilityError(f"{sys.name} has no Hessian and finite-difference fallback is disabled")
    d = sys.dim
    J = symplectic_matrix(sys.n_dof)

    def rhs(t, w):
        z = w[..., :d]
        Z = w[..., d:].reshape(w.shape[:-1] + (d, d))
        H2 = sys.hessian(t, z, fd_step=fd_step)
        dz = symplectic_field(sys, t, z)
        dZ = J @ H2 @ Z
        return np.concatenate([dz, dZ.reshape(w.shape[:-1] + (d * d,))], axis=-1)

    return rhs


def fundamental_solution(sys: HamiltonianSystem, z0, tol: float = DEFAULT_TOL,
                         fd_fallback: bool = True, fd_step: float = 1e-6):
    """(z(T), Z(T)) from the orbit and variational equation integrated together."""
    z0 = as_state(z0)
    d = sys.dim
    eye = np.broadcast_to(np.eye(d).ravel(), z0.shape[:-1] + (d * d,))
    w0 = np.concatenate([z0, eye], axis=-1)
    sol = rk.solve(_variational_rhs(sys, fd_fallback, fd_step), 0.0, sys.period, w0, tol)
    w1 = sol.y1
    return w1[..., :d], w1[..., d:].reshape(w1.shape[:-1] + (d, d))


def symplectic_defect(M: np.ndarray) -> float:
    J = symplectic_matrix(M.shape[-1] // 2)
    return float(np.max(np.abs(M.T @ J @ M - J)))


def analyze_monodromy(M: np.ndarray, threshold: float = NONDEGENERACY_THRESHOLD):
    mults = np.linalg.eigvals(M)
    order = np.lexsort((mults.imag, mults.real))
    mults = mults[order]
    margin = float(np.min(np.abs(mults - 1.0)))
    return mults, margin, bool(margin > threshold)


def monodromy(sys: HamiltonianSystem, z0, tol: float = DEFAULT_TOL,
              threshold: float = NONDEGENERACY_THRESHOLD, fd_fallback: bool = True,
              fd_step: float = 1e-6,
              residual_threshold: float = PERIODIC_RESIDUAL_THRESHOLD) -> MonodromyResult:
    """Monodromy matrix and Floquet multipliers of the orbit through z0."""
    z0 = as_state(z0)
    zT, M = fundamental_solution(sys, z0, tol, fd_fallback, fd_step)
    n = sys.n_dof
    k = tuple(int(v) for v in nearest_winding(zT[:n] - z0[:n]))
    shift = np.concatenate([TWO_PI * np.array(k, dtype=float), np.zeros(n)])
    resid = float(np.linalg.norm(zT - z0 - shift))
    warnings = []
    if resid >= residual_threshold:
        warnings.append(f"orbit not periodic to threshold: residual {resid:.3e}")
    if not sys.has_hessian:
        warnings.append(f"Hessian by finite differences (step {fd_step:g})")
    mults, margin, nondeg = analyze_monodromy(M, threshold)
    return MonodromyResult(M, mults, nondeg, margin, threshold, zT, resid, k,
                           symplectic_defect(M), warnings)


def refine_periodic(sys: HamiltonianSystem, z0_guess, newton_tol: float = 1e-10,
                    max_iter: int = 25, tol: float = 1e-12,
                    threshold: float = NONDEGENERACY_THRESHOLD,
                    singular_cond: float = 1e10) -> OrbitRecord:
    """Shooting Newton for z(T; z0) = z0 + (2 pi k, 0).

    The integer vector k is taken from the first iterate and then frozen.
    Non-convergence is returned as a record with ``converged=False``.
    """
    z = as_state(z0_guess).copy()
    n = sys.n_dof
    d = sys.dim
    k = None
    shift = None
    cond = None
    singular = False
    resid = np.inf
    M = None
    it = 0
    try:
        while True:
            zT, M = fundamental_solution(sys, z, tol)
            if k is None:
                k = nearest_winding(zT[:n] - z[:n])
                shift = np.concatenate([TWO_PI * k, np.zeros(n)])
            F = zT - z - shift
            resid = float(np.linalg.norm(F))
            if not np.isfinite(resid):
                break
            if resid < newton_tol or it >= max_iter:
                break
            A = M - np.eye(d)
            cond = float(np.linalg.cond(A))
            if cond > singular_cond:
                singular = True
                step = np.linalg.lstsq(A, -F, rcond=1e-12)[0]
            else:
                step = np.linalg.solve(A, -F)
            # backtrack on the residual norm
            lam = 1.0
            for _ in range(6):
                trial = z + lam * step
                F_trial = flow_map(sys, trial, tol) - trial - shift
                if np.linalg.norm(F_trial) < resid or lam < 0.05:
                    break
                lam *= 0.5
            z = trial
            it += 1
    except IntegrationError as exc:
        return OrbitRecord(PhasePoint.from_array(z), np.inf, tuple(int(v) for v in (k if k is not None else np.zeros(n))),
                           converged=False, iterations=it, source="shooting", message=str(exc))

    converged = bool(resid < newton_tol)
    message = ""
    if converged:
        # the frozen lattice vector must still be the nearest one
        k_now = nearest_winding(flow_map(sys, z, tol)[:n] - z[:n])
        if not np.array_equal(k_now, k):
            converged, message = False, "winding changed during refinement"
    elif not np.isfinite(resid):
        message = "non-finite residual"
    else:
        message = f"no convergence after {it} iterations"
    if singular:
        message = (message + "; " if message else "") + f"singular Jacobian (cond {cond:.2e})"
    rec = OrbitRecord(PhasePoint.from_array(z), resid, tuple(int(v) for v in k),
                      converged=converged, iterations=it, condition=cond, singular=singular,
                      source="shooting", message=message)
    if converged and M is not None:
        mults, margin, nondeg = analyze_monodromy(M, threshold)
        rec.multipliers, rec.margin, rec.nondegenerate = mults, margin, nondeg
    return rec
