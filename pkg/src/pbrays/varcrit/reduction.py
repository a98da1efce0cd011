"""Elimination of high Fourier modes by a contraction (Galerkin tail reduction).

With e = f + g split into low modes f (k <= K') and tail g (k > K'), the
tail part of the gradient vanishes iff

    g = -L_tail^{-1} (grad_e psi(f + g, v))_tail ,

a fixed-point problem that contracts when K' is large compared with the
Lipschitz constant of grad H.  Its solution G(f, v) turns critical points of
the reduced functional Phi(f + G(f, v), v) into critical points of Phi.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ReductionNotApplicableError
from .action import ActionFunctional


@dataclass
class TailResult:
    g: np.ndarray
    factor: float
    iterations: int
    update_norm: float
    factors: np.ndarray


class TailReduction:
    """Low/tail bookkeeping for one functional and one cutoff K' < K."""

    def __init__(self, functional: ActionFunctional, k_low: int):
        sp = functional.space
        if not 1 <= k_low < sp.cutoff:
            raise ValueError("need 1 <= K' < K")
        self.F = functional
        self.k_low = int(k_low)
        self.n_low = sp.dim_low(k_low)
        self.n_e = sp.dim_e
        L = functional.splitting.form
        self.L_tail_inv = np.linalg.inv(L[self.n_low:, self.n_low:])

    def assemble(self, f, g, v):
        return np.concatenate([f, g, v], axis=-1)

    def tail_map(self, f, g, v):
        gp = self.F.grad_psi(self.assemble(f, g, v))
        return -(gp[..., self.n_low:self.n_e] @ self.L_tail_inv.T)

    def solve(self, f, v, tol: float = 1e-12, max_iter: int = 200,
              g0: Optional[np.ndarray] = None) -> TailResult:
        f = np.asarray(f, dtype=float)
        v = np.asarray(v, dtype=float)
        g = np.zeros(self.n_e - self.n_low) if g0 is None else np.array(g0, dtype=float)
        prev = None
        factors = []
        upd = np.inf
        for it in range(1, max_iter + 1):
            g_new = self.tail_map(f, g, v)
            upd = float(np.linalg.norm(g_new - g))
            if prev is not None and prev > 1e-300:
                factors.append(upd / prev)
                if len(factors) <= 3 and factors[-1] >= 1.0 and upd > tol:
                    raise ReductionNotApplicableError(
                        f"tail map does not contract at K' = {self.k_low}", factors[-1])
            g, prev = g_new, upd
            if upd < tol:
                break
        fac = float(max(factors)) if factors else 0.0
        return TailResult(g, fac, it, upd, np.array(factors))

    # reduced functional -------------------------------------------------

    def lift(self, f, v, tol=1e-12, g0=None):
        res = self.solve(f, v, tol, g0=g0)
        return self.assemble(f, res.g, v), res

    def reduced_gradient(self, f, v, tol=1e-12, g0=None):
        u, res = self.lift(f, v, tol, g0)
        full = self.F.gradient(u)
        return np.concatenate([full[: self.n_low], full[self.n_e:]]), u, res

    def reduced_hessian(self, u):
        """Schur complement of the tail block of the full Hessian."""
        Hf = self.F.hessian(u)
        lo = np.r_[np.arange(self.n_low), np.arange(self.n_e, Hf.shape[-1])]
        ta = np.arange(self.n_low, self.n_e)
        A = Hf[np.ix_(lo, lo)]
        B = Hf[np.ix_(lo, ta)]
        C = Hf[np.ix_(ta, ta)]
        return A - B @ np.linalg.solve(C, B.T)

    def find_critical_point(self, f0, v0, newton_tol: float = 1e-10, max_iter: int = 30,
                            tail_tol: float = 1e-13):
        """Newton on the reduced gradient; returns (full u, reduced residual, info)."""
        f = np.array(f0, dtype=float)
        v = np.array(v0, dtype=float)
        g = None
        res_norm = np.inf
        for it in range(max_iter):
            rg, u, tail = self.reduced_gradient(f, v, tail_tol, g)
            g = tail.g
            res_norm = float(np.linalg.norm(rg))
            if res_norm < newton_tol:
                break
            step = np.linalg.lstsq(self.reduced_hessian(u), -rg, rcond=1e-12)[0]
            f = f + step[: self.n_low]
            v = v + step[self.n_low:]
        u, tail = self.lift(f, v, tail_tol, g)
        return u, res_norm, tail


def reduce_tail(sys, space, splitting, low_cutoff: int, f, v, tol: float = 1e-12,
                max_iter: int = 200) -> TailResult:
    """Tail coordinates G(f, v) by fixed-point iteration (records the contraction factor)."""
    red = TailReduction(ActionFunctional(sys, space, splitting), low_cutoff)
    return red.solve(f, v, tol, max_iter)
