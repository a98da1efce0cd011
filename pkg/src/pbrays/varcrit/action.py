"""The action functional on the truncated loop space and its derivatives.

    Phi(e, v) = 1/2 <L e, e> + psi(e, v),   psi = int_0^1 H1(t, v + x~(t), y(t)) dt

with H1 the Hamiltonian rescaled to period 1 and the integral taken by the
trapezoidal rule on the space's nodes.  Critical points solve z' = J grad H1.

The quadratic term uses the form matrix of the splitting, i.e. the matrix
of int <J z', z> dt in the coefficients; for the default H^{1/2} weight it
coincides with the renormalized L = pi_+ - pi_-.

Every function accepts flat unknowns ``u = (e, v)`` with arbitrary leading
batch axes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EvaluationError
from ..hamiltonian import HamiltonianSystem
from .loopspace import LoopPoint, SpectralSplitting, TruncatedLoopSpace


@dataclass(frozen=True, eq=False)
class ActionFunctional:
    sys: HamiltonianSystem
    space: TruncatedLoopSpace
    splitting: SpectralSplitting
    fd_step: float = 1e-6
    h1: HamiltonianSystem = field(init=False, repr=False)

    def __post_init__(self):
        if self.sys.n_dof != self.space.n_dof:
            raise ValueError("system and loop space disagree on N")
        object.__setattr__(self, "h1", self.sys.rescaled())

    @property
    def dim(self) -> int:
        return self.space.dim

    def split(self, u):
        u = np.asarray(u, dtype=float)
        return u[..., : self.space.dim_e], u[..., self.space.dim_e:]

    def loop_values(self, u):
        return np.einsum("mid,...d->...mi", self.space.full_eval_matrix, np.asarray(u, dtype=float))

    def _check(self, arr, what):
        if not np.all(np.isfinite(arr)):
            raise EvaluationError(f"non-finite {what} along the loop")
        return arr

    def value(self, u):
        e, _ = self.split(u)
        z = self.loop_values(u)
        Hv = self._check(self.h1.eval(self.space.nodes, z), "H")
        quad = 0.5 * np.einsum("...d,de,...e->...", e, self.splitting.form, e)
        return quad + Hv.mean(axis=-1)

    def psi(self, u):
        z = self.loop_values(u)
        return self._check(self.h1.eval(self.space.nodes, z), "H").mean(axis=-1)

    def gradient(self, u):
        """Full gradient (grad_e, grad_v) stacked into one vector."""
        e, _ = self.split(u)
        z = self.loop_values(u)
        g = self._check(self.h1.grad(self.space.nodes, z), "grad H")
        P = self.space.full_eval_matrix
        out = np.einsum("mid,...mi->...d", P, g) / self.space.n_nodes
        out[..., : self.space.dim_e] += e @ self.splitting.form
        return out

    def grad_psi(self, u):
        z = self.loop_values(u)
        g = self._check(self.h1.grad(self.space.nodes, z), "grad H")
        return np.einsum("mid,...mi->...d", self.space.full_eval_matrix, g) / self.space.n_nodes

    def hessian(self, u):
        z = self.loop_values(u)
        Hz = self._check(self.h1.hessian(self.space.nodes, z, self.fd_step), "Hess H")
        P = self.space.full_eval_matrix
        HP = np.einsum("...mij,mje->...mie", Hz, P)
        out = np.tensordot(HP, P, axes=([-3, -2], [0, 1])) / self.space.n_nodes
        out = np.swapaxes(out, -1, -2)
        D = self.space.dim_e
        out[..., :D, :D] += self.splitting.form
        return out


def _as_u(p: LoopPoint):
    return p.as_vector()


def action(sys, space, splitting, p: LoopPoint) -> float:
    return float(ActionFunctional(sys, space, splitting).value(_as_u(p)))


def action_gradient(sys, space, splitting, p: LoopPoint):
    g = ActionFunctional(sys, space, splitting).gradient(_as_u(p))
    return g[: space.dim_e], g[space.dim_e:]


def action_hessian(sys, space, splitting, p: LoopPoint) -> np.ndarray:
    return ActionFunctional(sys, space, splitting).hessian(_as_u(p))


def loop_from_orbit(sys: HamiltonianSystem, space: TruncatedLoopSpace, z0, tol: float = 1e-12) -> LoopPoint:
    """Project a contractible T-periodic orbit onto the loop space."""
    from ..flow import flow_map

    n = space.n_dof
    ts = space.nodes * sys.period
    _, Z = flow_map(sys, np.asarray(z0, dtype=float), tol, t_eval=ts)
    xbar = Z[:, :n].mean(axis=0)
    vals = Z.copy()
    vals[:, :n] -= xbar
    return LoopPoint(xbar, space.analyze(vals))
