"""Batched Dormand-Prince 5(4) integrator with dense output.

A batch of independent initial conditions shares one step-size sequence; the
step is accepted only when the max-norm error estimate of every member is
below tolerance, so each trajectory individually meets the local error
requirement.  Coefficients are the standard DOPRI5 tableau with the
4th-order continuous extension.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import IntegrationError

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


@dataclass
class Step:
    t: float
    h: float
    y: np.ndarray
    Q: np.ndarray  # (..., d, 4) interpolation coefficients

    def __call__(self, t):
        theta = (t - self.t) / self.h
        powers = theta ** np.arange(1, 5)
        return self.y + self.h * (self.Q @ powers)

    def derivative(self, t):
        theta = (t - self.t) / self.h
        dpow = np.arange(1, 5) * theta ** np.arange(0, 4)
        return self.Q @ dpow


@dataclass
class Solution:
    t0: float
    t1: float
    y0: np.ndarray
    y1: np.ndarray
    n_steps: int
    n_rejected: int
    n_evals: int
    max_defect: float
    t_eval: Optional[np.ndarray] = None
    y_eval: Optional[np.ndarray] = None
    steps: List[Step] = field(default_factory=list)

    def _locate(self, t):
        if not self.steps:
            raise ValueError("solution was computed without dense output")
        forward = self.t1 >= self.t0
        for s in self.steps:
            lo, hi = (s.t, s.t + s.h) if forward else (s.t + s.h, s.t)
            if lo - 1e-14 <= t <= hi + 1e-14:
                return s
        raise ValueError(f"t={t} outside [{self.t0}, {self.t1}]")

    def __call__(self, t):
        return self._locate(float(t))(float(t))

    def derivative(self, t):
        return self._locate(float(t)).derivative(float(t))


def _initial_step(rhs, t0, y0, f0, direction, tol, span):
    scale = tol + tol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + direction * h0 * f0
    f1 = rhs(t0 + direction * h0, y1)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def solve(rhs: Callable, t0: float, t1: float, y0, tol: float = 1e-10,
          t_eval=None, dense: bool = False, max_steps: int = 200000) -> Solution:
    """Integrate ``y' = rhs(t, y)`` from t0 to t1.

    ``y0`` may carry any leading batch shape; ``rhs`` must broadcast over it.
    ``tol`` is used as both absolute and relative tolerance.  ``t_eval``
    values (monotone in the integration direction) are filled from the
    dense output of the step containing them.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    y = np.array(y0, dtype=float)
    span = abs(t1 - t0)
    direction = 1.0 if t1 >= t0 else -1.0
    t_ev = None if t_eval is None else np.asarray(t_eval, dtype=float)
    y_ev = None if t_ev is None else np.empty((len(t_ev),) + y.shape)
    ev_idx = 0
    if t_ev is not None:
        while ev_idx < len(t_ev) and direction * (t_ev[ev_idx] - t0) <= 0:
            y_ev[ev_idx] = y
            ev_idx += 1
    if span == 0.0:
        if t_ev is not None:
            y_ev[ev_idx:] = y
        return Solution(t0, t1, y.copy(), y, 0, 0, 0, 0.0, t_ev, y_ev)

    t = t0
    f = np.asarray(rhs(t, y), dtype=float)
    if not np.all(np.isfinite(f)):
        raise IntegrationError("non-finite vector field", t)
    n_evals = 1
    h = _initial_step(rhs, t, y, f, direction, tol, span)
    n_evals += 1
    n_steps = n_rej = 0
    max_defect = 0.0
    steps: List[Step] = []
    h_min = 1e-13 * max(span, 1.0)
    K = np.empty((7,) + y.shape)

    while direction * (t1 - t) > 0:
        if n_steps + n_rej > max_steps:
            raise IntegrationError("step budget exhausted", t)
        h = min(h, abs(t1 - t))
        if h < h_min:
            raise IntegrationError("step size collapsed", t)
        hs = direction * h
        K[0] = f
        for s in range(1, 6):
            dy = np.tensordot(_A[s], K[:s], axes=(0, 0)) * hs
            K[s] = rhs(t + _C[s] * hs, y + dy)
        y_new = y + hs * np.tensordot(_B, K[:6], axes=(0, 0))
        t_new = t + hs if abs(t1 - (t + hs)) > 1e-15 * span else t1
        f_new = np.asarray(rhs(t_new, y_new), dtype=float)
        K[6] = f_new
        n_evals += 6
        err = hs * np.tensordot(_E, K, axes=(0, 0))
        scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        finite = np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new))
        err_norm = float(np.max(np.abs(err) / scale)) if finite else np.inf

        if err_norm <= 1.0:
            max_defect = max(max_defect, float(np.max(np.abs(err))) / h)
            if dense or t_ev is not None:
                Q = np.moveaxis(np.tensordot(_P.T, K, axes=(1, 0)), 0, -1)
                step = Step(t, hs, y.copy(), Q)
                if dense:
                    steps.append(step)
                if t_ev is not None:
                    while ev_idx < len(t_ev) and direction * (t_ev[ev_idx] - t_new) <= 0:
                        y_ev[ev_idx] = step(t_ev[ev_idx])
                        ev_idx += 1
            t, y, f = t_new, y_new, f_new
            n_steps += 1
            factor = MAX_FACTOR if err_norm == 0 else min(MAX_FACTOR, SAFETY * err_norm ** -0.2)
            h = h * factor
        else:
            n_rej += 1
            if not finite:
                h *= MIN_FACTOR
            else:
                h *= max(MIN_FACTOR, SAFETY * err_norm ** -0.2)

    if t_ev is not None and ev_idx < len(t_ev):
        y_ev[ev_idx:] = y
    return Solution(t0, t1, np.array(y0, dtype=float), y, n_steps, n_rej, n_evals,
                    max_defect, t_ev, y_ev, steps)
