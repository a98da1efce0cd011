"""Record type for candidate periodic solutions."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .hamiltonian import PhasePoint, TWO_PI


@dataclass
class OrbitRecord:
    """A candidate T-periodic solution: z(T) = z(0) + (2 pi k, 0)."""

    z0: PhasePoint
    residual: float
    k: Tuple[int, ...]
    converged: bool = True
    iterations: int = 0
    multipliers: Optional[np.ndarray] = None
    nondegenerate: Optional[bool] = None
    margin: Optional[float] = None
    action: Optional[float] = None
    loop: Optional[object] = None
    class_id: int = -1
    condition: Optional[float] = None
    singular: bool = False
    source: str = ""
    message: str = ""

    @property
    def z(self) -> np.ndarray:
        return self.z0.z

    def reduced(self) -> "OrbitRecord":
        """Copy with x(0) moved into the fundamental cube [0, 2 pi)^N."""
        x = np.mod(self.z0.x, TWO_PI)
        x[np.isclose(x, TWO_PI, rtol=0, atol=1e-12)] = 0.0
        return replace(self, z0=PhasePoint(x, self.z0.y.copy()))

    def as_dict(self) -> dict:
        d = {
            "class_id": self.class_id,
            "x0": [float(v) for v in self.z0.x],
            "y0": [float(v) for v in self.z0.y],
            "k": [int(v) for v in self.k],
            "residual": float(self.residual),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "nondegenerate": self.nondegenerate,
            "margin": None if self.margin is None else float(self.margin),
            "action": None if self.action is None else float(self.action),
            "source": self.source,
        }
        if self.multipliers is not None:
            d["multipliers"] = [[float(m.real), float(m.imag)] for m in self.multipliers]
        if self.message:
            d["message"] = self.message
        return d
