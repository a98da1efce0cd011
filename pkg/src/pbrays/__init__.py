"""Numerical laboratory for the avoiding-rays form of the Poincare-Birkhoff theorem.

The subpackages cover Hamiltonian flows on T^N x R^N (:mod:`pbrays.flow`),
the geometry of embedded spheres, rays, degrees and basket functions
(:mod:`pbrays.geometry`), the truncated action functional
(:mod:`pbrays.varcrit`) and the orbit census (:mod:`pbrays.census`).
"""

__version__ = "0.1.0"

from .errors import (AssemblyError, CapabilityError, ConfigError, ConstructionError,
                     DegenerateNormalError, DegreeUndefinedError, EvaluationError, IntegrationError,
                     PBRaysError, ReductionNotApplicableError, UnreliableResultError)
from .hamiltonian import HamiltonianSystem, PhasePoint, builtin_system, check_admissible
from .orbit import OrbitRecord

__all__ = [
    "HamiltonianSystem", "PhasePoint", "OrbitRecord", "builtin_system", "check_admissible",
    "PBRaysError", "EvaluationError", "IntegrationError", "CapabilityError",
    "DegenerateNormalError", "DegreeUndefinedError", "UnreliableResultError",
    "ConstructionError", "AssemblyError", "ReductionNotApplicableError", "ConfigError",
    "__version__",
]
