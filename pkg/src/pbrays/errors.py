"""Exception hierarchy shared across the package."""


class PBRaysError(Exception):
    """Base class for every error raised by pbrays."""


class EvaluationError(PBRaysError):
    """A Hamiltonian or defining function returned a non-finite value."""

    def __init__(self, message, t=None, z=None):
        super().__init__(message)
        self.t = t
        self.z = z


class IntegrationError(PBRaysError):
    """The integrator could not reach the final time."""

    def __init__(self, message, last_time):
        super().__init__(f"{message} (last reached t={last_time:.6g})")
        self.last_time = last_time


class CapabilityError(PBRaysError):
    """A required evaluator (e.g. a Hessian) is missing."""


class DegenerateNormalError(PBRaysError):
    pass


class DegreeUndefinedError(PBRaysError):
    """The map vanishes (numerically) on the boundary."""


class UnreliableResultError(PBRaysError):
    """A computed integer changed under resolution refinement."""


class ConstructionError(PBRaysError):
    pass


class AssemblyError(PBRaysError):
    pass


class ReductionNotApplicableError(PBRaysError):
    """The tail map is not a contraction at the requested cutoff."""

    def __init__(self, message, factor):
        super().__init__(f"{message} (observed factor {factor:.4g})")
        self.factor = factor


class ConfigError(PBRaysError):
    pass
