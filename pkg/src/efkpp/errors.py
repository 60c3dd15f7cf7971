"""Exception hierarchy shared by all modules."""


class EFKPPError(Exception):
    """Base class for all package errors."""


class ParameterError(EFKPPError, ValueError):
    """A parameter lies outside its admissible range."""


class DoubleRootMerged(ParameterError):
    """|delta| >= 1/sqrt(12 f'(0)): the slow and fast double roots coalesce."""


class InconsistentParameters(ParameterError):
    pass


class GridError(ParameterError):
    """The grid does not contain the cutoff transition zones."""


class ResolutionError(ParameterError):
    """Grid too coarse for the fourth-order stencils."""


class ClusterOverlap(EFKPPError):
    """Slow and fast spatial roots cannot be separated."""


class ExpansionBoundViolated(EFKPPError):
    """The slow root nu_2 strays from -gamma beyond the configured bound."""


class InvalidSpectralPoint(ParameterError):
    """gamma**2 lies inside the essential spectrum."""


class SolverFailure(EFKPPError):
    pass


class NoConvergence(SolverFailure):
    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class JacobianSingular(SolverFailure):
    pass


class PreconditionerSingular(SolverFailure):
    pass


class DegenerateCokernel(SolverFailure):
    pass


class LSFailure(SolverFailure):
    """The bordered Lyapunov-Schmidt solve is singular."""


class NumericalBlowup(SolverFailure):
    pass


class DomainExhausted(SolverFailure):
    """The tracked front left the computational domain."""
