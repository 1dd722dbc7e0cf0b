"""Exception types shared across the package.

Two families: bad inputs/configuration (caller can fix the request) and
numerical failures (the computation itself cannot proceed). The service
layer maps the first family to HTTP 422 and the second to HTTP 409.
"""


class MilacSimError(Exception):
    """Base class for all errors raised by milac_sim."""


class DimensionMismatch(MilacSimError):
    """Array shapes are inconsistent with the operation's contract."""


class NotSymmetric(MilacSimError):
    """A matrix required to be (complex or real) symmetric is not."""


class BracketInvalid(MilacSimError):
    """Bisection bracket does not satisfy f(lo) >= 0 >= f(hi)."""


class NegativeSinr(MilacSimError):
    """SINR values must be nonnegative."""


class ZeroColumn(MilacSimError):
    """A channel column is identically zero."""


class MalformedFile(MilacSimError):
    """File content does not follow the expected format."""


class InvalidConfig(MilacSimError):
    """Experiment or optimizer configuration is inconsistent."""


class InfeasibleStart(MilacSimError):
    """Scattering-matrix iterate handed to the inner loop is infeasible."""


class InfeasibleInit(MilacSimError):
    """Initialization handed to the outer BCD loop is infeasible or degenerate."""


class NumericalFailure(MilacSimError):
    """Base class for failures of the numerics rather than of the inputs."""


class SingularSystem(NumericalFailure):
    """A linear system that should be regular is numerically singular."""


class NoFiniteRealization(NumericalFailure):
    """Scattering matrix has no finite susceptance realization (eigenvalue -1)."""


class RankDeficient(NumericalFailure):
    """Matrix rank is too low for the requested operation."""


class NonmonotoneObjective(NumericalFailure):
    """Traced objective decreased where ascent is guaranteed; indicates a bug."""
