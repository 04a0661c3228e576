"""Exception hierarchy for the solver.

Every failure mode that callers are expected to handle gets its own class;
generic programming errors stay as the builtin exceptions.
"""


class NozzleEPError(Exception):
    """Base class for all solver errors."""


class ConfigError(NozzleEPError):
    """Invalid configuration value or malformed config file."""


class SizeMismatchError(NozzleEPError):
    """Sampled arrays that must share a grid do not."""


class UnsupportedOrderError(NozzleEPError):
    """Requested Sobolev order outside {0, 1, 2}."""


class AliasingError(NozzleEPError):
    """Spectral truncation too high for the number of angular nodes."""


class SonicSingularityError(NozzleEPError):
    """Background ODE right-hand side evaluated too close to M^2 = 1."""


class IntegrationAbortError(NozzleEPError):
    """Background march crossed the sonic line; carries the crossing radius."""

    def __init__(self, message, radius=None):
        super().__init__(message)
        self.radius = radius


class DivergenceError(NozzleEPError):
    """Background march blew up."""


class InvalidBackgroundError(NozzleEPError):
    """Background profile violates a structural requirement (e.g. c^2 <= 0)."""


class VacuumError(NozzleEPError):
    """Density law evaluated with a nonpositive argument."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class StagnationError(NozzleEPError):
    """Total radial velocity vanished or went negative."""


class DomainTooDeepError(NozzleEPError):
    """Requested nozzle depth exceeds the multiplier admissibility bound."""

    def __init__(self, message, rbar=None):
        super().__init__(message)
        self.rbar = rbar


class SlackTooSmallError(NozzleEPError):
    """Energy slack lambda0 below the cot-branch threshold z*."""


class SolverFailureError(NozzleEPError):
    """Discrete linear system could not be solved; carries a condition estimate."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class MonotonicityError(NozzleEPError):
    """Inlet stream-function profile is not strictly increasing."""


class StreamlineEscapeError(NozzleEPError):
    """Stream-function value left the inlet range by more than round-off."""


class NotIntegrableError(NozzleEPError):
    """Velocity field has too much discrete curl to admit a potential."""


class NonConvergenceError(NozzleEPError):
    """Fixed-point loop exhausted its iteration budget; carries the history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history if history is not None else []


class RegimeFailureError(NozzleEPError):
    """Flow left the uniformly supersonic regime (kappa <= 0)."""


class UndefinedRatioError(NozzleEPError):
    """Energy-estimate ratio requested for identically zero data."""
