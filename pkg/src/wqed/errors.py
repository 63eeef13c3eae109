"""Exception types shared across the package."""


class WqedError(Exception):
    """Base class for all package errors."""


class TruncationTooSmall(WqedError):
    """A sideband/series truncation discards too much weight."""


class NoConvergence(WqedError):
    """An iterative procedure exhausted its budget without converging."""


class StepTooLarge(WqedError):
    """Integrator step size violates a stability/accuracy guard."""


class EmitterNotRelaxed(WqedError):
    """Emitter still carries excitation at the requested final time."""


class NonPositiveDissipator(WqedError):
    """Collective decay matrix has a significantly negative eigenvalue."""


class NotConverged(WqedError):
    """Steady-state quantity still drifts at the end of the horizon."""


class ZeroMatrix(WqedError):
    """An amplitude matrix expected to be nonzero is identically zero."""


class SingularMatrix(WqedError):
    """A resolvent was requested too close to a pole."""


class ClosedFormInvalidPhase(WqedError):
    """Closed-form external-line expression invalid at this phase."""


class QuadratureNotConverged(WqedError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class BondOverflow(WqedError):
    """MPS truncation discarded too much weight in a single step."""


class TooCloseToEdge(WqedError):
    """Wavepacket overlaps the lattice boundary."""


class NormDrift(WqedError):
    """State norm drifted beyond the allowed tolerance."""


class ConfigInvalid(WqedError):
    """Scenario configuration failed validation."""
