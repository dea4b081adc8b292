"""Exception hierarchy."""


class LayerSpectraError(Exception):
    """Base class for every error raised by the package."""


class QuadratureError(LayerSpectraError):
    def __init__(self, message, estimate, error):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


class IntegrationBlowup(LayerSpectraError):
    """The ODE state overflowed; ``last_valid`` is the last good node index."""

    def __init__(self, message, last_valid):
        super().__init__(message)
        self.last_valid = last_valid


class MeridianError(LayerSpectraError):
    """The generating curve degenerated (r <= 0 away from the pole)."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class AdmissibilityError(LayerSpectraError):
    """A layer violates the half-width / nonsingularity condition."""


class ConsistencyError(LayerSpectraError):
    """Two independent evaluation routes disagree beyond their error bounds."""


class NoBumpError(LayerSpectraError):
    """No interval of constant mean-curvature sign was found."""


class InconclusiveError(LayerSpectraError):
    """A numerical verdict cannot be issued at the requested confidence."""


class ConfigError(LayerSpectraError):
    """Run configuration failed schema validation."""


class EigensolverError(LayerSpectraError):
    """Shift-invert iteration failed even after shift retries."""
