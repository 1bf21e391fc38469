"""Exception types shared across the library."""


class CompletenessLabError(Exception):
    """Base class for all library errors."""


class DomainError(CompletenessLabError, ValueError):
    """Argument outside the supported domain of a special function or operation."""


class NonConvergenceError(CompletenessLabError):
    """An iterative evaluation failed to reach its tolerance.

    Carries the achieved accuracy when known.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class SingularityError(CompletenessLabError, ValueError):
    """Evaluation requested at a point where the potential diverges."""


class NonIntegrableError(CompletenessLabError):
    """Quadrature of the potential failed to converge under refinement."""


class ResolutionError(CompletenessLabError, ValueError):
    """Radial grid too coarse for the requested momentum."""


class MissedRootError(CompletenessLabError):
    """Eigenmomentum scan produced non-consecutive node counts."""


class ZeroNormError(CompletenessLabError):
    """A state to be normalized has (numerically) vanishing norm.

    For box eigenstates this is the detection mechanism for square-integrable
    states embedded in the continuum, which the shipped potential families are
    asserted not to have; any detection aborts the experiment.
    """


class MatchingError(CompletenessLabError):
    """Asymptotic matching system numerically degenerate."""


class TurningPointError(CompletenessLabError, ValueError):
    """Semiclassical form requested below the turning-point guard momentum."""


class InsufficientLevelsError(CompletenessLabError):
    """Fewer bound states available than a scaling study requires."""


class ConfigError(CompletenessLabError, ValueError):
    """Experiment configuration invalid; message names the offending key path."""
