"""Exception hierarchy shared by every module.

Everything numerical raises a subclass of :class:`PhaseLabError`; the CLI maps
those to exit code 3. Malformed configuration is a :class:`ConfigError`
(exit code 2).
"""


class PhaseLabError(Exception):
    """Base class for numerical precondition failures."""


class InvalidInput(PhaseLabError, ValueError):
    """An input violates a structural invariant (norm, hermiticity, dims...)."""


class DimensionMismatch(InvalidInput):
    pass


class NotNormalized(InvalidInput):
    pass


class NonHermitian(InvalidInput):
    pass


class OrthogonalStates(PhaseLabError):
    """Overlap too small for its argument to be a meaningful phase."""


class NotCyclic(PhaseLabError):
    """Final state does not return to the initial ray."""


class GridTooCoarse(PhaseLabError):
    """Consecutive states overlap too weakly to define discrete phases."""


class ConfigError(Exception):
    """Scenario configuration failed schema validation."""
