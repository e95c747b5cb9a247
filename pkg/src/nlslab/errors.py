"""Exception types shared across the package.

Refusals are deliberate: an operation that cannot meet its accuracy
contract raises instead of silently degrading.
"""


class RefusalError(RuntimeError):
    """An operation refused to run because a numerical budget was exceeded."""


class ModeBudgetError(RefusalError):
    """Basis construction would exceed the configured hard cap on mode count."""

    def __init__(self, requested: int, cap: int):
        self.requested = requested
        self.cap = cap
        super().__init__(
            f"basis would hold {requested} modes, exceeding the hard cap of {cap}"
        )


class GridBudgetError(RefusalError):
    """A quadrature grid cannot reach the exactness the operation requires."""

    def __init__(self, message: str, required=None, available=None):
        self.required = required
        self.available = available
        super().__init__(message)


class TimeResolutionError(RefusalError):
    """Time quadrature too coarse to resolve the fastest phase present."""

    def __init__(self, message: str, required_nodes=None):
        self.required_nodes = required_nodes
        super().__init__(message)


class UnsupportedExponentError(RefusalError):
    """Requested Lebesgue exponent is outside the exactly-integrable set."""


class InstabilityError(RuntimeError):
    """Time integration aborted after detecting runaway norm growth."""

    def __init__(self, message: str, step=None, time=None, norm_before=None, norm_after=None):
        self.step = step
        self.time = time
        self.norm_before = norm_before
        self.norm_after = norm_after
        super().__init__(message)


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""
