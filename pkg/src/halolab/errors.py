"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, exceeded budgets with 3, and anything else (an internal invariant
failing) with 4.
"""


class HaloLabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(HaloLabError):
    """A parameter or configuration value is invalid.

    ``field`` names the offending parameter so callers can report it.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"invalid value for '{field}': {message}")


class GeometryMismatchError(HaloLabError):
    """Two operands live on different grids."""


class BudgetExceededError(HaloLabError):
    """An enumeration or search would exceed its configured budget.

    ``required`` is the exact budget that would have been needed.
    """

    def __init__(self, required: int, budget: int, what: str = "enumeration"):
        self.required = required
        self.budget = budget
        self.what = what
        super().__init__(
            f"{what} needs a budget of {required}, but only {budget} is allowed"
        )


class RasterizeError(HaloLabError):
    """A shape cannot be realized exactly on the requested grid."""


class EmptyWitnessFamilyError(HaloLabError):
    """No basis element passes the witness threshold; the augmentation
    construction cannot start."""


class InternalError(HaloLabError):
    """An invariant that should hold by construction was violated."""
