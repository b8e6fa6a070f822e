"""Exception types shared across the package.

Validation failures, refused operations, and broken invariants get distinct
types so callers (and the CLI exit-code mapping) can tell them apart.
"""


class LippolyError(Exception):
    """Base class for all package errors."""


class UsageError(LippolyError):
    """Malformed arguments: bad indices, out-of-range parameters, bad flags."""


class DistributionError(LippolyError):
    """A mixed-strategy row is not a probability distribution."""


class BinaryOnlyError(LippolyError):
    """An operation defined only for two-action games was called with m != 2."""


class BudgetExceeded(LippolyError):
    """A size-guarded operation was refused; the message carries the estimate."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class PreconditionViolation(LippolyError):
    """A pipeline input misses its required regret level by more than 2x.

    Carries the offending player and the measured/required values.
    """

    def __init__(self, player, measured, required):
        super().__init__(
            f"player {player}: input regret {measured:.6g} exceeds twice the "
            f"required level {required:.6g}"
        )
        self.player = player
        self.measured = measured
        self.required = required


class BoundBreach(LippolyError):
    """A traced bound assertion failed; structured report of what broke."""

    def __init__(self, bound_name, observed, allowed, context=""):
        msg = f"bound breach [{bound_name}]: observed {observed:.9g} > allowed {allowed:.9g}"
        if context:
            msg += f" ({context})"
        super().__init__(msg)
        self.bound_name = bound_name
        self.observed = observed
        self.allowed = allowed
        self.context = context


class InternalError(LippolyError):
    """Arithmetic produced a value that should be impossible (e.g. regret
    below the -1e-12 floor); indicates a bug, not a user error."""
