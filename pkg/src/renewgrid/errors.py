"""Exception types shared across the package."""


class RenewGridError(Exception):
    """Base class for all package errors."""


class DataIntegrityError(RenewGridError, ValueError):
    """Input data is malformed, gappy or violates a physical invariant."""


class ConfigError(RenewGridError, ValueError):
    """A configuration value violates its documented constraints."""


class InvariantViolation(RenewGridError, AssertionError):
    """An internal invariant failed; indicates a bug rather than bad input."""


class UnreachableTarget(RenewGridError):
    """A reliability target cannot be met anywhere inside the search bracket."""

    def __init__(self, target, bracket_max, reached):
        self.target = target
        self.bracket_max = bracket_max
        self.reached = reached
        super().__init__(
            f"reliability target {target:.6g} not reached at overbuild "
            f"{bracket_max:.6g} (best {reached:.6g})"
        )
