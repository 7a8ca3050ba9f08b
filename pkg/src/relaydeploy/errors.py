"""Exceptions shared across the solvers, the simulator and the CLI."""


class ConfigError(ValueError):
    """A configuration value is missing, malformed or out of range."""


class ConvergenceError(RuntimeError):
    """A numeric procedure did not converge within its budget.

    Carries the last two estimates so callers can report how far apart
    the iteration still was.
    """

    def __init__(self, message, last_estimates=None):
        super().__init__(message)
        self.last_estimates = last_estimates


class InfeasibleConstraintsError(RuntimeError):
    """The requested (outage/step, relays/step) target pair cannot be met."""


class StateSpaceTooLargeError(RuntimeError):
    """Brute-force enumeration refused: the state space exceeds the guard."""
