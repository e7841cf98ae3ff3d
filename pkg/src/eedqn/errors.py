"""Exception types shared across the package.

Invalid configuration (bad topology, unknown environment, malformed CLI
input) raises ConfigurationError before any work starts.  Misuse of an
otherwise valid object (stepping a finished episode, sampling an empty
buffer) raises UsageError.  A training run that produces non-finite
numbers aborts with RunAborted carrying the step index.
"""


class ConfigurationError(ValueError):
    """Rejected before any computation: bad sizes, names, or settings."""


class UsageError(RuntimeError):
    """An API call that is invalid in the object's current state."""


class RunAborted(RuntimeError):
    """Training produced NaN/inf loss or parameters and stopped."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step
