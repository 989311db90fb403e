"""Exception hierarchy shared by all modules."""


class CompassBellError(Exception):
    """Base class for runtime failures (CLI exit code 2)."""


class NonFiniteState(CompassBellError):
    """Integration produced a NaN or infinite state; the step is too large."""

    def __init__(self, time, message=None):
        self.time = time
        super().__init__(message or f"non-finite state encountered at t={time!r}")


class DomainError(CompassBellError, ValueError):
    """An argument lies outside the domain of the operation."""


class NoFlipFound(CompassBellError):
    """No offset within the perturbation budget produces the requested outcome."""


class EmptyBin(CompassBellError):
    """A setting combination received no pairs in a random-switching run."""

    def __init__(self, combos):
        self.combos = tuple(combos)
        super().__init__(f"no pairs drawn for setting combination(s): {', '.join(self.combos)}")


class NoViolationFound(CompassBellError):
    """No measuring time in the searched range gives the requested |S|."""


class OnSeparatrix(CompassBellError):
    """The initial value lies exactly on the separatrix; no attractor is selected."""


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""
