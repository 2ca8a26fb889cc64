"""Exception types raised across the package."""


class ValidationError(ValueError):
    """Invalid argument, shape mismatch or broken invariant."""


class FormatError(ValueError):
    """A data file does not follow its expected layout."""


class DegenerateSystemError(ArithmeticError):
    """A linear system produced no usable solution."""


class SingularSystemError(ArithmeticError):
    pass


class DivergenceError(ArithmeticError):
    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")


class ConfigError(ValueError):
    def __init__(self, message, keys=()):
        self.keys = tuple(keys)
        super().__init__(message)


class StageError(RuntimeError):
    """Failure inside one stage of an experiment trial."""

    def __init__(self, stage, trial, cause):
        self.stage = stage
        self.trial = trial
        super().__init__(f"trial {trial}, stage {stage!r}: {cause}")
