"""Exception types raised by rkrecon."""


class RKReconError(Exception):
    """Base class for library errors."""


class ConstructionError(RKReconError):
    """The Gram matrix of a requested space is not usable (not positive definite, or inversion failed)."""


class UndefinedRatioError(RKReconError, ZeroDivisionError):
    """A relative quantity was requested for a zero reference signal."""


class InfeasibleError(RKReconError, ValueError):
    """A closed-form bound was evaluated outside the hypothesis that makes it finite."""


class DivergenceError(RKReconError):
    """The reconstruction iteration blew up."""

    def __init__(self, iterate: int, residual: float, threshold: float, trial: int | None = None):
        self.iterate = iterate
        self.residual = residual
        self.threshold = threshold
        self.trial = trial
        where = f"iterate {iterate}" if trial is None else f"trial {trial}, iterate {iterate}"
        super().__init__(f"divergence at {where}: residual {residual:.3e} exceeds {threshold:.3e}")

    def with_trial(self, trial: int) -> "DivergenceError":
        return DivergenceError(self.iterate, self.residual, self.threshold, trial=trial)


class UnsupportedAlphaError(RKReconError, ValueError):
    """No tabulated concentration constant exists for the requested decay exponent."""
