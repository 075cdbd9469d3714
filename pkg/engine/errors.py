"""
Exception hierarchy for the laboratory.
Every error raised on purpose by the engine derives from LabError so the CLI
can report it cleanly; input-validation errors also derive from ValueError.
"""


class LabError(Exception):
    """Base class for all laboratory errors"""


class NotPositiveDefinite(LabError):
    """A Cholesky pivot fell below the relative tolerance."""

    def __init__(self, pivot_index: int, pivot: float, threshold: float):
        self.pivot_index = pivot_index
        self.pivot = pivot
        self.threshold = threshold
        super().__init__(
            f"matrix is not positive definite: pivot {pivot_index} = {pivot:.3e} "
            f"<= {threshold:.3e}"
        )


class DimensionTooLarge(LabError, ValueError):
    """Matrix side exceeds the cap of a desk-scale diagnostic."""


class NotConverged(LabError):
    """Coordinate descent hit max_iters; the best iterate is attached."""

    def __init__(self, fit):
        self.fit = fit
        super().__init__(
            f"Lasso did not converge after {fit.iterations} sweeps "
            f"(kkt residual {fit.kkt_residual:.3e})"
        )


class Unverifiable(LabError):
    """Hypotheses of a deterministic bound do not hold on this instance."""


class OutOfRegime(LabError, ValueError):
    """Arguments fall outside the regime where a construction is defined."""


class PackingFailed(LabError):
    """Randomized greedy packing ran out of attempts before reaching M vectors."""

    def __init__(self, reached: int, target: int, attempts: int):
        self.reached = reached
        self.target = target
        self.attempts = attempts
        super().__init__(
            f"packing reached {reached}/{target} vectors after {attempts} candidates"
        )


class TooFewReplications(LabError, ValueError):
    """Aggregation needs at least two replications."""


class ConfigInvalid(LabError, ValueError):
    """A configuration field failed validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
