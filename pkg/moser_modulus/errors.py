"""Exception hierarchy shared by every moser-modulus module."""

from typing import Optional


class MoserModulusError(Exception):
    """Base exception for all library errors."""


class ValidationError(MoserModulusError):
    """Raised when parameters or configuration values are out of range."""

    def __init__(self, key: str, reason: str) -> None:
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason


class ConstructionError(MoserModulusError):
    """Raised when the parallelogram construction cannot proceed."""


class DepthExhaustedError(ConstructionError):
    """Raised when a child generation is requested beyond the sequence depth."""


class StreamExhaustedError(ConstructionError):
    """Raised when a scripted pile stream runs out of choices."""


class PreconditionError(MoserModulusError):
    """Raised when an operation's documented precondition does not hold."""


class CoveragePreconditionError(PreconditionError):
    """Raised when a curve does not meet the cover in the required length."""

    def __init__(self, curve_index: int, covered: float, required: float) -> None:
        super().__init__(
            f"curve {curve_index} has length {covered:.6g} inside the cover, "
            f"needs at least {required:.6g}"
        )
        self.curve_index = curve_index
        self.covered = covered
        self.required = required


class ModulusConvergenceError(MoserModulusError):
    """Raised when the modulus solver hits its iteration cap."""

    def __init__(self, value: float, dual_bound: float, iterations: int,
                 result: Optional[object] = None) -> None:
        super().__init__(
            f"no convergence after {iterations} iterations "
            f"(value {value:.6g}, dual bound {dual_bound:.6g})"
        )
        self.value = value
        self.dual_bound = dual_bound
        self.iterations = iterations
        self.result = result


class ArtifactIOError(MoserModulusError):
    """Raised when reading or writing run artifacts fails."""
