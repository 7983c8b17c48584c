"""Exception hierarchy for the solver.

Every error carries a stable ``code`` so the CLI and callers can branch on it
without matching message text.
"""

from typing import Optional


class UOTError(Exception):
    """Base class for all solver errors."""

    code = "UOT_ERROR"

    def __init__(self, message: str, details: Optional[dict] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "details": self.details}


class ConfigurationError(UOTError):
    """Invalid configuration file, CLI value or problem definition."""

    code = "INVALID_CONFIG"


class UnknownPresetError(UOTError):
    """Requested preset id is not registered."""

    code = "UNKNOWN_PRESET"


class DimensionMismatchError(UOTError):
    """Array or network shapes do not agree."""

    code = "DIMENSION_MISMATCH"


class FrameError(UOTError):
    """Normal frame is not orthonormal."""

    code = "NON_ORTHONORMAL_FRAME"


class EmptyLevelSetError(UOTError):
    """No point of the sampled box lies on the level set."""

    code = "EMPTY_LEVEL_SET"


class SingularCovarianceError(UOTError):
    """Gaussian covariance is singular or not positive definite."""

    code = "SINGULAR_COVARIANCE"


class ImageFormatError(UOTError):
    """Image file is unreadable or has the wrong size."""

    code = "INVALID_IMAGE"


class NonFiniteJetError(UOTError):
    """A field jet contains NaN or infinite entries."""

    code = "NON_FINITE_JET"


class TrainingDivergedError(UOTError):
    """Loss or gradient became non-finite.

    ``history`` holds the loss reports logged before the failure.
    """

    code = "TRAINING_DIVERGED"

    def __init__(
        self,
        message: str,
        iteration: Optional[int] = None,
        history: Optional[list] = None,
    ):
        super().__init__(message, {"iteration": iteration})
        self.iteration = iteration
        self.history = history if history is not None else []


class NonGridSnapshotError(UOTError):
    """Snapshot points do not form a full planar grid."""

    code = "NON_GRID_SNAPSHOT"


class UnboundedVelocityError(UOTError):
    """Velocity field is non-finite or exceeds the integrator's limit."""

    code = "UNBOUNDED_VELOCITY"


class InvalidParameterError(UOTError):
    """Argument outside the domain of a closed-form expression."""

    code = "INVALID_PARAMETER"
