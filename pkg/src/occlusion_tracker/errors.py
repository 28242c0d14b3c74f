"""
Exception hierarchy and process exit codes for the occlusion-aware tracker
"""

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_LOST = 3
EXIT_INTERRUPTED = 130


class OcclusionTrackerError(Exception):
    """Base class for every error raised by this package"""


class InvalidArgumentError(OcclusionTrackerError, ValueError):
    """An operation was called with arguments outside its domain"""


class SpecValidationError(OcclusionTrackerError, ValueError):
    """A scenario spec or configuration document failed validation"""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class TrackingFailureError(OcclusionTrackerError, RuntimeError):
    """The appearance model could not produce a usable response"""


class TargetLostError(TrackingFailureError):
    """The target stayed hidden beyond the prediction horizon"""
