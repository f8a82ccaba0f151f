import logging
import sys
from enum import Enum
from typing import Optional, Dict, Any, TextIO


class ErrorType(Enum):
    VALIDATION_ERROR = "validation_error"
    POOL_ERROR = "pool_error"
    ARTIFACT_ERROR = "artifact_error"
    FORMAT_ERROR = "format_error"
    IO_ERROR = "io_error"
    CONFIG_ERROR = "config_error"
    METRIC_ERROR = "metric_error"
    SIMULATION_ERROR = "simulation_error"


class FrameSelectionError(Exception):
    error_type = ErrorType.VALIDATION_ERROR

    def __init__(self, message: str, details: Optional[Dict] = None,
                 error_type: Optional[ErrorType] = None):
        self.error_type = error_type or type(self).error_type
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


# Pool state
class SelectionNotInPool(FrameSelectionError):
    error_type = ErrorType.POOL_ERROR


class DuplicateSelection(FrameSelectionError):
    error_type = ErrorType.POOL_ERROR


class PartitionViolation(FrameSelectionError):
    error_type = ErrorType.POOL_ERROR


class UnknownVideo(FrameSelectionError):
    error_type = ErrorType.POOL_ERROR


class EmptyInput(FrameSelectionError):
    pass


# Tensors and metrics
class ShapeMismatch(FrameSelectionError):
    pass


class TooSmall(FrameSelectionError):
    pass


class NotNormalized(FrameSelectionError):
    error_type = ErrorType.METRIC_ERROR


class DimensionMismatch(FrameSelectionError):
    error_type = ErrorType.METRIC_ERROR


class ZeroVector(FrameSelectionError):
    error_type = ErrorType.METRIC_ERROR


class EmptyReferenceSet(FrameSelectionError):
    error_type = ErrorType.METRIC_ERROR


class QueryNotInCandidates(FrameSelectionError):
    error_type = ErrorType.METRIC_ERROR


class LengthMismatch(FrameSelectionError):
    error_type = ErrorType.METRIC_ERROR


class BudgetExceedsPool(FrameSelectionError):
    pass


class TooManyBatches(FrameSelectionError):
    pass


# Artifacts
class MissingPixels(FrameSelectionError):
    error_type = ErrorType.ARTIFACT_ERROR


class MissingFeature(FrameSelectionError):
    error_type = ErrorType.ARTIFACT_ERROR


class MissingProbMap(FrameSelectionError):
    error_type = ErrorType.ARTIFACT_ERROR


# Configuration and simulation
class InvalidConfig(FrameSelectionError):
    error_type = ErrorType.CONFIG_ERROR


class NoLabeledData(FrameSelectionError):
    error_type = ErrorType.SIMULATION_ERROR


class NoPresentClasses(FrameSelectionError):
    error_type = ErrorType.SIMULATION_ERROR


class InsufficientVideos(FrameSelectionError):
    error_type = ErrorType.SIMULATION_ERROR


# On-disk formats
class TensorFormatError(FrameSelectionError):
    """Base for everything read_tensor can raise on malformed bytes."""
    error_type = ErrorType.FORMAT_ERROR


class BadMagic(TensorFormatError):
    pass


class VersionUnsupported(TensorFormatError):
    pass


class UnsupportedDtype(TensorFormatError):
    pass


class TensorLengthMismatch(TensorFormatError, LengthMismatch):
    error_type = ErrorType.FORMAT_ERROR


class DuplicateFrameId(FrameSelectionError):
    error_type = ErrorType.FORMAT_ERROR


class MissingColumn(FrameSelectionError):
    error_type = ErrorType.FORMAT_ERROR


class BadSplitTag(FrameSelectionError):
    error_type = ErrorType.FORMAT_ERROR


class ParseError(FrameSelectionError):
    error_type = ErrorType.FORMAT_ERROR


class InconsistentClassCount(FrameSelectionError):
    error_type = ErrorType.FORMAT_ERROR


# I/O
class IoFailure(FrameSelectionError):
    error_type = ErrorType.IO_ERROR


class LockHeld(FrameSelectionError):
    error_type = ErrorType.IO_ERROR


EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2


class CliErrorHandler:
    def __init__(self, stream: Optional[TextIO] = None):
        self.stream = stream
        self.logger = logging.getLogger(__name__)

    def handle_error(self, command: str, error: Exception) -> int:
        """Log an error raised by a subcommand and return its exit code"""
        if isinstance(error, FrameSelectionError):
            error_info = {
                "type": error.error_type.value,
                "message": error.message,
                "details": error.details
            }
            exit_code = EXIT_IO if error.error_type is ErrorType.IO_ERROR else EXIT_VALIDATION
        elif isinstance(error, OSError):
            error_info = {
                "type": ErrorType.IO_ERROR.value,
                "message": str(error),
                "details": {"exception_type": type(error).__name__}
            }
            exit_code = EXIT_IO
        else:
            raise error

        self.logger.error(f"{command} failed: {error_info}")
        stream = self.stream or sys.stderr
        error_type = ErrorType(error_info["type"])
        print(f"error: {self.describe(error_info)}", file=stream)
        print(f"  {self.get_user_friendly_message(error_type)}", file=stream)
        return exit_code

    def describe(self, error_info: Dict[str, Any]) -> str:
        """One-line message naming the offending flag, frame, field or line"""
        details = error_info["details"]
        if not details:
            return error_info["message"]
        context = ", ".join(f"{key}={value}" for key, value in sorted(details.items()))
        return f"{error_info['message']} ({context})"

    def get_user_friendly_message(self, error_type: ErrorType) -> str:
        messages = {
            ErrorType.VALIDATION_ERROR: "Invalid arguments or inputs.",
            ErrorType.POOL_ERROR: "The pool state does not allow this selection.",
            ErrorType.ARTIFACT_ERROR: "A frame is missing a required tensor.",
            ErrorType.FORMAT_ERROR: "An input file is malformed.",
            ErrorType.IO_ERROR: "A file could not be read or written.",
            ErrorType.CONFIG_ERROR: "The configuration is invalid.",
            ErrorType.METRIC_ERROR: "A score could not be computed.",
            ErrorType.SIMULATION_ERROR: "The simulation could not run.",
        }
        return messages.get(error_type, "An unexpected error occurred.")
