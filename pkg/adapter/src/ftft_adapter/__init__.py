"""Recorder side of the ftft-dyn-1 contract: accumulate, validate, export."""

from .recorder import SCHEMA_VERSION, DynamicsRecorder, RecorderError
from .validate import ValidationError, validate_stream

__version__ = "0.1.0"

__all__ = [
    "SCHEMA_VERSION",
    "DynamicsRecorder",
    "RecorderError",
    "ValidationError",
    "validate_stream",
]
