"""Benchmark toolkit for mobile behavioral-biometric authentication."""

from .data import (
    DatasetSplit,
    KeystrokeEvent,
    ModalityKind,
    SensorSample,
    Session,
    SessionRole,
    SplitKind,
    Stroke,
    TaskKind,
    TouchEvent,
    parse_dataset,
    serialize_dataset,
    slice_strokes,
    validate_session,
)
from .protocol import KeyFile, auc, build_comparisons, grade, rank
from .synth import GenConfig, generate_dataset

__version__ = "0.1.0"

__all__ = [
    "DatasetSplit",
    "GenConfig",
    "KeyFile",
    "KeystrokeEvent",
    "ModalityKind",
    "SensorSample",
    "Session",
    "SessionRole",
    "SplitKind",
    "Stroke",
    "TaskKind",
    "TouchEvent",
    "auc",
    "build_comparisons",
    "generate_dataset",
    "grade",
    "parse_dataset",
    "rank",
    "serialize_dataset",
    "slice_strokes",
    "validate_session",
    "__version__",
]
