"""Extraction of data practices from policy text through a model backend."""

from .backends import (
    DECODING,
    TASKS,
    AuthError,
    BackendConfig,
    BackendError,
    FixtureMissing,
    MockBackend,
    ModelBackend,
    RecordingBackend,
    RemoteBackend,
    TransportError,
    call_with_retry,
    fixture_key,
)
from .pipeline import ExtractionResult, extract_document, load_templates, run_task
from .practices import (
    EntityKind,
    EntitySpan,
    ExtractedPractice,
    PracticeDump,
    PracticeKind,
    RelationLink,
    Role,
    Segment,
    parse_dump,
    segment_document,
    serialize_dump,
)
from .repair import repair_output

__all__ = [name for name in dir() if not name.startswith("_")]
