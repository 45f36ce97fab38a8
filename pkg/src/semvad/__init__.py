"""Low-latency semantic VAD tail segmentation."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ConfigError,
    FramePosterior,
    Mode,
    OffGridError,
    PosteriorStream,
    PuncClass,
    SegmenterConfig,
    TimeBase,
    TriggerKind,
    VadClass,
    frames_for,
    validate_config,
)
from .segmenter import (  # noqa: E402
    BACKEND,
    SegmentationEvent,
    Segmenter,
    classify_frame,
    segment_incremental,
    segment_stream,
)
