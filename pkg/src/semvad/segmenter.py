"""Streaming tail segmentation from frame posteriors.

A segment opens on the first speech frame and is closed, at the onset of
its tail silence, by the first of these conditions (checked in this order
on every non-speech frame of the tail):

1. the frame is classified ``Endpoint``;
2. ending punctuation was seen and the tail has lasted ``t_e``;
3. non-ending punctuation was seen and the tail has lasted ``t_ne``;
4. the tail has lasted ``t_max``.

Traditional mode only checks (4) and reads ``Endpoint`` frames as silence.

"Lasted" means completed silence before the current frame, so a decision
taken at frame ``d`` for a tail starting at frame ``o`` has latency
``(d - o) * frame_shift_ms``.  With oracle labels the first ``Endpoint``
frame and the ``t_e`` timer therefore coincide.

:class:`Segmenter` is the incremental engine.  :func:`segment_stream` runs
the same state machine over a whole stream with a batch kernel, compiled
if available (see :data:`BACKEND`).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence, Union

import numpy as np

from . import _scan_py
from .core import (
    TRIGGER_CODES,
    FramePosterior,
    Mode,
    PosteriorStream,
    PuncClass,
    SegmenterConfig,
    TriggerKind,
    VadClass,
    stronger_punc,
    validate_config,
)

try:
    from . import _scan as _scan_native
except ImportError:  # pragma: no cover - depends on the build
    _scan_native = None

BACKENDS = {"python": _scan_py.scan}
if _scan_native is not None:
    BACKENDS["cython"] = _scan_native.scan

#: Batch kernel picked at import: "cython" when the extension is built.
BACKEND = "cython" if _scan_native is not None else "python"


class SegmenterError(RuntimeError):
    pass


@dataclass(frozen=True)
class SegmentationEvent:
    segment_start_frame: int
    segment_end_frame: int  # exclusive; the tail-silence onset
    trigger: TriggerKind
    decision_frame: int
    latency_ms: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "segment_start_frame": self.segment_start_frame,
            "segment_end_frame": self.segment_end_frame,
            "trigger": self.trigger.value,
            "decision_frame": self.decision_frame,
            "latency_ms": self.latency_ms,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SegmentationEvent":
        fields = ("segment_start_frame", "segment_end_frame", "decision_frame", "latency_ms")
        for name in fields:
            if isinstance(d[name], bool) or not isinstance(d[name], int):
                raise ValueError(f"{name} must be an integer, got {d[name]!r}")
        ev = cls(d["segment_start_frame"], d["segment_end_frame"], TriggerKind(d["trigger"]),
                 d["decision_frame"], d["latency_ms"])
        if not ev.segment_start_frame < ev.segment_end_frame <= ev.decision_frame:
            raise ValueError(f"event frames out of order: {d}")
        return ev


def _make_event(start: int, end: int, trigger: TriggerKind, decision: int,
                frame_shift_ms: int) -> SegmentationEvent:
    return SegmentationEvent(start, end, trigger, decision, (decision - end) * frame_shift_ms)


_VAD = tuple(VadClass)
_PUNC = tuple(PuncClass)


def classify_frame(fp: FramePosterior) -> tuple[VadClass, PuncClass]:
    """Arg-max of both heads; ties go to the lower class index."""
    return _VAD[_argmax3(fp.vad)], _PUNC[_argmax3(fp.punc)]


def _argmax3(v: Sequence[float]) -> int:
    best = 0
    for i in (1, 2):
        if v[i] > v[best]:
            best = i
    return best


def smooth_vad_classes(classes: np.ndarray, window: int) -> np.ndarray:
    """Causal majority vote over the last ``window`` classes (ties to lower index)."""
    classes = np.asarray(classes, dtype=np.int8)
    if window == 1 or len(classes) == 0:
        return classes
    onehot = np.eye(3, dtype=np.int64)[classes]
    csum = np.vstack([np.zeros((1, 3), dtype=np.int64), np.cumsum(onehot, axis=0)])
    hi = np.arange(1, len(classes) + 1)
    lo = np.maximum(hi - window, 0)
    counts = csum[hi] - csum[lo]
    return np.argmax(counts, axis=1).astype(np.int8)


@dataclass
class EngineState:
    in_segment: bool = False
    segment_start_frame: int = -1
    # silence frames processed in the current tail; 0 after any speech frame
    tail_silence_run_frames: int = 0
    pending_punc: PuncClass = PuncClass.NONE
    current_frame: int = 0
    silence_onset_frame: int = -1
    flushed: bool = False
    # punctuation of recent speech frames, fed into pending_punc at tail onset
    recent_speech_punc: deque = field(default_factory=deque)
    recent_vad: deque = field(default_factory=deque)


class Segmenter:
    """Incremental engine for one stream.

    Not thread-safe; push frames strictly in order.  The engine may be
    handed to another thread between frames.
    """

    def __init__(self, cfg: SegmenterConfig | None = None):
        self.cfg = validate_config(cfg or SegmenterConfig())
        self._thr_e, self._thr_ne, self._thr_max = self.cfg.thresholds
        self._semantic = self.cfg.mode is Mode.SEMANTIC
        lb = self.cfg.punc_lookback_frames
        self.state = EngineState(
            recent_speech_punc=deque(maxlen=lb),
            recent_vad=deque(maxlen=self.cfg.smoothing_frames),
        )

    def _smoothed(self, v: int) -> int:
        st = self.state
        st.recent_vad.append(v)
        if self.cfg.smoothing_frames == 1:
            return v
        counts = [0, 0, 0]
        for c in st.recent_vad:
            counts[c] += 1
        return _argmax3(counts)

    def push_frame(self, fp: FramePosterior) -> Optional[SegmentationEvent]:
        st = self.state
        if st.flushed:
            raise SegmenterError("push after flush")
        if fp.frame_index != st.current_frame:
            raise SegmenterError(
                f"expected frame {st.current_frame}, got frame {fp.frame_index}"
            )
        t = st.current_frame
        st.current_frame += 1

        vad_cls, punc_cls = classify_frame(fp)
        v = self._smoothed(vad_cls)
        if not self._semantic and v == VadClass.ENDPOINT:
            v = VadClass.SILENCE

        if v == VadClass.SPEECH:
            if not st.in_segment:
                st.in_segment = True
                st.segment_start_frame = t
            st.tail_silence_run_frames = 0
            st.pending_punc = PuncClass.NONE
            if st.recent_speech_punc.maxlen:
                st.recent_speech_punc.append(punc_cls)
            return None

        if not st.in_segment:
            return None
        if st.tail_silence_run_frames == 0:
            st.silence_onset_frame = t
            for p in st.recent_speech_punc:
                st.pending_punc = stronger_punc(st.pending_punc, p)
            st.recent_speech_punc.clear()
        st.pending_punc = stronger_punc(st.pending_punc, punc_cls)

        elapsed = st.tail_silence_run_frames
        trigger = None
        if self._semantic:
            if v == VadClass.ENDPOINT:
                trigger = TriggerKind.ENDPOINT
            elif st.pending_punc == PuncClass.EPUNC and elapsed >= self._thr_e:
                trigger = TriggerKind.EPUNC_SILENCE
            elif st.pending_punc == PuncClass.NEPUNC and elapsed >= self._thr_ne:
                trigger = TriggerKind.NEPUNC_SILENCE
            elif elapsed >= self._thr_max:
                trigger = TriggerKind.MAX_SILENCE
        elif elapsed >= self._thr_max:
            trigger = TriggerKind.MAX_SILENCE

        if trigger is None:
            st.tail_silence_run_frames += 1
            return None
        event = _make_event(st.segment_start_frame, st.silence_onset_frame, trigger, t,
                            self.cfg.frame_shift_ms)
        st.in_segment = False
        st.tail_silence_run_frames = 0
        st.pending_punc = PuncClass.NONE
        st.recent_speech_punc.clear()
        return event

    def flush(self) -> Optional[SegmentationEvent]:
        st = self.state
        if st.flushed:
            raise SegmenterError("double flush")
        st.flushed = True
        if not st.in_segment:
            return None
        end = st.silence_onset_frame if st.tail_silence_run_frames > 0 else st.current_frame
        st.in_segment = False
        return _make_event(st.segment_start_frame, end, TriggerKind.STREAM_END,
                           st.current_frame, self.cfg.frame_shift_ms)


def segment_incremental(frames: Iterable[FramePosterior],
                        cfg: SegmenterConfig | None = None) -> list[SegmentationEvent]:
    """Fold :meth:`Segmenter.push_frame` over ``frames`` and flush."""
    seg = Segmenter(cfg)
    events = []
    for fp in frames:
        ev = seg.push_frame(fp)
        if ev is not None:
            events.append(ev)
    ev = seg.flush()
    if ev is not None:
        events.append(ev)
    return events


def segment_classes(vad_cls, punc_cls, cfg: SegmenterConfig | None = None,
                    backend: str | None = None) -> list[SegmentationEvent]:
    """Batch segmentation of already-classified frames."""
    cfg = validate_config(cfg or SegmenterConfig())
    kernel = BACKENDS[backend or BACKEND]
    vad_cls = smooth_vad_classes(vad_cls, cfg.smoothing_frames)
    thr_e, thr_ne, thr_max = cfg.thresholds
    rows = kernel(np.ascontiguousarray(vad_cls, dtype=np.int8),
                  np.ascontiguousarray(punc_cls, dtype=np.int8),
                  thr_e, thr_ne, thr_max, cfg.mode is Mode.SEMANTIC, cfg.punc_lookback_frames)
    shift = cfg.frame_shift_ms
    return [_make_event(int(s), int(e), TRIGGER_CODES[int(k)], int(d), shift)
            for s, e, k, d in rows.tolist()]


def segment_stream(frames: Union[PosteriorStream, Sequence[FramePosterior]],
                   cfg: SegmenterConfig | None = None,
                   backend: str | None = None) -> list[SegmentationEvent]:
    """Segment a whole stream; equal to pushing every frame and flushing."""
    if not isinstance(frames, PosteriorStream):
        frames = PosteriorStream.from_frames(frames)
    vad_cls, punc_cls = frames.classes()
    return segment_classes(vad_cls, punc_cls, cfg, backend)

