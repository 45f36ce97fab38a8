"""Frame-level training targets from speech/silence alignments.

The VAD target has three classes.  Silence that follows a punctuated speech
run turns into ``Endpoint`` once it has lasted ``t_e`` (ending punctuation)
or ``t_ne`` (non-ending punctuation), and stays that way until speech
resumes or the stream ends.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import PuncClass, SegmenterConfig, TimeBase, VadClass, frames_for


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class Alignment:
    total_frames: int
    speech_intervals: tuple[tuple[int, int], ...]
    punc_events: tuple[tuple[int, PuncClass], ...] = ()
    time_base: TimeBase = TimeBase()

    def __post_init__(self):
        object.__setattr__(
            self, "speech_intervals", tuple((int(s), int(e)) for s, e in self.speech_intervals)
        )
        object.__setattr__(
            self, "punc_events", tuple((int(f), PuncClass(c)) for f, c in self.punc_events)
        )
        errors = alignment_errors(self)
        if errors:
            raise AlignmentError("; ".join(errors))

    def event_at(self) -> dict[int, PuncClass]:
        """Map from speech-interval end frame to its punctuation class."""
        return dict(self.punc_events)

    def silence_runs(self) -> list[tuple[int, int, PuncClass | None]]:
        """(start, end, preceding punctuation) for every silence run.

        Leading silence has ``None`` as its punctuation; silence after an
        unpunctuated speech run has ``PuncClass.NONE``.
        """
        runs = []
        events = self.event_at()
        prev_end = 0
        prev_punc: PuncClass | None = None
        for s, e in self.speech_intervals:
            if s > prev_end:
                runs.append((prev_end, s, prev_punc))
            prev_end = e
            prev_punc = events.get(e, PuncClass.NONE)
        if self.total_frames > prev_end:
            runs.append((prev_end, self.total_frames, prev_punc))
        return runs


def alignment_errors(a: Alignment) -> list[str]:
    errors = []
    if a.total_frames <= 0:
        errors.append(f"total_frames must be positive, got {a.total_frames}")
    prev_end = None
    for s, e in a.speech_intervals:
        if not 0 <= s < e <= a.total_frames:
            errors.append(f"interval [{s}, {e}) empty or outside [0, {a.total_frames})")
        if prev_end is not None and s <= prev_end:
            # touching intervals must be given as one run
            errors.append(f"interval [{s}, {e}) overlaps, touches or precedes the previous one")
        prev_end = e
    ends = {e for _, e in a.speech_intervals}
    seen = set()
    for f, c in a.punc_events:
        if c == PuncClass.NONE:
            errors.append(f"punc event at frame {f} has class None")
        if f not in ends:
            errors.append(f"punc event at frame {f} is not at the end of a speech interval")
        if f in seen:
            errors.append(f"more than one punc event at frame {f}")
        seen.add(f)
    return errors


@dataclass(frozen=True)
class FrameLabels:
    vad: np.ndarray  # int8, VadClass values
    punc: np.ndarray  # int8, PuncClass values

    def __post_init__(self):
        vad = np.asarray(self.vad, dtype=np.int8)
        punc = np.asarray(self.punc, dtype=np.int8)
        if vad.shape != punc.shape or vad.ndim != 1:
            raise ValueError(f"label shapes differ or are not 1-D: {vad.shape} vs {punc.shape}")
        for name, arr in (("vad", vad), ("punc", punc)):
            if arr.size and (arr.min() < 0 or arr.max() > 2):
                raise ValueError(f"{name} labels outside {{0, 1, 2}}")
        vad.flags.writeable = False
        punc.flags.writeable = False
        object.__setattr__(self, "vad", vad)
        object.__setattr__(self, "punc", punc)

    def __len__(self):
        return len(self.vad)

    def __eq__(self, other):
        if not isinstance(other, FrameLabels):
            return NotImplemented
        return np.array_equal(self.vad, other.vad) and np.array_equal(self.punc, other.punc)

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def concatenate(cls, parts: Iterable["FrameLabels"]) -> "FrameLabels":
        parts = list(parts)
        return cls(np.concatenate([p.vad for p in parts]), np.concatenate([p.punc for p in parts]))


def _check_time_base(a: Alignment, cfg: SegmenterConfig) -> None:
    if a.time_base != cfg.time_base:
        raise AlignmentError(
            f"alignment frame shift {a.time_base.frame_shift_ms} ms differs from "
            f"config frame shift {cfg.frame_shift_ms} ms"
        )


def _threshold_frames(punc: PuncClass, cfg: SegmenterConfig) -> int:
    ms = cfg.t_e_ms if punc == PuncClass.EPUNC else cfg.t_ne_ms
    return frames_for(ms, cfg.time_base)


def derive_vad_labels(a: Alignment, cfg: SegmenterConfig) -> np.ndarray:
    _check_time_base(a, cfg)
    vad = np.full(a.total_frames, VadClass.SILENCE, dtype=np.int8)
    for s, e in a.speech_intervals:
        vad[s:e] = VadClass.SPEECH
    for start, end, punc in a.silence_runs():
        if punc is None or punc == PuncClass.NONE:
            continue
        first = start + _threshold_frames(punc, cfg)
        if first < end:
            vad[first:end] = VadClass.ENDPOINT
    return vad


def derive_punc_labels(a: Alignment, cfg: SegmenterConfig) -> np.ndarray:
    """Mark a symmetric window of ``punc_lookback_frames`` around each event.

    The window never reaches back past the start of the speech run the
    event belongs to, nor forward into the next speech run.
    """
    _check_time_base(a, cfg)
    punc = np.full(a.total_frames, PuncClass.NONE, dtype=np.int8)
    lb = cfg.punc_lookback_frames
    starts = {e: s for s, e in a.speech_intervals}
    next_speech = {}
    intervals = a.speech_intervals
    for k, (_, e) in enumerate(intervals):
        next_speech[e] = intervals[k + 1][0] if k + 1 < len(intervals) else a.total_frames
    for f, c in a.punc_events:
        lo = max(f - lb, starts[f], 0)
        hi = min(f + lb + 1, next_speech[f], a.total_frames)
        punc[lo:hi] = c
    return punc


def derive_labels(a: Alignment, cfg: SegmenterConfig) -> FrameLabels:
    return FrameLabels(derive_vad_labels(a, cfg), derive_punc_labels(a, cfg))


@dataclass(frozen=True)
class LabelDistribution:
    punc: dict[PuncClass, float]
    vad: dict[VadClass, float]
    total_frames: int


def label_distribution(labels: FrameLabels) -> LabelDistribution:
    n = len(labels)
    if n == 0:
        raise ValueError("label distribution of an empty label sequence")
    vad_counts = np.bincount(labels.vad, minlength=3)
    punc_counts = np.bincount(labels.punc, minlength=3)
    return LabelDistribution(
        punc={c: float(punc_counts[c] / n) for c in PuncClass},
        vad={c: float(vad_counts[c] / n) for c in VadClass},
        total_frames=n,
    )
