"""Synthetic alignments, labels and posterior streams, plus an offline oracle.

A scenario is a single stream of ``n_utterances`` speech runs, each followed
by its tail silence.  Oracle posteriors are one-hot on the derived labels and
can be degraded in two ways: endpoint frames flip to silence, and whole
punctuation events vanish.  Degradation draws come from their own random
stream and use a fixed uniform per frame or event, so for a given seed the
missed sets shrink monotonically as accuracy rises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import (
    Mode,
    PosteriorStream,
    PuncClass,
    SegmenterConfig,
    TriggerKind,
    VadClass,
    frames_for,
    validate_config,
)
from .labelgen import Alignment, FrameLabels, derive_labels, derive_punc_labels, derive_vad_labels
from .segmenter import SegmentationEvent, _make_event

MIX_TOL = 1e-9


class ScenarioError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class ScenarioSpec:
    n_utterances: int
    speech_ms: tuple[int, int] = (500, 3000)
    tail_silence_ms: tuple[int, int] = (200, 1500)
    # fractions of utterances ending in (E-punc, NE-punc, no punctuation)
    punctuation_mix: tuple[float, float, float] = (0.7, 0.2, 0.1)
    endpoint_model_accuracy: float = 1.0
    punc_drop_prob: float = 0.0
    seed: int = 0

    def errors(self, cfg: SegmenterConfig) -> list[str]:
        errs = []
        if not isinstance(self.n_utterances, int) or self.n_utterances < 1:
            errs.append(f"n_utterances must be a positive int, got {self.n_utterances!r}")
        for name in ("speech_ms", "tail_silence_ms"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                errs.append(f"{name} must satisfy 0 < min <= max, got ({lo}, {hi})")
            for v in (lo, hi):
                if not cfg.time_base.on_grid(v):
                    errs.append(f"{name} bound {v} is off the {cfg.frame_shift_ms} ms grid")
        mix = self.punctuation_mix
        if len(mix) != 3 or any(not 0.0 <= f <= 1.0 for f in mix):
            errs.append(f"punctuation_mix entries must be three fractions in [0, 1], got {mix}")
        elif abs(math.fsum(mix) - 1.0) > MIX_TOL:
            errs.append(f"punctuation_mix sums to {math.fsum(mix)}, not 1")
        for name in ("endpoint_model_accuracy", "punc_drop_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                errs.append(f"{name} must be in [0, 1], got {getattr(self, name)}")
        return errs

    def to_dict(self) -> dict[str, Any]:
        e, ne, none = self.punctuation_mix
        return {
            "n_utterances": self.n_utterances,
            "speech_ms": list(self.speech_ms),
            "tail_silence_ms": list(self.tail_silence_ms),
            "punctuation_mix": {"e_punc": e, "ne_punc": ne, "none": none},
            "endpoint_model_accuracy": self.endpoint_model_accuracy,
            "punc_drop_prob": self.punc_drop_prob,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ScenarioSpec":
        d = dict(d)
        mix = d.pop("punctuation_mix", None)
        if isinstance(mix, dict):
            mix = (mix["e_punc"], mix["ne_punc"], mix["none"])
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        if mix is not None:
            kwargs["punctuation_mix"] = tuple(mix)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ScenarioError([str(exc)]) from exc


@dataclass
class SimulationStats:
    n_utterances: int
    total_frames: int
    punctuation_counts: dict[str, int]
    # punctuated tails too short to ever reach their punctuation timer
    sub_threshold_punctuated_tails: int
    endpoint_frames: int
    endpoint_frames_flipped: int
    punc_events_dropped: int

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class Simulation:
    alignment: Alignment
    labels: FrameLabels
    posteriors: PosteriorStream
    stats: SimulationStats
    spec: ScenarioSpec = field(repr=False, default=None)


def _quota(n: int, fractions) -> list[int]:
    """Largest-remainder apportionment of ``n`` items."""
    raw = [f * n for f in fractions]
    counts = [int(math.floor(r)) for r in raw]
    order = sorted(range(len(raw)), key=lambda i: (counts[i] - raw[i], i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


def generate(spec: ScenarioSpec, cfg: SegmenterConfig | None = None) -> Simulation:
    cfg = validate_config(cfg or SegmenterConfig())
    errs = spec.errors(cfg)
    if errs:
        raise ScenarioError(errs)
    tb = cfg.time_base
    n = spec.n_utterances
    dur_seq, mix_seq, flip_seq, drop_seq = np.random.SeedSequence(spec.seed).spawn(4)

    dur_rng = np.random.default_rng(dur_seq)
    speech = dur_rng.integers(frames_for(spec.speech_ms[0], tb), frames_for(spec.speech_ms[1], tb) + 1, n)
    tails = dur_rng.integers(frames_for(spec.tail_silence_ms[0], tb),
                             frames_for(spec.tail_silence_ms[1], tb) + 1, n)
    n_e, n_ne, n_none = _quota(n, spec.punctuation_mix)
    classes = np.array([PuncClass.EPUNC] * n_e + [PuncClass.NEPUNC] * n_ne + [PuncClass.NONE] * n_none,
                       dtype=np.int8)
    classes = np.random.default_rng(mix_seq).permutation(classes)

    ends = np.cumsum(speech + tails) - tails
    starts = ends - speech
    total = int(ends[-1] + tails[-1])
    intervals = list(zip(starts.tolist(), ends.tolist()))
    events = [(e, PuncClass(c)) for e, c in zip(ends.tolist(), classes.tolist()) if c != PuncClass.NONE]
    alignment = Alignment(total, intervals, events, tb)
    labels = derive_labels(alignment, cfg)

    drop_u = np.random.default_rng(drop_seq).random(len(events))
    kept = [ev for ev, u in zip(events, drop_u) if u >= spec.punc_drop_prob]
    if len(kept) < len(events):
        punc_hyp = derive_punc_labels(Alignment(total, intervals, kept, tb), cfg)
    else:
        punc_hyp = labels.punc
    flip_u = np.random.default_rng(flip_seq).random(total)
    is_endpoint = labels.vad == VadClass.ENDPOINT
    flip = is_endpoint & (flip_u >= spec.endpoint_model_accuracy)
    vad_hyp = np.where(flip, np.int8(VadClass.SILENCE), labels.vad)

    thr_e, thr_ne, _ = cfg.thresholds
    thr = np.where(classes == PuncClass.EPUNC, thr_e, thr_ne)
    sub = int(np.sum((classes != PuncClass.NONE) & (tails <= thr)))
    stats = SimulationStats(
        n_utterances=n,
        total_frames=total,
        punctuation_counts={"e_punc": n_e, "ne_punc": n_ne, "none": n_none},
        sub_threshold_punctuated_tails=sub,
        endpoint_frames=int(is_endpoint.sum()),
        endpoint_frames_flipped=int(flip.sum()),
        punc_events_dropped=len(events) - len(kept),
    )
    return Simulation(alignment, labels, PosteriorStream.one_hot(vad_hyp, punc_hyp), stats, spec)


def oracle_segment(a: Alignment, cfg: SegmenterConfig | None = None) -> list[SegmentationEvent]:
    """Events a perfect model would produce, computed run by run.

    No incremental state: each tail is judged from its punctuation event,
    its length and the first ``Endpoint`` frame in the derived labels.
    A tail that meets no condition merges its speech run into the next
    segment.
    """
    cfg = validate_config(cfg or SegmenterConfig())
    thr_e, thr_ne, thr_max = cfg.thresholds
    vad = derive_vad_labels(a, cfg)
    events_at = a.event_at()
    shift = cfg.frame_shift_ms
    out = []
    seg_start = None
    intervals = a.speech_intervals
    for k, (s, e) in enumerate(intervals):
        if seg_start is None:
            seg_start = s
        run_end = intervals[k + 1][0] if k + 1 < len(intervals) else a.total_frames
        run_len = run_end - e
        punc = events_at.get(e, PuncClass.NONE)

        fired = None
        if cfg.mode is Mode.SEMANTIC:
            endpoint_at = np.flatnonzero(vad[e:run_end] == VadClass.ENDPOINT)
            candidates = []
            if endpoint_at.size:
                candidates.append((int(endpoint_at[0]), 0, TriggerKind.ENDPOINT))
            if punc == PuncClass.EPUNC and run_len > thr_e:
                candidates.append((thr_e, 1, TriggerKind.EPUNC_SILENCE))
            if punc == PuncClass.NEPUNC and run_len > thr_ne:
                candidates.append((thr_ne, 2, TriggerKind.NEPUNC_SILENCE))
            if run_len > thr_max:
                candidates.append((thr_max, 3, TriggerKind.MAX_SILENCE))
            if candidates:
                fired = min(candidates)
        elif run_len > thr_max:
            fired = (thr_max, 3, TriggerKind.MAX_SILENCE)

        if fired is not None:
            offset, _, trigger = fired
            out.append(_make_event(seg_start, e, trigger, e + offset, shift))
            seg_start = None
        elif run_end == a.total_frames:
            end = e if run_len > 0 else a.total_frames
            out.append(_make_event(seg_start, end, TriggerKind.STREAM_END, a.total_frames, shift))
    return out
