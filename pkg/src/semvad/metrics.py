"""Latency, detection cost and trigger statistics.

DCF follows the NIST SAD weighting: 0.75 * P_miss + 0.25 * P_fa, scored per
frame with no collar.  Reference speech is ``VadClass.SPEECH`` only; Endpoint
frames score as non-speech.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from .core import TriggerKind, VadClass
from .segmenter import SegmentationEvent

MISS_WEIGHT = 0.75
FA_WEIGHT = 0.25
COUNTER_MAX = 2**63 - 1


class UndefinedMetricError(ValueError):
    """A rate has a zero denominator."""


@dataclass(frozen=True)
class DcfAccumulator:
    tp_frames: int = 0
    fn_frames: int = 0
    fp_frames: int = 0
    tn_frames: int = 0

    @property
    def total(self) -> int:
        return self.tp_frames + self.fn_frames + self.fp_frames + self.tn_frames

    def merge(self, other: "DcfAccumulator") -> "DcfAccumulator":
        return merge(self, other)

    __add__ = merge


def merge(a: DcfAccumulator, b: DcfAccumulator) -> DcfAccumulator:
    out = []
    for name in ("tp_frames", "fn_frames", "fp_frames", "tn_frames"):
        v = getattr(a, name) + getattr(b, name)
        if v > COUNTER_MAX:
            raise OverflowError(f"{name} overflows a 64-bit counter")
        out.append(v)
    return DcfAccumulator(*out)


def _check_segments(segments: Sequence[tuple[int, int]], n: int) -> None:
    prev_end = 0
    for s, e in segments:
        if not 0 <= s < e <= n:
            raise ValueError(f"segment [{s}, {e}) empty or outside [0, {n})")
        if s < prev_end:
            raise ValueError(f"segment [{s}, {e}) overlaps or precedes the previous one")
        prev_end = e


def accumulate_dcf(ref_vad: Sequence[int], hyp_segments: Sequence[tuple[int, int]]) -> DcfAccumulator:
    ref = np.asarray(ref_vad) == VadClass.SPEECH
    _check_segments(hyp_segments, len(ref))
    hyp = np.zeros(len(ref), dtype=bool)
    for s, e in hyp_segments:
        hyp[s:e] = True
    return DcfAccumulator(
        tp_frames=int(np.sum(ref & hyp)),
        fn_frames=int(np.sum(ref & ~hyp)),
        fp_frames=int(np.sum(~ref & hyp)),
        tn_frames=int(np.sum(~ref & ~hyp)),
    )


@dataclass(frozen=True)
class DcfResult:
    p_miss: float
    p_fa: float
    dcf: float


def dcf(acc: DcfAccumulator) -> DcfResult:
    speech = acc.tp_frames + acc.fn_frames
    nonspeech = acc.tn_frames + acc.fp_frames
    missing = []
    if speech == 0:
        missing.append("P_miss (no reference speech frames)")
    if nonspeech == 0:
        missing.append("P_fa (no reference non-speech frames)")
    if missing:
        raise UndefinedMetricError("undefined: " + ", ".join(missing))
    p_miss = acc.fn_frames / speech
    p_fa = acc.fp_frames / nonspeech
    return DcfResult(p_miss, p_fa, MISS_WEIGHT * p_miss + FA_WEIGHT * p_fa)


def nearest_rank(sorted_values: Sequence[int], pct: float) -> int:
    rank = max(1, math.ceil(pct / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


@dataclass(frozen=True)
class LatencySummary:
    n: int
    mean_ms: Optional[float]
    p50_ms: Optional[int]
    p90_ms: Optional[int]
    p99_ms: Optional[int]


def _summary_from_values(values: Sequence[int]) -> LatencySummary:
    if not values:
        return LatencySummary(0, None, None, None, None)
    vals = sorted(values)
    return LatencySummary(
        n=len(vals),
        mean_ms=math.fsum(vals) / len(vals),
        p50_ms=nearest_rank(vals, 50),
        p90_ms=nearest_rank(vals, 90),
        p99_ms=nearest_rank(vals, 99),
    )


def latency_summary(events: Iterable[SegmentationEvent]) -> LatencySummary:
    """Mean and nearest-rank percentiles; StreamEnd cuts are left out."""
    return _summary_from_values(
        [ev.latency_ms for ev in events if ev.trigger is not TriggerKind.STREAM_END]
    )


def trigger_proportions(events: Sequence[SegmentationEvent]) -> dict[TriggerKind, float]:
    if not events:
        raise ValueError("trigger proportions of an empty event list")
    counts = Counter(ev.trigger for ev in events)
    return {k: counts[k] / len(events) for k in TriggerKind}


def relative_reduction(baseline: float, proposed: float) -> float:
    """Fractional reduction of ``proposed`` relative to ``baseline``."""
    if baseline <= 0:
        raise ValueError("baseline must be positive")
    return (baseline - proposed) / baseline


def hypothesis_segments(events: Iterable[SegmentationEvent]) -> list[tuple[int, int]]:
    return [(ev.segment_start_frame, ev.segment_end_frame) for ev in events]


@dataclass
class ScoreAccumulator:
    """Everything needed for a MetricsReport; shards combine with ``merge``."""

    dcf: DcfAccumulator = field(default_factory=DcfAccumulator)
    latency_counts: Counter = field(default_factory=Counter)  # latency_ms -> n, StreamEnd excluded
    trigger_counts: Counter = field(default_factory=Counter)  # TriggerKind -> n

    def add_stream(self, events: Sequence[SegmentationEvent], ref_vad: Sequence[int]) -> None:
        if events and events[-1].decision_frame > len(ref_vad):
            raise ValueError(
                f"events reach frame {events[-1].decision_frame} but the reference has {len(ref_vad)} frames"
            )
        self.dcf = merge(self.dcf, accumulate_dcf(ref_vad, hypothesis_segments(events)))
        for ev in events:
            self.trigger_counts[ev.trigger] += 1
            if ev.trigger is not TriggerKind.STREAM_END:
                self.latency_counts[ev.latency_ms] += 1

    def merge(self, other: "ScoreAccumulator") -> "ScoreAccumulator":
        return ScoreAccumulator(
            merge(self.dcf, other.dcf),
            self.latency_counts + other.latency_counts,
            self.trigger_counts + other.trigger_counts,
        )

    def report(self) -> "MetricsReport":
        values = sorted(self.latency_counts.elements())
        lat = _summary_from_values(values)
        n_events = sum(self.trigger_counts.values())
        try:
            d = dcf(self.dcf)
            p_miss, p_fa, dcf_value, undefined = d.p_miss, d.p_fa, d.dcf, []
        except UndefinedMetricError:
            speech = self.dcf.tp_frames + self.dcf.fn_frames
            nonspeech = self.dcf.tn_frames + self.dcf.fp_frames
            p_miss = self.dcf.fn_frames / speech if speech else None
            p_fa = self.dcf.fp_frames / nonspeech if nonspeech else None
            dcf_value = None
            undefined = [name for name, v in (("p_miss", p_miss), ("p_fa", p_fa)) if v is None] + ["dcf"]
        props = ({k: self.trigger_counts[k] / n_events for k in TriggerKind} if n_events else {})
        return MetricsReport(
            n_events=n_events,
            mean_latency_ms=lat.mean_ms,
            latency_percentiles={"p50": lat.p50_ms, "p90": lat.p90_ms, "p99": lat.p99_ms},
            p_miss=p_miss,
            p_fa=p_fa,
            dcf=dcf_value,
            trigger_proportions=props,
            counts=self.dcf,
            latency_counts=dict(sorted(self.latency_counts.items())),
            trigger_counts={k: self.trigger_counts[k] for k in TriggerKind},
            undefined=undefined,
        )


@dataclass
class MetricsReport:
    n_events: int
    mean_latency_ms: Optional[float]
    latency_percentiles: dict[str, Optional[int]]
    p_miss: Optional[float]
    p_fa: Optional[float]
    dcf: Optional[float]
    trigger_proportions: dict[TriggerKind, float]
    counts: DcfAccumulator
    latency_counts: dict[int, int]
    trigger_counts: dict[TriggerKind, int]
    undefined: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_events": self.n_events,
            "mean_latency_ms": self.mean_latency_ms,
            "latency_percentiles": dict(self.latency_percentiles),
            "p_miss": self.p_miss,
            "p_fa": self.p_fa,
            "dcf": self.dcf,
            "trigger_proportions": {k.value: v for k, v in self.trigger_proportions.items()},
            "counts": {
                "tp_frames": self.counts.tp_frames,
                "fn_frames": self.counts.fn_frames,
                "fp_frames": self.counts.fp_frames,
                "tn_frames": self.counts.tn_frames,
            },
            "latency_counts": {str(k): v for k, v in self.latency_counts.items()},
            "trigger_counts": {k.value: v for k, v in self.trigger_counts.items()},
            "undefined": list(self.undefined),
        }

    def accumulator(self) -> ScoreAccumulator:
        """Recover the raw counters so reports from shards can be merged."""
        return ScoreAccumulator(
            self.counts,
            Counter({int(k): v for k, v in self.latency_counts.items()}),
            Counter({k: v for k, v in self.trigger_counts.items() if v}),
        )

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "MetricsReport":
        return cls(
            n_events=d["n_events"],
            mean_latency_ms=d["mean_latency_ms"],
            latency_percentiles=dict(d["latency_percentiles"]),
            p_miss=d["p_miss"],
            p_fa=d["p_fa"],
            dcf=d["dcf"],
            trigger_proportions={TriggerKind(k): v for k, v in d["trigger_proportions"].items()},
            counts=DcfAccumulator(**d["counts"]),
            latency_counts={int(k): v for k, v in d["latency_counts"].items()},
            trigger_counts={TriggerKind(k): v for k, v in d["trigger_counts"].items()},
            undefined=list(d.get("undefined", [])),
        )


def score(events: Sequence[SegmentationEvent], ref_vad: Sequence[int]) -> MetricsReport:
    acc = ScoreAccumulator()
    acc.add_stream(events, ref_vad)
    return acc.report()
