"""Readers and writers for the on-disk formats.

Line-delimited JSON for per-frame and per-event streams, plain JSON for
alignments, reports and manifests.  Writers are byte-deterministic: compact
separators, fixed key order, reals printed with 9 significant digits.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Union

import numpy as np

from .core import PosteriorStream, PuncClass, TimeBase, VadClass
from .labelgen import Alignment, FrameLabels
from .metrics import MetricsReport
from .segmenter import SegmentationEvent

PathLike = Union[str, Path]


class FormatError(ValueError):
    def __init__(self, path, line, message):
        self.path, self.line = str(path), line
        where = f"{path}:{line}" if line else str(path)
        super().__init__(f"{where}: {message}")


def fmt_real(x: float) -> str:
    return format(float(x), ".9g")


def _dump(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _read_jsonl(path: PathLike):
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(path, lineno, f"invalid JSON: {exc.msg}") from None


def _int_field(path, lineno, rec, key):
    v = rec.get(key) if isinstance(rec, dict) else None
    if isinstance(v, bool) or not isinstance(v, int):
        raise FormatError(path, lineno, f"field {key!r} must be an integer, got {v!r}")
    return v


def write_posteriors(path: PathLike, stream: PosteriorStream) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for t, (v, p) in enumerate(zip(stream.vad.tolist(), stream.punc.tolist())):
            f.write(
                '{"t":%d,"vad":[%s],"punc":[%s]}\n'
                % (t, ",".join(map(fmt_real, v)), ",".join(map(fmt_real, p)))
            )


def read_posteriors(path: PathLike) -> PosteriorStream:
    vad, punc = [], []
    for lineno, rec in _read_jsonl(path):
        t = _int_field(path, lineno, rec, "t")
        if t != len(vad):
            raise FormatError(path, lineno, f"expected frame {len(vad)}, got {t}")
        try:
            v = [float(x) for x in rec["vad"]]
            p = [float(x) for x in rec["punc"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(path, lineno, f"bad posterior record: {exc}") from None
        if len(v) != 3 or len(p) != 3:
            raise FormatError(path, lineno, "vad and punc must have 3 entries each")
        vad.append(v)
        punc.append(p)
    try:
        return PosteriorStream(np.array(vad).reshape(-1, 3), np.array(punc).reshape(-1, 3))
    except ValueError as exc:
        raise FormatError(path, 0, str(exc)) from None


def alignment_to_dict(a: Alignment) -> dict[str, Any]:
    return {
        "frame_shift_ms": a.time_base.frame_shift_ms,
        "total_frames": a.total_frames,
        "speech_intervals": [[s, e] for s, e in a.speech_intervals],
        "punc_events": [[f, int(c)] for f, c in a.punc_events],
    }


def write_alignment(path: PathLike, a: Alignment) -> None:
    Path(path).write_text(_dump(alignment_to_dict(a)) + "\n", encoding="utf-8")


def read_alignment(path: PathLike) -> Alignment:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return Alignment(
            total_frames=d["total_frames"],
            speech_intervals=[tuple(iv) for iv in d["speech_intervals"]],
            punc_events=[(f, PuncClass(c)) for f, c in d["punc_events"]],
            time_base=TimeBase(d["frame_shift_ms"]),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(path, 0, f"bad alignment: {exc}") from None


def write_labels(path: PathLike, labels: FrameLabels) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for t, (v, p) in enumerate(zip(labels.vad.tolist(), labels.punc.tolist())):
            f.write('{"t":%d,"vad":%d,"punc":%d}\n' % (t, v, p))


def read_labels(path: PathLike) -> FrameLabels:
    vad, punc = [], []
    for lineno, rec in _read_jsonl(path):
        t = _int_field(path, lineno, rec, "t")
        if t != len(vad):
            raise FormatError(path, lineno, f"expected frame {len(vad)}, got {t}")
        try:
            vad.append(VadClass(_int_field(path, lineno, rec, "vad")))
            punc.append(PuncClass(_int_field(path, lineno, rec, "punc")))
        except ValueError as exc:
            raise FormatError(path, lineno, str(exc)) from None
    return FrameLabels(np.array(vad, dtype=np.int8), np.array(punc, dtype=np.int8))


def write_events(path: PathLike, events: Iterable[SegmentationEvent]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for ev in events:
            f.write(_dump(ev.to_dict()) + "\n")


def read_events(path: PathLike) -> list[SegmentationEvent]:
    out = []
    for lineno, rec in _read_jsonl(path):
        try:
            out.append(SegmentationEvent.from_dict(rec))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(path, lineno, f"bad event: {exc}") from None
    return out


def write_json(path: PathLike, obj: Any) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def read_json(path: PathLike) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(path, exc.lineno, f"invalid JSON: {exc.msg}") from None


def write_report(path: PathLike, report: MetricsReport) -> None:
    write_json(path, report.to_dict())


def read_report(path: PathLike) -> MetricsReport:
    try:
        return MetricsReport.from_dict(read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(path, 0, f"bad metrics report: {exc}") from None
