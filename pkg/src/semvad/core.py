"""Shared types, the integer time base, and segmenter configuration.

All time is integer milliseconds on a fixed frame grid.  Nothing in this
package uses floating-point time.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Sequence

import numpy as np

POSTERIOR_SUM_TOL = 1e-6


class OffGridError(ValueError):
    """A duration is not a whole number of frames."""


class ConfigError(ValueError):
    """One or more configuration invariants are violated.

    ``errors`` holds every violation, not just the first.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class PuncClass(enum.IntEnum):
    NONE = 0
    EPUNC = 1
    NEPUNC = 2


class VadClass(enum.IntEnum):
    SPEECH = 0
    SILENCE = 1
    ENDPOINT = 2


class TriggerKind(enum.Enum):
    ENDPOINT = "Endpoint"
    EPUNC_SILENCE = "EPuncSilence"
    NEPUNC_SILENCE = "NEPuncSilence"
    MAX_SILENCE = "MaxSilence"
    STREAM_END = "StreamEnd"


# index order shared with the scan kernels
TRIGGER_CODES: tuple[TriggerKind, ...] = tuple(TriggerKind)


class Mode(enum.Enum):
    SEMANTIC = "semantic"
    TRADITIONAL = "traditional"


# EPunc is stronger evidence than NEPunc, which beats no punctuation.
PUNC_STRENGTH = {PuncClass.NONE: 0, PuncClass.NEPUNC: 1, PuncClass.EPUNC: 2}


def stronger_punc(a: PuncClass, b: PuncClass) -> PuncClass:
    return a if PUNC_STRENGTH[a] >= PUNC_STRENGTH[b] else b


@dataclass(frozen=True)
class TimeBase:
    frame_shift_ms: int = 10

    def __post_init__(self):
        if isinstance(self.frame_shift_ms, bool) or not isinstance(self.frame_shift_ms, int):
            raise TypeError(f"frame_shift_ms must be an int, got {self.frame_shift_ms!r}")
        if self.frame_shift_ms <= 0:
            raise ValueError(f"frame_shift_ms must be positive, got {self.frame_shift_ms}")

    def on_grid(self, duration_ms: int) -> bool:
        return duration_ms % self.frame_shift_ms == 0


def frames_for(duration_ms: int, tb: TimeBase) -> int:
    """Number of frames spanned by ``duration_ms`` on the grid of ``tb``."""
    if not tb.on_grid(duration_ms):
        raise OffGridError(
            f"{duration_ms} ms is not a multiple of the {tb.frame_shift_ms} ms frame shift"
        )
    return duration_ms // tb.frame_shift_ms


def _check_prob_vector(name: str, vec: Sequence[float]) -> tuple[float, float, float]:
    if len(vec) != 3:
        raise ValueError(f"{name} must have 3 entries, got {len(vec)}")
    out = tuple(float(x) for x in vec)
    for x in out:
        if not (0.0 <= x <= 1.0):  # also rejects NaN
            raise ValueError(f"{name} entry {x!r} outside [0, 1]")
    if abs(math.fsum(out) - 1.0) > POSTERIOR_SUM_TOL:
        raise ValueError(f"{name} sums to {math.fsum(out)!r}, not 1 within {POSTERIOR_SUM_TOL}")
    return out  # type: ignore[return-value]


@dataclass(frozen=True)
class FramePosterior:
    """Posteriors of the VAD head and the punctuation head for one frame."""

    frame_index: int
    vad: tuple[float, float, float]
    punc: tuple[float, float, float]

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be non-negative, got {self.frame_index}")
        object.__setattr__(self, "vad", _check_prob_vector("vad", self.vad))
        object.__setattr__(self, "punc", _check_prob_vector("punc", self.punc))

    def to_dict(self) -> dict[str, Any]:
        return {"t": self.frame_index, "vad": list(self.vad), "punc": list(self.punc)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "FramePosterior":
        return cls(int(d["t"]), tuple(d["vad"]), tuple(d["punc"]))


@dataclass(frozen=True)
class SegmenterConfig:
    t_e_ms: int = 300
    t_ne_ms: int = 400
    t_max_ms: int = 700
    time_base: TimeBase = field(default_factory=TimeBase)
    mode: Mode = Mode.SEMANTIC
    punc_lookback_frames: int = 1
    # causal majority vote over classified VAD frames; 1 disables it
    smoothing_frames: int = 1

    @property
    def frame_shift_ms(self) -> int:
        return self.time_base.frame_shift_ms

    @property
    def thresholds(self) -> tuple[int, int, int]:
        """(t_e, t_ne, t_max) in frames."""
        tb = self.time_base
        return frames_for(self.t_e_ms, tb), frames_for(self.t_ne_ms, tb), frames_for(self.t_max_ms, tb)

    def to_dict(self) -> dict[str, Any]:
        return {
            "t_e_ms": self.t_e_ms,
            "t_ne_ms": self.t_ne_ms,
            "t_max_ms": self.t_max_ms,
            "frame_shift_ms": self.frame_shift_ms,
            "mode": self.mode.value,
            "punc_lookback_frames": self.punc_lookback_frames,
            "smoothing_frames": self.smoothing_frames,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SegmenterConfig":
        known = {"t_e_ms", "t_ne_ms", "t_max_ms", "frame_shift_ms", "mode",
                 "punc_lookback_frames", "smoothing_frames"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError([f"unknown config key {k!r}" for k in sorted(unknown)])
        kwargs: dict[str, Any] = {k: d[k] for k in d if k not in ("frame_shift_ms", "mode")}
        if "frame_shift_ms" in d:
            kwargs["time_base"] = TimeBase(d["frame_shift_ms"])
        if "mode" in d:
            kwargs["mode"] = Mode(d["mode"])
        return cls(**kwargs)


def config_errors(cfg: SegmenterConfig) -> list[str]:
    """Every invariant ``cfg`` violates; empty when valid."""
    errors = []
    durations = {"t_e_ms": cfg.t_e_ms, "t_ne_ms": cfg.t_ne_ms, "t_max_ms": cfg.t_max_ms}
    for name, value in durations.items():
        if isinstance(value, bool) or not isinstance(value, int):
            errors.append(f"{name} must be an integer number of milliseconds, got {value!r}")
            continue
        if value <= 0:
            errors.append(f"{name} must be positive, got {value}")
        if not cfg.time_base.on_grid(value):
            errors.append(
                f"{name}={value} is off the {cfg.frame_shift_ms} ms frame grid"
            )
    if all(isinstance(v, int) for v in durations.values()):
        if cfg.t_e_ms > cfg.t_ne_ms:
            errors.append(f"ordering: t_e_ms ({cfg.t_e_ms}) > t_ne_ms ({cfg.t_ne_ms})")
        if cfg.t_ne_ms > cfg.t_max_ms:
            errors.append(f"ordering: t_ne_ms ({cfg.t_ne_ms}) > t_max_ms ({cfg.t_max_ms})")
    if not isinstance(cfg.mode, Mode):
        errors.append(f"mode must be a Mode, got {cfg.mode!r}")
    if not isinstance(cfg.punc_lookback_frames, int) or cfg.punc_lookback_frames < 0:
        errors.append(f"punc_lookback_frames must be a non-negative int, got {cfg.punc_lookback_frames!r}")
    if (not isinstance(cfg.smoothing_frames, int) or cfg.smoothing_frames < 1
            or cfg.smoothing_frames % 2 == 0):
        errors.append(f"smoothing_frames must be a positive odd int, got {cfg.smoothing_frames!r}")
    return errors


def validate_config(cfg: SegmenterConfig) -> SegmenterConfig:
    """Return ``cfg`` unchanged if valid, else raise ConfigError listing every violation."""
    errors = config_errors(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


class PosteriorStream:
    """Frame posteriors for one stream, held as two ``(n, 3)`` float arrays.

    Frame indices are implicit: row ``i`` is frame ``i``.
    """

    def __init__(self, vad, punc):
        vad = np.array(vad, dtype=np.float64).reshape(-1, 3)
        punc = np.array(punc, dtype=np.float64).reshape(-1, 3)
        if vad.shape != punc.shape:
            raise ValueError(f"vad and punc lengths differ: {len(vad)} vs {len(punc)}")
        for name, arr in (("vad", vad), ("punc", punc)):
            bad = ~((arr >= 0.0) & (arr <= 1.0)).all(axis=1)
            bad |= np.abs(arr.sum(axis=1) - 1.0) > POSTERIOR_SUM_TOL
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise ValueError(f"frame {i}: {name} posterior {arr[i].tolist()} is not a distribution")
        vad.flags.writeable = False
        punc.flags.writeable = False
        self.vad = vad
        self.punc = punc

    @classmethod
    def from_frames(cls, frames: Iterable[FramePosterior]) -> "PosteriorStream":
        frames = list(frames)
        for i, fp in enumerate(frames):
            if fp.frame_index != i:
                raise ValueError(f"frame at position {i} has index {fp.frame_index}")
        return cls([fp.vad for fp in frames], [fp.punc for fp in frames])

    @classmethod
    def one_hot(cls, vad_classes, punc_classes) -> "PosteriorStream":
        eye = np.eye(3)
        return cls(eye[np.asarray(vad_classes, dtype=np.intp)], eye[np.asarray(punc_classes, dtype=np.intp)])

    def __len__(self):
        return len(self.vad)

    def __getitem__(self, i):
        if isinstance(i, slice):
            # a sub-stream, re-indexed from frame 0
            return PosteriorStream(self.vad[i], self.punc[i])
        i = range(len(self))[i]
        fp = object.__new__(FramePosterior)
        # rows were validated as a block in __init__
        object.__setattr__(fp, "frame_index", i)
        object.__setattr__(fp, "vad", tuple(self.vad[i].tolist()))
        object.__setattr__(fp, "punc", tuple(self.punc[i].tolist()))
        return fp

    def __iter__(self) -> Iterator[FramePosterior]:
        vad = self.vad.tolist()
        punc = self.punc.tolist()
        for i in range(len(vad)):
            fp = object.__new__(FramePosterior)
            object.__setattr__(fp, "frame_index", i)
            object.__setattr__(fp, "vad", tuple(vad[i]))
            object.__setattr__(fp, "punc", tuple(punc[i]))
            yield fp

    def __eq__(self, other):
        if not isinstance(other, PosteriorStream):
            return NotImplemented
        return np.array_equal(self.vad, other.vad) and np.array_equal(self.punc, other.punc)

    __hash__ = None  # type: ignore[assignment]

    def classes(self) -> tuple[np.ndarray, np.ndarray]:
        """Arg-max VAD and punctuation classes; ties go to the lower index."""
        return (np.argmax(self.vad, axis=1).astype(np.int8),
                np.argmax(self.punc, axis=1).astype(np.int8))
