"""Independent reference computations used by the tests.

Deliberately naive: per-frame loops with no shared code paths from the
package beyond the enum values and frames_for.
"""

import random

import numpy as np

from semvad.core import PosteriorStream, PuncClass, VadClass, frames_for
from semvad.labelgen import Alignment


def brute_force_vad_labels(a, cfg):
    """Re-derive each frame's VAD class from first principles."""
    events = dict(a.punc_events)
    out = []
    for f in range(a.total_frames):
        if any(s <= f < e for s, e in a.speech_intervals):
            out.append(VadClass.SPEECH)
            continue
        ended = [e for s, e in a.speech_intervals if e <= f]
        if not ended:
            out.append(VadClass.SILENCE)
            continue
        last_end = max(ended)
        punc = events.get(last_end)
        if punc is None:
            out.append(VadClass.SILENCE)
            continue
        ms = cfg.t_e_ms if punc == PuncClass.EPUNC else cfg.t_ne_ms
        silent_before = f - last_end
        out.append(VadClass.ENDPOINT if silent_before >= frames_for(ms, cfg.time_base) else VadClass.SILENCE)
    return out


def brute_force_dcf_counts(ref_vad, segments):
    tp = fn = fp = tn = 0
    for f, ref in enumerate(ref_vad):
        ref_speech = ref == VadClass.SPEECH
        hyp_speech = any(s <= f < e for s, e in segments)
        if ref_speech and hyp_speech:
            tp += 1
        elif ref_speech:
            fn += 1
        elif hyp_speech:
            fp += 1
        else:
            tn += 1
    return tp, fn, fp, tn


def random_alignment(rng: random.Random, time_base, max_runs=6, max_len=90):
    """Random valid alignment, possibly with leading silence or trailing speech."""
    intervals = []
    t = rng.choice([0, 0, rng.randint(1, 40)])
    for _ in range(rng.randint(0, max_runs)):
        s = t if not intervals else t + rng.randint(1, max_len)
        e = s + rng.randint(1, max_len)
        intervals.append((s, e))
        t = e
    total = t + rng.choice([0, rng.randint(1, max_len)])
    if total == 0:
        total = rng.randint(1, 50)
    events = []
    for _, e in intervals:
        c = rng.choice([PuncClass.NONE, PuncClass.EPUNC, PuncClass.NEPUNC])
        if c != PuncClass.NONE:
            events.append((e, c))
    return Alignment(total, intervals, events, time_base)


def stream_of(vad, punc=None):
    """One-hot posterior stream from class lists."""
    vad = np.asarray(vad, dtype=np.int8)
    punc = np.zeros_like(vad) if punc is None else np.asarray(punc, dtype=np.int8)
    return PosteriorStream.one_hot(vad, punc)
