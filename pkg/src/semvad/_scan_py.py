"""Pure-Python batch scan; fallback when the compiled ``_scan`` is absent.

Must stay line-for-line equivalent to ``_scan.pyx``.
"""

import numpy as np

SPEECH, SILENCE, ENDPOINT = 0, 1, 2
PUNC_NONE, PUNC_E, PUNC_NE = 0, 1, 2
TRIG_ENDPOINT, TRIG_EPUNC, TRIG_NEPUNC, TRIG_MAX, TRIG_STREAM_END = range(5)

_STRENGTH = (0, 2, 1)  # indexed by punctuation class
_BY_STRENGTH = (PUNC_NONE, PUNC_NE, PUNC_E)


def scan(vad_cls, punc_cls, thr_e, thr_ne, thr_max, semantic, lookback):
    """Run the tail-segmentation state machine over classified frames.

    Returns an ``(k, 4)`` int64 array of rows
    ``(segment_start, segment_end, trigger_code, decision_frame)``,
    including the end-of-stream flush.
    """
    vad = np.asarray(vad_cls).tolist()
    punc = np.asarray(punc_cls).tolist()
    n = len(vad)
    rows = []

    in_segment = False
    seg_start = 0
    run_start = 0  # first frame of the current contiguous speech run
    onset = 0
    tail = 0
    pending = 0  # strength, not class

    for t in range(n):
        v = vad[t]
        if not semantic and v == ENDPOINT:
            v = SILENCE
        if v == SPEECH:
            if not in_segment:
                in_segment = True
                seg_start = t
                run_start = t
            elif tail > 0:
                run_start = t
            tail = 0
            pending = 0
            continue
        if not in_segment:
            continue
        if tail == 0:
            onset = t
            for k in range(max(t - lookback, run_start), t):
                s = _STRENGTH[punc[k]]
                if s > pending:
                    pending = s
        s = _STRENGTH[punc[t]]
        if s > pending:
            pending = s

        # tail counts silence frames strictly before t
        trig = -1
        if semantic:
            p = _BY_STRENGTH[pending]
            if v == ENDPOINT:
                trig = TRIG_ENDPOINT
            elif p == PUNC_E and tail >= thr_e:
                trig = TRIG_EPUNC
            elif p == PUNC_NE and tail >= thr_ne:
                trig = TRIG_NEPUNC
            elif tail >= thr_max:
                trig = TRIG_MAX
        elif tail >= thr_max:
            trig = TRIG_MAX

        if trig >= 0:
            rows.append((seg_start, onset, trig, t))
            in_segment = False
            tail = 0
            pending = 0
        else:
            tail += 1

    if in_segment:
        end = onset if tail > 0 else n
        rows.append((seg_start, end, TRIG_STREAM_END, n))

    return np.array(rows, dtype=np.int64).reshape(-1, 4)
