# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch scan.  Semantics identical to ``_scan_py.scan``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    SPEECH = 0
    SILENCE = 1
    ENDPOINT = 2
    PUNC_E = 1
    PUNC_NE = 2
    TRIG_ENDPOINT = 0
    TRIG_EPUNC = 1
    TRIG_NEPUNC = 2
    TRIG_MAX = 3
    TRIG_STREAM_END = 4


cdef inline int _strength(signed char p) nogil:
    if p == PUNC_E:
        return 2
    if p == PUNC_NE:
        return 1
    return 0


def scan(vad_cls, punc_cls, Py_ssize_t thr_e, Py_ssize_t thr_ne,
         Py_ssize_t thr_max, bint semantic, Py_ssize_t lookback):
    cdef const signed char[::1] vad = np.ascontiguousarray(vad_cls, dtype=np.int8)
    cdef const signed char[::1] punc = np.ascontiguousarray(punc_cls, dtype=np.int8)
    cdef Py_ssize_t n = vad.shape[0]
    if punc.shape[0] != n:
        raise ValueError("vad and punc class arrays differ in length")

    # at most one event per speech run, plus the flush
    out_arr = np.empty((n // 2 + 2, 4), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t n_out = 0

    cdef bint in_segment = False
    cdef Py_ssize_t seg_start = 0, run_start = 0, onset = 0, tail = 0
    cdef Py_ssize_t t, k, lo
    cdef int pending = 0, s, trig
    cdef signed char v

    with nogil:
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
                lo = t - lookback
                if lo < run_start:
                    lo = run_start
                for k in range(lo, t):
                    s = _strength(punc[k])
                    if s > pending:
                        pending = s
            s = _strength(punc[t])
            if s > pending:
                pending = s

            trig = -1
            if semantic:
                if v == ENDPOINT:
                    trig = TRIG_ENDPOINT
                elif pending == 2 and tail >= thr_e:
                    trig = TRIG_EPUNC
                elif pending == 1 and tail >= thr_ne:
                    trig = TRIG_NEPUNC
                elif tail >= thr_max:
                    trig = TRIG_MAX
            elif tail >= thr_max:
                trig = TRIG_MAX

            if trig >= 0:
                out[n_out, 0] = seg_start
                out[n_out, 1] = onset
                out[n_out, 2] = trig
                out[n_out, 3] = t
                n_out += 1
                in_segment = False
                tail = 0
                pending = 0
            else:
                tail += 1

        if in_segment:
            out[n_out, 0] = seg_start
            out[n_out, 1] = onset if tail > 0 else n
            out[n_out, 2] = TRIG_STREAM_END
            out[n_out, 3] = n
            n_out += 1

    return out_arr[:n_out].copy()
