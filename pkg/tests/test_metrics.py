import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semvad.core import TriggerKind, VadClass
from semvad.metrics import (
    COUNTER_MAX,
    DcfAccumulator,
    MetricsReport,
    ScoreAccumulator,
    UndefinedMetricError,
    accumulate_dcf,
    dcf,
    latency_summary,
    merge,
    nearest_rank,
    relative_reduction,
    score,
    trigger_proportions,
)
from semvad.segmenter import SegmentationEvent

from _oracles import brute_force_dcf_counts

S, Q, EP = VadClass.SPEECH, VadClass.SILENCE, VadClass.ENDPOINT


def ev(latency, trigger=TriggerKind.EPUNC_SILENCE, start=0, end=10):
    return SegmentationEvent(start, end, trigger, end + latency // 10, latency)


def test_perfect_hypothesis():
    acc = accumulate_dcf([S] * 50, [(0, 50)])
    assert acc == DcfAccumulator(50, 0, 0, 0)


def test_empty_hypothesis():
    assert accumulate_dcf([S] * 50, []) == DcfAccumulator(0, 50, 0, 0)


def test_inverted_hypothesis():
    ref = [S] * 60 + [Q] * 40
    acc = accumulate_dcf(ref, [(60, 100)])
    assert (acc.tp_frames, acc.fn_frames, acc.fp_frames, acc.tn_frames) == brute_force_dcf_counts(ref, [(60, 100)])
    assert acc == DcfAccumulator(0, 60, 40, 0)


def test_endpoint_reference_is_negative():
    acc = accumulate_dcf([S, EP, Q], [(0, 3)])
    assert acc == DcfAccumulator(1, 0, 2, 0)


@pytest.mark.parametrize("segments", [[(0, 5), (4, 8)], [(5, 3)], [(0, 11)], [(-1, 2)], [(5, 8), (0, 2)]])
def test_bad_segments(segments):
    with pytest.raises(ValueError):
        accumulate_dcf([S] * 10, segments)


def test_random_counts_match_brute_force():
    rng = random.Random(0)
    for _ in range(200):
        n = rng.randint(1, 80)
        ref = [rng.choice([S, Q, EP]) for _ in range(n)]
        cuts = sorted(rng.sample(range(n + 1), 2 * rng.randint(0, min(4, (n + 1) // 2))))
        segs = [(a, b) for a, b in zip(cuts[::2], cuts[1::2]) if a < b]
        acc = accumulate_dcf(ref, segs)
        assert (acc.tp_frames, acc.fn_frames, acc.fp_frames, acc.tn_frames) == brute_force_dcf_counts(ref, segs)


def test_dcf_arithmetic():
    r = dcf(DcfAccumulator(tp_frames=90, fn_frames=10, fp_frames=20, tn_frames=80))
    assert (r.p_miss, r.p_fa) == (0.1, 0.2)
    assert r.dcf == pytest.approx(0.125, abs=1e-15)


def test_dcf_extremes():
    assert dcf(DcfAccumulator(10, 0, 0, 10)).dcf == 0.0
    assert dcf(DcfAccumulator(0, 10, 10, 0)).dcf == 1.0


@pytest.mark.parametrize("acc", [DcfAccumulator(0, 0, 1, 1), DcfAccumulator(1, 1, 0, 0), DcfAccumulator()])
def test_dcf_undefined(acc):
    with pytest.raises(UndefinedMetricError):
        dcf(acc)


counters = st.integers(0, 10**9)
accumulators = st.builds(DcfAccumulator, counters, counters, counters, counters)


@given(accumulators, accumulators, accumulators)
def test_merge_is_a_commutative_monoid(a, b, c):
    assert merge(a, DcfAccumulator()) == a
    assert merge(a, b) == merge(b, a)
    assert merge(merge(a, b), c) == merge(a, merge(b, c))
    assert (a + b).total == a.total + b.total


@given(accumulators)
def test_dcf_identity_and_bounds(acc):
    if acc.tp_frames + acc.fn_frames == 0 or acc.tn_frames + acc.fp_frames == 0:
        return
    r = dcf(acc)
    assert 0 <= r.p_miss <= 1 and 0 <= r.p_fa <= 1
    assert abs(r.dcf - (0.75 * r.p_miss + 0.25 * r.p_fa)) <= 1e-12


@given(accumulators, accumulators)
def test_merged_dcf_is_count_weighted(a, b):
    m = merge(a, b)
    if m.tp_frames + m.fn_frames == 0 or m.tn_frames + m.fp_frames == 0:
        return
    p_miss = (a.fn_frames + b.fn_frames) / (a.tp_frames + a.fn_frames + b.tp_frames + b.fn_frames)
    assert dcf(m).p_miss == pytest.approx(p_miss, rel=1e-12)


def test_merge_overflow():
    with pytest.raises(OverflowError):
        merge(DcfAccumulator(COUNTER_MAX, 0, 0, 0), DcfAccumulator(1, 0, 0, 0))


def test_three_way_split_equals_single_pass():
    rng = np.random.default_rng(4)
    ref = rng.choice([S, Q, EP], size=300)
    segs = [(0, 40), (55, 90), (120, 121), (150, 260), (280, 300)]
    single = accumulate_dcf(ref, segs)
    cuts = [0, 100, 200, 300]
    total = DcfAccumulator()
    for lo, hi in zip(cuts, cuts[1:]):
        local = [(max(s, lo) - lo, min(e, hi) - lo) for s, e in segs if s < hi and e > lo]
        total = merge(total, accumulate_dcf(ref[lo:hi], local))
    assert total == single


def test_latency_summary_traditional_column():
    s = latency_summary([ev(700, TriggerKind.MAX_SILENCE)] * 25)
    assert s.mean_ms == 700.0 and s.p50_ms == s.p90_ms == s.p99_ms == 700


def test_latency_summary_mean():
    s = latency_summary([ev(300), ev(400), ev(700)])
    assert s.mean_ms == pytest.approx(466.67, abs=0.01)
    assert (s.p50_ms, s.p90_ms, s.p99_ms) == (400, 700, 700)


def test_latency_summary_skips_stream_end():
    s = latency_summary([ev(300), ev(10, TriggerKind.STREAM_END)])
    assert s.n == 1 and s.mean_ms == 300


def test_latency_summary_empty():
    s = latency_summary([])
    assert s.n == 0 and s.mean_ms is None and s.p50_ms is None


@pytest.mark.parametrize("pct, expected", [(50, 5), (90, 9), (99, 10), (1, 1), (100, 10)])
def test_nearest_rank(pct, expected):
    assert nearest_rank(list(range(1, 11)), pct) == expected


@given(st.lists(st.sampled_from([0, 300, 400, 700, 350]), min_size=1), st.randoms())
def test_latency_mean_order_invariant(lats, rnd):
    events = [ev(x) for x in lats]
    shuffled = events[:]
    rnd.shuffle(shuffled)
    assert latency_summary(events) == latency_summary(shuffled)


def test_trigger_proportions():
    events = [ev(300, TriggerKind.ENDPOINT), ev(300), ev(700, TriggerKind.MAX_SILENCE),
              ev(700, TriggerKind.MAX_SILENCE)]
    props = trigger_proportions(events)
    assert props[TriggerKind.ENDPOINT] == 0.25
    assert props[TriggerKind.EPUNC_SILENCE] == 0.25
    assert props[TriggerKind.MAX_SILENCE] == 0.5
    assert math.fsum(props.values()) == pytest.approx(1.0, abs=1e-9)
    assert trigger_proportions([ev(700, TriggerKind.MAX_SILENCE)])[TriggerKind.MAX_SILENCE] == 1.0
    with pytest.raises(ValueError):
        trigger_proportions([])


def test_relative_reduction():
    assert relative_reduction(700, 350) == 0.5
    with pytest.raises(ValueError):
        relative_reduction(0, 1)


def test_report_round_trip_and_merge():
    ref = [S] * 10 + [Q] * 50 + [S] * 10 + [Q] * 10
    events = [SegmentationEvent(0, 10, TriggerKind.ENDPOINT, 40, 300),
              SegmentationEvent(60, 70, TriggerKind.STREAM_END, 80, 100)]
    rep = score(events, ref)
    assert rep.n_events == 2
    assert rep.mean_latency_ms == 300
    assert rep.p_miss == 0 and rep.dcf == 0
    assert MetricsReport.from_dict(rep.to_dict()) == rep
    doubled = rep.accumulator().merge(rep.accumulator()).report()
    assert doubled.n_events == 4 and doubled.dcf == rep.dcf
    assert doubled.latency_counts == {300: 2}


def test_report_marks_undefined():
    rep = score([], [Q] * 10)
    assert rep.p_miss is None and rep.dcf is None and rep.p_fa == 0
    assert "p_miss" in rep.undefined and rep.trigger_proportions == {}


def test_score_rejects_events_past_reference():
    acc = ScoreAccumulator()
    with pytest.raises(ValueError):
        acc.add_stream([SegmentationEvent(0, 5, TriggerKind.STREAM_END, 20, 150)], [S] * 10)
