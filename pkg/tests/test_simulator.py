import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semvad.core import Mode, PosteriorStream, PuncClass, SegmenterConfig, TriggerKind, VadClass
from semvad.labelgen import Alignment, derive_labels
from semvad.metrics import latency_summary
from semvad.segmenter import SegmentationEvent, segment_stream
from semvad.simulator import ScenarioError, ScenarioSpec, _quota, generate, oracle_segment

CFG = SegmenterConfig()


def test_same_seed_is_bit_identical():
    spec = ScenarioSpec(n_utterances=20, endpoint_model_accuracy=0.6, punc_drop_prob=0.2, seed=42)
    a, b = generate(spec, CFG), generate(spec, CFG)
    assert a.alignment == b.alignment
    assert a.labels == b.labels
    assert a.posteriors == b.posteriors
    assert a.posteriors.vad.tobytes() == b.posteriors.vad.tobytes()
    assert a.stats == b.stats


def test_different_seeds_differ():
    a = generate(ScenarioSpec(n_utterances=20, seed=1), CFG)
    b = generate(ScenarioSpec(n_utterances=20, seed=2), CFG)
    assert a.alignment != b.alignment


def test_oracle_mode_posteriors_equal_labels():
    sim = generate(ScenarioSpec(n_utterances=30, seed=3), CFG)
    vad_cls, punc_cls = sim.posteriors.classes()
    assert np.array_equal(vad_cls, sim.labels.vad)
    assert np.array_equal(punc_cls, sim.labels.punc)
    assert sim.posteriors == PosteriorStream.one_hot(sim.labels.vad, sim.labels.punc)
    assert sim.labels == derive_labels(sim.alignment, CFG)


def test_layout_and_quota():
    spec = ScenarioSpec(n_utterances=10, speech_ms=(100, 200), tail_silence_ms=(300, 400),
                        punctuation_mix=(0.5, 0.3, 0.2), seed=0)
    sim = generate(spec, CFG)
    a = sim.alignment
    assert len(a.speech_intervals) == 10
    assert a.speech_intervals[0][0] == 0
    for (s, e), nxt in zip(a.speech_intervals, a.speech_intervals[1:] + ((a.total_frames, None),)):
        assert 10 <= e - s <= 20
        assert 30 <= nxt[0] - e <= 40
    assert sim.stats.punctuation_counts == {"e_punc": 5, "ne_punc": 3, "none": 2}
    kinds = [c for _, c in a.punc_events]
    assert kinds.count(PuncClass.EPUNC) == 5 and kinds.count(PuncClass.NEPUNC) == 3


@pytest.mark.parametrize("n, fractions, expected", [
    (10, (0.5, 0.3, 0.2), [5, 3, 2]),
    (7, (1 / 3, 1 / 3, 1 / 3), [3, 2, 2]),
    (10000, (0.8931, 0.0528, 0.0541), [8931, 528, 541]),
])
def test_quota(n, fractions, expected):
    assert _quota(n, fractions) == expected


def test_e_punc_only_long_tails_all_semantic():
    spec = ScenarioSpec(n_utterances=50, tail_silence_ms=(700, 1500), punctuation_mix=(1, 0, 0), seed=5)
    sim = generate(spec, CFG)
    events = oracle_segment(sim.alignment, CFG)
    assert len(events) == 50
    assert all(ev.trigger in (TriggerKind.ENDPOINT, TriggerKind.EPUNC_SILENCE) for ev in events)
    assert segment_stream(sim.posteriors, CFG) == events


def test_sub_threshold_tails_are_flagged():
    spec = ScenarioSpec(n_utterances=40, tail_silence_ms=(10, 200), punctuation_mix=(0.5, 0.5, 0), seed=1)
    sim = generate(spec, CFG)
    assert sim.stats.sub_threshold_punctuated_tails == 40


def test_accuracy_zero_flips_every_endpoint_frame():
    spec = ScenarioSpec(n_utterances=20, tail_silence_ms=(500, 900), endpoint_model_accuracy=0.0, seed=9)
    sim = generate(spec, CFG)
    vad_cls, _ = sim.posteriors.classes()
    assert not (vad_cls == VadClass.ENDPOINT).any()
    assert sim.stats.endpoint_frames_flipped == sim.stats.endpoint_frames > 0
    flipped = (sim.labels.vad == VadClass.ENDPOINT)
    assert (vad_cls[flipped] == VadClass.SILENCE).all()


def test_punc_drop_removes_whole_windows():
    spec = ScenarioSpec(n_utterances=40, punctuation_mix=(1, 0, 0), punc_drop_prob=1.0, seed=2)
    sim = generate(spec, CFG)
    _, punc_cls = sim.posteriors.classes()
    assert not punc_cls.any()
    assert sim.stats.punc_events_dropped == 40
    assert sim.labels.punc.any()  # ground truth untouched


@pytest.mark.parametrize("kwargs, fragment", [
    (dict(punctuation_mix=(0.5, 0.3, 0.1)), "sums to"),
    (dict(speech_ms=(105, 200)), "off the"),
    (dict(tail_silence_ms=(300, 100)), "min <= max"),
    (dict(endpoint_model_accuracy=1.5), "endpoint_model_accuracy"),
    (dict(n_utterances=0), "n_utterances"),
])
def test_invalid_specs(kwargs, fragment):
    spec = ScenarioSpec(**{"n_utterances": 5, **kwargs})
    with pytest.raises(ScenarioError, match=fragment):
        generate(spec, CFG)


def test_spec_dict_round_trip():
    spec = ScenarioSpec(n_utterances=7, speech_ms=(10, 20), punctuation_mix=(0.2, 0.3, 0.5), seed=11)
    assert ScenarioSpec.from_dict(spec.to_dict()) == spec


# --- oracle ------------------------------------------------------------------

def test_oracle_e_punc_500ms():
    a = Alignment(65, [(0, 10), (60, 65)], [(10, PuncClass.EPUNC)])
    assert oracle_segment(a, CFG)[0] == SegmentationEvent(0, 10, TriggerKind.ENDPOINT, 40, 300)


def test_oracle_short_unpunctuated_tail_merges():
    a = Alignment(100, [(0, 10), (70, 80)])
    events = oracle_segment(a, CFG)
    assert events == [SegmentationEvent(0, 80, TriggerKind.STREAM_END, 100, 200)]


def test_oracle_long_unpunctuated_tail():
    a = Alignment(110, [(0, 10), (100, 110)])
    events = oracle_segment(a, CFG)
    assert events[0] == SegmentationEvent(0, 10, TriggerKind.MAX_SILENCE, 80, 700)
    assert events[1] == SegmentationEvent(100, 110, TriggerKind.STREAM_END, 110, 0)


def test_oracle_traditional():
    a = Alignment(200, [(0, 10), (100, 110)], [(10, PuncClass.EPUNC)])
    events = oracle_segment(a, SegmenterConfig(mode=Mode.TRADITIONAL))
    assert [ev.trigger for ev in events] == [TriggerKind.MAX_SILENCE, TriggerKind.MAX_SILENCE]
    assert [ev.latency_ms for ev in events] == [700, 700]


@settings(max_examples=150, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.sampled_from([(1, 0, 0), (0, 1, 0), (0, 0, 1), (0.5, 0.3, 0.2)]),
    st.sampled_from(list(Mode)),
    st.integers(0, 3),
)
def test_oracle_matches_segmenter(seed, mix, mode, lookback):
    cfg = SegmenterConfig(mode=mode, punc_lookback_frames=lookback)
    spec = ScenarioSpec(n_utterances=5, speech_ms=(10, 300), tail_silence_ms=(10, 1000),
                        punctuation_mix=mix, seed=seed)
    sim = generate(spec, cfg)
    assert segment_stream(sim.posteriors, cfg) == oracle_segment(sim.alignment, cfg)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 0.6))
def test_lower_accuracy_never_lowers_mean_latency(seed, drop):
    # with punctuation intact any tails work; with drops the tails must exceed t_max
    tails = (10, 1200) if drop == 0 else (710, 1200)
    means = []
    for acc in (1.0, 0.7, 0.3, 0.0):
        spec = ScenarioSpec(n_utterances=15, tail_silence_ms=tails, endpoint_model_accuracy=acc,
                            punc_drop_prob=drop, seed=seed)
        means.append(latency_summary(segment_stream(generate(spec, CFG).posteriors, CFG)).mean_ms or 0.0)
    assert all(a <= b + 1e-9 for a, b in zip(means, means[1:]))


def test_drop_with_short_tails_can_break_monotonicity():
    # a missed endpoint after a dropped comma merges a 400 ms cut away
    a = Alignment(130, [(0, 10), (60, 70), (110, 120)], [(10, PuncClass.NEPUNC), (70, PuncClass.EPUNC)])
    labels = derive_labels(a, CFG)
    dropped_punc = derive_labels(Alignment(130, a.speech_intervals, [(70, PuncClass.EPUNC)]), CFG).punc
    hit = segment_stream(PosteriorStream.one_hot(labels.vad, dropped_punc), CFG)
    vad_missed = labels.vad.copy()
    vad_missed[50:60] = VadClass.SILENCE
    miss = segment_stream(PosteriorStream.one_hot(vad_missed, dropped_punc), CFG)
    assert latency_summary(miss).mean_ms < latency_summary(hit).mean_ms
