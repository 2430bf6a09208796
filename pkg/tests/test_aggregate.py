import random
from io import StringIO

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classrecap.aggregate import (
    MinuteAggregate,
    minute_aggregates,
    missed_for_session,
    missed_minutes,
    session_threshold,
    write_aggregates_csv,
)
from classrecap.attention import AttentionSample, AttentionTrace
from classrecap.errors import NoCoveredMinutesError


def trace_from_levels(levels_by_t: dict[int, float]) -> AttentionTrace:
    samples = [
        AttentionSample(t=t, level=lv, face_detected=True)
        for t, lv in sorted(levels_by_t.items())
    ]
    return AttentionTrace("stu", "ses", samples)


def full_minutes(levels: list[float]) -> AttentionTrace:
    """One covered minute per entry: all 60 seconds at that level."""
    return trace_from_levels(
        {k * 60 + i: lv for k, lv in enumerate(levels) for i in range(60)}
    )


def covered_agg(k: int, level: float) -> MinuteAggregate:
    return MinuteAggregate(k, level, 60, True)


class TestMinuteAggregates:
    def test_constant_session(self):
        aggs = minute_aggregates(full_minutes([0.4, 0.4]), 120)
        assert len(aggs) == 2
        assert all(a.covered and a.mean_level == pytest.approx(0.4) for a in aggs)
        assert all(a.sample_count == 60 for a in aggs)

    def test_sparse_minute_fails_quorum(self):
        trace = trace_from_levels({i * 6: 0.9 for i in range(10)})  # 10 samples in minute 0
        aggs = minute_aggregates(trace, 60)
        assert aggs[0].sample_count == 10
        assert aggs[0].covered is False
        assert aggs[0].mean_level == pytest.approx(0.9)

    def test_empty_trace(self):
        aggs = minute_aggregates(trace_from_levels({}), 180)
        assert len(aggs) == 3
        assert all(a.sample_count == 0 and not a.covered and a.mean_level is None for a in aggs)

    def test_minute_count_is_ceiling(self):
        assert len(minute_aggregates(trace_from_levels({}), 61)) == 2
        assert len(minute_aggregates(trace_from_levels({}), 60)) == 1
        assert len(minute_aggregates(trace_from_levels({}), 59)) == 1

    def test_out_of_window_samples_ignored(self):
        trace = trace_from_levels({0: 0.5, 59: 0.5, 60: 0.9})
        aggs = minute_aggregates(trace, 60)
        assert aggs[0].sample_count == 2

    @given(
        st.dictionaries(st.integers(0, 299), st.floats(0, 1), max_size=150),
        st.integers(1, 300),
    )
    @settings(max_examples=100)
    def test_mean_within_minute_extremes(self, levels_by_t, duration):
        aggs = minute_aggregates(trace_from_levels(levels_by_t), duration)
        assert len(aggs) == -(-duration // 60)
        for a in aggs:
            inside = [
                lv
                for t, lv in levels_by_t.items()
                if 0 <= t < duration and t // 60 == a.minute_index
            ]
            assert a.sample_count == len(inside)
            if inside:
                assert min(inside) - 1e-12 <= a.mean_level <= max(inside) + 1e-12


class TestSessionThreshold:
    def test_even_count_median(self):
        aggs = [covered_agg(k, lv) for k, lv in enumerate([0.8, 0.2, 0.9, 0.1])]
        assert session_threshold(aggs) == pytest.approx(0.5)

    def test_constant_levels(self):
        aggs = [covered_agg(k, 0.4) for k in range(5)]
        assert session_threshold(aggs) == pytest.approx(0.4)

    def test_single_minute(self):
        assert session_threshold([covered_agg(0, 0.7)]) == pytest.approx(0.7)

    def test_uncovered_minutes_excluded(self):
        aggs = [covered_agg(0, 0.5), MinuteAggregate(1, 0.1, 5, False)]
        assert session_threshold(aggs) == pytest.approx(0.5)

    def test_no_covered_minutes_raises(self):
        with pytest.raises(NoCoveredMinutesError):
            session_threshold([MinuteAggregate(0, None, 0, False)])

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=61))
    def test_median_matches_sort_oracle(self, levels):
        aggs = [covered_agg(k, lv) for k, lv in enumerate(levels)]
        got = session_threshold(aggs)
        ordered = sorted(levels)
        n = len(ordered)
        expect = ordered[n // 2] if n % 2 else (ordered[n // 2 - 1] + ordered[n // 2]) / 2
        assert got == pytest.approx(expect)


class TestMissedMinutes:
    def test_strictly_below_threshold(self):
        aggs = [covered_agg(k, lv) for k, lv in enumerate([0.8, 0.2, 0.9, 0.1])]
        missed = missed_minutes(aggs, 0.5)
        assert missed.minutes == [1, 3]
        assert missed.threshold_used == pytest.approx(0.5)

    def test_ties_are_not_missed(self):
        aggs = [covered_agg(k, 0.4) for k in range(4)] + [MinuteAggregate(4, 0.4, 10, False)]
        missed = missed_minutes(aggs, 0.4)
        assert missed.minutes == [4]  # only the uncovered one

    def test_uncovered_always_missed(self):
        aggs = [covered_agg(0, 0.9), MinuteAggregate(1, None, 0, False)]
        assert missed_minutes(aggs, 0.1).minutes == [1]

    def test_whole_session_fallback(self):
        aggs = [MinuteAggregate(k, None, 0, False) for k in range(3)]
        missed = missed_for_session(aggs, "ses", "stu")
        assert missed.minutes == [0, 1, 2]
        assert missed.threshold_used is None

    def test_fallback_uses_threshold_when_possible(self):
        aggs = [covered_agg(0, 0.3), covered_agg(1, 0.6)]
        missed = missed_for_session(aggs)
        assert missed.threshold_used == pytest.approx(0.45)
        assert missed.minutes == [0]

    @given(
        st.lists(st.floats(0, 1), min_size=1, max_size=60),
        st.floats(0, 1),
        st.floats(0, 1),
    )
    @settings(max_examples=150)
    def test_monotone_in_threshold(self, levels, t1, t2):
        t1, t2 = min(t1, t2), max(t1, t2)
        aggs = [covered_agg(k, lv) for k, lv in enumerate(levels)]
        low = set(missed_minutes(aggs, t1).minutes)
        high = set(missed_minutes(aggs, t2).minutes)
        assert low <= high

    def test_distinct_fully_covered_session_misses_half(self):
        rng = random.Random(11)
        for _ in range(25):
            m = rng.randint(1, 40)
            levels = rng.sample([i / 1000 for i in range(1000)], m)
            aggs = [covered_agg(k, lv) for k, lv in enumerate(levels)]
            missed = missed_for_session(aggs)
            assert len(missed.minutes) == m // 2


def test_aggregates_csv_shape():
    aggs = [covered_agg(0, 0.5), MinuteAggregate(1, None, 0, False)]
    buf = StringIO()
    write_aggregates_csv(aggs, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "minute_index,mean_level,sample_count,covered"
    assert lines[1] == "0,0.500000,60,true"
    assert lines[2] == "1,,0,false"
