import math
import random
from io import StringIO

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classrecap.attention import (
    DEFAULT_EAR_MEAN,
    MIN_BASELINE_FRAMES,
    AttentionSample,
    AttentionTrace,
    EyeLandmarks,
    LandmarkFrame,
    StudentBaseline,
    compute_ear,
    default_baseline,
    frame_attention,
    frames_to_trace,
    parse_landmark_lines,
    read_trace_csv,
    second_attention,
    trim_to_session,
    update_baseline,
    write_trace_csv,
)
from classrecap.errors import DegenerateEyeWidthError

OPEN_EYE = EyeLandmarks(
    p1=(0.0, 0.0), p2=(0.5, 0.5), p3=(1.5, 0.5), p4=(2.0, 0.0), p5=(1.5, -0.5), p6=(0.5, -0.5)
)

WARM = StudentBaseline("s", ear_mean=0.30, ear_variance=0.0025, frames_observed=1000)


def eye_with_ear(ear: float) -> EyeLandmarks:
    # Width 2, both lid gaps 2*ear: ratio = (2*ear + 2*ear) / (2*2) = ear.
    h = ear
    return EyeLandmarks(
        p1=(0.0, 0.0), p2=(0.5, h), p3=(1.5, h), p4=(2.0, 0.0), p5=(1.5, -h), p6=(0.5, -h)
    )


class TestComputeEar:
    def test_fully_closed_eye_is_zero(self):
        closed = EyeLandmarks(
            p1=(0.0, 0.0), p2=(0.5, 0.0), p3=(1.5, 0.0), p4=(2.0, 0.0),
            p5=(1.5, 0.0), p6=(0.5, 0.0),
        )
        assert compute_ear(closed) == 0.0

    def test_half_open_reference_eye(self):
        # heights 1 and 1 over width 2 -> (1 + 1) / (2 * 2) = 0.5
        assert compute_ear(OPEN_EYE) == pytest.approx(0.5)

    def test_zero_width_raises(self):
        degenerate = EyeLandmarks(
            p1=(1.0, 1.0), p2=(0.5, 0.5), p3=(1.5, 0.5), p4=(1.0, 1.0),
            p5=(1.5, -0.5), p6=(0.5, -0.5),
        )
        with pytest.raises(DegenerateEyeWidthError):
            compute_ear(degenerate)

    @given(
        angle=st.floats(0, 2 * math.pi),
        scale=st.floats(0.1, 50),
        dx=st.floats(-100, 100),
        dy=st.floats(-100, 100),
        ear=st.floats(0.05, 0.6),
    )
    @settings(max_examples=200)
    def test_similarity_invariance(self, angle, scale, dx, dy, ear):
        eye = eye_with_ear(ear)
        cos_a, sin_a = math.cos(angle), math.sin(angle)

        def transform(p):
            x, y = p
            return (
                scale * (x * cos_a - y * sin_a) + dx,
                scale * (x * sin_a + y * cos_a) + dy,
            )

        moved = EyeLandmarks(*(transform(p) for p in eye.points()))
        assert abs(compute_ear(moved) - compute_ear(eye)) < 1e-9


class TestFrameAttention:
    def test_no_face_frame(self):
        assert frame_attention(LandmarkFrame(t_ms=0), WARM) == (0.0, False)
        assert frame_attention(None, WARM) == (0.0, False)

    def test_ear_at_baseline_mean_is_fully_attentive(self):
        level, face = frame_attention(
            LandmarkFrame(0, left=eye_with_ear(0.30), right=eye_with_ear(0.30)), WARM
        )
        assert face and level == 1.0
        # Zero variance degenerates to a step at the mean, still 1.0.
        flat = StudentBaseline("s", 0.30, 0.0, frames_observed=1000)
        level, face = frame_attention(LandmarkFrame(0, left=eye_with_ear(0.30)), flat)
        assert face and level == 1.0

    def test_halfway_between_low_and_open(self):
        # mean 0.30, sigma 0.05 -> low bound 0.20; ear 0.25 lands halfway
        level, face = frame_attention(LandmarkFrame(0, left=eye_with_ear(0.25)), WARM)
        assert face
        assert level == pytest.approx(0.5)

    def test_degenerate_eyes_do_not_abort(self):
        bad = EyeLandmarks(
            p1=(1.0, 1.0), p2=(1.0, 1.0), p3=(1.0, 1.0), p4=(1.0, 1.0),
            p5=(1.0, 1.0), p6=(1.0, 1.0),
        )
        assert frame_attention(LandmarkFrame(0, left=bad, right=bad), WARM) == (0.0, False)

    def test_single_valid_eye_used_alone(self):
        bad = EyeLandmarks(
            p1=(1.0, 1.0), p2=(1.0, 1.0), p3=(1.0, 1.0), p4=(1.0, 1.0),
            p5=(1.0, 1.0), p6=(1.0, 1.0),
        )
        one_eyed, _ = frame_attention(LandmarkFrame(0, left=eye_with_ear(0.25), right=bad), WARM)
        both, _ = frame_attention(LandmarkFrame(0, left=eye_with_ear(0.25)), WARM)
        assert one_eyed == both == pytest.approx(0.5)

    def test_cold_baseline_uses_default_constants(self):
        cold = default_baseline("s")
        assert cold.frames_observed < MIN_BASELINE_FRAMES
        level, _ = frame_attention(LandmarkFrame(0, left=eye_with_ear(DEFAULT_EAR_MEAN)), cold)
        assert level == 1.0
        # A young baseline with wild stats is ignored until it matures.
        young = StudentBaseline("s", ear_mean=0.9, ear_variance=0.1, frames_observed=10)
        level, _ = frame_attention(LandmarkFrame(0, left=eye_with_ear(DEFAULT_EAR_MEAN)), young)
        assert level == 1.0

    @given(ears=st.lists(st.floats(0.0, 1.0), min_size=2, max_size=10))
    def test_monotone_in_ear_and_bounded(self, ears):
        ears = sorted(ears)
        levels = [frame_attention(LandmarkFrame(0, left=eye_with_ear(e)), WARM)[0] for e in ears]
        assert all(0.0 <= lv <= 1.0 for lv in levels)
        assert all(b >= a for a, b in zip(levels, levels[1:]))


class TestSecondAttention:
    def test_mean_over_face_frames(self):
        s = second_attention([(1.0, True), (0.0, True)], t=4)
        assert s == AttentionSample(t=4, level=0.5, face_detected=True)

    def test_face_quorum_failure_zeroes_level(self):
        s = second_attention([(0.8, True), (0.0, False), (0.0, False)], t=0)
        assert s.face_detected is False and s.level == 0.0

    def test_single_frame_identity(self):
        s = second_attention([(0.7, True)], t=9)
        assert s.level == pytest.approx(0.7) and s.face_detected

    def test_exact_half_counts_as_face(self):
        s = second_attention([(0.6, True), (0.0, False)], t=0)
        assert s.face_detected and s.level == pytest.approx(0.6)

    def test_empty_second_yields_no_sample(self):
        assert second_attention([], t=0) is None


class TestUpdateBaseline:
    def test_constant_observations(self):
        b = update_baseline(default_baseline("s"), [0.3, 0.3, 0.3])
        assert b.ear_mean == pytest.approx(0.3)
        assert b.ear_variance == pytest.approx(0.0)
        assert b.frames_observed == 3

    def test_two_point_closed_form(self):
        b = update_baseline(default_baseline("s"), [0.2, 0.4])
        assert b.ear_mean == pytest.approx(0.3)
        assert b.ear_variance == pytest.approx(0.01)  # population variance

    def test_empty_update_is_identity(self):
        b = StudentBaseline("s", 0.3, 0.002, frames_observed=100)
        assert update_baseline(b, []) is b

    @given(
        data=st.lists(st.floats(0.01, 1.0), min_size=1, max_size=60),
        split=st.integers(0, 60),
    )
    @settings(max_examples=200)
    def test_batched_equals_whole(self, data, split):
        split = min(split, len(data))
        whole = update_baseline(default_baseline("s"), data)
        parts = update_baseline(
            update_baseline(default_baseline("s"), data[:split]), data[split:]
        )
        assert parts.frames_observed == whole.frames_observed == len(data)
        assert parts.ear_mean == pytest.approx(whole.ear_mean, rel=1e-9, abs=1e-12)
        assert parts.ear_variance == pytest.approx(whole.ear_variance, rel=1e-9, abs=1e-12)


def make_trace(offsets, t0_ms=0, level=0.5):
    return AttentionTrace(
        "stu", "ses",
        [AttentionSample(t=t, level=level, face_detected=True) for t in offsets],
        t0_ms=t0_ms,
    )


class TestTrimToSession:
    def test_interval_filter_and_rebase(self):
        # Offsets relative to an anchor; recording spans [anchor, anchor+2700s).
        anchor = 1_600_000_000_000
        trace = make_trace([-10, 5, 3000], t0_ms=anchor)
        trimmed = trim_to_session(trace, anchor, anchor + 2_700_000)
        assert [s.t for s in trimmed.samples] == [5]
        assert trimmed.t0_ms == anchor

    def test_fully_inside_is_unchanged(self):
        anchor = 1_000_000
        trace = make_trace([0, 1, 2, 59], t0_ms=anchor)
        trimmed = trim_to_session(trace, anchor, anchor + 60_000)
        assert [s.t for s in trimmed.samples] == [0, 1, 2, 59]

    def test_idempotent(self):
        anchor = 777_000
        trace = make_trace(list(range(-5, 100, 7)), t0_ms=anchor)
        once = trim_to_session(trace, anchor, anchor + 50_000)
        twice = trim_to_session(once, anchor, anchor + 50_000)
        assert once == twice
        assert all(0 <= s.t < 50 for s in once.samples)

    def test_epoch_seconds_base(self):
        # Raw ingest traces carry epoch seconds with t0_ms = 0.
        trace = make_trace([999, 1000, 1059, 1060], t0_ms=0)
        trimmed = trim_to_session(trace, 1_000_000, 1_060_000)
        assert [s.t for s in trimmed.samples] == [0, 59]

    def test_fully_outside_becomes_empty(self):
        trace = make_trace([0, 1, 2], t0_ms=0)
        assert trim_to_session(trace, 10_000_000, 10_060_000).samples == []

    @given(
        offsets=st.lists(st.integers(-300, 300), min_size=0, max_size=50, unique=True),
        start_s=st.integers(-100, 100),
        dur=st.integers(1, 200),
    )
    @settings(max_examples=200)
    def test_idempotence_property(self, offsets, start_s, dur):
        trace = make_trace(sorted(offsets))
        once = trim_to_session(trace, start_s * 1000, (start_s + dur) * 1000)
        assert trim_to_session(once, start_s * 1000, (start_s + dur) * 1000) == once
        assert all(0 <= s.t < dur for s in once.samples)


class TestLandmarkFormat:
    def test_parse_mixed_lines(self):
        lines = [
            "# capture client v1",
            "1000, L, 0,0, 0.5,0.5, 1.5,0.5, 2,0, 1.5,-0.5, 0.5,-0.5",
            "1000, R, 0,0, 0.5,0.5, 1.5,0.5, 2,0, 1.5,-0.5, 0.5,-0.5",
            "1400, NOFACE",
            "2000, L, 0,0, 0.5,0.3, 1.5,0.3, 2,0, 1.5,-0.3, 0.5,-0.3",
        ]
        frames = parse_landmark_lines(lines)
        assert len(frames) == 3
        assert frames[0].left is not None and frames[0].right is not None
        assert not frames[1].has_face
        assert frames[2].right is None
        assert compute_ear(frames[0].left) == pytest.approx(0.5)

    def test_bad_lines_rejected(self):
        with pytest.raises(ValueError):
            parse_landmark_lines(["oops, L, 0,0,0,0,0,0,0,0,0,0,0,0"])
        with pytest.raises(ValueError):
            parse_landmark_lines(["1000, X, 0,0,0,0,0,0,0,0,0,0,0,0"])
        with pytest.raises(ValueError):
            parse_landmark_lines(["1000, L, 1,2,3"])
        with pytest.raises(ValueError):
            parse_landmark_lines(
                ["1000, NOFACE", "1000, L, 0,0, 0.5,0.5, 1.5,0.5, 2,0, 1.5,-0.5, 0.5,-0.5"]
            )

    def test_frames_to_trace_groups_by_second(self):
        lines = []
        rng = random.Random(5)
        for sec in range(3):
            for frame in range(4):
                h = 0.25 + 0.05 * rng.random()
                t = 1_000_000 + sec * 1000 + frame * 250
                lines.append(
                    f"{t}, L, 0,0, 0.5,{h}, 1.5,{h}, 2,0, 1.5,{-h}, 0.5,{-h}"
                )
        frames = parse_landmark_lines(lines)
        trace = frames_to_trace(frames, WARM, student_ref="stu")
        assert [s.t for s in trace.samples] == [1000, 1001, 1002]
        assert all(s.face_detected for s in trace.samples)


class TestTraceCsv:
    def test_round_trip(self):
        trace = make_trace([0, 3, 7], level=0.25)
        buf = StringIO()
        write_trace_csv(trace, buf)
        buf.seek(0)
        back = read_trace_csv(buf, student_ref="stu", session_ref="ses")
        assert [s.t for s in back.samples] == [0, 3, 7]
        assert all(s.level == pytest.approx(0.25) for s in back.samples)

    def test_header_checked(self):
        with pytest.raises(ValueError):
            read_trace_csv(StringIO("a,b,c\n1,2,3\n"))
