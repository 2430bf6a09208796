"""Eye-aspect-ratio attention estimation and per-second trace handling.

Capture clients (and the simulator) turn eye-landmark frames into one
attention sample per wall-clock second.  Levels are normalized to [0, 1]
against a per-student eye-aspect-ratio baseline, so the same droop means
the same thing for different faces.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, TextIO

from .errors import DegenerateEyeWidthError

Point = tuple[float, float]

# Eye width below this is treated as degenerate (division blows up).
MIN_EYE_WIDTH = 1e-9

# Cold-start baseline: typical open-eye aspect-ratio magnitudes, used until
# a student has contributed enough frames of their own.
DEFAULT_EAR_MEAN = 0.30
DEFAULT_EAR_SIGMA = 0.05
MIN_BASELINE_FRAMES = 300

# A second counts as "face present" when at least half its frames saw a face.
FACE_QUORUM = 0.5

SOURCE_LIVE = "live-capture"
SOURCE_SIMULATED = "simulated"


@dataclass(frozen=True)
class EyeLandmarks:
    """Six landmark points around one eye, indexed the usual way:

    p1/p4 are the horizontal corners, p2/p6 and p3/p5 the upper/lower
    lid pairs.  Units are irrelevant; only ratios are used.
    """

    p1: Point
    p2: Point
    p3: Point
    p4: Point
    p5: Point
    p6: Point

    def points(self) -> tuple[Point, ...]:
        return (self.p1, self.p2, self.p3, self.p4, self.p5, self.p6)

    def is_finite(self) -> bool:
        return all(math.isfinite(x) and math.isfinite(y) for x, y in self.points())


@dataclass(frozen=True)
class LandmarkFrame:
    """One capture frame: either landmark sets for one/both eyes or no face."""

    t_ms: int
    left: Optional[EyeLandmarks] = None
    right: Optional[EyeLandmarks] = None

    @property
    def has_face(self) -> bool:
        return self.left is not None or self.right is not None


@dataclass(frozen=True)
class AttentionSample:
    t: int
    level: float
    face_detected: bool
    source: str = SOURCE_LIVE

    def __post_init__(self):
        if not 0.0 <= self.level <= 1.0:
            raise ValueError(f"level {self.level} outside [0, 1]")
        if not self.face_detected and self.level != 0.0:
            raise ValueError("face_detected=False requires level 0")


@dataclass
class AttentionTrace:
    """Ordered per-second samples for one student in one session.

    ``t0_ms`` anchors sample offsets in absolute time: a sample's wall-clock
    time is ``t0_ms + 1000 * t``.  Raw ingested traces use ``t0_ms = 0``
    (t in epoch seconds); trimmed traces use the recording start.
    """

    student_ref: str
    session_ref: str
    samples: list[AttentionSample] = field(default_factory=list)
    t0_ms: int = 0

    def __post_init__(self):
        for a, b in zip(self.samples, self.samples[1:]):
            if b.t <= a.t:
                raise ValueError("samples must be strictly increasing in t")

    def levels(self) -> list[float]:
        return [s.level for s in self.samples]

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class StudentBaseline:
    """Running eye-aspect-ratio statistics for one student.

    Variance is the population variance.  ``frames_observed == 0`` marks a
    cold (unset) baseline.
    """

    student_ref: str
    ear_mean: float = DEFAULT_EAR_MEAN
    ear_variance: float = DEFAULT_EAR_SIGMA**2
    frames_observed: int = 0


def default_baseline(student_ref: str) -> StudentBaseline:
    return StudentBaseline(student_ref)


def compute_ear(eye: EyeLandmarks) -> float:
    """Eye aspect ratio: mean lid gap over eye width.

    Invariant under translation, rotation, and uniform scaling.  Raises
    DegenerateEyeWidthError when the corner points (p1, p4) coincide.
    """
    width = math.dist(eye.p1, eye.p4)
    if width < MIN_EYE_WIDTH:
        raise DegenerateEyeWidthError(f"eye width {width} below {MIN_EYE_WIDTH}")
    return (math.dist(eye.p2, eye.p6) + math.dist(eye.p3, eye.p5)) / (2.0 * width)


def _eye_ear(eye: Optional[EyeLandmarks]) -> Optional[float]:
    if eye is None or not eye.is_finite():
        return None
    try:
        return compute_ear(eye)
    except DegenerateEyeWidthError:
        # A bad frame must not abort a live stream.
        return None


def frame_attention(
    frame: Optional[LandmarkFrame], baseline: Optional[StudentBaseline]
) -> tuple[float, bool]:
    """Map one frame to (attention in [0, 1], face_detected).

    Attention is a linear clamp of the frame's eye aspect ratio between
    ``max(0, mean - 2*sigma)`` (fully inattentive) and ``mean`` (fully
    attentive), using the student's baseline once it has seen at least
    MIN_BASELINE_FRAMES frames and the cold-start default before that.
    Left/right ratios are averaged; a single valid eye is used alone.
    """
    if frame is None or not frame.has_face:
        return 0.0, False

    ears = [e for e in (_eye_ear(frame.left), _eye_ear(frame.right)) if e is not None]
    if not ears:
        return 0.0, False
    ear = sum(ears) / len(ears)

    if baseline is None or baseline.frames_observed < MIN_BASELINE_FRAMES:
        mean, sigma = DEFAULT_EAR_MEAN, DEFAULT_EAR_SIGMA
    else:
        mean, sigma = baseline.ear_mean, math.sqrt(baseline.ear_variance)

    ear_low = max(0.0, mean - 2.0 * sigma)
    span = mean - ear_low
    if span <= 0.0:
        # Zero-variance baseline: the clamp degenerates to a step at the mean.
        return (1.0 if ear >= mean else 0.0), True
    attention = (ear - ear_low) / span
    return min(1.0, max(0.0, attention)), True


def second_attention(
    frame_results: Sequence[tuple[float, bool]],
    t: int,
    source: str = SOURCE_LIVE,
) -> Optional[AttentionSample]:
    """Reduce all frame results within one wall-clock second to one sample.

    The second counts as face-detected when at least half its frames saw a
    face; the level is the mean over face frames, else 0.  An empty frame
    list yields no sample (a coverage gap).
    """
    if not frame_results:
        return None
    face_frames = [a for a, seen in frame_results if seen]
    face = len(face_frames) * 2 >= len(frame_results)
    if not face:
        return AttentionSample(t=t, level=0.0, face_detected=False, source=source)
    level = sum(face_frames) / len(face_frames)
    return AttentionSample(t=t, level=level, face_detected=True, source=source)


def update_baseline(
    baseline: StudentBaseline, ear_observations: Sequence[float]
) -> StudentBaseline:
    """Merge new eye-aspect-ratio observations into the running baseline.

    Streaming mean/population-variance merge: splitting the observations
    into any batches gives the same result up to float tolerance.  An empty
    observation list returns the baseline unchanged.
    """
    n2 = len(ear_observations)
    if n2 == 0:
        return baseline
    for x in ear_observations:
        if not math.isfinite(x) or x < 0:
            raise ValueError(f"bad eye-aspect-ratio observation {x!r}")

    mean2 = sum(ear_observations) / n2
    m2_2 = sum((x - mean2) ** 2 for x in ear_observations)

    n1 = baseline.frames_observed
    if n1 == 0:
        return replace(
            baseline, ear_mean=mean2, ear_variance=m2_2 / n2, frames_observed=n2
        )

    mean1 = baseline.ear_mean
    m2_1 = baseline.ear_variance * n1
    n = n1 + n2
    delta = mean2 - mean1
    mean = mean1 + delta * n2 / n
    m2 = m2_1 + m2_2 + delta * delta * n1 * n2 / n
    return replace(baseline, ear_mean=mean, ear_variance=m2 / n, frames_observed=n)


def trim_to_session(
    trace: AttentionTrace, recording_start_ms: int, recording_end_ms: int
) -> AttentionTrace:
    """Keep samples inside [recording_start, recording_end) and rebase t to
    seconds from recording start.  Idempotent: a trace already trimmed to the
    same window passes through unchanged.
    """
    if recording_start_ms >= recording_end_ms:
        raise ValueError("recording_start must precede recording_end")
    kept = []
    for s in trace.samples:
        abs_ms = trace.t0_ms + 1000 * s.t
        if recording_start_ms <= abs_ms < recording_end_ms:
            kept.append(replace(s, t=(abs_ms - recording_start_ms) // 1000))
    return AttentionTrace(
        student_ref=trace.student_ref,
        session_ref=trace.session_ref,
        samples=kept,
        t0_ms=recording_start_ms,
    )


def frames_to_trace(
    frames: Iterable[LandmarkFrame],
    baseline: Optional[StudentBaseline],
    student_ref: str = "",
    session_ref: str = "",
    source: str = SOURCE_LIVE,
) -> AttentionTrace:
    """Run the full capture pipeline: frames -> per-second samples.

    Output t values are epoch seconds (t0_ms = 0); trim_to_session rebases
    them once the recording boundaries are known.
    """
    by_second: dict[int, list[tuple[float, bool]]] = {}
    for frame in frames:
        by_second.setdefault(frame.t_ms // 1000, []).append(
            frame_attention(frame, baseline)
        )
    samples = []
    for sec in sorted(by_second):
        sample = second_attention(by_second[sec], t=sec, source=source)
        if sample is not None:
            samples.append(sample)
    return AttentionTrace(student_ref, session_ref, samples, t0_ms=0)


# --- landmark frame wire format ---------------------------------------------
#
# Newline-delimited records, one eye per line:
#   t_ms, eye, x1,y1,x2,y2,x3,y3,x4,y4,x5,y5,x6,y6     eye in {L, R}
#   t_ms, NOFACE
# Lines sharing a t_ms form one frame.


def parse_landmark_lines(lines: Iterable[str]) -> list[LandmarkFrame]:
    eyes: dict[int, dict[str, EyeLandmarks]] = {}
    noface: set[int] = set()
    order: list[int] = []

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        try:
            t_ms = int(fields[0])
        except ValueError:
            raise ValueError(f"line {lineno}: bad timestamp {fields[0]!r}")
        if t_ms not in eyes and t_ms not in noface:
            order.append(t_ms)
        tag = fields[1].upper() if len(fields) > 1 else ""
        if tag == "NOFACE":
            if len(fields) != 2:
                raise ValueError(f"line {lineno}: NOFACE record takes no coordinates")
            noface.add(t_ms)
            continue
        if tag not in ("L", "R"):
            raise ValueError(f"line {lineno}: eye must be L, R, or NOFACE")
        if len(fields) != 14:
            raise ValueError(f"line {lineno}: expected 12 coordinates, got {len(fields) - 2}")
        coords = [float(v) for v in fields[2:]]
        pts = [(coords[i], coords[i + 1]) for i in range(0, 12, 2)]
        eyes.setdefault(t_ms, {})[tag] = EyeLandmarks(*pts)

    conflicting = noface & set(eyes)
    if conflicting:
        raise ValueError(f"t_ms {sorted(conflicting)[0]} has both NOFACE and landmarks")

    frames = []
    for t_ms in order:
        if t_ms in noface:
            frames.append(LandmarkFrame(t_ms=t_ms))
        else:
            by_eye = eyes[t_ms]
            frames.append(
                LandmarkFrame(t_ms=t_ms, left=by_eye.get("L"), right=by_eye.get("R"))
            )
    return frames


def read_landmark_file(path: str) -> list[LandmarkFrame]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_landmark_lines(fh)


# --- trace CSV export (t_seconds,level,face_detected) ------------------------


def write_trace_csv(trace: AttentionTrace, out: TextIO) -> None:
    writer = csv.writer(out)
    writer.writerow(["t_seconds", "level", "face_detected"])
    for s in trace.samples:
        writer.writerow([s.t, f"{s.level:.6f}", "true" if s.face_detected else "false"])


def read_trace_csv(
    fh: TextIO, student_ref: str = "", session_ref: str = "", source: str = SOURCE_LIVE
) -> AttentionTrace:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["t_seconds", "level", "face_detected"]:
        raise ValueError("expected header t_seconds,level,face_detected")
    samples = []
    for row in reader:
        if not row:
            continue
        face = row[2].strip().lower() in ("true", "1")
        samples.append(
            AttentionSample(
                t=int(row[0]), level=float(row[1]), face_detected=face, source=source
            )
        )
    return AttentionTrace(student_ref, session_ref, samples)
