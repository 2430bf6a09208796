"""Deterministic synthetic classroom generator.

Produces per-second attention traces with configurable mean, noise,
attendance windows, and note-taking toggle minutes, plus optional playback
usage events.  Everything is seeded: the same scenario file yields
byte-identical datasets, which is what the soak tests and desk experiments
rely on.  No attempt is made to model real human attention.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .aggregate import SECONDS_PER_MINUTE
from .attention import (
    DEFAULT_EAR_MEAN,
    DEFAULT_EAR_SIGMA,
    SOURCE_SIMULATED,
    AttentionSample,
    AttentionTrace,
)

# Toggle minutes swing this far around the base level each second, making
# note-taking minutes unambiguous in tests.
TOGGLE_AMPLITUDE = 0.4


@dataclass
class StudentProfile:
    student_ref: str
    base_level: float = 0.5
    noise_sigma: float = 0.0
    # Present windows as [start_s, end_s); empty means full attendance.
    attendance: list[tuple[int, int]] = field(default_factory=list)
    toggle_spans: list[int] = field(default_factory=list)  # minute indices
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.base_level <= 1.0:
            raise ValueError("base_level must be in [0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        self.attendance = sorted((int(a), int(b)) for a, b in self.attendance)
        for (a, b) in self.attendance:
            if a >= b:
                raise ValueError(f"bad attendance window [{a}, {b})")
        for (_, b), (c, _) in zip(self.attendance, self.attendance[1:]):
            if c < b:
                raise ValueError("attendance windows must be disjoint")


@dataclass
class UsageRecord:
    student_ref: str
    start_s: int
    end_s: int
    strategy: str = "full"


@dataclass
class ClassDataset:
    duration_s: int
    seed: int
    profiles: list[StudentProfile]
    traces: list[AttentionTrace]
    usage: list[UsageRecord] = field(default_factory=list)


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def generate_trace(profile: StudentProfile, duration_s: int) -> AttentionTrace:
    """One sample per second inside attendance windows; none outside.

    Toggle minutes alternate base +/- TOGGLE_AMPLITUDE each second; other
    seconds get clamped gaussian noise around the base.  Same seed, same
    trace, bit for bit.
    """
    rng = random.Random(profile.seed)
    windows = profile.attendance or [(0, duration_s)]
    toggles = set(profile.toggle_spans)
    samples = []
    for start, end in windows:
        for t in range(max(0, start), min(end, duration_s)):
            if t // SECONDS_PER_MINUTE in toggles:
                swing = TOGGLE_AMPLITUDE if t % 2 == 0 else -TOGGLE_AMPLITUDE
                level = _clamp01(profile.base_level + swing)
            elif profile.noise_sigma > 0:
                level = _clamp01(profile.base_level + rng.gauss(0.0, profile.noise_sigma))
            else:
                level = profile.base_level
            samples.append(
                AttentionSample(t=t, level=level, face_detected=True, source=SOURCE_SIMULATED)
            )
    return AttentionTrace(profile.student_ref, "", samples, t0_ms=0)


def default_class_profiles(
    n_students: int,
    duration_s: int,
    seed: int,
    n_partial: int = 0,
    n_toggle: int = 1,
    noise_sigma: float = 0.08,
) -> list[StudentProfile]:
    """A reproducible mix: the first n_toggle students get a block of
    note-taking toggle minutes, the last n_partial attend only part of the
    session (late arrival / early leave / middle chunk, cycling)."""
    if n_students < 1:
        raise ValueError("n_students must be >= 1")
    if n_partial + n_toggle > n_students:
        raise ValueError("n_partial + n_toggle exceeds n_students")
    rng = random.Random(seed)
    duration_min = max(1, duration_s // SECONDS_PER_MINUTE)
    profiles = []
    for i in range(n_students):
        base = round(rng.uniform(0.35, 0.8), 3)
        profile = StudentProfile(
            student_ref=f"sim-{i:02d}",
            base_level=base,
            noise_sigma=noise_sigma,
            seed=seed * 100003 + i,
        )
        if i < n_toggle:
            first = duration_min // 3
            profile.toggle_spans = list(range(first, min(first + 5, duration_min)))
            # Keep base +/- swing inside (floor, 1) so toggles read cleanly.
            profile.base_level = 0.5
        if i >= n_students - n_partial:
            variant = (i - (n_students - n_partial)) % 3
            if variant == 0:  # arrived late
                profile.attendance = [(duration_s // 3, duration_s)]
            elif variant == 1:  # left early
                profile.attendance = [(0, 2 * duration_s // 3)]
            else:  # stepped out in the middle
                profile.attendance = [(0, duration_s // 4), (3 * duration_s // 4, duration_s)]
        profiles.append(profile)
    return profiles


def _generate_usage(
    profiles: Sequence[StudentProfile], duration_s: int, seed: int
) -> list[UsageRecord]:
    rng = random.Random(seed ^ 0x5EED)
    duration_min = max(1, duration_s // SECONDS_PER_MINUTE)
    usage = []
    for profile in profiles:
        for _ in range(rng.randint(0, 3)):
            start_min = rng.randrange(0, duration_min)
            length_min = rng.randint(1, min(3, duration_min - start_min) or 1)
            start_s = start_min * SECONDS_PER_MINUTE
            end_s = min((start_min + length_min) * SECONDS_PER_MINUTE, duration_s)
            if end_s > start_s:
                usage.append(UsageRecord(profile.student_ref, start_s, end_s))
    return usage


def simulate_class(
    n_students: int,
    duration_s: int,
    seed: int,
    profiles: Optional[Sequence[StudentProfile]] = None,
    n_partial: int = 0,
    n_toggle: int = 1,
    with_usage: bool = False,
) -> ClassDataset:
    """Full reproducible session dataset: traces plus optional usage events.

    Pass explicit profiles (e.g. from a scenario file) to override the
    default mix.  Trace t values are seconds from recording start; loaders
    choose the wall-clock anchor.
    """
    if profiles is None:
        profiles = default_class_profiles(n_students, duration_s, seed, n_partial, n_toggle)
    else:
        profiles = list(profiles)
    traces = [generate_trace(p, duration_s) for p in profiles]
    usage = _generate_usage(profiles, duration_s, seed) if with_usage else []
    return ClassDataset(
        duration_s=duration_s, seed=seed, profiles=list(profiles), traces=traces, usage=usage
    )


def landmark_lines(
    trace: AttentionTrace, anchor_ms: int = 0, frames_per_second: int = 2
) -> list[str]:
    """Render a trace in the landmark wire format capture clients emit.

    Eye geometry is synthesized so that the attention pipeline (against the
    cold-start baseline) reproduces the trace's levels: lid height equals the
    target eye aspect ratio on a width-2 eye.  Useful for exercising the full
    frames -> samples path without a webcam.
    """
    ear_low = max(0.0, DEFAULT_EAR_MEAN - 2.0 * DEFAULT_EAR_SIGMA)
    span = DEFAULT_EAR_MEAN - ear_low
    step_ms = 1000 // frames_per_second
    lines = []
    for s in trace.samples:
        for i in range(frames_per_second):
            t_ms = anchor_ms + 1000 * s.t + i * step_ms
            if not s.face_detected:
                lines.append(f"{t_ms}, NOFACE")
                continue
            h = ear_low + s.level * span
            coords = f"0,0, 0.5,{h:.9f}, 1.5,{h:.9f}, 2,0, 1.5,{-h:.9f}, 0.5,{-h:.9f}"
            lines.append(f"{t_ms}, L, {coords}")
            lines.append(f"{t_ms}, R, {coords}")
    return lines


# --- scenario files (JSON or TOML) -------------------------------------------


def _profile_from_mapping(raw: dict, index: int, default_seed: int) -> StudentProfile:
    return StudentProfile(
        student_ref=raw.get("student_ref", f"sim-{index:02d}"),
        base_level=float(raw.get("base_level", 0.5)),
        noise_sigma=float(raw.get("noise_sigma", 0.0)),
        attendance=[tuple(w) for w in raw.get("attendance", [])],
        toggle_spans=[int(m) for m in raw.get("toggle_spans", [])],
        seed=int(raw.get("seed", default_seed * 100003 + index)),
    )


def load_scenario(path: str | Path) -> tuple[int, int, list[StudentProfile], bool]:
    """Read a scenario file; returns (duration_s, seed, profiles, with_usage)."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    else:
        raw = json.loads(path.read_text(encoding="utf-8"))
    duration_s = int(raw["session_duration_s"])
    seed = int(raw.get("seed", 0))
    profiles = [
        _profile_from_mapping(p, i, seed) for i, p in enumerate(raw.get("students", []))
    ]
    return duration_s, seed, profiles, bool(raw.get("usage", False))


def scenario_to_dict(dataset: ClassDataset) -> dict:
    return {
        "session_duration_s": dataset.duration_s,
        "seed": dataset.seed,
        "usage": bool(dataset.usage),
        "students": [
            {
                "student_ref": p.student_ref,
                "base_level": p.base_level,
                "noise_sigma": p.noise_sigma,
                "attendance": [list(w) for w in p.attendance],
                "toggle_spans": p.toggle_spans,
                "seed": p.seed,
            }
            for p in dataset.profiles
        ],
    }


# --- loading a dataset into a store or a live server ---------------------------

# Fixed anchor (2021-01-01T00:00:00Z) so simulated sessions are reproducible.
DEFAULT_ANCHOR_MS = 1_609_459_200_000


def _batches(trace: AttentionTrace, anchor_ms: int, batch_size: int = 600):
    batch: list[tuple[int, float, bool]] = []
    for s in trace.samples:
        batch.append((anchor_ms + 1000 * s.t, s.level, s.face_detected))
        if len(batch) == batch_size:
            yield batch
            batch = []
    if batch:
        yield batch


def load_dataset(
    store,
    dataset: ClassDataset,
    course_code: str = "SIM101",
    title: str = "Simulated class",
    anchor_ms: int = DEFAULT_ANCHOR_MS,
    recording_uri: str = "recording.mp4",
) -> dict:
    """Push a dataset through the store's normal ingest path and close the
    session; returns ids and passcodes for follow-up commands."""
    from .store import IngestBatch  # local import to keep this module light

    course = store.register_course(course_code, title)
    session = store.open_session(course.public_passcode, recording_start_ms=anchor_ms)
    for trace in dataset.traces:
        for batch in _batches(trace, anchor_ms):
            store.ingest(
                IngestBatch(course.public_passcode, trace.student_ref, batch),
                source=SOURCE_SIMULATED,
            )
    end_ms = anchor_ms + 1000 * dataset.duration_s
    store.close_session(session.session_id, course.public_passcode, end_ms, recording_uri)
    for event in dataset.usage:
        store.log_usage(
            course.public_passcode,
            event.student_ref,
            session.session_id,
            event.start_s,
            event.end_s,
            event.strategy,
            at_ms=end_ms + 60_000,
        )
    return {
        "course_code": course.code,
        "public_passcode": course.public_passcode,
        "private_passcode": course.private_passcode,
        "session_id": session.session_id,
        "duration_s": dataset.duration_s,
        "students": [p.student_ref for p in dataset.profiles],
        "usage_events": len(dataset.usage),
    }


def replay_dataset(
    base_url: str,
    dataset: ClassDataset,
    course_code: str = "SIM101",
    title: str = "Simulated class",
    anchor_ms: int = DEFAULT_ANCHOR_MS,
    recording_uri: str = "recording.mp4",
    speedup: float = 0.0,
    batch_seconds: int = 60,
) -> dict:
    """Replay a dataset through a live server's ingest API, one logical
    client (thread) per student.

    speedup > 0 paces batches at wall-clock/speedup; 0 means flat out.
    """
    import threading

    import httpx

    with httpx.Client(base_url=base_url, timeout=30.0) as client:
        course = client.post("/courses", json={"code": course_code, "title": title})
        course.raise_for_status()
        course = course.json()
        opened = client.post(
            "/sessions/open",
            json={"passcode": course["public_passcode"], "recording_start_ms": anchor_ms},
        )
        opened.raise_for_status()
        session_id = opened.json()["session_id"]

        errors: list[str] = []

        def stream(trace: AttentionTrace):
            try:
                with httpx.Client(base_url=base_url, timeout=30.0) as own:
                    for batch in _batches(trace, anchor_ms, batch_size=batch_seconds):
                        resp = own.post(
                            "/ingest",
                            json={
                                "public_passcode": course["public_passcode"],
                                "student_token": trace.student_ref,
                                "samples": [
                                    {"t_ms": t, "level": lvl, "face": face}
                                    for t, lvl, face in batch
                                ],
                            },
                        )
                        resp.raise_for_status()
                        if speedup > 0:
                            time.sleep(batch_seconds / speedup)
            except Exception as exc:  # surfaced after join
                errors.append(f"{trace.student_ref}: {exc}")

        threads = [threading.Thread(target=stream, args=(t,)) for t in dataset.traces]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if errors:
            raise RuntimeError("replay failed: " + "; ".join(errors))

        end_ms = anchor_ms + 1000 * dataset.duration_s
        closed = client.post(
            f"/sessions/{session_id}/close",
            json={
                "passcode": course["public_passcode"],
                "recording_end_ms": end_ms,
                "recording_uri": recording_uri,
            },
        )
        closed.raise_for_status()
        for event in dataset.usage:
            client.post(
                "/usage",
                json={
                    "public_passcode": course["public_passcode"],
                    "student_token": event.student_ref,
                    "session": session_id,
                    "start_s": event.start_s,
                    "end_s": event.end_s,
                    "strategy": event.strategy,
                    "at_ms": end_ms + 60_000,
                },
            ).raise_for_status()

    return {
        "course_code": course["code"],
        "public_passcode": course["public_passcode"],
        "private_passcode": course["private_passcode"],
        "session_id": session_id,
        "duration_s": dataset.duration_s,
        "students": [p.student_ref for p in dataset.profiles],
        "usage_events": len(dataset.usage),
    }
