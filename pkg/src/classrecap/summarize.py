"""Cut-list builders and playback manifest rendering.

A cut-list is an ordered, disjoint set of [start_s, end_s) segments of the
session recording.  Builders exist for the baseline "all I missed" recap,
fixed-granularity windows, the peer-informed variant, and replay-heat; the
manifest renderer adds the 3-second skip markers players show between
non-adjacent segments.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from statistics import median
from typing import Optional, Sequence, TextIO

from .aggregate import SECONDS_PER_MINUTE, MinuteAggregate, MissedSet
from .errors import InsufficientClassDataError, UnknownStrategyError

# Seconds of filler shown at every skip so viewers are not disoriented.
DEFAULT_GAP_S = 3

# A minute needs this many peers with coverage before class comparison is fair
# (and before a single classmate could be deanonymized).
MIN_PEERS_PER_MINUTE = 2

# Replay heat must reach this multiple of the class-wide mean to count as hot.
DEFAULT_REPLAY_HEAT_FACTOR = 2.0


class Strategy(str, Enum):
    FULL = "full"
    ALL_I_MISSED = "all_i_missed"
    FIXED_30S = "fixed_30s"
    FIXED_2MIN = "fixed_2min"
    FIXED_5MIN = "fixed_5min"
    PEER_INFORMED = "peer_informed"
    REPLAY_HEAT = "replay_heat"


FIXED_WINDOW_SECONDS = {
    Strategy.FIXED_30S: 30,
    Strategy.FIXED_2MIN: 120,
    Strategy.FIXED_5MIN: 300,
}

_STRATEGY_ALIASES = {
    "all-i-missed": Strategy.ALL_I_MISSED,
    "peer": Strategy.PEER_INFORMED,
    "replay-heat": Strategy.REPLAY_HEAT,
    "fixed-30s": Strategy.FIXED_30S,
    "fixed-2min": Strategy.FIXED_2MIN,
    "fixed-5min": Strategy.FIXED_5MIN,
}


def parse_strategy(name: str) -> Strategy:
    key = name.strip().lower()
    try:
        return Strategy(key)
    except ValueError:
        pass
    if key in _STRATEGY_ALIASES:
        return _STRATEGY_ALIASES[key]
    raise UnknownStrategyError(f"unknown strategy {name!r}")


@dataclass(frozen=True)
class Segment:
    start_s: int
    end_s: int

    def __post_init__(self):
        if not 0 <= self.start_s < self.end_s:
            raise ValueError(f"bad segment [{self.start_s}, {self.end_s})")

    @property
    def length_s(self) -> int:
        return self.end_s - self.start_s

    def overlaps(self, start_s: int, end_s: int) -> bool:
        return self.start_s < end_s and start_s < self.end_s


@dataclass
class CutList:
    session_ref: str
    student_ref: str
    strategy: Strategy
    segments: list[Segment] = field(default_factory=list)
    gap_s: int = DEFAULT_GAP_S

    def __post_init__(self):
        for a, b in zip(self.segments, self.segments[1:]):
            if b.start_s <= a.end_s:
                raise ValueError("segments must be sorted, disjoint, and merged when adjacent")

    def total_content_s(self) -> int:
        return sum(seg.length_s for seg in self.segments)


@dataclass(frozen=True)
class ManifestEntry:
    segment: Segment
    leading_gap: bool


@dataclass
class PlaybackManifest:
    entries: list[ManifestEntry]
    gap_s: int
    total_playback_s: int


@dataclass(frozen=True)
class PeerMinute:
    """Per-minute class context: mean over peers whose minute was covered."""

    mean_level: Optional[float]
    peer_count: int

    @property
    def eligible(self) -> bool:
        return self.peer_count >= MIN_PEERS_PER_MINUTE and self.mean_level is not None


def _minutes_to_segments(minutes: Sequence[int], session_duration_s: int) -> list[Segment]:
    """Merge maximal runs of consecutive minutes into segments, clipped to
    the recording end."""
    segments = []
    run_start: Optional[int] = None
    prev: Optional[int] = None
    for k in sorted(set(minutes)):
        if prev is not None and k == prev + 1:
            prev = k
            continue
        if run_start is not None:
            segments.append(_run_segment(run_start, prev, session_duration_s))
        run_start = prev = k
    if run_start is not None:
        segments.append(_run_segment(run_start, prev, session_duration_s))
    return segments


def _run_segment(first: int, last: int, session_duration_s: int) -> Segment:
    start = first * SECONDS_PER_MINUTE
    end = min((last + 1) * SECONDS_PER_MINUTE, session_duration_s)
    return Segment(start, end)


def all_i_missed(missed: MissedSet, session_duration_s: int, gap_s: int = DEFAULT_GAP_S) -> CutList:
    """One segment per maximal run of consecutive missed minutes."""
    return CutList(
        session_ref=missed.session_ref,
        student_ref=missed.student_ref,
        strategy=Strategy.ALL_I_MISSED,
        segments=_minutes_to_segments(missed.minutes, session_duration_s),
        gap_s=gap_s,
    )


def full_recording(
    session_ref: str, student_ref: str, session_duration_s: int, gap_s: int = DEFAULT_GAP_S
) -> CutList:
    """The whole recording as a single segment (the "full" playback choice)."""
    return CutList(
        session_ref=session_ref,
        student_ref=student_ref,
        strategy=Strategy.FULL,
        segments=[Segment(0, session_duration_s)],
        gap_s=gap_s,
    )


def _window_tiling(window_s: int, duration_s: int) -> list[tuple[int, int]]:
    return [(w0, min(w0 + window_s, duration_s)) for w0 in range(0, duration_s, window_s)]


def _window_attention(
    w_start: int, w_end: int, aggregates: Sequence[MinuteAggregate], duration_s: int
) -> float:
    """Overlap-weighted mean of minute levels inside the window; uncovered
    minutes contribute level 0."""
    total_w = 0
    acc = 0.0
    for a in aggregates:
        m_start = a.minute_index * SECONDS_PER_MINUTE
        m_end = min(m_start + SECONDS_PER_MINUTE, duration_s)
        overlap = min(w_end, m_end) - max(w_start, m_start)
        if overlap <= 0:
            continue
        level = a.mean_level if (a.covered and a.mean_level is not None) else 0.0
        acc += overlap * level
        total_w += overlap
    return acc / total_w if total_w else 0.0


def fixed_granularity(
    aggregates: Sequence[MinuteAggregate],
    missed: MissedSet,
    window_s: int,
    session_duration_s: int,
    gap_s: int = DEFAULT_GAP_S,
) -> CutList:
    """Select fixed windows, lowest attention first, until every missed
    minute intersects a selected window.

    Windows tile the session from t=0 (the last one may be short); ties in
    attention rank earlier windows first; windows that would not cover any
    still-uncovered missed minute are skipped.  Adjacent selections merge.
    """
    if window_s not in FIXED_WINDOW_SECONDS.values():
        raise ValueError(f"window_s must be one of {sorted(FIXED_WINDOW_SECONDS.values())}")
    strategy = next(s for s, w in FIXED_WINDOW_SECONDS.items() if w == window_s)

    pending = set(missed.minutes)
    if not pending:
        return CutList(missed.session_ref, missed.student_ref, strategy, [], gap_s)

    windows = _window_tiling(window_s, session_duration_s)
    ranked = sorted(
        range(len(windows)),
        key=lambda i: (_window_attention(*windows[i], aggregates, session_duration_s), windows[i][0]),
    )

    selected: list[tuple[int, int]] = []
    for i in ranked:
        if not pending:
            break
        w_start, w_end = windows[i]
        hits = {
            k
            for k in pending
            if w_start < min((k + 1) * SECONDS_PER_MINUTE, session_duration_s)
            and k * SECONDS_PER_MINUTE < w_end
        }
        if hits:
            selected.append(windows[i])
            pending -= hits

    selected.sort()
    segments: list[Segment] = []
    for w_start, w_end in selected:
        if segments and segments[-1].end_s == w_start:
            segments[-1] = Segment(segments[-1].start_s, w_end)
        else:
            segments.append(Segment(w_start, w_end))
    return CutList(missed.session_ref, missed.student_ref, strategy, segments, gap_s)


def class_mean_minutes(
    peer_aggregates: Sequence[Sequence[MinuteAggregate]], n_minutes: int
) -> list[PeerMinute]:
    """Per-minute mean attention over peers whose minute met coverage."""
    out = []
    for k in range(n_minutes):
        values = [
            aggs[k].mean_level
            for aggs in peer_aggregates
            if k < len(aggs) and aggs[k].covered and aggs[k].mean_level is not None
        ]
        out.append(
            PeerMinute(
                mean_level=sum(values) / len(values) if values else None,
                peer_count=len(values),
            )
        )
    return out


def peer_informed(
    missed: MissedSet,
    class_minutes: Sequence[PeerMinute],
    session_duration_s: int,
    gap_s: int = DEFAULT_GAP_S,
) -> CutList:
    """Missed minutes where the class was paying attention.

    A minute qualifies when the student missed it and the class mean for
    that minute is at or above the session median of class means.  Minutes
    with fewer than MIN_PEERS_PER_MINUTE covered peers are ineligible and
    never selected; if no minute at all is eligible the class comparison is
    impossible and InsufficientClassDataError is raised.
    """
    eligible = [pm.mean_level for pm in class_minutes if pm.eligible]
    if not eligible:
        raise InsufficientClassDataError("no minute has enough peer coverage")
    class_median = median(eligible)

    minutes = [
        k
        for k in missed.minutes
        if k < len(class_minutes)
        and class_minutes[k].eligible
        and class_minutes[k].mean_level >= class_median
    ]
    return CutList(
        session_ref=missed.session_ref,
        student_ref=missed.student_ref,
        strategy=Strategy.PEER_INFORMED,
        segments=_minutes_to_segments(minutes, session_duration_s),
        gap_s=gap_s,
    )


def replay_heat(
    peer_ranges: Sequence[tuple[int, int]],
    own_ranges: Sequence[tuple[int, int]],
    session_duration_s: int,
    session_ref: str = "",
    student_ref: str = "",
    heat_factor: float = DEFAULT_REPLAY_HEAT_FACTOR,
    gap_s: int = DEFAULT_GAP_S,
) -> CutList:
    """Minutes classmates replayed heavily and this student never played.

    Heat is the per-second count of peer played ranges; a minute qualifies
    when its mean heat is positive, at least ``heat_factor`` times the
    session-wide mean heat, and the student's own playback never touched it.
    """
    heat = [0] * session_duration_s
    for start_s, end_s in peer_ranges:
        for sec in range(max(0, start_s), min(end_s, session_duration_s)):
            heat[sec] += 1

    total_heat = sum(heat)
    n_minutes = -(-session_duration_s // SECONDS_PER_MINUTE)
    if total_heat == 0:
        return CutList(session_ref, student_ref, Strategy.REPLAY_HEAT, [], gap_s)
    mean_heat = total_heat / session_duration_s

    minutes = []
    for k in range(n_minutes):
        m_start = k * SECONDS_PER_MINUTE
        m_end = min(m_start + SECONDS_PER_MINUTE, session_duration_s)
        minute_heat = sum(heat[m_start:m_end]) / (m_end - m_start)
        if minute_heat <= 0 or minute_heat < heat_factor * mean_heat:
            continue
        if any(s < m_end and m_start < e for s, e in own_ranges):
            continue
        minutes.append(k)
    return CutList(
        session_ref,
        student_ref,
        Strategy.REPLAY_HEAT,
        _minutes_to_segments(minutes, session_duration_s),
        gap_s,
    )


def render_manifest(cuts: CutList) -> PlaybackManifest:
    """Mark every skip with a leading gap and total up playback time.

    A segment gets a leading gap when it neither starts the recording nor
    directly continues the previous segment; total playback is content time
    plus gap_s per gap.
    """
    entries = []
    prev_end = 0
    for seg in cuts.segments:
        entries.append(ManifestEntry(segment=seg, leading_gap=seg.start_s != prev_end))
        prev_end = seg.end_s
    gaps = sum(1 for e in entries if e.leading_gap)
    total = sum(e.segment.length_s for e in entries) + cuts.gap_s * gaps
    return PlaybackManifest(entries=entries, gap_s=cuts.gap_s, total_playback_s=total)


# --- exports -----------------------------------------------------------------


def cutlist_to_dict(cuts: CutList, manifest: Optional[PlaybackManifest] = None) -> dict:
    if manifest is None:
        manifest = render_manifest(cuts)
    return {
        "session": cuts.session_ref,
        "student": cuts.student_ref,
        "strategy": cuts.strategy.value,
        "gap_s": cuts.gap_s,
        "segments": [{"start_s": s.start_s, "end_s": s.end_s} for s in cuts.segments],
        "total_playback_s": manifest.total_playback_s,
    }


def manifest_to_dict(manifest: PlaybackManifest) -> dict:
    return {
        "gap_s": manifest.gap_s,
        "total_playback_s": manifest.total_playback_s,
        "entries": [
            {
                "start_s": e.segment.start_s,
                "end_s": e.segment.end_s,
                "leading_gap": e.leading_gap,
            }
            for e in manifest.entries
        ],
    }


def write_cutlist_json(cuts: CutList, out: TextIO) -> None:
    json.dump(cutlist_to_dict(cuts), out, indent=2)
    out.write("\n")


def write_cutlist_csv(cuts: CutList, out: TextIO) -> None:
    writer = csv.writer(out)
    writer.writerow(["start_s", "end_s"])
    for seg in cuts.segments:
        writer.writerow([seg.start_s, seg.end_s])


def write_concat_playlist(cuts: CutList, recording_path: str, out: TextIO) -> None:
    """Concat-demuxer-style playlist: one file/inpoint/outpoint triple per
    segment, so common media tools can assemble the recap video."""
    quoted = recording_path.replace("'", r"'\''")
    out.write("ffconcat version 1.0\n")
    for seg in cuts.segments:
        out.write(f"file '{quoted}'\n")
        out.write(f"inpoint {seg.start_s}\n")
        out.write(f"outpoint {seg.end_s}\n")
