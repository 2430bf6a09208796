"""One-minute aggregation and the missed-minute decision rule.

A minute is the unit of recap decisions: its mean attention is compared
against the student's own session median, and minutes without enough
logged seconds count as missed regardless (late arrival, early leave,
client not running).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from statistics import median
from typing import Optional, Sequence, TextIO

from .attention import AttentionTrace
from .errors import NoCoveredMinutesError

# A minute needs at least this many of its 60 seconds logged before its mean
# is trusted; anything below is treated as a gap.
COVERAGE_QUORUM = 30

SECONDS_PER_MINUTE = 60


@dataclass(frozen=True)
class MinuteAggregate:
    minute_index: int
    mean_level: Optional[float]
    sample_count: int
    covered: bool

    def __post_init__(self):
        if (self.mean_level is None) != (self.sample_count == 0):
            raise ValueError("mean_level must be absent exactly when sample_count is 0")


@dataclass
class MissedSet:
    """Minutes a student missed, plus the threshold that decided them.

    ``threshold_used`` is None when no minute met the coverage quorum and the
    whole session fell back to missed.
    """

    session_ref: str
    student_ref: str
    minutes: list[int] = field(default_factory=list)
    threshold_used: Optional[float] = None

    def __post_init__(self):
        self.minutes = sorted(set(self.minutes))

    def __contains__(self, minute: int) -> bool:
        return minute in set(self.minutes)


def minute_count(session_duration_s: int) -> int:
    return math.ceil(session_duration_s / SECONDS_PER_MINUTE)


def minute_aggregates(
    trace: AttentionTrace,
    session_duration_s: int,
    coverage_quorum: int = COVERAGE_QUORUM,
) -> list[MinuteAggregate]:
    """Aggregate a trimmed trace into exactly ceil(duration/60) minutes.

    Samples outside [0, duration) are ignored; callers should trim first.
    """
    if session_duration_s <= 0:
        raise ValueError("session_duration_s must be positive")
    n_minutes = minute_count(session_duration_s)
    sums = [0.0] * n_minutes
    counts = [0] * n_minutes
    for s in trace.samples:
        if 0 <= s.t < session_duration_s:
            k = s.t // SECONDS_PER_MINUTE
            sums[k] += s.level
            counts[k] += 1
    return [
        MinuteAggregate(
            minute_index=k,
            mean_level=(sums[k] / counts[k]) if counts[k] else None,
            sample_count=counts[k],
            covered=counts[k] >= coverage_quorum,
        )
        for k in range(n_minutes)
    ]


def session_threshold(aggregates: Sequence[MinuteAggregate]) -> float:
    """Median of covered minute means for this student-session.

    Raises NoCoveredMinutesError when nothing met the quorum; the caller
    then treats the whole session as missed.
    """
    levels = [a.mean_level for a in aggregates if a.covered and a.mean_level is not None]
    if not levels:
        raise NoCoveredMinutesError("no covered minutes in session")
    return median(levels)


def missed_minutes(
    aggregates: Sequence[MinuteAggregate],
    threshold: float,
    session_ref: str = "",
    student_ref: str = "",
) -> MissedSet:
    """Minutes strictly below the threshold, plus every uncovered minute."""
    minutes = [
        a.minute_index
        for a in aggregates
        if not a.covered or (a.mean_level is not None and a.mean_level < threshold)
    ]
    return MissedSet(session_ref, student_ref, minutes, threshold_used=threshold)


def missed_for_session(
    aggregates: Sequence[MinuteAggregate],
    session_ref: str = "",
    student_ref: str = "",
) -> MissedSet:
    """missed_minutes with the session threshold, falling back to
    whole-session-missed when no minute is covered."""
    try:
        threshold = session_threshold(aggregates)
    except NoCoveredMinutesError:
        return MissedSet(
            session_ref,
            student_ref,
            [a.minute_index for a in aggregates],
            threshold_used=None,
        )
    return missed_minutes(aggregates, threshold, session_ref, student_ref)


def write_aggregates_csv(aggregates: Sequence[MinuteAggregate], out: TextIO) -> None:
    writer = csv.writer(out)
    writer.writerow(["minute_index", "mean_level", "sample_count", "covered"])
    for a in aggregates:
        writer.writerow(
            [
                a.minute_index,
                "" if a.mean_level is None else f"{a.mean_level:.6f}",
                a.sample_count,
                "true" if a.covered else "false",
            ]
        )
