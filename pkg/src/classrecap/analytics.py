"""Attention volatility statistics and the anonymized class view.

Three spreads are reported per student, since each answers a different
question: the plain deviation of raw per-second levels, the deviation of
one-minute means, and the per-minute volatility (deviation of log changes
within each minute), whose session mean flags note-taking-style toggling.
"""

from __future__ import annotations

import csv
import hashlib
import hmac
import json
import math
from dataclasses import dataclass, field
from statistics import pstdev
from typing import Optional, Sequence, TextIO

from .aggregate import SECONDS_PER_MINUTE, COVERAGE_QUORUM, minute_aggregates, minute_count
from .attention import AttentionTrace
from .errors import TooFewPointsError

# Attention hits exact 0 on no-face seconds and log(0) is undefined, so
# levels are floored before taking ratios.
VOLATILITY_FLOOR = 0.01


def stdev(series: Sequence[float]) -> float:
    """Population standard deviation; needs at least two points."""
    if len(series) < 2:
        raise TooFewPointsError(f"need >= 2 points, got {len(series)}")
    return pstdev(series)


def log_returns(series: Sequence[float], floor_eps: float = VOLATILITY_FLOOR) -> list[float]:
    floored = [max(x, floor_eps) for x in series]
    return [math.log(b / a) for a, b in zip(floored, floored[1:])]


def log_return_volatility(series: Sequence[float], floor_eps: float = VOLATILITY_FLOOR) -> float:
    """Population deviation of log changes between consecutive values.

    Scale-invariant: multiplying a strictly positive series by any c > 0
    leaves the result unchanged as long as no element crosses the floor.
    """
    if floor_eps <= 0:
        raise ValueError("floor_eps must be positive")
    if len(series) < 3:
        raise TooFewPointsError(f"need >= 3 points for >= 2 returns, got {len(series)}")
    return pstdev(log_returns(series, floor_eps))


def minute_volatility_series(
    trace: AttentionTrace,
    session_duration_s: int,
    floor_eps: float = VOLATILITY_FLOOR,
    coverage_quorum: int = COVERAGE_QUORUM,
) -> list[Optional[float]]:
    """Per-minute volatility of the per-second levels, minute-aligned.

    Returns are computed within each minute only.  Minutes below the
    coverage quorum (or with fewer than 3 samples) yield None.
    """
    n_minutes = minute_count(session_duration_s)
    buckets: list[list[float]] = [[] for _ in range(n_minutes)]
    for s in trace.samples:
        if 0 <= s.t < session_duration_s:
            buckets[s.t // SECONDS_PER_MINUTE].append(s.level)
    out: list[Optional[float]] = []
    for levels in buckets:
        if len(levels) < max(3, coverage_quorum):
            out.append(None)
        else:
            out.append(log_return_volatility(levels, floor_eps))
    return out


@dataclass
class StudentVolatility:
    student_ref: str
    sigma_per_second: float
    sigma_minute_aggregates: float
    minute_volatility: list[float]
    mean_minute_volatility: float


@dataclass
class VolatilityReport:
    session_ref: str
    students: list[StudentVolatility] = field(default_factory=list)
    exclusions: list[str] = field(default_factory=list)
    # Minute-aligned series per student (None = uncovered), for charting.
    minute_series: dict[str, list[Optional[float]]] = field(default_factory=dict)


def volatility_report(
    traces: Sequence[AttentionTrace],
    session_duration_s: int,
    session_ref: str = "",
    floor_eps: float = VOLATILITY_FLOOR,
    coverage_quorum: int = COVERAGE_QUORUM,
) -> VolatilityReport:
    """Assemble all three spread statistics per student.

    Students with fewer than two samples or fewer than two covered minutes
    cannot support every column and are listed under exclusions instead.
    """
    report = VolatilityReport(session_ref=session_ref)
    for trace in sorted(traces, key=lambda t: t.student_ref):
        levels = [s.level for s in trace.samples if 0 <= s.t < session_duration_s]
        aggs = minute_aggregates(trace, session_duration_s, coverage_quorum)
        covered_means = [a.mean_level for a in aggs if a.covered and a.mean_level is not None]
        if len(levels) < 2 or len(covered_means) < 2:
            report.exclusions.append(trace.student_ref)
            continue
        aligned = minute_volatility_series(trace, session_duration_s, floor_eps, coverage_quorum)
        per_minute = [v for v in aligned if v is not None]
        report.students.append(
            StudentVolatility(
                student_ref=trace.student_ref,
                sigma_per_second=stdev(levels),
                sigma_minute_aggregates=stdev(covered_means),
                minute_volatility=per_minute,
                mean_minute_volatility=sum(per_minute) / len(per_minute) if per_minute else 0.0,
            )
        )
        report.minute_series[trace.student_ref] = aligned
    return report


# --- anonymized class matrix --------------------------------------------------


@dataclass
class ClassAttentionMatrix:
    """Per-minute, per-pseudonym mean attention; None marks minutes a
    participant was not attending.  Raw student tokens never appear here."""

    session_ref: str
    minutes: list[int]
    participants: list[str]
    values: list[list[Optional[float]]]  # values[minute][participant]


def _pseudonym_digests(student_refs: Sequence[str], salt: str) -> dict[str, str]:
    return {
        ref: hmac.new(salt.encode(), ref.encode(), hashlib.sha256).hexdigest()
        for ref in student_refs
    }


def pseudonyms(student_refs: Sequence[str], salt: str) -> dict[str, str]:
    """Session-scoped labels: keyed hash truncated to 6 hex chars (doubling
    as a display color), extended uniformly until unique."""
    digests = _pseudonym_digests(student_refs, salt)
    length = 6
    while length <= 64:
        labels = {ref: d[:length] for ref, d in digests.items()}
        if len(set(labels.values())) == len(labels):
            return labels
        length += 2
    raise RuntimeError("pseudonym collision on full digest")


def class_attention_matrix(
    traces: Sequence[AttentionTrace],
    session_duration_s: int,
    salt: str,
    session_ref: str = "",
    coverage_quorum: int = COVERAGE_QUORUM,
) -> ClassAttentionMatrix:
    """One pseudonym column per participant, one row per session minute.

    Deterministic for a given salt; pseudonyms are unlinkable across
    sessions with different salts.  Cells are minute means, absent when the
    minute was uncovered (which is how joins/leaves show up).
    """
    n_minutes = minute_count(session_duration_s)
    labels = pseudonyms([t.student_ref for t in traces], salt)
    columns = sorted(traces, key=lambda t: labels[t.student_ref])
    values: list[list[Optional[float]]] = [[None] * len(columns) for _ in range(n_minutes)]
    for col, trace in enumerate(columns):
        for a in minute_aggregates(trace, session_duration_s, coverage_quorum):
            if a.covered:
                values[a.minute_index][col] = a.mean_level
    return ClassAttentionMatrix(
        session_ref=session_ref,
        minutes=list(range(n_minutes)),
        participants=[labels[t.student_ref] for t in columns],
        values=values,
    )


# --- exports -------------------------------------------------------------------


def matrix_to_dict(matrix: ClassAttentionMatrix) -> dict:
    return {
        "minutes": matrix.minutes,
        "participants": matrix.participants,
        "values": matrix.values,
    }


def write_matrix_json(matrix: ClassAttentionMatrix, out: TextIO) -> None:
    json.dump(matrix_to_dict(matrix), out, indent=2)
    out.write("\n")


def write_matrix_csv(matrix: ClassAttentionMatrix, out: TextIO) -> None:
    writer = csv.writer(out)
    writer.writerow(["minute"] + list(matrix.participants))
    for k, row in zip(matrix.minutes, matrix.values):
        writer.writerow([k] + ["" if v is None else f"{v:.6f}" for v in row])


def write_volatility_csv(report: VolatilityReport, out: TextIO) -> None:
    writer = csv.writer(out)
    writer.writerow(
        [
            "student",
            "sigma_per_second",
            "sigma_minute_aggregates",
            "mean_minute_volatility",
        ]
    )
    for s in report.students:
        writer.writerow(
            [
                s.student_ref,
                f"{s.sigma_per_second:.6f}",
                f"{s.sigma_minute_aggregates:.6f}",
                f"{s.mean_minute_volatility:.6f}",
            ]
        )
    for ref in report.exclusions:
        writer.writerow([ref, "", "", ""])
