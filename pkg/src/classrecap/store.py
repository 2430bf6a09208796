"""Course/session persistence and the service-side operations.

A single embedded SQLite store holds courses, passcodes, sessions,
per-second samples, and playback usage events.  Stored student identity is
only the opaque client-generated token; no names or emails exist anywhere
in the schema, and the professor view never serializes tokens at all.

All mutation goes through one lock-guarded connection, which serializes
per-(student, session) trace updates and keeps concurrent ingest
linearizable: after quiescence the stored trace is the last-write-wins fold
of acknowledged batches.
"""

from __future__ import annotations

import math
import secrets
import sqlite3
import threading
import time
from dataclasses import dataclass
from typing import Optional

from . import aggregate, analytics, summarize
from .attention import SOURCE_LIVE, AttentionSample, AttentionTrace, trim_to_session
from .config import ServiceConfig
from .errors import (
    AuthorizationError,
    DuplicateCourseError,
    MalformedBatchError,
    OutOfRangeError,
    SessionAlreadyOpenError,
    SessionClosedError,
    SessionOpenError,
    UnknownPasscodeError,
    UnknownSessionError,
    UnknownStudentError,
)
from .summarize import Strategy

# 8 chars over a 32-symbol alphabet = 40 bits; I/O/0/1 dropped so codes
# survive being read aloud or written on a whiteboard.
PASSCODE_ALPHABET = "ABCDEFGHJKLMNPQRSTUVWXYZ23456789"
PASSCODE_LENGTH = 8

MAX_BATCH_SAMPLES = 600

_SCHEMA = """
CREATE TABLE IF NOT EXISTS courses (
    code TEXT PRIMARY KEY,
    title TEXT NOT NULL,
    public_passcode TEXT NOT NULL,
    private_passcode TEXT NOT NULL,
    created_at_ms INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS passcodes (
    passcode TEXT PRIMARY KEY,
    course_code TEXT NOT NULL REFERENCES courses(code),
    kind TEXT NOT NULL CHECK (kind IN ('public', 'private'))
);
CREATE TABLE IF NOT EXISTS sessions (
    session_id TEXT PRIMARY KEY,
    course_code TEXT NOT NULL REFERENCES courses(code),
    recording_start_ms INTEGER NOT NULL,
    recording_end_ms INTEGER,
    recording_uri TEXT,
    state TEXT NOT NULL CHECK (state IN ('open', 'closed')),
    pseudonym_salt TEXT NOT NULL,
    usage_version INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS samples (
    session_id TEXT NOT NULL,
    student_token TEXT NOT NULL,
    epoch_s INTEGER NOT NULL,
    level REAL NOT NULL,
    face INTEGER NOT NULL,
    source TEXT NOT NULL,
    PRIMARY KEY (session_id, student_token, epoch_s)
);
CREATE TABLE IF NOT EXISTS usage_events (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    session_id TEXT NOT NULL,
    student_token TEXT NOT NULL,
    start_s INTEGER NOT NULL,
    end_s INTEGER NOT NULL,
    strategy TEXT NOT NULL,
    at_ms INTEGER NOT NULL
);
"""


@dataclass(frozen=True)
class Course:
    code: str
    title: str
    public_passcode: str
    private_passcode: str
    created_at_ms: int


@dataclass(frozen=True)
class Session:
    session_id: str
    course_code: str
    recording_start_ms: int
    recording_end_ms: Optional[int]
    recording_uri: Optional[str]
    state: str

    @property
    def closed(self) -> bool:
        return self.state == "closed"

    @property
    def duration_s(self) -> Optional[int]:
        if self.recording_end_ms is None:
            return None
        return math.ceil((self.recording_end_ms - self.recording_start_ms) / 1000)


@dataclass(frozen=True)
class UsageEvent:
    event_id: int
    session_id: str
    student_token: str
    start_s: int
    end_s: int
    strategy: str
    at_ms: int


@dataclass
class IngestBatch:
    public_passcode: str
    student_token: str
    # (t_epoch_ms, level, face_detected), timestamps non-decreasing
    samples: list[tuple[int, float, bool]]


@dataclass(frozen=True)
class IngestAck:
    accepted_count: int
    dropped_count: int


def _now_ms() -> int:
    return int(time.time() * 1000)


def generate_passcode() -> str:
    return "".join(secrets.choice(PASSCODE_ALPHABET) for _ in range(PASSCODE_LENGTH))


class SessionStore:
    """All service operations over one SQLite file (or ':memory:')."""

    def __init__(self, path: str = ":memory:", config: Optional[ServiceConfig] = None):
        self.config = config or ServiceConfig()
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(path, check_same_thread=False, isolation_level=None)
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._conn.execute("PRAGMA synchronous=NORMAL")
        self._conn.executescript(_SCHEMA)
        # (session, student, strategy, config, usage_version-for-replay-heat)
        self._summary_cache: dict[tuple, dict] = {}

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # --- courses and passcodes -------------------------------------------

    def register_course(self, code: str, title: str) -> Course:
        if not code or not code.strip():
            raise MalformedBatchError("course code must be nonempty")
        code = code.strip()
        with self._lock:
            row = self._conn.execute("SELECT 1 FROM courses WHERE code = ?", (code,)).fetchone()
            if row:
                raise DuplicateCourseError(f"course {code!r} already registered")
            while True:
                public, private = generate_passcode(), generate_passcode()
                if public == private:
                    continue
                taken = self._conn.execute(
                    "SELECT 1 FROM passcodes WHERE passcode IN (?, ?)", (public, private)
                ).fetchone()
                if not taken:
                    break
            created = _now_ms()
            self._conn.execute("BEGIN IMMEDIATE")
            try:
                self._conn.execute(
                    "INSERT INTO courses VALUES (?, ?, ?, ?, ?)",
                    (code, title, public, private, created),
                )
                self._conn.execute(
                    "INSERT INTO passcodes VALUES (?, ?, 'public')", (public, code)
                )
                self._conn.execute(
                    "INSERT INTO passcodes VALUES (?, ?, 'private')", (private, code)
                )
                self._conn.execute("COMMIT")
            except BaseException:
                self._conn.execute("ROLLBACK")
                raise
        return Course(code, title, public, private, created)

    def get_course(self, code: str) -> Course:
        with self._lock:
            row = self._conn.execute(
                "SELECT code, title, public_passcode, private_passcode, created_at_ms "
                "FROM courses WHERE code = ?",
                (code,),
            ).fetchone()
        if row is None:
            raise UnknownSessionError(f"no course {code!r}")
        return Course(*row)

    def resolve_passcode(self, passcode: str) -> tuple[str, str]:
        """Returns (course_code, kind); kind is 'public' or 'private'."""
        if not passcode:
            raise UnknownPasscodeError("missing passcode")
        with self._lock:
            row = self._conn.execute(
                "SELECT course_code, kind FROM passcodes WHERE passcode = ?", (passcode,)
            ).fetchone()
        if row is None:
            raise UnknownPasscodeError("passcode not recognized")
        return row[0], row[1]

    def _require_kind(self, passcode: str, kind: str) -> str:
        course_code, actual = self.resolve_passcode(passcode)
        if actual != kind:
            raise AuthorizationError(f"endpoint requires the {kind} passcode")
        return course_code

    # --- session lifecycle -------------------------------------------------

    def open_session(
        self,
        passcode: str,
        recording_start_ms: Optional[int] = None,
        recording_uri: Optional[str] = None,
    ) -> Session:
        """Either passcode class may open; the start stamp is overridable for
        replayed/simulated sessions."""
        course_code, _ = self.resolve_passcode(passcode)
        start = _now_ms() if recording_start_ms is None else int(recording_start_ms)
        with self._lock:
            open_row = self._conn.execute(
                "SELECT session_id FROM sessions WHERE course_code = ? AND state = 'open'",
                (course_code,),
            ).fetchone()
            if open_row:
                raise SessionAlreadyOpenError(
                    f"course {course_code} already has open session {open_row[0]}"
                )
            session_id = "ses-" + secrets.token_hex(6)
            salt = secrets.token_hex(16)
            self._conn.execute(
                "INSERT INTO sessions (session_id, course_code, recording_start_ms, "
                "recording_uri, state, pseudonym_salt) VALUES (?, ?, ?, ?, 'open', ?)",
                (session_id, course_code, start, recording_uri, salt),
            )
        return self.get_session(session_id)

    def close_session(
        self,
        session_id: str,
        passcode: str,
        recording_end_ms: Optional[int] = None,
        recording_uri: Optional[str] = None,
    ) -> Session:
        """Stamps the recording end and deletes buffered readings outside the
        recording's time boundaries."""
        course_code, _ = self.resolve_passcode(passcode)
        session = self.get_session(session_id)
        if session.course_code != course_code:
            raise AuthorizationError("passcode belongs to a different course")
        if session.closed:
            raise SessionClosedError(f"session {session_id} already closed")
        end = _now_ms() if recording_end_ms is None else int(recording_end_ms)
        if end <= session.recording_start_ms:
            raise OutOfRangeError("recording_end must be after recording_start")
        uri = recording_uri if recording_uri is not None else session.recording_uri
        with self._lock:
            self._conn.execute("BEGIN IMMEDIATE")
            try:
                self._conn.execute(
                    "UPDATE sessions SET state = 'closed', recording_end_ms = ?, "
                    "recording_uri = ? WHERE session_id = ?",
                    (end, uri, session_id),
                )
                # Post-hoc boundary trim: readings before/after the recording
                # are deleted, not rejected at ingest.
                self._conn.execute(
                    "DELETE FROM samples WHERE session_id = ? AND "
                    "(epoch_s * 1000 < ? OR epoch_s * 1000 >= ?)",
                    (session_id, session.recording_start_ms, end),
                )
                self._conn.execute("COMMIT")
            except BaseException:
                self._conn.execute("ROLLBACK")
                raise
        return self.get_session(session_id)

    def get_session(self, session_id: str) -> Session:
        with self._lock:
            row = self._conn.execute(
                "SELECT session_id, course_code, recording_start_ms, recording_end_ms, "
                "recording_uri, state FROM sessions WHERE session_id = ?",
                (session_id,),
            ).fetchone()
        if row is None:
            raise UnknownSessionError(f"no session {session_id!r}")
        return Session(*row)

    def list_sessions(self, passcode: str) -> tuple[Course, list[Session]]:
        course_code, _ = self.resolve_passcode(passcode)
        with self._lock:
            rows = self._conn.execute(
                "SELECT session_id, course_code, recording_start_ms, recording_end_ms, "
                "recording_uri, state FROM sessions WHERE course_code = ? "
                "ORDER BY recording_start_ms",
                (course_code,),
            ).fetchall()
        return self.get_course(course_code), [Session(*r) for r in rows]

    def _open_session_for_course(self, course_code: str) -> Session:
        with self._lock:
            row = self._conn.execute(
                "SELECT session_id FROM sessions WHERE course_code = ? AND state = 'open'",
                (course_code,),
            ).fetchone()
            if row is None:
                any_session = self._conn.execute(
                    "SELECT 1 FROM sessions WHERE course_code = ? LIMIT 1", (course_code,)
                ).fetchone()
                if any_session:
                    raise SessionClosedError(f"no open session for course {course_code}")
                raise UnknownSessionError(f"course {course_code} has no sessions")
        return self.get_session(row[0])

    # --- ingestion -----------------------------------------------------------

    @staticmethod
    def _validate_batch(batch: IngestBatch) -> None:
        if not batch.student_token or not batch.student_token.strip():
            raise MalformedBatchError("student_token must be nonempty")
        if len(batch.samples) > MAX_BATCH_SAMPLES:
            raise MalformedBatchError(
                f"batch has {len(batch.samples)} samples; max {MAX_BATCH_SAMPLES}"
            )
        prev_t = None
        for t_ms, level, face in batch.samples:
            if prev_t is not None and t_ms < prev_t:
                raise MalformedBatchError("sample timestamps must be non-decreasing")
            prev_t = t_ms
            if not (isinstance(level, (int, float)) and math.isfinite(level) and 0 <= level <= 1):
                raise MalformedBatchError(f"level {level!r} outside [0, 1]")
            if not face and level != 0:
                raise MalformedBatchError("face_detected=false requires level 0")

    def ingest(self, batch: IngestBatch, source: str = SOURCE_LIVE) -> IngestAck:
        """Append a batch to the student's trace buffer.

        Duplicate seconds keep the last-received value; out-of-session
        samples are kept until close.  The ack counts distinct seconds
        written and samples displaced (within the batch or previously
        stored).
        """
        course_code = self._require_kind(batch.public_passcode, "public")
        session = self._open_session_for_course(course_code)
        self._validate_batch(batch)
        if not batch.samples:
            return IngestAck(0, 0)

        folded: dict[int, tuple[float, bool]] = {}
        in_batch_dropped = 0
        for t_ms, level, face in batch.samples:
            epoch_s = t_ms // 1000
            if epoch_s in folded:
                in_batch_dropped += 1
            folded[epoch_s] = (float(level), bool(face))

        keys = list(folded)
        with self._lock:
            self._conn.execute("BEGIN IMMEDIATE")
            try:
                placeholders = ",".join("?" * len(keys))
                existing = self._conn.execute(
                    f"SELECT COUNT(*) FROM samples WHERE session_id = ? AND "
                    f"student_token = ? AND epoch_s IN ({placeholders})",
                    [session.session_id, batch.student_token, *keys],
                ).fetchone()[0]
                self._conn.executemany(
                    "INSERT OR REPLACE INTO samples VALUES (?, ?, ?, ?, ?, ?)",
                    [
                        (session.session_id, batch.student_token, sec, lvl, int(face), source)
                        for sec, (lvl, face) in folded.items()
                    ],
                )
                self._conn.execute("COMMIT")
            except BaseException:
                self._conn.execute("ROLLBACK")
                raise
        return IngestAck(accepted_count=len(folded), dropped_count=in_batch_dropped + existing)

    # --- traces ---------------------------------------------------------------

    def student_tokens(self, session_id: str) -> list[str]:
        self.get_session(session_id)
        with self._lock:
            rows = self._conn.execute(
                "SELECT DISTINCT student_token FROM samples WHERE session_id = ? "
                "ORDER BY student_token",
                (session_id,),
            ).fetchall()
        return [r[0] for r in rows]

    def get_trace(self, session_id: str, student_token: str) -> AttentionTrace:
        """The student's trace, trimmed and rebased to the recording window
        for closed sessions; raw epoch-second offsets while open."""
        session = self.get_session(session_id)
        with self._lock:
            rows = self._conn.execute(
                "SELECT epoch_s, level, face, source FROM samples WHERE session_id = ? "
                "AND student_token = ? ORDER BY epoch_s",
                (session_id, student_token),
            ).fetchall()
        samples = [
            AttentionSample(t=sec, level=level, face_detected=bool(face), source=source)
            for sec, level, face, source in rows
        ]
        trace = AttentionTrace(student_token, session_id, samples, t0_ms=0)
        if session.closed:
            return trim_to_session(trace, session.recording_start_ms, session.recording_end_ms)
        return trace

    def _closed_session(self, session_id: str) -> Session:
        session = self.get_session(session_id)
        if not session.closed:
            raise SessionOpenError(f"session {session_id} is still open")
        return session

    def _trimmed_traces(self, session: Session) -> list[AttentionTrace]:
        return [
            t
            for t in (
                self.get_trace(session.session_id, token)
                for token in self.student_tokens(session.session_id)
            )
            if t.samples
        ]

    # --- usage ------------------------------------------------------------------

    def log_usage(
        self,
        public_passcode: str,
        student_token: str,
        session_id: str,
        start_s: int,
        end_s: int,
        strategy: str = "full",
        at_ms: Optional[int] = None,
    ) -> UsageEvent:
        course_code = self._require_kind(public_passcode, "public")
        session = self._closed_session(session_id)
        if session.course_code != course_code:
            raise AuthorizationError("passcode belongs to a different course")
        summarize.parse_strategy(strategy)  # raises UnknownStrategyError
        duration = session.duration_s or 0
        if not (0 <= start_s < end_s <= duration):
            raise OutOfRangeError(
                f"played range [{start_s}, {end_s}) outside recording of {duration}s"
            )
        at = _now_ms() if at_ms is None else int(at_ms)
        with self._lock:
            cur = self._conn.execute(
                "INSERT INTO usage_events (session_id, student_token, start_s, end_s, "
                "strategy, at_ms) VALUES (?, ?, ?, ?, ?, ?)",
                (session_id, student_token, start_s, end_s, strategy, at),
            )
            self._conn.execute(
                "UPDATE sessions SET usage_version = usage_version + 1 WHERE session_id = ?",
                (session_id,),
            )
            event_id = cur.lastrowid
        return UsageEvent(event_id, session_id, student_token, start_s, end_s, strategy, at)

    def usage_events(self, session_id: str) -> list[UsageEvent]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT id, session_id, student_token, start_s, end_s, strategy, at_ms "
                "FROM usage_events WHERE session_id = ? ORDER BY id",
                (session_id,),
            ).fetchall()
        return [UsageEvent(*r) for r in rows]

    def _usage_version(self, session_id: str) -> int:
        with self._lock:
            row = self._conn.execute(
                "SELECT usage_version FROM sessions WHERE session_id = ?", (session_id,)
            ).fetchone()
        return row[0] if row else 0

    # --- summaries -----------------------------------------------------------------

    def _missed_for(self, trace: AttentionTrace, duration_s: int) -> aggregate.MissedSet:
        aggs = aggregate.minute_aggregates(trace, duration_s, self.config.coverage_quorum)
        return aggregate.missed_for_session(aggs, trace.session_ref, trace.student_ref)

    def build_cutlist(
        self, session: Session, student_token: str, strategy: Strategy
    ) -> summarize.CutList:
        duration = session.duration_s
        assert duration is not None
        gap_s = self.config.gap_s
        quorum = self.config.coverage_quorum
        trace = self.get_trace(session.session_id, student_token)

        if strategy is Strategy.FULL:
            return summarize.full_recording(session.session_id, student_token, duration, gap_s)

        aggs = aggregate.minute_aggregates(trace, duration, quorum)
        missed = aggregate.missed_for_session(aggs, session.session_id, student_token)

        if strategy is Strategy.ALL_I_MISSED:
            return summarize.all_i_missed(missed, duration, gap_s)
        if strategy in summarize.FIXED_WINDOW_SECONDS:
            window = summarize.FIXED_WINDOW_SECONDS[strategy]
            return summarize.fixed_granularity(aggs, missed, window, duration, gap_s)
        if strategy is Strategy.PEER_INFORMED:
            peer_aggs = [
                aggregate.minute_aggregates(t, duration, quorum)
                for t in self._trimmed_traces(session)
                if t.student_ref != student_token
            ]
            class_minutes = summarize.class_mean_minutes(peer_aggs, aggregate.minute_count(duration))
            return summarize.peer_informed(missed, class_minutes, duration, gap_s)
        if strategy is Strategy.REPLAY_HEAT:
            events = self.usage_events(session.session_id)
            peer_ranges = [
                (e.start_s, e.end_s) for e in events if e.student_token != student_token
            ]
            own_ranges = [
                (e.start_s, e.end_s) for e in events if e.student_token == student_token
            ]
            return summarize.replay_heat(
                peer_ranges,
                own_ranges,
                duration,
                session.session_id,
                student_token,
                heat_factor=self.config.replay_heat_factor,
                gap_s=gap_s,
            )
        raise AssertionError(f"unhandled strategy {strategy}")

    def get_summary(
        self,
        public_passcode: str,
        student_token: str,
        session_id: str,
        strategy: str,
        fallback: bool = True,
    ) -> dict:
        """Cut-list + playback manifest + recording URI for one student.

        A token only ever sees its own summary (the token IS the lookup key).
        Students with no trace get the whole-session fallback unless the
        caller opted out, in which case unknown-student is raised.
        """
        course_code = self._require_kind(public_passcode, "public")
        session = self._closed_session(session_id)
        if session.course_code != course_code:
            raise AuthorizationError("passcode belongs to a different course")
        parsed = summarize.parse_strategy(strategy)
        if not student_token or not student_token.strip():
            raise UnknownStudentError("missing student token")

        if not fallback and not self.get_trace(session_id, student_token).samples:
            raise UnknownStudentError(f"no trace for this student in {session_id}")

        usage_version = self._usage_version(session_id) if parsed is Strategy.REPLAY_HEAT else None
        key = (session_id, student_token, parsed.value, self.config.cache_key(), usage_version)
        cached = self._summary_cache.get(key)
        if cached is not None:
            return cached

        cuts = self.build_cutlist(session, student_token, parsed)
        manifest = summarize.render_manifest(cuts)
        result = {
            "cutlist": summarize.cutlist_to_dict(cuts, manifest),
            "manifest": summarize.manifest_to_dict(manifest),
            "recording_uri": session.recording_uri,
            "duration_s": session.duration_s,
        }
        self._summary_cache[key] = result
        return result

    # --- professor view ----------------------------------------------------------------

    def get_class_view(self, private_passcode: str, session_id: str) -> dict:
        """Anonymized per-minute matrix; raw student tokens never serialize.

        Rejected outright for public passcodes.
        """
        course_code = self._require_kind(private_passcode, "private")
        session = self._closed_session(session_id)
        if session.course_code != course_code:
            raise AuthorizationError("passcode belongs to a different course")
        duration = session.duration_s
        assert duration is not None
        traces = self._trimmed_traces(session)
        with self._lock:
            salt = self._conn.execute(
                "SELECT pseudonym_salt FROM sessions WHERE session_id = ?", (session_id,)
            ).fetchone()[0]
        matrix = analytics.class_attention_matrix(
            traces, duration, salt, session_id, self.config.coverage_quorum
        )
        return {
            "session": session_id,
            "duration_s": duration,
            "participant_count": len(traces),
            "matrix": analytics.matrix_to_dict(matrix),
        }

    # --- analytics -----------------------------------------------------------------------

    def session_volatility(self, session_id: str) -> analytics.VolatilityReport:
        session = self._closed_session(session_id)
        duration = session.duration_s
        assert duration is not None
        return analytics.volatility_report(
            self._trimmed_traces(session),
            duration,
            session_id,
            self.config.volatility_floor,
            self.config.coverage_quorum,
        )
