"""Attention telemetry for live online classes.

Per-second attention levels stream in from capture clients during a live
session; afterwards each student gets a personalized recap cut-list of the
recording (the minutes they missed, fixed-granularity variants, peer- and
replay-informed variants) and the professor gets an anonymized per-minute
class attention view.
"""

from .aggregate import (
    COVERAGE_QUORUM,
    MinuteAggregate,
    MissedSet,
    minute_aggregates,
    missed_for_session,
    missed_minutes,
    session_threshold,
)
from .analytics import (
    ClassAttentionMatrix,
    VolatilityReport,
    class_attention_matrix,
    log_return_volatility,
    minute_volatility_series,
    stdev,
    volatility_report,
)
from .attention import (
    AttentionSample,
    AttentionTrace,
    EyeLandmarks,
    LandmarkFrame,
    StudentBaseline,
    compute_ear,
    frame_attention,
    frames_to_trace,
    second_attention,
    trim_to_session,
    update_baseline,
)
from .config import ServiceConfig, load_config
from .simulate import ClassDataset, StudentProfile, generate_trace, simulate_class
from .store import IngestBatch, SessionStore
from .summarize import (
    CutList,
    PlaybackManifest,
    Segment,
    Strategy,
    all_i_missed,
    fixed_granularity,
    peer_informed,
    render_manifest,
    replay_heat,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
