"""Turn-taking analytics: events to metrics, live gauge, cohort statistics."""

from .events import (
    SegmentationPolicy,
    Turn,
    Utterance,
    VoiceActivityEvent,
    backchannel_candidates,
    classify_turns,
    normalize_events,
    segment_utterances,
)
from .mediator import MediatorConfig, MediatorSnapshot, MediatorWindow, layout_positions
from .metrics import (
    MeetingMetrics,
    MetricsPolicy,
    PairEvent,
    aggregate_meeting,
    classify_pair_events,
    detect_influences,
    meeting_history,
    speaking_shares,
)
from .stats import (
    LogisticFit,
    StatsRow,
    fit_logistic,
    holm_adjust,
    nps,
    odds_ratio_from_odds,
    pearson,
    pearson_p,
    significance_stars,
)

__all__ = [
    "SegmentationPolicy",
    "Turn",
    "Utterance",
    "VoiceActivityEvent",
    "backchannel_candidates",
    "classify_turns",
    "normalize_events",
    "segment_utterances",
    "MediatorConfig",
    "MediatorSnapshot",
    "MediatorWindow",
    "layout_positions",
    "MeetingMetrics",
    "MetricsPolicy",
    "PairEvent",
    "aggregate_meeting",
    "classify_pair_events",
    "detect_influences",
    "meeting_history",
    "speaking_shares",
    "LogisticFit",
    "StatsRow",
    "fit_logistic",
    "holm_adjust",
    "nps",
    "odds_ratio_from_odds",
    "pearson",
    "pearson_p",
    "significance_stars",
]

__version__ = "0.1.0"
