"""Post-meeting metrics: shares, pairwise events, timeline, history.

Classification rules (deterministic boundary choices included):

- An utterance u by B that starts strictly inside a turn t by A (that is,
  t.start < u.start < t.end) yields exactly one pair event. If u itself
  qualifies as a turn and outlasts t (t.end <= u.end, ties included), B cut
  A off: an interruption stamped at t.end. Otherwise it is an affirmation
  stamped at u.end; short backchannel verbalizations land here regardless
  of how they end, since cutting someone off takes a turn of your own.
- Two utterances starting at the same millisecond contain neither one's
  start, so a simultaneous start yields no pair event.
- A turn that follows the previous (differently-voiced) turn within the
  influence window, without overlapping it, credits the prior speaker with
  an influence event.
"""

from __future__ import annotations

import json
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ValidationError
from .events import (
    SegmentationPolicy,
    Turn,
    Utterance,
    VoiceActivityEvent,
    classify_turns,
    normalize_events,
    segment_utterances,
)

KIND_INFLUENCE = "influence"
KIND_INTERRUPTION = "interruption"
KIND_AFFIRMATION = "affirmation"
PAIR_KINDS = (KIND_INFLUENCE, KIND_INTERRUPTION, KIND_AFFIRMATION)


@dataclass(frozen=True, slots=True)
class PairEvent:
    """A directed actor -> counterpart event of one of the three kinds.

    The *_utt_start fields identify the utterance on each side (utterance
    starts are unique per participant), which is how timeline entries get
    their decorations attached.
    """

    kind: str
    actor: str
    counterpart: str
    t_ms: int
    actor_utt_start: int
    counterpart_utt_start: int


@dataclass(frozen=True, slots=True)
class MetricsPolicy:
    """Thresholds for the metrics pipeline."""

    segmentation: SegmentationPolicy = field(default_factory=SegmentationPolicy)
    w_influence_ms: int = 3000

    def __post_init__(self) -> None:
        if self.w_influence_ms <= 0:
            raise ValidationError("bad_policy", "w_influence_ms must be > 0")


@dataclass(frozen=True, slots=True)
class SpeakingShare:
    turn_count: int
    speech_ms: int
    turn_share: float
    time_share: float


@dataclass(frozen=True, slots=True)
class TimelineMark:
    kind: str
    role: str  # "actor" or "counterpart"
    other: str
    t_ms: int


@dataclass(frozen=True, slots=True)
class TimelineEntry:
    participant_id: str
    start_ms: int
    end_ms: int
    is_turn: bool
    marks: tuple[TimelineMark, ...]


@dataclass(frozen=True)
class MeetingMetrics:
    """Everything the post-meeting view needs, serializable as one JSON doc."""

    meeting_id: str
    started_at: int
    duration_ms: int
    participants: tuple[str, ...]
    shares: dict[str, SpeakingShare]
    pairwise: dict[str, dict[str, dict[str, int]]]  # kind -> actor -> counterpart
    timeline: tuple[TimelineEntry, ...]

    def to_dict(self) -> dict:
        return {
            "meeting_id": self.meeting_id,
            "started_at": self.started_at,
            "duration_ms": self.duration_ms,
            "participants": list(self.participants),
            "per_participant": {
                pid: {
                    "turn_count": s.turn_count,
                    "speech_ms": s.speech_ms,
                    "turn_share": s.turn_share,
                    "time_share": s.time_share,
                }
                for pid, s in self.shares.items()
            },
            "pairwise": {
                kind: {a: dict(row) for a, row in self.pairwise[kind].items()}
                for kind in PAIR_KINDS
            },
            "timeline": [
                {
                    "participant": e.participant_id,
                    "start_ms": e.start_ms,
                    "end_ms": e.end_ms,
                    "is_turn": e.is_turn,
                    "marks": [
                        {"kind": m.kind, "role": m.role, "other": m.other, "t_ms": m.t_ms}
                        for m in e.marks
                    ],
                }
                for e in self.timeline
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, obj: dict) -> "MeetingMetrics":
        shares = {
            pid: SpeakingShare(
                turn_count=row["turn_count"],
                speech_ms=row["speech_ms"],
                turn_share=row["turn_share"],
                time_share=row["time_share"],
            )
            for pid, row in obj["per_participant"].items()
        }
        timeline = tuple(
            TimelineEntry(
                participant_id=e["participant"],
                start_ms=e["start_ms"],
                end_ms=e["end_ms"],
                is_turn=e["is_turn"],
                marks=tuple(
                    TimelineMark(m["kind"], m["role"], m["other"], m["t_ms"]) for m in e["marks"]
                ),
            )
            for e in obj["timeline"]
        )
        return cls(
            meeting_id=obj["meeting_id"],
            started_at=obj["started_at"],
            duration_ms=obj["duration_ms"],
            participants=tuple(obj["participants"]),
            shares=shares,
            pairwise={k: {a: dict(r) for a, r in obj["pairwise"][k].items()} for k in PAIR_KINDS},
            timeline=timeline,
        )


def speaking_shares(
    turns: Sequence[Turn],
    utterances: Sequence[Utterance],
    participants: Sequence[str],
) -> dict[str, SpeakingShare]:
    """Per-participant turn and speaking-time shares over the roster.

    Shares are fractions of the respective totals; an entirely silent
    meeting yields zeros rather than NaNs.
    """
    if not participants:
        raise ValidationError("empty_roster", "participants must be nonempty")
    roster = list(participants)
    known = set(roster)
    turn_count = {pid: 0 for pid in roster}
    speech_ms = {pid: 0 for pid in roster}
    for t in turns:
        if t.participant_id not in known:
            raise ValidationError("unknown_participant", f"turn by unknown participant {t.participant_id!r}")
        turn_count[t.participant_id] += 1
    for u in utterances:
        if u.participant_id not in known:
            raise ValidationError("unknown_participant", f"utterance by unknown participant {u.participant_id!r}")
        speech_ms[u.participant_id] += u.duration_ms
    total_turns = sum(turn_count.values())
    total_ms = sum(speech_ms.values())
    return {
        pid: SpeakingShare(
            turn_count=turn_count[pid],
            speech_ms=speech_ms[pid],
            turn_share=turn_count[pid] / total_turns if total_turns else 0.0,
            time_share=speech_ms[pid] / total_ms if total_ms else 0.0,
        )
        for pid in roster
    }


def classify_pair_events(
    utterances: Sequence[Utterance],
    turns: Sequence[Turn],
    policy: MetricsPolicy,
) -> list[PairEvent]:
    """Interruptions and affirmations from utterance/turn overlaps.

    Scans each turn's interior with a bisect over utterance starts; the
    O(n^2) all-pairs classifier in the tests is the independent oracle.
    """
    ordered = sorted(utterances, key=lambda u: (u.start_ms, u.participant_id))
    starts = [u.start_ms for u in ordered]
    t_turn = policy.segmentation.t_turn_ms
    events: list[PairEvent] = []
    for turn in turns:
        lo = bisect_right(starts, turn.start_ms)
        hi = bisect_left(starts, turn.end_ms)
        for i in range(lo, hi):
            u = ordered[i]
            if u.participant_id == turn.participant_id:
                continue
            if u.duration_ms >= t_turn and turn.end_ms <= u.end_ms:
                events.append(
                    PairEvent(
                        kind=KIND_INTERRUPTION,
                        actor=u.participant_id,
                        counterpart=turn.participant_id,
                        t_ms=turn.end_ms,
                        actor_utt_start=u.start_ms,
                        counterpart_utt_start=turn.start_ms,
                    )
                )
            else:
                events.append(
                    PairEvent(
                        kind=KIND_AFFIRMATION,
                        actor=u.participant_id,
                        counterpart=turn.participant_id,
                        t_ms=u.end_ms,
                        actor_utt_start=u.start_ms,
                        counterpart_utt_start=turn.start_ms,
                    )
                )
    events.sort(key=lambda e: (e.t_ms, e.kind, e.actor, e.counterpart))
    return events


def detect_influences(turns: Sequence[Turn], policy: MetricsPolicy) -> list[PairEvent]:
    """Who-spoke-after-who events over adjacent turns.

    Turns must arrive time-ordered. An overlapping succession is already an
    interruption and produces nothing here.
    """
    for a, b in zip(turns, turns[1:]):
        if (a.start_ms, a.participant_id) > (b.start_ms, b.participant_id):
            raise ValidationError("unsorted_turns", "turns must be time-ordered")
    events: list[PairEvent] = []
    for a, b in zip(turns, turns[1:]):
        if a.participant_id == b.participant_id:
            continue
        gap = b.start_ms - a.end_ms
        if 0 <= gap <= policy.w_influence_ms:
            events.append(
                PairEvent(
                    kind=KIND_INFLUENCE,
                    actor=a.participant_id,
                    counterpart=b.participant_id,
                    t_ms=b.start_ms,
                    actor_utt_start=a.start_ms,
                    counterpart_utt_start=b.start_ms,
                )
            )
    return events


def _empty_matrix(roster: Sequence[str]) -> dict[str, dict[str, int]]:
    return {a: {b: 0 for b in roster} for a in roster}


def _metrics_from_utterances(
    utterances: Sequence[Utterance],
    policy: MetricsPolicy,
    *,
    meeting_id: str,
    roster: Sequence[str],
    started_at: int,
    duration_ms: int,
) -> MeetingMetrics:
    """Shared downstream of both the batch and incremental paths."""
    turns = classify_turns(utterances, policy.segmentation)
    pair_events = classify_pair_events(utterances, turns, policy)
    pair_events += detect_influences(turns, policy)

    matrices = {kind: _empty_matrix(roster) for kind in PAIR_KINDS}
    for ev in pair_events:
        matrices[ev.kind][ev.actor][ev.counterpart] += 1

    marks_by_utt: dict[tuple[str, int], list[TimelineMark]] = {}
    for ev in pair_events:
        marks_by_utt.setdefault((ev.actor, ev.actor_utt_start), []).append(
            TimelineMark(ev.kind, "actor", ev.counterpart, ev.t_ms)
        )
        marks_by_utt.setdefault((ev.counterpart, ev.counterpart_utt_start), []).append(
            TimelineMark(ev.kind, "counterpart", ev.actor, ev.t_ms)
        )

    turn_starts = {(t.participant_id, t.start_ms) for t in turns}
    timeline = tuple(
        TimelineEntry(
            participant_id=u.participant_id,
            start_ms=u.start_ms,
            end_ms=u.end_ms,
            is_turn=(u.participant_id, u.start_ms) in turn_starts,
            marks=tuple(
                sorted(
                    marks_by_utt.get((u.participant_id, u.start_ms), []),
                    key=lambda m: (m.t_ms, m.kind, m.role, m.other),
                )
            ),
        )
        for u in utterances
    )

    shares = speaking_shares(turns, utterances, roster) if roster else {}
    return MeetingMetrics(
        meeting_id=meeting_id,
        started_at=started_at,
        duration_ms=duration_ms,
        participants=tuple(roster),
        shares=shares,
        pairwise=matrices,
        timeline=timeline,
    )


def aggregate_meeting(
    events: Sequence[VoiceActivityEvent],
    policy: MetricsPolicy,
    *,
    meeting_id: str | None = None,
    participants: Sequence[str] | None = None,
    started_at: int = 0,
) -> MeetingMetrics:
    """Run the full pipeline on a raw event log.

    normalize -> segment -> classify turns -> pairwise events -> shares,
    then decorate the timeline: every pair event is attached to both the
    actor's and the counterpart's utterance, tagged with the viewer's role.
    """
    if meeting_id is None:
        meeting_id = events[0].meeting_id if events else ""
    normalized = normalize_events(events)
    utterances = segment_utterances(normalized, policy.segmentation)
    if participants is None:
        roster: list[str] = []
        for ev in events:
            if ev.participant_id not in roster:
                roster.append(ev.participant_id)
    else:
        roster = list(participants)
        for ev in normalized:
            if ev.participant_id not in roster:
                raise ValidationError(
                    "unknown_participant", f"event participant {ev.participant_id!r} not in roster"
                )
    return _metrics_from_utterances(
        utterances,
        policy,
        meeting_id=meeting_id,
        roster=roster,
        started_at=started_at,
        duration_ms=max((ev.t_ms for ev in normalized), default=0),
    )


# ---------------------------------------------------------------------------
# Incremental aggregation (drives the live mediator; batch is the authority)


class IncrementalAggregator:
    """Event-at-a-time segmentation with the same merge rule as the batch path.

    feed() returns True when the event opened a brand-new utterance (not a
    gap-merge continuation) — the stream server forwards those moments to
    the mediator as provisional turn onsets. finalize() closes dangling
    speech at the watermark and produces a MeetingMetrics equal to the
    batch aggregate for any normalized-order input.
    """

    def __init__(
        self,
        meeting_id: str,
        policy: MetricsPolicy,
        *,
        participants: Sequence[str] | None = None,
        started_at: int = 0,
    ):
        self.meeting_id = meeting_id
        self.policy = policy
        self.participants = list(participants) if participants is not None else None
        self.started_at = started_at
        self._open: dict[str, int] = {}
        self._closed: dict[str, list[tuple[int, int]]] = {}
        self._watermark = 0
        self._seen: list[str] = []

    def feed(self, ev: VoiceActivityEvent) -> bool:
        self._watermark = max(self._watermark, ev.t_ms)
        pid = ev.participant_id
        if pid not in self._closed:
            self._closed[pid] = []
            self._seen.append(pid)
        if ev.speaking:
            if pid in self._open:
                return False  # duplicate onset
            spans = self._closed[pid]
            if spans and ev.t_ms - spans[-1][1] < self.policy.segmentation.g_merge_ms:
                # Gap short enough to merge: reopen the previous utterance.
                start, _ = spans.pop()
                self._open[pid] = start
                return False
            self._open[pid] = ev.t_ms
            return True
        start = self._open.pop(pid, None)
        if start is not None and ev.t_ms > start:
            self._closed[pid].append((start, max(ev.t_ms, start)))
        return False

    def utterances_so_far(self) -> list[Utterance]:
        out = [
            Utterance(pid, s, e)
            for pid, spans in self._closed.items()
            for s, e in spans
        ]
        for pid, start in self._open.items():
            if self._watermark > start:
                out.append(Utterance(pid, start, self._watermark))
        out.sort(key=lambda u: (u.start_ms, u.participant_id))
        return out

    def finalize(self) -> MeetingMetrics:
        utterances = self.utterances_so_far()
        roster = self.participants if self.participants is not None else list(self._seen)
        return _metrics_from_utterances(
            utterances,
            self.policy,
            meeting_id=self.meeting_id,
            roster=roster,
            started_at=self.started_at,
            duration_ms=self._watermark,
        )


# ---------------------------------------------------------------------------
# Meeting history


@dataclass(frozen=True)
class HistoryEntry:
    meeting_id: str
    started_at: int
    turn_share: dict[str, float]
    interruptions: dict[str, int]
    affirmations: dict[str, int]
    influences: dict[str, int]


@dataclass(frozen=True)
class HistorySeries:
    entries: tuple[HistoryEntry, ...]


def meeting_history(metrics: Sequence[MeetingMetrics]) -> HistorySeries:
    """Per-meeting series for history charts: one entry per meeting.

    Counts are row sums of the pairwise matrices (events where the
    participant acted). Input must already be sorted by started_at.
    """
    for a, b in zip(metrics, metrics[1:]):
        if a.started_at > b.started_at:
            raise ValidationError("unsorted_meetings", "metrics must be sorted by started_at")
    entries = []
    for m in metrics:
        entries.append(
            HistoryEntry(
                meeting_id=m.meeting_id,
                started_at=m.started_at,
                turn_share={pid: m.shares[pid].turn_share for pid in m.participants},
                interruptions={
                    pid: sum(m.pairwise[KIND_INTERRUPTION][pid].values()) for pid in m.participants
                },
                affirmations={
                    pid: sum(m.pairwise[KIND_AFFIRMATION][pid].values()) for pid in m.participants
                },
                influences={
                    pid: sum(m.pairwise[KIND_INFLUENCE][pid].values()) for pid in m.participants
                },
            )
        )
    return HistorySeries(entries=tuple(entries))
