"""Voice-activity events, utterances, and speaking turns.

The substrate for every metric in the system: raw onset/offset signals are
normalized into clean alternating streams, paired into speech intervals,
gap-merged into utterances, and length-filtered into turns. All functions
here are pure; the stream server keeps its own incremental state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ValidationError


@dataclass(frozen=True, slots=True)
class VoiceActivityEvent:
    """A speaking onset (speaking=True) or offset for one participant."""

    meeting_id: str
    participant_id: str
    t_ms: int
    speaking: bool


@dataclass(frozen=True, slots=True)
class Utterance:
    """A contiguous speech interval after gap-merging."""

    participant_id: str
    start_ms: int
    end_ms: int

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


@dataclass(frozen=True, slots=True)
class Turn:
    """An utterance long enough to count in turn statistics."""

    utterance: Utterance
    index: int

    @property
    def participant_id(self) -> str:
        return self.utterance.participant_id

    @property
    def start_ms(self) -> int:
        return self.utterance.start_ms

    @property
    def end_ms(self) -> int:
        return self.utterance.end_ms


@dataclass(frozen=True, slots=True)
class SegmentationPolicy:
    """Thresholds for merging pauses and qualifying turns.

    g_merge_ms bridges intra-sentence pauses; t_turn_ms separates
    substantive turns from short backchannel verbalizations.
    """

    g_merge_ms: int = 300
    t_turn_ms: int = 1000

    def __post_init__(self) -> None:
        if self.g_merge_ms <= 0 or self.t_turn_ms <= 0:
            raise ValidationError("bad_policy", "g_merge_ms and t_turn_ms must be > 0")
        if self.t_turn_ms < self.g_merge_ms:
            raise ValidationError("bad_policy", "t_turn_ms must be >= g_merge_ms")


def normalize_events(events: Sequence[VoiceActivityEvent]) -> list[VoiceActivityEvent]:
    """Normalize a raw event stream into a sorted, strictly alternating one.

    - events are stably sorted by t_ms (arrival order breaks ties)
    - per participant, onsets/offsets strictly alternate; duplicates collapse
      to the first occurrence, and an offset with no open onset is dropped
    - a dangling onset at stream end is closed at the last observed timestamp

    Raises on any negative timestamp, naming the offending event's index.
    """
    for i, ev in enumerate(events):
        if ev.t_ms < 0:
            raise ValidationError("negative_t_ms", f"event {i}: negative t_ms {ev.t_ms}")
    ordered = sorted(events, key=lambda ev: ev.t_ms)
    speaking: dict[str, bool] = {}
    out: list[VoiceActivityEvent] = []
    for ev in ordered:
        if speaking.get(ev.participant_id, False) == ev.speaking:
            continue  # duplicate onset/offset, or orphan offset
        speaking[ev.participant_id] = ev.speaking
        out.append(ev)
    if out:
        last_t = ordered[-1].t_ms
        for pid, is_on in speaking.items():
            if is_on:
                meeting_id = next(ev.meeting_id for ev in out if ev.participant_id == pid)
                out.append(VoiceActivityEvent(meeting_id, pid, last_t, False))
    return out


def segment_utterances(
    events: Sequence[VoiceActivityEvent], policy: SegmentationPolicy
) -> list[Utterance]:
    """Pair normalized onset/offset events into gap-merged utterances.

    Consecutive same-participant intervals with a gap strictly below
    g_merge_ms merge into one utterance. Zero-length intervals (an onset
    closed at the same millisecond) are dropped. Output is ordered by
    (start_ms, participant_id).
    """
    open_start: dict[str, int] = {}
    intervals: dict[str, list[tuple[int, int]]] = {}
    for ev in events:
        if ev.speaking:
            open_start[ev.participant_id] = ev.t_ms
        else:
            start = open_start.pop(ev.participant_id, None)
            if start is None:
                raise ValidationError("not_normalized", f"offset without onset for {ev.participant_id}")
            if ev.t_ms > start:
                intervals.setdefault(ev.participant_id, []).append((start, ev.t_ms))
    if open_start:
        pid = next(iter(open_start))
        raise ValidationError("not_normalized", f"dangling onset for {pid}")

    merged: list[Utterance] = []
    for pid, spans in intervals.items():
        cur_start, cur_end = spans[0]
        for start, end in spans[1:]:
            if start - cur_end < policy.g_merge_ms:
                cur_end = max(cur_end, end)
            else:
                merged.append(Utterance(pid, cur_start, cur_end))
                cur_start, cur_end = start, end
        merged.append(Utterance(pid, cur_start, cur_end))
    merged.sort(key=lambda u: (u.start_ms, u.participant_id))
    return merged


def classify_turns(utterances: Sequence[Utterance], policy: SegmentationPolicy) -> list[Turn]:
    """Promote every utterance of at least t_turn_ms to a Turn.

    Turn indices are meeting-wide ordinals in (start_ms, participant_id)
    order. Shorter utterances are not discarded; fetch them with
    backchannel_candidates.
    """
    qualifying = sorted(
        (u for u in utterances if u.duration_ms >= policy.t_turn_ms),
        key=lambda u: (u.start_ms, u.participant_id),
    )
    return [Turn(utterance=u, index=i) for i, u in enumerate(qualifying)]


def backchannel_candidates(
    utterances: Sequence[Utterance], policy: SegmentationPolicy
) -> list[Utterance]:
    """Utterances too short to be turns: candidate affirmation verbalizations."""
    return [u for u in utterances if u.duration_ms < policy.t_turn_ms]


# ---------------------------------------------------------------------------
# Event log line format (one JSON object per line; also the vad wire payload)


def event_to_line(ev: VoiceActivityEvent) -> str:
    return json.dumps(
        {"meeting": ev.meeting_id, "participant": ev.participant_id, "t_ms": ev.t_ms, "speaking": ev.speaking},
        separators=(",", ":"),
    )


def event_from_obj(obj: dict) -> VoiceActivityEvent:
    """Build an event from a parsed log line or vad frame payload."""
    try:
        meeting = obj["meeting"]
        participant = obj["participant"]
        t_ms = obj["t_ms"]
        speaking = obj["speaking"]
    except KeyError as exc:
        raise ValidationError("missing_field", f"event line missing {exc.args[0]!r}") from None
    if not isinstance(meeting, str) or not isinstance(participant, str):
        raise ValidationError("bad_field", "meeting and participant must be strings")
    if not isinstance(t_ms, int) or isinstance(t_ms, bool):
        raise ValidationError("bad_field", f"t_ms must be an integer, got {t_ms!r}")
    if t_ms < 0:
        raise ValidationError("negative_t_ms", f"negative t_ms {t_ms}")
    if not isinstance(speaking, bool):
        raise ValidationError("bad_field", f"speaking must be a boolean, got {speaking!r}")
    return VoiceActivityEvent(meeting, participant, t_ms, speaking)


def event_from_line(line: str) -> VoiceActivityEvent:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValidationError("malformed_json", f"bad event line: {exc}") from None
    if not isinstance(obj, dict):
        raise ValidationError("malformed_json", "event line is not a JSON object")
    return event_from_obj(obj)


def read_event_log(lines: Iterable[str]) -> list[VoiceActivityEvent]:
    """Parse a JSONL event log, skipping blank lines."""
    return [event_from_line(line) for line in lines if line.strip()]


def write_event_log(events: Sequence[VoiceActivityEvent]) -> str:
    return "".join(event_to_line(ev) + "\n" for ev in events)
