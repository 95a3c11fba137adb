"""Meeting hub: session lifecycle, event ingestion, ticks, finalization.

Transport-free. The network layer (server module) feeds parsed frames in
and registers broadcast callbacks; all mutation for one meeting happens on
a single logical owner (one asyncio loop), so there is no locking here.

Tick semantics: a snapshot at boundary b reflects exactly the events with
t_ms <= b that have been ingested when b is emitted. Boundaries are pushed
by two drivers that share one high-water mark and therefore never emit a
boundary twice:

- event time: ingesting an event at t first flushes boundaries strictly
  below t, then applies the event, then flushes a boundary equal to t.
  Replays are deterministic at any wall speed because only timestamps
  matter.
- wall time (live mode): the server's scaled clock calls tick_to() so the
  gauge keeps updating through silence. An event arriving after the wall
  clock already passed its boundary lands in the next window.

Persistence is flat files per meeting under a data directory: the accepted
event log (append-as-received JSONL), a metadata header, and the final
metrics document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .errors import StateError, ValidationError
from .events import VoiceActivityEvent, event_to_line
from .mediator import MediatorConfig, MediatorSnapshot, MediatorWindow
from .metrics import IncrementalAggregator, MeetingMetrics, MetricsPolicy, aggregate_meeting

SnapshotCallback = Callable[[MediatorSnapshot], None]

STATUS_OPEN = "open"
STATUS_FINALIZED = "finalized"


@dataclass
class MeetingSession:
    meeting_id: str
    started_at: int
    status: str = STATUS_OPEN
    roster: list[str] = field(default_factory=list)
    events: list[VoiceActivityEvent] = field(default_factory=list)
    seq: int = 0
    emitted_through: int = 0
    watermark: int = 0
    latest_snapshot: MediatorSnapshot | None = None
    subscribers: list[SnapshotCallback] = field(default_factory=list)
    window: MediatorWindow | None = None
    incremental: IncrementalAggregator | None = None
    pending_onsets: list[tuple[int, str]] = field(default_factory=list)
    final_metrics: MeetingMetrics | None = None


class MeetingHub:
    """All live meetings plus their persistence."""

    def __init__(
        self,
        *,
        data_dir: str | Path | None = None,
        metrics_policy: MetricsPolicy | None = None,
        mediator_config: MediatorConfig | None = None,
    ):
        self.data_dir = Path(data_dir) if data_dir is not None else None
        if self.data_dir is not None:
            self.data_dir.mkdir(parents=True, exist_ok=True)
        self.metrics_policy = metrics_policy or MetricsPolicy()
        self.mediator_config = mediator_config or MediatorConfig()
        self.sessions: dict[str, MeetingSession] = {}

    # -- lifecycle ---------------------------------------------------------

    def open_meeting(self, meeting_id: str, *, started_at: int = 0) -> MeetingSession:
        # ids become filenames; keep them path-safe
        if not meeting_id or not all(c.isalnum() or c in "-_." for c in meeting_id):
            raise ValidationError("bad_meeting_id", f"unusable meeting id {meeting_id!r}")
        if meeting_id in self.sessions:
            raise StateError("duplicate_meeting", f"meeting {meeting_id!r} already open")
        session = MeetingSession(meeting_id=meeting_id, started_at=started_at)
        session.window = MediatorWindow(meeting_id, self.mediator_config)
        session.incremental = IncrementalAggregator(
            meeting_id, self.metrics_policy, started_at=started_at
        )
        self.sessions[meeting_id] = session
        if self.data_dir is not None:
            self._log_path(meeting_id).write_text("")
        return session

    def _session(self, meeting_id: str) -> MeetingSession:
        session = self.sessions.get(meeting_id)
        if session is None:
            raise ValidationError("unknown_meeting", f"unknown meeting {meeting_id!r}")
        return session

    def join(self, meeting_id: str, participant_id: str) -> list[str]:
        """Add a participant (idempotent); returns the roster."""
        session = self._session(meeting_id)
        if session.status != STATUS_OPEN:
            raise StateError("meeting_finalized", f"meeting {meeting_id!r} is finalized")
        if not participant_id:
            raise ValidationError("bad_participant_id", "participant id must be nonempty")
        if participant_id not in session.roster:
            assert session.window is not None
            session.window.add_participant(participant_id)
            session.roster.append(participant_id)
        return list(session.roster)

    # -- ingestion and ticks -------------------------------------------------

    def ingest(self, meeting_id: str, event: VoiceActivityEvent) -> int:
        """Validate and append one event; returns its sequence number."""
        session = self._session(meeting_id)
        if session.status != STATUS_OPEN:
            raise StateError("meeting_finalized", f"meeting {meeting_id!r} is finalized")
        if event.participant_id not in session.roster:
            raise ValidationError(
                "unknown_participant", f"participant {event.participant_id!r} has not joined"
            )
        if event.t_ms < 0:
            raise ValidationError("negative_t_ms", f"negative t_ms {event.t_ms}")
        # Boundaries strictly below this event predate it.
        self._emit_boundaries(session, event.t_ms, inclusive=False)
        session.events.append(event)
        session.seq += 1
        session.watermark = max(session.watermark, event.t_ms)
        assert session.incremental is not None
        if session.incremental.feed(event):
            session.pending_onsets.append((event.t_ms, event.participant_id))
        self._emit_boundaries(session, event.t_ms, inclusive=True)
        if self.data_dir is not None:
            with self._log_path(meeting_id).open("a") as fh:
                fh.write(event_to_line(event) + "\n")
        return session.seq

    def tick_to(self, meeting_id: str, now_ms: int) -> None:
        """Wall-clock driver: emit any boundaries at or below now_ms."""
        session = self._session(meeting_id)
        if session.status != STATUS_OPEN:
            return
        self._emit_boundaries(session, now_ms, inclusive=True)

    def flush_ticks(self, meeting_id: str, through_ms: int | None = None) -> None:
        """Emit all boundaries up to the event-time watermark (replay tail)."""
        session = self._session(meeting_id)
        self._emit_boundaries(
            session, session.watermark if through_ms is None else through_ms, inclusive=True
        )

    def _emit_boundaries(self, session: MeetingSession, limit_ms: int, *, inclusive: bool) -> None:
        tick = self.mediator_config.tick_ms
        assert session.window is not None
        while True:
            boundary = session.emitted_through + tick
            if boundary > limit_ms or (boundary == limit_ms and not inclusive):
                break
            session.pending_onsets.sort()
            take = 0
            while take < len(session.pending_onsets) and session.pending_onsets[take][0] <= boundary:
                take += 1
            onsets = [(pid, t) for t, pid in session.pending_onsets[:take]]
            del session.pending_onsets[:take]
            snapshot = session.window.advance(onsets, boundary)
            session.emitted_through = boundary
            session.latest_snapshot = snapshot
            for callback in list(session.subscribers):
                callback(snapshot)

    # -- subscription ---------------------------------------------------------

    def subscribe(self, meeting_id: str, callback: SnapshotCallback) -> Callable[[], None]:
        """Register a snapshot consumer; delivers the current snapshot first."""
        session = self._session(meeting_id)
        session.subscribers.append(callback)
        if session.latest_snapshot is not None:
            callback(session.latest_snapshot)

        def unsubscribe() -> None:
            if callback in session.subscribers:
                session.subscribers.remove(callback)

        return unsubscribe

    # -- finalization ---------------------------------------------------------

    def finalize(self, meeting_id: str) -> MeetingMetrics:
        """Batch-aggregate the full log; idempotent after the first call."""
        session = self._session(meeting_id)
        if session.final_metrics is not None:
            return session.final_metrics
        metrics = aggregate_meeting(
            session.events,
            self.metrics_policy,
            meeting_id=meeting_id,
            participants=session.roster,
            started_at=session.started_at,
        )
        session.status = STATUS_FINALIZED
        session.final_metrics = metrics
        session.subscribers.clear()
        if self.data_dir is not None:
            self._metrics_path(meeting_id).write_text(metrics.to_json())
            self._meta_path(meeting_id).write_text(
                json.dumps(
                    {
                        "meeting_id": meeting_id,
                        "started_at": session.started_at,
                        "roster": session.roster,
                    },
                    indent=2,
                )
                + "\n"
            )
        return metrics

    # -- paths ------------------------------------------------------------------

    def _log_path(self, meeting_id: str) -> Path:
        assert self.data_dir is not None
        return self.data_dir / f"{meeting_id}.events.jsonl"

    # -- replay -------------------------------------------------------------

    def replay(
        self,
        meeting_id: str,
        events: list[VoiceActivityEvent],
        *,
        participants: list[str] | None = None,
        started_at: int = 0,
        finalize: bool = True,
    ) -> tuple[list[MediatorSnapshot], MeetingMetrics | None]:
        """Drive a whole log through the hub on event time alone.

        Returns every emitted snapshot and (optionally) the final metrics.
        Output is a pure function of the log, independent of wall speed.
        The roster defaults to first-speech order.
        """
        self.open_meeting(meeting_id, started_at=started_at)
        for pid in participants or ():
            self.join(meeting_id, pid)
        for ev in events:
            if ev.participant_id not in self._session(meeting_id).roster:
                self.join(meeting_id, ev.participant_id)
        snapshots: list[MediatorSnapshot] = []
        self.subscribe(meeting_id, snapshots.append)
        for ev in events:
            self.ingest(meeting_id, ev)
        self.flush_ticks(meeting_id)
        metrics = self.finalize(meeting_id) if finalize else None
        return snapshots, metrics

    def _metrics_path(self, meeting_id: str) -> Path:
        assert self.data_dir is not None
        return self.data_dir / f"{meeting_id}.metrics.json"

    def _meta_path(self, meeting_id: str) -> Path:
        assert self.data_dir is not None
        return self.data_dir / f"{meeting_id}.meta.json"
