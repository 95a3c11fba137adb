"""Live meeting gauge: windowed turn counts, engagement, node, spokes.

State is one trailing window of turn onsets per meeting. Each tick produces
an immutable snapshot:

- engagement_total: onsets inside the window, summed over participants;
  engagement_level saturates linearly at a configurable count.
- spoke_weights: each participant's fraction of the windowed onsets.
- node_position: sits on the spoke of the participant with the most
  windowed onsets, pushed out from the center by their dominance margin
  (1 - second_count / top_count). A tied or empty window puts the node at
  the center. This keeps the node strictly nearest the top turn-taker
  whenever that participant is unique, which a plain count-weighted
  centroid of the vertex layout cannot guarantee for four or more seats.

Participants sit at the vertices of a regular polygon on the unit circle,
first seat at the top, clockwise in join order. Seats persist for the whole
meeting; a participant who stops talking simply decays out of the window.
"""

from __future__ import annotations

import json
import math
from bisect import insort
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import StateError, ValidationError

MAX_PARTICIPANTS = 16


@dataclass(frozen=True, slots=True)
class MediatorConfig:
    window_ms: int = 300_000
    tick_ms: int = 1_000
    engagement_saturation_turns: int = 30

    def __post_init__(self) -> None:
        if not (self.window_ms >= self.tick_ms > 0):
            raise ValidationError("bad_config", "need window_ms >= tick_ms > 0")
        if self.engagement_saturation_turns <= 0:
            raise ValidationError("bad_config", "engagement saturation must be > 0")


@dataclass(frozen=True)
class MediatorSnapshot:
    meeting_id: str
    t_ms: int
    counts: dict[str, int]
    engagement_total: int
    engagement_level: float
    node_position: tuple[float, float]
    spoke_weights: dict[str, float]
    layout: dict[str, tuple[float, float]]

    def to_frame(self) -> dict:
        """Wire form, one JSON object per broadcast frame."""
        return {
            "type": "mm",
            "meeting": self.meeting_id,
            "t_ms": self.t_ms,
            "counts": dict(self.counts),
            "engagement": self.engagement_total,
            "level": self.engagement_level,
            "node": [self.node_position[0], self.node_position[1]],
            "spokes": dict(self.spoke_weights),
        }

    def to_line(self) -> str:
        return json.dumps(self.to_frame(), separators=(",", ":"))


def layout_positions(n: int) -> list[tuple[float, float]]:
    """Vertices of a regular n-gon on the unit circle.

    First participant at the top (angle 90 degrees), subsequent seats
    clockwise in join order.
    """
    if n < 1 or n > MAX_PARTICIPANTS:
        raise ValidationError("bad_participant_count", f"n must be in 1..{MAX_PARTICIPANTS}, got {n}")
    out = []
    for k in range(n):
        angle = math.pi / 2.0 - 2.0 * math.pi * k / n
        out.append((math.cos(angle), math.sin(angle)))
    return out


def node_position(
    counts: Sequence[int], layout: Sequence[tuple[float, float]]
) -> tuple[float, float]:
    """Gauge node for the given windowed counts.

    On the top participant's spoke at distance (1 - c2/c1) from the center,
    where c1 is the top count and c2 the best among everyone else; center
    when the window is empty or tied at the top.
    """
    if len(counts) != len(layout):
        raise ValidationError("length_mismatch", "counts and layout must align")
    top_idx = -1
    c1 = 0
    for i, c in enumerate(counts):
        if c > c1:
            c1 = c
            top_idx = i
    if c1 == 0:
        return (0.0, 0.0)
    c2 = max((c for i, c in enumerate(counts) if i != top_idx), default=0)
    t = 1.0 - c2 / c1
    vx, vy = layout[top_idx]
    return (t * vx, t * vy)


class MediatorWindow:
    """Single-owner windowed state; snapshots are immutable values."""

    def __init__(self, meeting_id: str, config: MediatorConfig, participants: Iterable[str] = ()):
        self.meeting_id = meeting_id
        self.config = config
        self._roster: list[str] = []
        self._counts: dict[str, int] = {}
        self._onsets: list[tuple[int, str]] = []  # (t_ms, participant), kept sorted
        self._last_now: int | None = None
        for pid in participants:
            self.add_participant(pid)

    @property
    def roster(self) -> list[str]:
        return list(self._roster)

    def add_participant(self, participant_id: str) -> None:
        if participant_id in self._counts:
            return
        if len(self._roster) >= MAX_PARTICIPANTS:
            raise ValidationError("bad_participant_count", f"roster full at {MAX_PARTICIPANTS}")
        self._roster.append(participant_id)
        self._counts[participant_id] = 0

    def advance(self, onsets: Sequence[tuple[str, int]], now_ms: int) -> MediatorSnapshot:
        """Apply new turn onsets, evict expired ones, and snapshot at now_ms.

        now_ms must not regress across calls; onsets must not be stamped in
        the future. The window is the half-open interval
        (now_ms - window_ms, now_ms].
        """
        if self._last_now is not None and now_ms < self._last_now:
            raise StateError(
                "time_regression", f"now_ms went backwards: {self._last_now} -> {now_ms}"
            )
        self._last_now = now_ms
        for pid, t in onsets:
            if pid not in self._counts:
                raise ValidationError("unknown_participant", f"onset for unknown participant {pid!r}")
            if t > now_ms:
                raise ValidationError("future_event", f"onset at {t} is after now_ms={now_ms}")
            insort(self._onsets, (t, pid))
            self._counts[pid] += 1
        cutoff = now_ms - self.config.window_ms
        drop = 0
        for t, pid in self._onsets:
            if t <= cutoff:
                self._counts[pid] -= 1
                drop += 1
            else:
                break
        if drop:
            del self._onsets[:drop]
        return self._snapshot(now_ms)

    def _snapshot(self, now_ms: int) -> MediatorSnapshot:
        layout = layout_positions(len(self._roster)) if self._roster else []
        counts = {pid: self._counts[pid] for pid in self._roster}
        total = sum(counts.values())
        level = min(1.0, total / self.config.engagement_saturation_turns)
        spokes = {
            pid: (counts[pid] / total if total else 0.0) for pid in self._roster
        }
        node = node_position([counts[pid] for pid in self._roster], layout) if self._roster else (0.0, 0.0)
        return MediatorSnapshot(
            meeting_id=self.meeting_id,
            t_ms=now_ms,
            counts=counts,
            engagement_total=total,
            engagement_level=level,
            node_position=node,
            spoke_weights=spokes,
            layout={pid: layout[i] for i, pid in enumerate(self._roster)},
        )
