"""Shared oracles and generators for the test suite.

Everything here is written independently of the package's own algorithms:
brute-force all-pairs classifiers, from-scratch recounts, and plain random
stream generators. Tests compare the production implementations against
these.
"""

from __future__ import annotations

import random

from turnwise.events import Turn, Utterance, VoiceActivityEvent


def random_event_stream(
    r: random.Random,
    participants: list[str],
    horizon_ms: int,
    meeting_id: str = "m",
) -> list[VoiceActivityEvent]:
    """Independent random onset/offset streams, one toggle walk per participant."""
    events: list[VoiceActivityEvent] = []
    for pid in participants:
        t = r.randrange(0, 2000)
        speaking = False
        while t < horizon_ms:
            speaking = not speaking
            events.append(VoiceActivityEvent(meeting_id, pid, t, speaking))
            t += r.randrange(50, 4000)
        if speaking:
            events.append(VoiceActivityEvent(meeting_id, pid, min(t, horizon_ms), False))
    events.sort(key=lambda ev: ev.t_ms)
    return events


def brute_force_pair_events(
    utterances: list[Utterance], turns: list[Turn], t_turn_ms: int
) -> set[tuple]:
    """O(n^2) all-pairs interruption/affirmation classification."""
    out = set()
    for u in utterances:
        for t in turns:
            if u.participant_id == t.participant_id:
                continue
            if not (t.start_ms < u.start_ms < t.end_ms):
                continue
            if (u.end_ms - u.start_ms) >= t_turn_ms and t.end_ms <= u.end_ms:
                out.add(("interruption", u.participant_id, t.participant_id, t.end_ms))
            else:
                out.add(("affirmation", u.participant_id, t.participant_id, u.end_ms))
    return out


def brute_force_influences(turns: list[Turn], window_ms: int) -> set[tuple]:
    """O(n^2) immediate-successor search instead of a sorted sweep."""
    out = set()
    keys = [(t.start_ms, t.participant_id) for t in turns]
    for i, a in enumerate(turns):
        successor = None
        best_key = None
        for j, b in enumerate(turns):
            if j == i or keys[j] <= keys[i]:
                continue
            if best_key is None or keys[j] < best_key:
                best_key = keys[j]
                successor = b
        if successor is None or successor.participant_id == a.participant_id:
            continue
        gap = successor.start_ms - a.end_ms
        if 0 <= gap <= window_ms:
            out.add(("influence", a.participant_id, successor.participant_id, successor.start_ms))
    return out


def recount_window(
    onsets: list[tuple[str, int]], now_ms: int, window_ms: int, roster: list[str]
) -> dict[str, int]:
    """From-scratch windowed recount over (now - window, now]."""
    counts = {pid: 0 for pid in roster}
    for pid, t in onsets:
        if now_ms - window_ms < t <= now_ms:
            counts[pid] += 1
    return counts
