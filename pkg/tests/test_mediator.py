"""Mediator tests: layout geometry, window exactness, node properties."""

from __future__ import annotations

import math
import random

import pytest

from conftest import recount_window
from turnwise.errors import StateError, ValidationError
from turnwise.mediator import MediatorConfig, MediatorWindow, layout_positions, node_position


def test_layout_single_vertex_at_top():
    assert layout_positions(1)[0] == pytest.approx((0.0, 1.0))


def test_layout_square():
    pts = layout_positions(4)
    expected = [(0, 1), (1, 0), (0, -1), (-1, 0)]
    for got, want in zip(pts, expected):
        assert got == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("n", range(1, 17))
def test_layout_unit_radius(n):
    for x, y in layout_positions(n):
        assert math.hypot(x, y) == pytest.approx(1.0, abs=1e-9)


def test_layout_rejects_bad_counts():
    with pytest.raises(ValidationError):
        layout_positions(0)
    with pytest.raises(ValidationError):
        layout_positions(17)


def _window(participants, **config) -> MediatorWindow:
    return MediatorWindow("m", MediatorConfig(**config), participants)


def test_single_speaker_node_at_their_vertex():
    w = _window(["p1", "p2", "p3"])
    snap = w.advance([("p1", 500), ("p1", 900)], 1000)
    assert snap.node_position == pytest.approx(w._snapshot(1000).layout["p1"])
    assert snap.spoke_weights["p1"] == 1.0


def test_equal_counts_node_at_center():
    w = _window(["p1", "p2", "p3", "p4"])
    onsets = [(f"p{i + 1}", 100 * (i + 1)) for i in range(4)]
    snap = w.advance(onsets, 1000)
    assert snap.node_position == pytest.approx((0.0, 0.0), abs=1e-12)
    assert all(v == pytest.approx(0.25) for v in snap.spoke_weights.values())
    assert snap.engagement_total == 4


def test_empty_window_zeroes():
    w = _window(["p1", "p2"])
    snap = w.advance([], 1000)
    assert snap.engagement_total == 0
    assert snap.node_position == (0.0, 0.0)
    assert all(v == 0.0 for v in snap.spoke_weights.values())
    assert snap.engagement_level == 0.0


def test_engagement_saturation():
    w = _window(["p1", "p2"], engagement_saturation_turns=10)
    onsets = [("p1", 10 * i) for i in range(25)]
    snap = w.advance(onsets, 1000)
    assert snap.engagement_level == 1.0
    assert snap.engagement_total == 25


def test_time_regression_names_both_stamps():
    w = _window(["p1"])
    w.advance([], 5000)
    with pytest.raises(StateError) as exc:
        w.advance([], 4000)
    assert "5000" in exc.value.message and "4000" in exc.value.message


def test_future_onset_rejected():
    w = _window(["p1"])
    with pytest.raises(ValidationError):
        w.advance([("p1", 2000)], 1000)


def test_unknown_participant_rejected():
    w = _window(["p1"])
    with pytest.raises(ValidationError):
        w.advance([("zz", 0)], 1000)


def test_window_eviction_matches_recount_oracle():
    r = random.Random(33)
    for trial in range(60):
        n = r.randrange(2, 7)
        roster = [f"p{i}" for i in range(n)]
        window_ms = r.choice([5000, 10_000, 30_000])
        tick_ms = r.choice([250, 500, 1000])
        w = MediatorWindow("m", MediatorConfig(window_ms=window_ms, tick_ms=tick_ms), roster)
        onsets = sorted(
            ((r.choice(roster), r.randrange(0, 60_000)) for _ in range(r.randrange(5, 80))),
            key=lambda o: o[1],
        )
        phase = r.randrange(0, tick_ms)
        fed = 0
        all_fed: list[tuple[str, int]] = []
        for now in range(phase, 61_000, tick_ms):
            batch = []
            while fed < len(onsets) and onsets[fed][1] <= now:
                batch.append(onsets[fed])
                fed += 1
            snap = w.advance(batch, now)
            all_fed.extend(batch)
            assert snap.counts == recount_window(all_fed, now, window_ms, roster)
            assert snap.engagement_total == sum(snap.counts.values())


def test_node_strictly_nearest_unique_argmax_and_in_hull():
    r = random.Random(44)
    for _ in range(300):
        n = r.randrange(2, 9)
        layout = layout_positions(n)
        counts = [r.randrange(0, 12) for _ in range(n)]
        node = node_position(counts, layout)
        # hull containment: a centroid-of-vertices hull test via winding is
        # overkill; the node is on a spoke segment, so |node| <= 1 suffices
        # together with the polygon being star-shaped around the origin.
        assert math.hypot(*node) <= 1.0 + 1e-12
        top = max(counts)
        if top > 0 and counts.count(top) == 1:
            j = counts.index(top)
            dists = [math.hypot(node[0] - vx, node[1] - vy) for vx, vy in layout]
            assert dists[j] < min(d for i, d in enumerate(dists) if i != j) - 1e-12


def test_monotone_engagement():
    w = _window(["p1", "p2"])
    snap1 = w.advance([("p1", 100)], 1000)
    snap2 = w.advance([("p2", 1500)], 2000)
    assert snap2.engagement_total >= snap1.engagement_total


def test_snapshot_latency_within_one_tick():
    w = _window(["p1", "p2"])
    onset_t = 4321
    snap = w.advance([("p1", onset_t)], 5000)  # first tick with t_ms >= onset
    assert snap.counts["p1"] == 1


def test_wire_frame_shape():
    w = _window(["p1", "p2"])
    snap = w.advance([("p1", 100), ("p1", 300), ("p1", 600), ("p2", 900)], 1000)
    frame = snap.to_frame()
    assert frame["type"] == "mm"
    assert frame["meeting"] == "m"
    assert frame["t_ms"] == 1000
    assert frame["counts"] == {"p1": 3, "p2": 1}
    assert frame["engagement"] == 4
    assert frame["spokes"] == {"p1": 0.75, "p2": 0.25}
    assert isinstance(frame["node"], list) and len(frame["node"]) == 2
