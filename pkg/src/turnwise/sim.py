"""Deterministic conversation simulator and experiment harness.

Agents follow a minimal generative model that still produces every metric
category: per-second Bernoulli turn starts gated on a free channel,
exponential turn lengths, Poisson-ish backchannels while someone else
holds the floor, and probabilistic interruptions that truncate the
current turn. When gauge feedback is on, each agent scales its
talkativeness against its own spoke-weight deviation from an equal share,
so dominant agents back off and quiet agents lean in.

All randomness flows through ``random.Random.random()`` with explicit
inverse-transform sampling, so a (config, seed) pair maps to one exact
byte stream. The gauge state is computed every simulated second whether
feedback is on or off; with zero sensitivity the on/off logs are
identical because the draw sequence never depends on the unused state.
"""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass
from typing import Sequence

from .cohort import COHORT_CSV_HEADER
from .errors import ValidationError
from .events import VoiceActivityEvent, normalize_events, segment_utterances
from .mediator import MediatorConfig, MediatorWindow
from .metrics import KIND_AFFIRMATION, KIND_INFLUENCE, KIND_INTERRUPTION, MetricsPolicy, aggregate_meeting

_STEP_MS = 1000
_BACKCHANNEL_MIN_MS = 200
_BACKCHANNEL_SPREAD_MS = 500
_INTERRUPT_TRAIL_MIN_MS = 300
_INTERRUPT_TRAIL_SPREAD_MS = 400


@dataclass(frozen=True, slots=True)
class AgentProfile:
    """Behavioral parameters for one simulated participant."""

    talkativeness: float  # probability of starting a turn per free second
    mean_turn_ms: float
    backchannel_rate: float  # utterances per minute while others speak
    interrupt_propensity: float
    mm_sensitivity: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 < self.talkativeness <= 1.0):
            raise ValidationError("bad_profile", f"talkativeness {self.talkativeness} outside (0, 1]")
        if self.mean_turn_ms <= 0:
            raise ValidationError("bad_profile", "mean_turn_ms must be > 0")
        if self.backchannel_rate < 0:
            raise ValidationError("bad_profile", "backchannel_rate must be >= 0")
        if not (0.0 <= self.interrupt_propensity <= 1.0):
            raise ValidationError("bad_profile", "interrupt_propensity outside [0, 1]")
        if not (0.0 <= self.mm_sensitivity <= 1.0):
            raise ValidationError("bad_profile", "mm_sensitivity outside [0, 1]")


BALANCED_PROFILE = AgentProfile(
    talkativeness=0.25, mean_turn_ms=4000, backchannel_rate=2.0, interrupt_propensity=0.1,
    mm_sensitivity=0.5,
)


def balanced_profiles(n: int) -> list[AgentProfile]:
    return [BALANCED_PROFILE] * n


def dominant_profiles(n: int) -> list[AgentProfile]:
    """One floor-hog plus progressively quieter peers."""
    out = [
        AgentProfile(
            talkativeness=0.75, mean_turn_ms=7000, backchannel_rate=1.0,
            interrupt_propensity=0.35, mm_sensitivity=0.8,
        )
    ]
    for k in range(1, n):
        out.append(
            AgentProfile(
                talkativeness=max(0.04, 0.3 / (k + 1)), mean_turn_ms=3000,
                backchannel_rate=3.0, interrupt_propensity=0.05, mm_sensitivity=0.8,
            )
        )
    return out


def _exp_ms(r: random.Random, mean: float) -> int:
    return int(-mean * math.log(1.0 - r.random()))


def _shuffled(r: random.Random, n: int) -> list[int]:
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(r.random() * (i + 1))
        order[i], order[j] = order[j], order[i]
    return order


def participant_ids(n: int) -> list[str]:
    return [f"p{i + 1}" for i in range(n)]


def simulate_meeting(
    profiles: Sequence[AgentProfile],
    duration_ms: int,
    mm_on: bool,
    seed: int,
    *,
    meeting_id: str = "sim",
    policy: MetricsPolicy | None = None,
    mediator_config: MediatorConfig | None = None,
) -> list[VoiceActivityEvent]:
    """Generate one meeting's normalized voice-activity log.

    Participants are named p1..pN in profile order. The returned events are
    sorted and strictly alternating, i.e. normalize_events is a no-op on
    them.
    """
    if len(profiles) < 2:
        raise ValidationError("bad_profiles", "need at least 2 profiles")
    if duration_ms <= 0:
        raise ValidationError("bad_duration", "duration_ms must be > 0")
    policy = policy or MetricsPolicy()
    mediator_config = mediator_config or MediatorConfig()
    n = len(profiles)
    ids = participant_ids(n)
    r = random.Random(seed)
    gauge = MediatorWindow(meeting_id, mediator_config, ids)

    intervals: dict[int, list[list[int]]] = {i: [] for i in range(n)}
    busy_until = [0] * n
    holder: int | None = None
    holder_interval: list[int] | None = None
    pending_onsets: list[tuple[str, int]] = []
    min_turn_ms = policy.segmentation.t_turn_ms

    def effective_talk(i: int, spokes: dict[str, float], total: int) -> float:
        base = profiles[i].talkativeness
        if not mm_on or total == 0:
            return base
        deviation = spokes[ids[i]] - 1.0 / n
        factor = 1.0 - profiles[i].mm_sensitivity * deviation * n
        return min(1.0, max(0.0, base * factor))

    for t0 in range(0, duration_ms, _STEP_MS):
        snap = gauge.advance(sorted(pending_onsets, key=lambda o: o[1]), t0)
        pending_onsets = []
        if holder_interval is not None and holder_interval[1] <= t0:
            holder = None
            holder_interval = None
        claimed_this_step = False
        for i in _shuffled(r, n):
            if busy_until[i] > t0:
                continue
            if holder is None and not claimed_this_step:
                if r.random() < effective_talk(i, snap.spoke_weights, snap.engagement_total):
                    start = t0 + int(r.random() * _STEP_MS)
                    dur = min_turn_ms + _exp_ms(r, profiles[i].mean_turn_ms)
                    end = min(start + dur, duration_ms)
                    if end <= start:
                        continue
                    interval = [start, end]
                    intervals[i].append(interval)
                    busy_until[i] = end
                    holder, holder_interval = i, interval
                    pending_onsets.append((ids[i], start))
                    claimed_this_step = True
            elif holder is not None and i != holder:
                if r.random() < profiles[i].backchannel_rate / 60.0:
                    start = t0 + int(r.random() * _STEP_MS)
                    dur = _BACKCHANNEL_MIN_MS + int(r.random() * _BACKCHANNEL_SPREAD_MS)
                    end = min(start + dur, duration_ms)
                    if end <= start:
                        continue
                    intervals[i].append([start, end])
                    busy_until[i] = end
                    pending_onsets.append((ids[i], start))
                elif not claimed_this_step and r.random() < (
                    effective_talk(i, snap.spoke_weights, snap.engagement_total)
                    * profiles[i].interrupt_propensity
                ):
                    start = t0 + int(r.random() * _STEP_MS)
                    trail = _INTERRUPT_TRAIL_MIN_MS + int(r.random() * _INTERRUPT_TRAIL_SPREAD_MS)
                    dur = min_turn_ms + _exp_ms(r, profiles[i].mean_turn_ms)
                    end = min(start + dur, duration_ms)
                    if end <= start:
                        continue
                    assert holder_interval is not None
                    if start < holder_interval[1]:
                        # Cut the current speaker off; they trail off briefly.
                        holder_interval[1] = min(holder_interval[1], start + trail)
                        busy_until[holder] = holder_interval[1]
                    interval = [start, end]
                    intervals[i].append(interval)
                    busy_until[i] = end
                    holder, holder_interval = i, interval
                    pending_onsets.append((ids[i], start))
                    claimed_this_step = True

    events: list[VoiceActivityEvent] = []
    for i, spans in intervals.items():
        for start, end in spans:
            if end > start:
                events.append(VoiceActivityEvent(meeting_id, ids[i], start, True))
                events.append(VoiceActivityEvent(meeting_id, ids[i], end, False))
    events.sort(key=lambda ev: (ev.t_ms, ev.participant_id, ev.speaking))
    return events


# ---------------------------------------------------------------------------
# On/Off factorial experiment harness


CELL_LABELS = ("on_on", "on_off", "off_on", "off_off")
CELL_CONDITIONS = ((True, True), (True, False), (False, True), (False, False))
AB_CSV_HEADER = [
    "cell", "group", "task", "mm_on", "participants", "seed",
    "turn_share_entropy", "turn_share_variance",
    "interruptions", "affirmations", "influences", "engagement_mean",
]


@dataclass(frozen=True, slots=True)
class ExperimentDesign:
    """Two tasks per group, gauge on or off per task, all four cells."""

    groups_per_cell: int
    seed: int

    def __post_init__(self) -> None:
        if self.groups_per_cell < 1:
            raise ValidationError("bad_design", "groups_per_cell must be >= 1")


def _run_seed(master: int, group: int, task: int) -> int:
    # Deliberately independent of the cell condition: the same (group, task)
    # pair replays the same dice in every cell, isolating the gauge effect.
    return master * 1_000_003 + group * 17 + task


def _engagement_mean(
    events: Sequence[VoiceActivityEvent],
    duration_ms: int,
    policy: MetricsPolicy,
    config: MediatorConfig,
) -> float:
    """Mean windowed onset count over per-second ticks, recomputed offline."""
    utterances = segment_utterances(normalize_events(events), policy.segmentation)
    onsets = sorted((u.start_ms, u.participant_id) for u in utterances)
    ticks = range(config.tick_ms, duration_ms + 1, config.tick_ms)
    if not ticks:
        return 0.0
    total = 0
    lo = hi = 0
    for now in ticks:
        while hi < len(onsets) and onsets[hi][0] <= now:
            hi += 1
        while lo < hi and onsets[lo][0] <= now - config.window_ms:
            lo += 1
        total += hi - lo
    return total / len(ticks)


def run_ab_experiment(
    design: ExperimentDesign,
    profiles: Sequence[AgentProfile],
    task_duration_ms: int,
    *,
    policy: MetricsPolicy | None = None,
    mediator_config: MediatorConfig | None = None,
) -> str:
    """Run the 2x2 on/off crossover and return the per-run summary CSV.

    4 cells x groups_per_cell x 2 tasks rows. Seeds depend only on
    (group, task), so on and off cells are exactly paired.
    """
    policy = policy or MetricsPolicy()
    mediator_config = mediator_config or MediatorConfig()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(AB_CSV_HEADER)
    n = len(profiles)
    for label, conditions in zip(CELL_LABELS, CELL_CONDITIONS):
        for group in range(design.groups_per_cell):
            for task, mm_on in enumerate(conditions):
                seed = _run_seed(design.seed, group, task)
                events = simulate_meeting(
                    profiles, task_duration_ms, mm_on, seed,
                    policy=policy, mediator_config=mediator_config,
                )
                metrics = aggregate_meeting(
                    events, policy, meeting_id=f"{label}-g{group}-t{task}",
                    participants=participant_ids(n),
                )
                shares = [metrics.shares[pid].turn_share for pid in metrics.participants]
                entropy = -sum(p * math.log(p) for p in shares if p > 0)
                mean_share = sum(shares) / n
                variance = sum((p - mean_share) ** 2 for p in shares) / n
                totals = {
                    kind: sum(sum(row.values()) for row in metrics.pairwise[kind].values())
                    for kind in (KIND_INTERRUPTION, KIND_AFFIRMATION, KIND_INFLUENCE)
                }
                writer.writerow([
                    label, group, "AB"[task], int(mm_on), n, seed,
                    f"{entropy:.6f}", f"{variance:.6f}",
                    totals[KIND_INTERRUPTION], totals[KIND_AFFIRMATION], totals[KIND_INFLUENCE],
                    f"{_engagement_mean(events, task_duration_ms, policy, mediator_config):.6f}",
                ])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Synthetic cohort generator (schema owned by the cohort module)


@dataclass(frozen=True, slots=True)
class CohortGenParams:
    """Ground-truth generative model for validating the analysis pipeline.

    certificate ~ Bernoulli(logistic(beta0 + beta1 * calls_total)), zeroed
    for dropped students; grades are linear in calls with Gaussian noise,
    clamped to [0, 100] and missing for dropped students. Dropping is
    independent of everything else, and a dropped student's total call
    count collapses to the early-weeks count.
    """

    n_students: int = 83
    beta1: float = math.log(2)
    beta0: float | None = None  # None: center certificate odds at calls_mean
    base_grade: float = 58.0
    grade_slope: float = 2.6
    noise_sd: float = 11.0
    calls_mean: float = 6.0
    early_frac: float = 0.5
    dropped_frac: float = 0.0
    pass_mark: float = 70.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_students <= 0:
            raise ValidationError("bad_params", "n_students must be > 0")
        if self.noise_sd < 0:
            raise ValidationError("bad_params", "noise_sd must be >= 0")
        if not (0.0 <= self.dropped_frac < 1.0):
            raise ValidationError("bad_params", "dropped_frac outside [0, 1)")
        if not (0.0 <= self.early_frac <= 1.0):
            raise ValidationError("bad_params", "early_frac outside [0, 1]")


def _poisson(r: random.Random, lam: float) -> int:
    limit = math.exp(-lam)
    k = 0
    prod = r.random()
    while prod > limit:
        k += 1
        prod *= r.random()
    return k


def _gauss(r: random.Random) -> float:
    # Box-Muller from two uniforms; no hidden generator state.
    u1 = 1.0 - r.random()
    u2 = r.random()
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def _logistic(z: float) -> float:
    return 1.0 / (1.0 + math.exp(-z))


def synth_cohort(params: CohortGenParams) -> str:
    """Generate the cohort CSV (schema in COHORT_CSV_HEADER) as a string."""
    r = random.Random(params.seed)
    beta0 = params.beta0 if params.beta0 is not None else -params.beta1 * params.calls_mean
    pitch_beta0 = -params.beta1 * params.calls_mean * params.early_frac
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COHORT_CSV_HEADER)
    width = len(str(params.n_students))
    for i in range(params.n_students):
        calls_total = _poisson(r, params.calls_mean)
        early = sum(1 for _ in range(calls_total) if r.random() < params.early_frac)
        dropped = r.random() < params.dropped_frac
        if dropped:
            calls_total = early
        cert_draw = r.random() < _logistic(beta0 + params.beta1 * calls_total)
        certificate = int(cert_draw and not dropped)
        pitch = int(r.random() < _logistic(pitch_beta0 + params.beta1 * early))
        grades = [
            max(0.0, min(100.0, params.base_grade + params.grade_slope * calls_total
                         + _gauss(r) * params.noise_sd))
            for _ in range(4)
        ]
        if dropped:
            grade_cells = ["", "", "", ""]
            passed = 0
        else:
            grade_cells = [f"{g:.1f}" for g in grades]
            passed = int(grades[0] >= params.pass_mark)
        writer.writerow([
            f"s{i + 1:0{width}d}", calls_total, early,
            *grade_cells, pitch, certificate, passed, int(dropped),
        ])
    return buf.getvalue()
