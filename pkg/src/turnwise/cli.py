"""Command-line entry point.

Subcommands:
    report        cohort CSV -> correlation/odds tables (text, JSON, SVG)
    simulate      generate one meeting's event log
    experiment    run the 2x2 on/off crossover harness
    synth-cohort  generate a synthetic cohort CSV
    serve         run the streaming meeting server
    replay        feed a recorded log through the hub on event time

Exit codes: 0 success, 2 validation error, 3 statistical degeneracy.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import math
import sys
import time
from pathlib import Path

from . import sim
from .cohort import analyze, load_cohort
from .errors import DegenerateDataError, TurnwiseError
from .events import read_event_log, write_event_log
from .hub import MeetingHub
from .mediator import MediatorConfig
from .metrics import MetricsPolicy
from .render import render
from .server import MeetingServer, ServerConfig


def _write_out(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _profiles_from_arg(spec: str, n: int) -> list[sim.AgentProfile]:
    if spec == "balanced":
        return sim.balanced_profiles(n)
    if spec == "dominant":
        return sim.dominant_profiles(n)
    raw = json.loads(Path(spec).read_text())
    return [sim.AgentProfile(**entry) for entry in raw]


def cmd_report(args: argparse.Namespace) -> int:
    table = load_cohort(args.input)
    report = analyze(
        table,
        predictor=args.predictor,
        cohort=args.cohort,
        alpha=args.alpha,
        pass_mark=args.pass_mark,
    )
    _write_out(render(report, args.format), args.out)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    profiles = _profiles_from_arg(args.profile, args.participants)
    events = sim.simulate_meeting(
        profiles,
        duration_ms=args.duration_s * 1000,
        mm_on=(args.mm == "on"),
        seed=args.seed,
        meeting_id=args.meeting,
    )
    _write_out(write_event_log(events), args.out)
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    if args.design != "onoff2x2":
        raise TurnwiseError("bad_design", f"unknown design {args.design!r}")
    profiles = _profiles_from_arg(args.profile, args.participants)
    csv_text = sim.run_ab_experiment(
        sim.ExperimentDesign(groups_per_cell=args.groups_per_cell, seed=args.seed),
        profiles,
        task_duration_ms=args.duration_s * 1000,
    )
    _write_out(csv_text, args.out)
    return 0


def cmd_synth_cohort(args: argparse.Namespace) -> int:
    params = sim.CohortGenParams(
        n_students=args.n,
        beta1=args.beta1,
        beta0=args.beta0,
        dropped_frac=args.dropped_frac,
        calls_mean=args.calls_mean,
        seed=args.seed,
    )
    _write_out(sim.synth_cohort(params), args.out)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    host, _, port_s = args.listen.rpartition(":")
    if not host:
        raise TurnwiseError("bad_listen", f"--listen must be host:port, got {args.listen!r}")
    hub = MeetingHub(
        data_dir=args.data_dir,
        metrics_policy=MetricsPolicy(),
        mediator_config=MediatorConfig(window_ms=args.window_ms, tick_ms=args.tick_ms),
    )
    server = MeetingServer(
        hub, ServerConfig(host=host, port=int(port_s), time_scale=args.time_scale)
    )

    async def run() -> None:
        await server.start()
        addr = server.address
        print(f"listening on {addr[0]}:{addr[1]}", flush=True)
        await server.serve_forever()

    try:
        asyncio.run(run())
    except KeyboardInterrupt:
        pass
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    events = read_event_log(Path(args.input).read_text().splitlines())
    hub = MeetingHub(
        data_dir=args.data_dir,
        metrics_policy=MetricsPolicy(),
        mediator_config=MediatorConfig(window_ms=args.window_ms, tick_ms=args.tick_ms),
    )
    meeting_id = args.meeting or (events[0].meeting_id if events else "replay")
    snapshots, metrics = hub.replay(meeting_id, events, started_at=args.started_at)
    if args.snapshots_out:
        _write_out("".join(s.to_line() + "\n" for s in snapshots), args.snapshots_out)
    assert metrics is not None
    _write_out(metrics.to_json(), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="turnwise", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("report", help="analyze a cohort CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--predictor", choices=("total", "first4wk"), default="total")
    p.add_argument("--cohort", choices=("completers", "all"), default="completers")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--pass-mark", type=float, default=70.0)
    p.add_argument("--format", choices=("table", "json", "svg"), default="table")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", help="generate a meeting event log")
    p.add_argument("--participants", type=int, default=4)
    p.add_argument("--duration-s", type=int, default=600)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--mm", choices=("on", "off"), default="off")
    p.add_argument("--profile", default="balanced", help="balanced | dominant | profiles.json")
    p.add_argument("--meeting", default="sim")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run the on/off crossover harness")
    p.add_argument("--design", default="onoff2x2")
    p.add_argument("--groups-per-cell", type=int, default=25)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--participants", type=int, default=4)
    p.add_argument("--duration-s", type=int, default=300)
    p.add_argument("--profile", default="dominant")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("synth-cohort", help="generate a synthetic cohort CSV")
    p.add_argument("--n", type=int, default=83)
    p.add_argument("--beta1", type=float, default=math.log(2))
    p.add_argument("--beta0", type=float, default=None)
    p.add_argument("--dropped-frac", type=float, default=0.0)
    p.add_argument("--calls-mean", type=float, default=6.0)
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_synth_cohort)

    p = sub.add_parser("serve", help="run the streaming meeting server")
    p.add_argument("--listen", default="127.0.0.1:8747")
    p.add_argument("--tick-ms", type=int, default=1000)
    p.add_argument("--window-ms", type=int, default=300_000)
    p.add_argument("--data-dir", default="./turnwise-data")
    p.add_argument("--time-scale", type=float, default=1.0)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="replay a recorded event log")
    p.add_argument("--input", required=True)
    p.add_argument("--meeting", default=None)
    p.add_argument("--tick-ms", type=int, default=1000)
    p.add_argument("--window-ms", type=int, default=300_000)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--started-at", type=int, default=0)
    p.add_argument("--snapshots-out", default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateDataError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 3
    except TurnwiseError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
