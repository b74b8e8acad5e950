"""Command line front end.

Subcommands: run, replay, metrics, reconstruct, serve, scenario. Exit
codes: 0 success, 2 invalid input (scenario or record validation,
arguments), 3 runtime failure (replay mismatch, serve errors). Set
GAZESCAN_LOG=debug for chatty progress output.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

from . import runtime
from .errors import (
    GazeScanError,
    RecordCorruptError,
    RecordVersionError,
    ReplayMismatchError,
    ScenarioValidationError,
)
from .scenario import GazeConfig, load_scenario, preset, save_scenario

log = logging.getLogger("gazescan")


def _load(args):
    if getattr(args, "preset", None):
        sc = preset(args.preset)
    elif getattr(args, "scenario", None):
        sc = load_scenario(args.scenario)
    else:
        raise ScenarioValidationError(["either a scenario file or --preset is required"])
    if getattr(args, "seed", None) is not None:
        sc.seed = args.seed
    if getattr(args, "correction", None) is not None:
        sc.control = dataclasses.replace(sc.control, correction=args.correction == "on")
    if getattr(args, "gaze", None) is not None:
        sc.gaze = GazeConfig(source="file", path=args.gaze)
    return sc


def _cmd_run(args) -> int:
    scenario = _load(args)
    log.debug("running %s for %d ticks", scenario.name, scenario.duration_ticks)
    record = runtime.run(scenario, ticks=args.ticks)
    record.save(args.record)
    m = runtime.metrics(record)
    print(f"{scenario.name}: {m['ticks']} ticks -> {args.record}")
    if m.get("tick_ms_mean") is not None:
        print(f"  tick wall time mean {m['tick_ms_mean']:.2f} ms, max {m['tick_ms_max']:.2f} ms")
    return 0


def _cmd_replay(args) -> int:
    record = runtime.RunRecord.load(args.record)
    runtime.replay(record)
    print(f"{args.record}: {len(record.ticks)} ticks replayed bit-identically")
    return 0


def _cmd_metrics(args) -> int:
    record = runtime.RunRecord.load(args.record)
    print(json.dumps(runtime.metrics(record), indent=2, sort_keys=True))
    return 0


def _cmd_reconstruct(args) -> int:
    record = runtime.RunRecord.load(args.record)
    paths = runtime.reconstruct(record)
    runtime.export_reconstruction(paths, args.format, args.out)
    n = sum(len(p.points_mm) for p in paths)
    print(f"{len(paths)} path(s), {n} points -> {args.out}")
    if args.rms:
        print(f"rms vs phantom centerline: {runtime.reconstruction_rms_mm(record, paths):.3f} mm")
    return 0


def _cmd_serve(args) -> int:
    from .server import SessionServer

    scenario = _load(args)
    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        raise ScenarioValidationError([f"--bind: expected host:port, got {args.bind!r}"])
    server = SessionServer(scenario, host=host, port=int(port))
    host, port = server.start()
    print(f"serving {scenario.name} on {host}:{port} (paused; send a start command)")
    sys.stdout.flush()
    server.serve_forever()
    return 0


def _cmd_scenario(args) -> int:
    save_scenario(preset(args.preset), args.out)
    print(f"{args.preset} -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gazescan")
    sub = p.add_subparsers(dest="command", required=True)

    def add_scenario_args(sp):
        sp.add_argument("scenario", nargs="?", help="scenario JSON file")
        sp.add_argument("--preset", help="built-in scenario name")

    sp = sub.add_parser("run", help="headless run, writing a JSONL record")
    add_scenario_args(sp)
    sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sp.add_argument("--ticks", type=int, default=None, help="override tick count")
    sp.add_argument("--record", default="run.jsonl", help="output record path")
    sp.add_argument("--correction", choices=("on", "off"), default=None,
                    help="override the orientation-correction switch")
    sp.add_argument("--gaze", default=None, metavar="FILE",
                    help="override gaze with a scripted sample file")
    sp.set_defaults(fn=_cmd_run)

    sp = sub.add_parser("replay", help="re-run a record and verify bit-equality")
    sp.add_argument("record")
    sp.set_defaults(fn=_cmd_replay)

    sp = sub.add_parser("metrics", help="summarize a record as JSON")
    sp.add_argument("record")
    sp.set_defaults(fn=_cmd_metrics)

    sp = sub.add_parser("reconstruct", help="export scanned vessel paths")
    sp.add_argument("record")
    sp.add_argument("-o", "--out", default="paths.csv")
    sp.add_argument("--format", choices=("csv", "mesh-points"), default="csv")
    sp.add_argument("--rms", action="store_true", help="also print RMS error vs the phantom")
    sp.set_defaults(fn=_cmd_reconstruct)

    sp = sub.add_parser("serve", help="expose a session over the streaming protocol")
    add_scenario_args(sp)
    sp.add_argument("--bind", default="127.0.0.1:0", metavar="HOST:PORT",
                    help="listen address (port 0 picks a free port)")
    sp.set_defaults(fn=_cmd_serve)

    sp = sub.add_parser("scenario", help="write a built-in scenario to JSON")
    sp.add_argument("preset")
    sp.add_argument("-o", "--out", required=True)
    sp.set_defaults(fn=_cmd_scenario)
    return p


def main(argv=None) -> int:
    level = os.environ.get("GAZESCAN_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioValidationError as exc:
        for e in exc.errors:
            print(f"scenario error: {e}", file=sys.stderr)
        return 2
    except (RecordVersionError, RecordCorruptError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ReplayMismatchError as exc:
        print(f"replay mismatch: {exc}", file=sys.stderr)
        return 3
    except GazeScanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
