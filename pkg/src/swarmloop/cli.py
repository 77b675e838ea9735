"""``swarmloop`` command line."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from swarmloop.gateway import StdioServer
from swarmloop.harness import CLI_NAMES, BatchReport, MissionSpec, RunReport, build_environment, rescore, run_batch
from swarmloop.harness.scoring import count_collisions, measure_energy, measure_exec_time
from swarmloop.sim import RealtimeDriver


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return value == "on"


def _spec(args: argparse.Namespace) -> MissionSpec:
    overrides = json.loads(Path(args.world_config).read_text()) if args.world_config else {}
    kwargs = {"world_overrides": overrides, "seed": args.seed, "helpers": args.helpers, "n_drones": args.drones}
    if args.planner is not None:
        kwargs["planner"] = args.planner
    return MissionSpec(CLI_NAMES[args.mission], **kwargs)


def _mission_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mission", choices=sorted(CLI_NAMES), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drones", type=int, default=10)
    p.add_argument("--planner", type=_on_off, default=None, metavar="{on,off}")
    p.add_argument("--helpers", type=_on_off, default=False, metavar="{on,off}")
    p.add_argument("--world-config", help="JSON file with WorldConfig overrides")


def cmd_run(args: argparse.Namespace) -> int:
    batch = run_batch(_spec(args), args.reasoner, args.runs, args.seed, args.out, args.parallel)
    print(batch.table())
    print(f"wrote {Path(args.out) / 'batch.json'}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    doc = json.loads(Path(args.trace).read_text())
    verdict = rescore(doc)
    out = {
        "verdict": verdict.to_dict(),
        "exec_time_s": measure_exec_time(doc["trace"], doc["world"]),
        "energy_mah": measure_energy(doc["world"]),
        "collisions": count_collisions(doc["world"]),
        "tokens": doc["trace"]["ledger"].get("T_run", 0),
        "termination": doc["trace"]["termination"],
    }
    print(json.dumps(out, indent=1, sort_keys=True))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    root = Path(args.batch)
    summary = root / "batch.json"
    if summary.exists():
        batch = BatchReport.from_dict(json.loads(summary.read_text()))
        # re-score from the persisted runs so the report never trusts stale verdicts
        for r in batch.runs:
            if r.trace_file and (root / r.trace_file).exists():
                r.verdict = rescore(json.loads((root / r.trace_file).read_text()))
    else:
        runs, mission = [], {}
        for k, path in enumerate(sorted(root.glob("run_*.json"))):
            doc = json.loads(path.read_text())
            mission = doc["mission"]
            runs.append(
                RunReport(
                    k, mission["seed"], mission["seed"] + k, rescore(doc),
                    measure_exec_time(doc["trace"], doc["world"]), measure_energy(doc["world"]),
                    count_collisions(doc["world"]), int(doc["trace"]["ledger"].get("T_run", 0)),
                    len(doc["trace"]["iterations"]), doc["trace"]["termination"], path.name,
                )
            )
        if not runs:
            print(f"no batch.json or run_*.json in {root}", file=sys.stderr)
            return 1
        batch = BatchReport(mission, runs)
    print(json.dumps(batch.to_dict(), indent=1, sort_keys=True))
    print(batch.table())
    return 0


def cmd_mcp(args: argparse.Namespace) -> int:
    env = build_environment(_spec(args))
    driver = RealtimeDriver(env.world, args.speedup).start()
    try:
        StdioServer(env.gateway).serve(sys.stdin, sys.stdout)
    finally:
        driver.stop()
    return 0


def cmd_http(args: argparse.Namespace) -> int:
    from swarmloop.http import make_server

    env = build_environment(_spec(args))
    driver = RealtimeDriver(env.world, args.speedup).start()
    server = make_server(args.host, args.port, env.servient, env.directory)
    print(f"serving on http://{args.host}:{server.server_port}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        driver.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarmloop", description="Agentic drone-swarm missions over WoT Things.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a batch of missions and score them")
    _mission_args(p)
    p.add_argument("--reasoner", choices=("scripted", "remote"), default="scripted")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--out", default="runs")
    p.add_argument("--parallel", type=int, default=0, help="worker threads (0 = sequential)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="re-score one persisted run")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="summarise a batch directory")
    p.add_argument("--batch", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("mcp", help="serve the tool gateway as JSON-RPC over stdio")
    _mission_args(p)
    p.add_argument("--speedup", type=float, default=1.0)
    p.set_defaults(func=cmd_mcp)

    p = sub.add_parser("http", help="serve Things and the directory over HTTP")
    _mission_args(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--speedup", type=float, default=1.0)
    p.set_defaults(func=cmd_http)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
