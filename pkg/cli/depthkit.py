"""depthkit CLI: validate configs, run pipeline stages, and query run logs."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

# Ensure project root is importable when running as script
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from contracts.errors import DepthkitError  # noqa: E402

STAGE_HELP = {
    "simulate": "Gibbs-sample label volumes",
    "sample": "Draw matched-budget observation sets from simulated volumes",
    "estimate": "Fit pseudo-likelihood parameters and score recovery",
    "stats": "Section abundance, detectability and neighborhood enrichment",
    "reconstruct": "Match serial sections into a 3D point cloud",
    "evaluate": "Score reconstruction against a dense reference stack",
    "structures": "Build 3D structures, distances and along-structure profiles",
    "advise": "Recommend an acquisition geometry per analysis goal",
}


def _fail(exc: DepthkitError) -> None:
    print(f"Error: {exc}", file=sys.stderr)
    sys.exit(exc.exit_code)


def cmd_validate(args: argparse.Namespace) -> None:
    """Validate a depthkit.yaml config and summarize its blocks."""
    from runtime.config_loader import config_hash, load_config

    try:
        config = load_config(args.config, args.overrides)
    except DepthkitError as exc:
        _fail(exc)

    print(f"Config OK: {config.experiment.name} v{config.experiment.version}")
    print(f"  Master seed:  {config.experiment.master_seed}")
    print(f"  Config hash:  {config_hash(config)[:16]}")
    sim = config.simulation
    if sim is not None:
        source = "explicit alpha/B" if sim.alpha is not None else f"regime {sim.regime.value}"
        print(f"  Simulation:   {sim.dims[0]}x{sim.dims[1]}x{sim.dims[2]}, K={sim.K}, {source}, {sim.n_volumes} volume(s)")
    geos = ", ".join(g.value for g in config.sampling.geometries)
    print(f"  Sampling:     {config.sampling.planes} planes, delta_z={config.sampling.delta_z} ({geos})")
    print(f"  Stats cells:  {config.stats.cells or '(simulated volume)'}")
    print(f"  Matching:     {config.matching.cells or '(none)'} kappa={config.matching.kappa}")
    ev = config.evaluation
    if ev is not None:
        ref = ev.reference or f"synthetic, {ev.synthetic.n_cells} cells"
        print(f"  Evaluation:   {ref}; delta_z {', '.join(f'{d:g}' for d in ev.delta_zs)}")
    print(f"  Output dir:   {args.out or config.output.dir}")


def cmd_stage(args: argparse.Namespace) -> None:
    """Run one pipeline stage."""
    from runtime.config_loader import load_config
    from runtime.pipeline import run_pipeline

    try:
        config = load_config(args.config, args.overrides)
        result = run_pipeline(config, args.command, args.out)
    except DepthkitError as exc:
        _fail(exc)

    for path in result.artifacts:
        print(f"  wrote {path}")
    for message in result.warnings:
        print(f"  Warning: {message}", file=sys.stderr)
    if result.summary:
        print()
        print(result.summary, end="")


def cmd_logs(args: argparse.Namespace) -> None:
    """Query a run log."""
    from contracts.audit import RunEvent
    from runtime.audit.query import query_by_run, query_filtered, tail

    log_path = args.log_path

    if not Path(log_path).exists():
        print(f"No run log found at {log_path}", file=sys.stderr)
        sys.exit(1)

    event = None
    if args.event:
        try:
            event = RunEvent(args.event)
        except ValueError:
            valid = ", ".join(e.value for e in RunEvent)
            print(f"Unknown event type: {args.event}", file=sys.stderr)
            print(f"Valid events: {valid}", file=sys.stderr)
            sys.exit(1)

    try:
        if args.run_id:
            entries = query_by_run(log_path, args.run_id)
        elif event is not None or args.stage_command:
            entries = list(reversed(query_filtered(log_path, event=event, command=args.stage_command, limit=args.limit)))
        else:
            entries = tail(log_path, n=args.limit)
    except DepthkitError as exc:
        _fail(exc)

    if not entries:
        print("No matching run-log entries.")
        return

    for entry in entries:
        record = json.loads(entry.model_dump_json())
        if args.json:
            print(json.dumps(record))
        else:
            ts = record["ts"][:19]
            event = record["event"]
            rid = record["run_id"][:8]
            detail = json.dumps(record.get("detail", {}))
            print(f"{ts}  [{event:14s}]  {rid}  {record['command']:11s}  {detail}")


def _config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", nargs="?", default="depthkit.yaml", help="Path to config")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config value (dotted key, YAML value); repeatable",
    )
    p.add_argument("--out", help="Output directory (default: output.dir)")


def main() -> None:
    parser = argparse.ArgumentParser(
        prog="depthkit",
        description="depthkit: 2D vs serial-section sampling of 3D tissue",
    )
    sub = parser.add_subparsers(dest="command")

    # validate
    p_val = sub.add_parser("validate", help="Validate a depthkit.yaml config")
    _config_args(p_val)
    p_val.set_defaults(func=cmd_validate)

    # pipeline stages
    for name, help_text in STAGE_HELP.items():
        p_stage = sub.add_parser(name, help=help_text)
        _config_args(p_stage)
        p_stage.set_defaults(func=cmd_stage)

    # logs
    p_logs = sub.add_parser("logs", help="Query a run log")
    p_logs.add_argument("log_path", help="Path to run-log JSONL file")
    p_logs.add_argument("--run-id", "-r", help="Filter by run ID")
    p_logs.add_argument("--event", "-e", help="Filter by event type")
    p_logs.add_argument("--command", "-c", dest="stage_command", help="Filter by pipeline command")
    p_logs.add_argument("--limit", "-n", type=int, default=20, help="Max entries")
    p_logs.add_argument("--json", action="store_true", help="Output raw JSON")
    p_logs.set_defaults(func=cmd_logs)

    args = parser.parse_args()
    if not args.command:
        parser.print_help()
        sys.exit(1)

    args.func(args)


if __name__ == "__main__":
    main()
