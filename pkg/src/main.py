"""Command-line entry point for the transport solver."""

import argparse
import sys
from pathlib import Path
from typing import Optional

import torch

from src.config import (
    CONFIG_KEYS,
    apply_overrides,
    configure_logging,
    load_config_file,
    load_settings,
)
from src.errors import TrainingDivergedError, UOTError
from src.export import (
    export_run_summary,
    export_snapshot,
    read_snapshot,
    render_planar,
    snapshot_filename,
)
from src.geometry import write_cloud_csv
from src.models import TrainConfig
from src.oracle import mass_timeseries, run_validation_suite
from src.problems import build_collocation, build_preset, list_presets
from src.residuals import source_transport_split, wfr_cost
from src.training import load_state, save_state, train

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DIVERGED = 2


class CLIArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _config_help() -> str:
    lines = ["config file keys:"]
    for section, keys in CONFIG_KEYS.items():
        lines.append(f"  [{section}]")
        lines.extend(f"    {key:<16} {text}" for key, text in keys.items())
    return "\n".join(lines)


def build_parser(default_out: str, default_level: str) -> CLIArgumentParser:
    parser = CLIArgumentParser(
        prog="uot",
        description="Mesh-free Wasserstein-Fisher-Rao transport solver",
    )
    parser.add_argument(
        "--log-level",
        default=default_level,
        help=f"Logging level (default: {default_level}, env UOT_LOG_LEVEL)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser(
        "run",
        help="Train on a preset problem",
        epilog=_config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    run.add_argument("--preset", required=True, help="Preset id (see `uot presets`)")
    run.add_argument("--config", type=Path, default=None, help="INI file overriding the preset")
    run.add_argument("--seed", type=int, default=None, help="Seed for networks and sampling")
    run.add_argument("--iters", type=int, default=None, help="Iteration cap")
    run.add_argument(
        "--out",
        type=Path,
        default=None,
        help=f"Output directory (default: {default_out}/<preset>, env UOT_OUT_DIR)",
    )
    run.add_argument(
        "--resume", type=Path, default=None, help="Training checkpoint to continue from"
    )

    validate = commands.add_parser("validate", help="Run the independent validation checks")
    validate.add_argument("--seed", type=int, default=0, help="Seed for the random checks")

    render = commands.add_parser("render", help="Render a planar snapshot as a PGM image")
    render.add_argument("--snapshot", type=Path, required=True, help="Snapshot CSV")
    render.add_argument("--out", type=Path, required=True, help="Output PGM path")

    commands.add_parser("presets", help="List preset ids")
    return parser


# =============================================================================
# Commands
# =============================================================================


def run_command(args: argparse.Namespace, default_out: str) -> int:
    spec = build_preset(args.preset)
    config = TrainConfig()
    if args.config is not None:
        spec, config = load_config_file(args.config, spec, config)
    config = apply_overrides(config, seed=args.seed, iters=args.iters)
    out = args.out or Path(default_out) / spec.name
    out.mkdir(parents=True, exist_ok=True)

    loss_log = out / "loss.csv"
    if loss_log.exists():
        loss_log.unlink()

    print(f"=== Preset {spec.name} ({spec.mode}, eta={spec.eta:g}) ===")
    collocation = build_collocation(spec, seed=config.seed)
    print(
        f"  {collocation.spatial_count} spatial nodes x {collocation.time_count} times "
        f"= {collocation.interior_count} collocation points"
    )
    state = load_state(args.resume) if args.resume is not None else None

    try:
        result = train(spec, config, state=state, collocation=collocation, loss_log=loss_log)
    except TrainingDivergedError as exc:
        print(f"Training diverged at iteration {exc.iteration}: {exc.message}", file=sys.stderr)
        export_run_summary(
            {
                "preset": spec.name,
                "seed": config.seed,
                "status": "diverged",
                "error": exc.to_dict(),
                "history": [row.model_dump(by_alias=True) for row in exc.history or []],
            },
            out / "summary.json",
        )
        return EXIT_DIVERGED

    print("\n=== Writing Results ===")
    for snapshot in result.snapshots:
        export_snapshot(snapshot, out / snapshot_filename(snapshot.t))
    save_state(result.state, out / "checkpoint.json")
    cloud = collocation.spatial.cloud
    if cloud is not None:
        write_cloud_csv(cloud, out / "cloud.csv")

    best_rho, best_phi = result.state.best_networks()
    source, transport = source_transport_split(best_rho, best_phi, collocation, spec)
    summary = {
        "preset": spec.name,
        "seed": config.seed,
        "status": "completed",
        "stop_reason": result.stop_reason,
        "iterations": result.state.iteration,
        "final": result.final.model_dump(by_alias=True),
        "best_total": result.state.best_total,
        "best_iteration": result.state.best_iteration,
        "cost": wfr_cost(best_rho, best_phi, collocation, spec),
        "cost_is_relative": collocation.spatial.relative_weights,
        "source_effort": source,
        "transport_effort": transport,
        "mass": [{"t": t, "mass": m} for t, m in mass_timeseries(result.snapshots)],
        "collocation": collocation.to_dict(),
        "problem": spec.model_dump(exclude={"rho0", "rho1"}),
        "train": config.model_dump(),
    }
    export_run_summary(summary, out / "summary.json")

    print("\n=== Summary ===")
    print(f"  Stop reason: {result.stop_reason} after {result.state.iteration} iterations")
    state = result.state
    print(f"  Best total loss: {state.best_total:.4e} (iteration {state.best_iteration})")
    relative = " (relative)" if summary["cost_is_relative"] else ""
    print(f"  Transport cost: {summary['cost']:.6e}{relative}")
    print(f"\nResults written to {out}")
    return EXIT_OK


def validate_command(args: argparse.Namespace) -> int:
    report = run_validation_suite(seed=args.seed)
    print(report.format_table())
    failures = report.failures
    print(f"\n{len(report.checks) - len(failures)}/{len(report.checks)} checks passed")
    return EXIT_OK if not failures else EXIT_ERROR


def render_command(args: argparse.Namespace) -> int:
    snapshot = read_snapshot(args.snapshot)
    render_planar(snapshot, args.out)
    print(f"Rendered {args.snapshot} to {args.out}")
    return EXIT_OK


def presets_command(args: argparse.Namespace) -> int:
    for test_id in list_presets():
        print(test_id)
    return EXIT_OK


COMMANDS = {
    "validate": validate_command,
    "render": render_command,
    "presets": presets_command,
}


def main(argv: Optional[list[str]] = None) -> int:
    try:
        settings = load_settings()
        parser = build_parser(settings.out_dir, settings.log_level)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return exc.code if isinstance(exc.code, int) else EXIT_ERROR
        configure_logging(args.log_level)
        if settings.num_threads:
            torch.set_num_threads(settings.num_threads)

        if args.command == "run":
            return run_command(args, settings.out_dir)
        return COMMANDS[args.command](args)
    except UOTError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
