"""Run completion-time experiments: parameter sweeps, single-instance replays, convergence traces."""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from config_loader import ConfigError
from optimization import OptimizationError, Scheme, run_benchmark, trace_to_csv, trace_to_json
from pipelines.common.checksum import write_text_if_changed
from pipelines.sweep.runner import RunRecord, run_sweep
from pipelines.sweep.spec import ExperimentConfig, load_experiment
from pipelines.sweep.table import emit_csv
from system_model import ModelError, load_instance, sample_instance

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse the subcommand and its switches."""

    parser = argparse.ArgumentParser(
        description=(
            "Minimize the total completion time of wirelessly powered federated"
            " learning over seeded network realizations and write CSV results."
        )
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="Run the sweep described by a config file.")
    run_parser.add_argument("--config", help="Experiment config JSON. Defaults to $WPFL_CONFIG or config.json.")
    run_parser.add_argument("--out", help="Override the output CSV path.")
    run_parser.add_argument("--workers", type=int, help="Worker processes (1 runs serially).")
    run_parser.add_argument("--mode", choices=("fdma", "noma"), help="Access mode used by the S2FL scheme.")

    validate_parser = commands.add_parser("validate-config", help="Check a config file without running it.")
    validate_parser.add_argument("--config", help="Experiment config JSON.")

    replay_parser = commands.add_parser("replay", help="Re-run one serialized instance.")
    replay_parser.add_argument("--instance", required=True, help="Instance JSON written by the sampler.")
    replay_parser.add_argument("--scheme", default="S2FL", help="Scheme tag (default S2FL).")
    replay_parser.add_argument(
        "--trace-out",
        help="Write the per-iteration trace here (.csv for the flat form, JSON otherwise).",
    )

    convergence_parser = commands.add_parser(
        "convergence",
        help="Write the objective trace of one realization per device count.",
    )
    convergence_parser.add_argument("--config", help="Experiment config JSON supplying the base parameters.")
    convergence_parser.add_argument("--sizes", default="6,10,14,18,22", help="Comma-separated device counts.")
    convergence_parser.add_argument("--out", required=True, help="Output CSV path.")

    return parser.parse_args(argv)


def _print_record(config: ExperimentConfig, record: RunRecord) -> None:
    label = f"{config.variable}={record.sweep_value:g} {record.scheme} seed={record.seed}"
    if record.ok:
        print(f"✅ {label}: T={record.objective:.6g} s in {record.iterations} iterations")
    else:
        print(f"⚠️ {label} failed: {record.error}")


def command_run(args: argparse.Namespace) -> int:
    config = load_experiment(args.config, output_path=args.out, workers=args.workers, mode=args.mode)
    print(
        f"Sweeping {config.variable} over {len(config.grid)} values,"
        f" {len(config.schemes)} schemes, {config.realizations} realizations"
        f" ({config.workers} worker{'s' if config.workers > 1 else ''})"
    )
    table, records = run_sweep(config, on_record=lambda record: _print_record(config, record))
    if emit_csv(table, config.output_path):
        print(f"✅ Results written: {config.output_path}")
    else:
        print(f"⏭️ Results unchanged: {config.output_path}")

    failed = sum(1 for record in records if not record.ok)
    print(f"Summary: {len(records) - failed} ok, {failed} failed")
    return EXIT_PARTIAL if failed else EXIT_OK


def command_validate(args: argparse.Namespace) -> int:
    config = load_experiment(args.config)
    jobs = len(config.grid) * len(config.schemes) * config.realizations
    print(f"✅ Config valid: {config.variable} sweep, {jobs} runs -> {config.output_path}")
    return EXIT_OK


def command_replay(args: argparse.Namespace) -> int:
    try:
        instance = load_instance(Path(args.instance))
        scheme = Scheme.from_tag(args.scheme)
    except (ModelError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    try:
        trace = run_benchmark(instance, scheme)
    except (ModelError, OptimizationError) as exc:
        print(f"⚠️ Replay failed: {exc}")
        return EXIT_PARTIAL

    summary = trace.summary()
    glo = summary["global_rounds"]
    print(f"Scheme {scheme.tag} ({instance.mode}), seed {instance.seed}")
    print(f"  status:        {trace.status}")
    print(f"  objective:     {trace.final_objective:.6g} s")
    print(f"  iterations:    {trace.iterations}")
    print(f"  local rounds:  {summary['local_rounds']}")
    print(f"  global rounds: {'unbounded' if glo is None else glo}")
    if args.trace_out:
        path = Path(args.trace_out)
        text = trace_to_csv(trace) if path.suffix == ".csv" else trace_to_json(trace)
        if write_text_if_changed(path, text):
            print(f"✅ Trace written: {path}")
        else:
            print(f"⏭️ Trace unchanged: {path}")
    return EXIT_OK


def _parse_sizes(raw: str) -> List[int]:
    try:
        sizes = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"--sizes must be comma-separated integers: {raw!r}") from exc
    if not sizes or any(size < 1 for size in sizes):
        raise ConfigError(f"--sizes must list positive device counts: {raw!r}")
    return sizes


def command_convergence(args: argparse.Namespace) -> int:
    sizes = _parse_sizes(args.sizes)
    config = load_experiment(args.config, output_path=args.out)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("num_devices", "iteration", "objective"))
    failed = 0
    for size in sizes:
        system = replace(config.system, num_devices=size)
        instance = sample_instance(system, config.learning, config.devices, config.channel, config.seed(0))
        try:
            trace = run_benchmark(instance, config.scheme("S2FL"), config.options)
        except (ModelError, OptimizationError) as exc:
            failed += 1
            print(f"⚠️ N={size} failed: {exc}")
            continue
        for iteration, objective in enumerate(trace.objectives):
            writer.writerow((size, iteration, repr(objective)))
        print(f"✅ N={size}: {trace.status} after {trace.iterations} iterations, T={trace.final_objective:.6g} s")

    if write_text_if_changed(config.output_path, buffer.getvalue()):
        print(f"✅ Convergence traces written: {config.output_path}")
    else:
        print(f"⏭️ Convergence traces unchanged: {config.output_path}")
    return EXIT_PARTIAL if failed else EXIT_OK


COMMANDS = {
    "run": command_run,
    "validate-config": command_validate,
    "replay": command_replay,
    "convergence": command_convergence,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entrypoint; returns 0 on success, 2 on partial failures, 1 on config or I/O errors."""

    args = parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"❌ Config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"❌ I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
