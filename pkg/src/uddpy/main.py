"""Command-line front end for building, merging, querying and evaluating sketches."""

import argparse
import logging
import sys
from functools import reduce
from typing import List, Optional, Sequence

from . import __version__
from .codec import (
    read_data_file,
    read_sketch,
    write_data_file,
    write_sketch,
)
from .config import ExperimentConfig, load_experiment_config
from .evaluation import error_profile, run_experiment, run_sweep
from .exceptions import IncompatibleSketchError, ParameterError, SketchError
from .generators import StreamSpec, generate_stream_detailed, parse_params
from .merge import merge
from .reduction import ReductionPlan, build_sketch
from .report import SweepReportGenerator, profile_csv, to_json, write_json, write_profile_csv
from .sketch import SketchConfig, parse_policy

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def setup_logging(verbosity: int):
    """Route log records to standard error; -v for INFO, -vv for DEBUG."""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger().setLevel(level)


def emit(document: dict, pretty: bool, title: str = ""):
    """Print ``document`` as JSON, or as a short human listing with ``--pretty``."""
    if not pretty:
        print(to_json(document))
        return
    if title:
        print(f"📊 {title}")
    for key, value in document.items():
        if isinstance(value, dict):
            print(f"  {key}:")
            for inner, inner_value in value.items():
                print(f"    {inner}: {inner_value}")
        else:
            print(f"  {key}: {value}")


def _parse_q_list(values: Sequence[str]) -> List[float]:
    qs: List[float] = []
    for value in values:
        for part in value.split(","):
            if not part.strip():
                continue
            try:
                qs.append(float(part))
            except ValueError:
                raise ParameterError(f"q must be a number, got {part!r}") from None
    if not qs:
        raise ParameterError("at least one q is required")
    return qs


def _parse_procs(text: str) -> List[int]:
    try:
        procs = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ParameterError(f"procs must be a comma-separated list of integers, got {text!r}") from None
    if not procs or min(procs) < 1:
        raise ParameterError(f"process counts must be positive, got {text!r}")
    return procs


def _sketch_config(args, presets: ExperimentConfig) -> SketchConfig:
    alpha = args.alpha if args.alpha is not None else presets.alpha
    buckets = args.buckets if args.buckets is not None else presets.buckets
    return SketchConfig(alpha0=alpha, m=buckets, policy=parse_policy(args.policy))


def cmd_generate(args, presets: ExperimentConfig) -> int:
    spec = StreamSpec(
        dist=args.dist,
        params=parse_params(args.params),
        n=args.n,
        seed=args.seed if args.seed is not None else presets.seed,
    )
    generated = generate_stream_detailed(spec)
    write_data_file(args.out, generated.values)
    values = generated.values
    emit(
        {
            "out": str(args.out),
            "dataset": spec.to_dict(),
            "rejected_draws": generated.rejected,
            "min": float(values.min()) if values.size else None,
            "max": float(values.max()) if values.size else None,
        },
        args.pretty,
        title=f"Generated {spec.n} values from {spec.label()}",
    )
    return EXIT_OK


def cmd_build(args, presets: ExperimentConfig) -> int:
    config = _sketch_config(args, presets)
    values = read_data_file(args.input)
    sketch = build_sketch(config, values)
    write_sketch(args.out, sketch)
    logger.info(f"[BUILD] {sketch!r} -> {args.out}")
    emit(
        {
            "n": sketch.n,
            "epoch": sketch.epoch,
            "alpha_final": sketch.alpha,
            "collapses": sketch.collapses,
            "buckets": sketch.size,
        },
        args.pretty,
        title=f"Built sketch {args.out}",
    )
    return EXIT_OK


def cmd_merge(args, presets: ExperimentConfig) -> int:
    sketches = [read_sketch(path) for path in args.inputs]
    merged = reduce(merge, sketches)
    write_sketch(args.out, merged)
    emit(merged.summary(), args.pretty, title=f"Merged {len(sketches)} sketches into {args.out}")
    return EXIT_OK


def cmd_query(args, presets: ExperimentConfig) -> int:
    qs = _parse_q_list(args.q)
    sketch = read_sketch(args.sketch)
    for q in qs:
        print(f"{q!r},{sketch.quantile(q)!r}")
    return EXIT_OK


def cmd_evaluate(args, presets: ExperimentConfig) -> int:
    sketch = read_sketch(args.sketch)
    values = read_data_file(args.data)
    grid = args.grid if args.grid is not None else presets.grid_size
    report = error_profile(sketch, values, grid_size=grid)
    if args.format == "csv":
        sys.stdout.write(profile_csv(report))
    else:
        summary = report.summary()
        summary["data_min"] = float(values.min())
        summary["data_max"] = float(values.max())
        emit(summary, args.pretty, title="Accuracy against the exact quantiles")
    return EXIT_OK


def cmd_simulate(args, presets: ExperimentConfig) -> int:
    spec = StreamSpec(
        dist=args.dist,
        params=parse_params(args.params),
        n=args.n if args.n is not None else presets.n,
        seed=args.seed if args.seed is not None else presets.seed,
    )
    config = _sketch_config(args, presets)
    plan = ReductionPlan.parse(args.procs, args.tree or presets.tree)
    result = run_experiment(
        spec,
        config,
        plan,
        grid_size=args.grid if args.grid is not None else presets.grid_size,
        workers=args.workers,
        compare_sequential=args.compare_sequential,
    )
    if args.csv:
        write_profile_csv(args.csv, result.report)
    emit(result.summary(), args.pretty, title=f"Simulated {plan.p}-way reduction of {spec.label()}")
    return EXIT_OK


def cmd_sweep(args, presets: ExperimentConfig) -> int:
    procs = _parse_procs(args.procs) if args.procs else presets.procs
    n = args.n if args.n is not None else presets.n
    datasets = presets.streams(n)
    if not datasets:
        raise ParameterError("no enabled datasets in the experiment configuration")
    result = run_sweep(
        datasets,
        presets.policies,
        procs,
        alpha0=args.alpha if args.alpha is not None else presets.alpha,
        m=args.buckets if args.buckets is not None else presets.buckets,
        grid_size=presets.grid_size,
        repeats=args.repeats if args.repeats is not None else presets.repeats,
        workers=args.workers,
        tree=presets.tree,
    )
    document = result.to_dict()
    if args.out:
        write_json(args.out, document)
        if args.pretty:
            print(f"✅ Sweep results written to {args.out}")
    if args.html:
        generator = SweepReportGenerator(
            alpha0=args.alpha if args.alpha is not None else presets.alpha,
            m=args.buckets if args.buckets is not None else presets.buckets,
            n=n,
        )
        path = generator.save_report(result, args.html)
        if args.pretty:
            print(f"✅ HTML report written to {path}")
    if args.pretty:
        emit(result.accuracy_table(), True, title="q0-accuracy and final alpha per dataset")
    elif not args.out:
        print(to_json(document))
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "build": cmd_build,
    "merge": cmd_merge,
    "query": cmd_query,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def _add_sketch_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--alpha", type=float, help="Initial relative accuracy (default from config, 0.001)")
    parser.add_argument("--buckets", "-m", type=int, help="Bucket limit m (default from config, 512)")
    parser.add_argument(
        "--policy",
        default="uniform",
        help="Collapse policy: uniform (UDDSketch), dd-first or dd-last (DDSketch) (default: uniform)",
    )


def _add_stream_flags(parser: argparse.ArgumentParser, n_required: bool):
    parser.add_argument("--dist", required=True, help="beta, exponential, lognormal, normal or uniform")
    parser.add_argument("--params", required=True, help="Comma-separated parameters, e.g. 5,1000000")
    parser.add_argument("--n", type=int, required=n_required, help="Number of values")
    parser.add_argument("--seed", type=int, help="64-bit generator seed (default from config)")


def build_parser() -> UsageArgumentParser:
    parser = UsageArgumentParser(
        prog="uddpy",
        description=f"uddpy v{__version__} - mergeable relative-error quantile sketches",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  uddpy generate --dist lognormal --params 1,1.5 --n 1000000 --seed 7 --out data.uddv
  uddpy build --in data.uddv --out data.udds --alpha 0.001 --buckets 512
  uddpy merge --out all.udds part1.udds part2.udds
  uddpy query --q 0.5,0.99 all.udds
  uddpy evaluate --data data.uddv --sketch data.udds --format csv
  uddpy simulate --dist exponential --params 3.5 --n 100000 --procs 8 --compare-sequential
  uddpy sweep --n 100000 --procs 1,2,4,8 --out sweep.json --html sweep.html
        """,
    )
    parser.add_argument("--version", action="version", version=f"uddpy {__version__}")
    parser.add_argument("--verbose", "-v", action="count", default=0, help="-v for info, -vv for debug logs")
    parser.add_argument("--pretty", action="store_true", help="Human-readable output instead of JSON")
    parser.add_argument("--config", help="Experiment presets (default: config/experiments.json)")

    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("generate", help="Write a synthetic data file")
    _add_stream_flags(p, n_required=True)
    p.add_argument("--out", required=True, help="Output data file")

    p = sub.add_parser("build", help="Build a sketch from a data file")
    _add_sketch_flags(p)
    p.add_argument("--in", dest="input", required=True, help="Input data file")
    p.add_argument("--out", required=True, help="Output sketch file")

    p = sub.add_parser("merge", help="Merge compatible sketch files")
    p.add_argument("--out", required=True, help="Output sketch file")
    p.add_argument("inputs", nargs="+", help="Sketch files to merge")

    p = sub.add_parser("query", help="Estimate quantiles from a sketch file")
    p.add_argument("--q", action="append", required=True, help="Quantile(s), repeatable or comma-separated")
    p.add_argument("sketch", help="Sketch file")

    p = sub.add_parser("evaluate", help="Compare a sketch with the exact quantiles of its data")
    p.add_argument("--data", required=True, help="Data file the sketch was built from")
    p.add_argument("--sketch", required=True, help="Sketch file")
    p.add_argument("--grid", type=int, help="Grid size (default from config, 1001)")
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("simulate", help="Simulate a parallel build and tree reduction")
    _add_stream_flags(p, n_required=False)
    _add_sketch_flags(p)
    p.add_argument("--procs", type=int, default=1, help="Number of simulated processes")
    p.add_argument("--tree", help="balanced, linear or random[:seed] (default from config)")
    p.add_argument("--grid", type=int, help="Grid size (default from config, 1001)")
    p.add_argument("--workers", type=int, default=1, help="Process pool size for leaf builds")
    p.add_argument("--csv", help="Also write the per-quantile error profile as CSV")
    p.add_argument(
        "--compare-sequential",
        action="store_true",
        help="Also build one sketch over the whole stream and report whether it is identical",
    )

    p = sub.add_parser("sweep", help="Scaling sweep over datasets, policies and process counts")
    p.add_argument("--n", type=int, help="Values per dataset (default from config)")
    p.add_argument("--procs", help="Comma-separated process counts (default from config)")
    p.add_argument("--repeats", type=int, help="Repetitions per cell for timing statistics")
    p.add_argument("--alpha", type=float, help="Initial relative accuracy (default from config)")
    p.add_argument("--buckets", "-m", type=int, help="Bucket limit m (default from config)")
    p.add_argument("--workers", type=int, default=1, help="Process pool size for leaf builds")
    p.add_argument("--out", help="Write the JSON results here")
    p.add_argument("--html", help="Write a plotly HTML report here")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """CLI entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    setup_logging(args.verbose)
    try:
        presets = load_experiment_config(args.config)
        return COMMANDS[args.command](args, presets)
    except ParameterError as e:
        logger.error(f"[{args.command.upper()}] {e}")
        return EXIT_USAGE
    except IncompatibleSketchError as e:
        logger.error(f"[{args.command.upper()}] incompatible sketches, field {e.field}: {e}")
        return EXIT_DATA
    except SketchError as e:
        logger.error(f"[{args.command.upper()}] {type(e).__name__}: {e}")
        return EXIT_DATA
    except OSError as e:
        logger.error(f"[{args.command.upper()}] I/O failure: {e}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
