"""Command-line entry point for ReluBoot."""

import argparse
import asyncio
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__
from .constants import (
    CSV_COLUMNS,
    ENV_LOG_LEVEL,
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_USAGE,
)
from .models import NetworkArch
from .models.config import (
    CiBenchmarkRunConfig,
    GradcheckRunConfig,
    MakeScenarioCsvRunConfig,
    RealDataRunConfig,
    SimulateVarianceRunConfig,
)
from .tools.evaluation import (
    coverage_rows,
    real_data_rows,
    run_coverage_experiment,
    run_real_data_study,
    run_variance_benchmark,
    variance_rows,
)
from .tools.relu_net import gradcheck
from .tools.scenarios import get_scenario, sample_dataset
from .utils.config import load_config_file, load_environment, resolve_config
from .utils.io import bundled_dataset_path, export_sample_csv, prepare_table, write_csv_rows, write_json_record
from .utils.validation import DatasetFormatError, StageError, TrainingDivergedError, ValidationError

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

RUN_CONFIGS = {
    "gradcheck": GradcheckRunConfig,
    "simulate-variance": SimulateVarianceRunConfig,
    "ci-benchmark": CiBenchmarkRunConfig,
    "real-data": RealDataRunConfig,
    "make-scenario-csv": MakeScenarioCsvRunConfig,
}


def setup_logging() -> None:
    """Log to stderr so stdout only carries the summary line."""
    logging.basicConfig(
        level=os.getenv(ENV_LOG_LEVEL, "INFO").upper(),
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="Flat key=value file; flags override it")
    parser.add_argument("--seed", type=int, help="Master seed (default 0)")
    parser.add_argument("--output", type=Path, help="Result CSV path")
    parser.add_argument("--threads", type=int, help="Worker threads (default RELUBOOT_THREADS or 1)")


def _add_fit(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--depth", type=int, help="Hidden layers (default 2)")
    parser.add_argument("--width", type=int, help="Neurons per layer (default 64)")
    parser.add_argument("--epochs", type=int, help="Training epochs (default 200)")
    parser.add_argument("--batch-size", type=int, help="Mini-batch size (default 64)")
    parser.add_argument("--learning-rate", type=float, help="Adam step size (default 1e-3)")


def _add_bootstrap(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--B", type=int, dest="B", help="Replicates for the a1 quantile (default 1500)")
    parser.add_argument("--B-tilde", type=int, dest="B_tilde", help="Replicates in the center (default 1000)")
    parser.add_argument("--A-n", type=float, dest="A_n", help="Clip bound (default max |y|)")
    parser.add_argument("--log-power", type=float, help="s in 100 log^s n (default 2)")
    parser.add_argument("--standard-resamples", type=int, help="Pairs-bootstrap refits (default B + B_tilde)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reluboot",
        description="Variance estimation and bootstrap confidence intervals with dense ReLU networks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Check backprop against finite differences
  reluboot gradcheck --seed 1

  # Variance-estimation benchmark on scenario 1
  reluboot simulate-variance --scenario 1 --n 2000 --trials 10 --output variance.csv

  # Coverage of the robust interval
  reluboot ci-benchmark --scenario 1 --n 5000 --B 100 --B-tilde 50 --methods nn,naive

  # Prediction intervals on a housing table
  reluboot real-data --data housing.csv --train-size 5000 --splits 100
""",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gradcheck", help="Compare backprop with central finite differences")
    _add_common(p)
    p.add_argument("--archs", help="Comma-separated DxLxW triples (default 2x1x4,2x2x8,5x2x8)")
    p.add_argument("--seeds", type=int, help="Seeds per architecture (default 3)")
    p.add_argument("--samples", type=int, help="Random inputs per check (default 8)")
    p.add_argument("--tolerance", type=float, help="Maximum relative error (default 1e-4)")

    p = sub.add_parser("simulate-variance", help="Variance-MSE benchmark on a synthetic scenario")
    _add_common(p)
    _add_fit(p)
    p.add_argument("--scenario", type=int, help="Scenario id 1-5 (default 1)")
    p.add_argument("--n", type=int, help="Sample size (default 2000)")
    p.add_argument("--trials", type=int, help="Independent datasets (default 10)")
    p.add_argument("--strategy", choices=["full", "split"], help="Data use for the two stages (default full)")
    p.add_argument("--estimators", help="Comma-separated: residual,direct,homoscedastic")

    p = sub.add_parser("ci-benchmark", help="Coverage and PRange of confidence intervals")
    _add_common(p)
    _add_fit(p)
    _add_bootstrap(p)
    p.add_argument("--scenario", type=int, help="Scenario id 1-5 (default 1)")
    p.add_argument("--n", type=int, help="Sample size (default 5000)")
    p.add_argument("--alpha", type=float, help="Miscoverage level (default 0.1)")
    p.add_argument("--methods", help="Comma-separated: nn,nn_emp,nn_hom,naive,standard")
    p.add_argument("--datasets", type=int, help="Datasets (default 5)")
    p.add_argument("--new-points", type=int, help="New covariates per dataset (default 20)")
    p.add_argument("--diagnostics", type=Path, help="JSON file for a1, a0, b(alpha), a(alpha) and Delta per dataset")

    p = sub.add_parser("real-data", help="Prediction-interval coverage and CI length on a table")
    _add_common(p)
    _add_fit(p)
    _add_bootstrap(p)
    p.add_argument("--data", type=Path, help="CSV file (default: bundled 200-row stand-in)")
    p.add_argument("--features", help="Comma-separated feature columns")
    p.add_argument("--target", help="Target column (default MedHouseVal)")
    p.add_argument("--log-target", choices=["true", "false"], help="log-transform the target (default true)")
    p.add_argument("--train-size", type=int, help="Training rows per split (default 150)")
    p.add_argument("--splits", type=int, help="Random splits (default 5)")
    p.add_argument("--alphas", help="Comma-separated levels (default 0.05,0.1)")
    p.add_argument("--methods", help="Comma-separated PI methods: nn_res,nn_dir")
    p.add_argument("--ci-methods", help="Comma-separated CI methods; empty string disables")
    p.add_argument("--ci-output", type=Path, help="CI-length CSV path")

    p = sub.add_parser("make-scenario-csv", help="Export a synthetic sample as CSV")
    _add_common(p)
    p.add_argument("--scenario", type=int, help="Scenario id 1-5 (default 1)")
    p.add_argument("--n", type=int, help="Sample size (default 1000)")
    return parser


def _flag_values(args: argparse.Namespace) -> Dict:
    skip = {"command", "config"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _summary(text: str) -> None:
    print(text, flush=True)


async def cmd_gradcheck(cfg: GradcheckRunConfig) -> int:
    rows = []
    for input_dim, depth, width in cfg.archs:
        arch = NetworkArch(input_dim=input_dim, depth=depth, width=width)
        for seed in range(cfg.seed, cfg.seed + cfg.seeds):
            report = gradcheck(arch, seed, cfg.samples)
            rows.append({
                "input_dim": input_dim, "depth": depth, "width": width,
                "seed": seed, "max_rel_error": report.max_rel_error,
            })
    if cfg.output:
        await write_csv_rows(cfg.output, rows, CSV_COLUMNS["gradcheck"])
    worst = max(row["max_rel_error"] for row in rows)
    passed = worst < cfg.tolerance
    _summary(f"gradcheck: max relative error {worst:.3e} over {len(rows)} checks "
             f"(tolerance {cfg.tolerance:g}) {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_FAILURE


async def cmd_simulate_variance(cfg: SimulateVarianceRunConfig) -> int:
    spec = get_scenario(cfg.scenario)
    reports = await run_variance_benchmark(
        spec, cfg.n, cfg.trials, cfg.strategy, cfg.estimators, cfg.seed,
        settings=cfg.fit_settings(), threads=cfg.threads,
    )
    output = cfg.output or Path(f"variance_s{cfg.scenario}_n{cfg.n}_{cfg.strategy}.csv")
    await write_csv_rows(output, variance_rows(reports), CSV_COLUMNS["variance"])
    parts = ", ".join(f"{name} {r.mean:.4g} ({r.std:.3g})" for name, r in reports.items())
    _summary(f"simulate-variance scenario {cfg.scenario} n={cfg.n} {cfg.strategy}: mean MSE {parts} -> {output}")
    return EXIT_OK


async def cmd_ci_benchmark(cfg: CiBenchmarkRunConfig) -> int:
    spec = get_scenario(cfg.scenario)
    rows: List[Dict] = []
    diagnostics: Dict[str, List[Dict]] = {}
    parts = []
    for method in cfg.methods:
        report = await run_coverage_experiment(
            spec, cfg.n, cfg.alpha, method, cfg.datasets, cfg.new_points, cfg.seed,
            ci=cfg.ci_config(cfg.alpha), threads=cfg.threads,
        )
        rows.extend(coverage_rows(report))
        if report.diagnostics:
            diagnostics[method] = report.diagnostics
        parts.append(f"{method} cov {report.coverage:.3f} PRange {report.prange:.4g}")
    output = cfg.output or Path(f"coverage_s{cfg.scenario}_n{cfg.n}_a{cfg.alpha:g}.csv")
    await write_csv_rows(output, rows, CSV_COLUMNS["coverage"])
    if cfg.diagnostics is not None:
        await write_json_record(cfg.diagnostics, {"scenario": cfg.scenario, "n": cfg.n, "methods": diagnostics})
    _summary(f"ci-benchmark scenario {cfg.scenario} n={cfg.n} alpha={cfg.alpha:g}: {'; '.join(parts)} -> {output}")
    return EXIT_OK


async def cmd_real_data(cfg: RealDataRunConfig) -> int:
    path = cfg.data or bundled_dataset_path()
    if path is None:
        raise ValidationError("No --data given and the bundled stand-in CSV is missing")
    table = prepare_table(path, cfg.features, cfg.target, take_log=cfg.log_target)
    report = await run_real_data_study(
        table, cfg.train_size, cfg.splits, cfg.alphas, cfg.seed,
        methods=cfg.methods, ci_methods=cfg.ci_methods,
        fit=cfg.fit_settings(), ci=cfg.ci_config(), threads=cfg.threads,
    )
    pi_rows, ci_rows = real_data_rows(report)
    output = cfg.output or Path("real_data_pi.csv")
    await write_csv_rows(output, pi_rows, CSV_COLUMNS["real_data_pi"])
    if ci_rows:
        ci_output = cfg.ci_output or output.with_name(f"{output.stem}_ci{output.suffix or '.csv'}")
        await write_csv_rows(ci_output, ci_rows, CSV_COLUMNS["real_data_ci"])
    parts = [
        f"{method}@{1 - alpha:g} {mean:.3f}"
        for method, by_alpha in report.pi_summary().items()
        for alpha, (mean, _) in sorted(by_alpha.items())
    ]
    lengths = [
        f"{method}@{1 - alpha:g} {mean:.4g}"
        for method, by_alpha in report.ci_summary().items()
        for alpha, (mean, _) in sorted(by_alpha.items())
    ]
    if lengths:
        parts.append(f"CI length {', '.join(lengths)}")
    _summary(f"real-data {report.splits} splits n_train={report.train_size}: PI coverage {', '.join(parts)} -> {output}")
    return EXIT_OK


async def cmd_make_scenario_csv(cfg: MakeScenarioCsvRunConfig) -> int:
    sample = sample_dataset(get_scenario(cfg.scenario), cfg.n, cfg.seed)
    await export_sample_csv(sample, cfg.output)
    _summary(f"make-scenario-csv scenario {cfg.scenario}: {cfg.n} rows -> {cfg.output}")
    return EXIT_OK


COMMANDS = {
    "gradcheck": cmd_gradcheck,
    "simulate-variance": cmd_simulate_variance,
    "ci-benchmark": cmd_ci_benchmark,
    "real-data": cmd_real_data,
    "make-scenario-csv": cmd_make_scenario_csv,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse, validate, run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    load_environment()
    setup_logging()
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = resolve_config(RUN_CONFIGS[args.command], args.command, file_values, _flag_values(args))
    except ValidationError as e:
        parser.print_usage(sys.stderr)
        print(f"reluboot {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return asyncio.run(COMMANDS[args.command](cfg))
    except ValidationError as e:
        print(f"reluboot {args.command}: invalid input: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (StageError, TrainingDivergedError, DatasetFormatError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"reluboot {args.command}: error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        logger.exception(f"Unexpected error in {args.command}")
        print(f"reluboot {args.command}: error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
