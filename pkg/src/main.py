"""
Command-line entry point

    simulate  generate a synthetic trajectory log
    build     run one experiment
    sweep     run the experiment over noise profiles
    eval      AUC of an exported map against an exported reference
    export    re-render an exported map
    demo      one-dimensional regression demos

Exit codes: 0 success, 1 configuration error, 2 any other error.
"""
import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from config.experiment import ExperimentConfig, dump_config, load_config
from config.settings import get_settings, override_settings
from src.evaluation.evaluator import MapEvaluator
from src.mapping.export import read_map, read_reference, write_map
from src.models.base import WarpFamily
from src.models.errors import ConfigError, GpomError
from src.observability.monitor import get_logger, setup_logging
from src.pipeline.runner import run_experiment, sweep
from src.pipeline.sources import simulate_source
from src.simulation.logfile import write_log
from src.toy.demos import run_uncertain_demo, run_warping_demo

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


# ============================================================================
# ARGUMENTS
# ============================================================================

def _add_config_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--config", "-c", type=Path, required=True, help="experiment YAML file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config field, e.g. --set map.resolution=0.25 (repeatable)",
    )
    parser.add_argument("--output", "-o", type=Path, default=None, help="output directory")
    parser.add_argument("--methods", nargs="+", default=None, help="run only these methods")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpom",
        description="Gaussian process occupancy mapping under pose uncertainty",
        allow_abbrev=False,
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-format", choices=["console", "json"], default=None)
    parser.add_argument("--workers", type=int, default=None, help="profiles run concurrently in a sweep")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="generate a synthetic trajectory log")
    _add_config_arguments(simulate)
    simulate.add_argument("--log", type=Path, required=True, help="log file to write")

    build = sub.add_parser("build", help="run one experiment")
    _add_config_arguments(build)

    sweep_parser = sub.add_parser("sweep", help="run over noise profiles")
    _add_config_arguments(sweep_parser)
    sweep_parser.add_argument("--profiles", nargs="+", default=None, help="e.g. Q1 Q3 Q5")

    evaluate = sub.add_parser("eval", help="AUC of an exported map")
    evaluate.add_argument("--map", type=Path, required=True, help="map CSV")
    evaluate.add_argument("--reference", type=Path, required=True, help="reference CSV")
    evaluate.add_argument("--domain", choices=["observed", "known"], default="observed")

    export = sub.add_parser("export", help="re-render an exported map")
    export.add_argument("--map", type=Path, required=True, help="map CSV")
    export.add_argument("--output", "-o", type=Path, required=True, help="output directory")
    export.add_argument("--stem", default=None, help="file name stem, defaults to the input stem")
    export.add_argument("--squash", choices=["probit", "logistic"], default="probit")

    demo = sub.add_parser("demo", help="one-dimensional regression demos")
    demo.add_argument("which", choices=["uncertain", "warping", "all"])
    demo.add_argument("--seed", type=int, default=None)
    demo.add_argument("--output", "-o", type=Path, default=Path("results/demos"))
    demo.add_argument("--input-noise", type=float, default=0.6, help="input noise sd for the uncertain demo")
    return parser


# ============================================================================
# COMMANDS
# ============================================================================

def _load(args) -> ExperimentConfig:
    config = load_config(args.config, args.overrides)
    if args.output is not None:
        config = config.model_copy(update={"output_directory": args.output})
    if args.methods:
        config = config.with_methods(args.methods)
    return config


def cmd_simulate(args) -> int:
    config = _load(args)
    if config.simulation is None:
        raise ConfigError("simulate needs a 'simulation' section")
    trajectory = simulate_source(config.simulation, config.seed)
    path = write_log(trajectory, args.log)
    print(f"wrote {len(trajectory)} steps to {path}")
    return EXIT_OK


def _print_reports(reports, directory: Path):
    for r in reports:
        auc = "-" if r.auc is None else f"{r.auc:.4f}"
        status = "ok" if r.ok else r.error
        print(f"{r.profile:<8} {r.method:<6} auc={auc}  {status}")
    print(f"reports in {directory}")


def cmd_build(args) -> int:
    config = _load(args)
    logger.debug("config_loaded", config=dump_config(config))
    reports = run_experiment(config)
    _print_reports(reports, Path(config.output_directory))
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load(args)
    reports = sweep(config, args.profiles)
    _print_reports(reports, Path(config.output_directory))
    return EXIT_OK


def cmd_eval(args) -> int:
    occupancy, probability = read_map(args.map)
    reference = read_reference(args.reference)
    auc, auc_known = MapEvaluator(domain=args.domain).evaluate_probability(
        probability, occupancy.observed, reference
    )
    print(f"auc={'undefined' if auc is None else f'{auc:.6f}'}")
    print(f"auc_known={'undefined' if auc_known is None else f'{auc_known:.6f}'}")
    return EXIT_OK


def cmd_export(args) -> int:
    occupancy, _ = read_map(args.map)
    csv_path, pgm_path = write_map(occupancy, args.output, args.stem or args.map.stem, args.squash)
    print(f"wrote {csv_path} and {pgm_path}")
    return EXIT_OK


def cmd_demo(args) -> int:
    seed = get_settings().default_seed if args.seed is None else args.seed
    if args.which in ("uncertain", "all"):
        path = args.output / "uncertain_inputs.csv"
        run_uncertain_demo(seed, input_noise_sd=args.input_noise, output_path=path)
        print(f"wrote {path}")
    if args.which in ("warping", "all"):
        path = args.output / "warping.csv"
        _, summary = run_warping_demo(seed, warp_families=(WarpFamily.TANH_SUM, WarpFamily.POLYNOMIAL), output_path=path)
        for name, values in summary.items():
            print(f"{name:<6} rmse={values['rmse']:.4f} band_width={values['band_width']:.4f}")
        print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "build": cmd_build,
    "sweep": cmd_sweep,
    "eval": cmd_eval,
    "export": cmd_export,
    "demo": cmd_demo,
}


def _apply_runtime_flags(args):
    values = {}
    if args.log_level:
        values["log_level"] = args.log_level
    if args.log_format:
        values["log_format"] = args.log_format
    if args.workers is not None:
        values["worker_threads"] = args.workers
    if values:
        try:
            override_settings(**values)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        setup_logging()


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(list(argv) if argv is not None else None)
    try:
        _apply_runtime_flags(args)
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error("config_error", error=str(e))
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except GpomError as e:
        logger.error("run_failed", error=str(e), error_type=type(e).__name__)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        logger.error("io_failed", error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
