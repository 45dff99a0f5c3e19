"""
Experiment Runner
Orchestrates mapping methods over a data source and noise-profile sweeps
"""
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence

from config.experiment import ExperimentConfig, MethodConfig
from config.settings import get_settings
from src.evaluation.evaluator import EvalReport, MapEvaluator, compare_reports, write_reports
from src.mapping.export import write_map, write_reference
from src.models.errors import GpomError, UndefinedAucError
from src.observability.monitor import ExperimentMonitor, RunCounters, get_logger
from src.pipeline.mapper import IncrementalMapper
from src.pipeline.sources import DATASET_PROFILE, MappingInput, prepare_input


logger = get_logger(__name__)


class ExperimentRunner:
    """
    Runs every configured method over one mapping input

    Methods run one after another, each owning its map. A failing step
    stops that method only: the error is logged with its step index,
    recorded in the report, and the partial map is still exported.
    """

    def __init__(self, config: ExperimentConfig, output_directory: Optional[Path] = None):
        self.config = config
        self.output_directory = Path(output_directory or config.output_directory)
        self.evaluator = MapEvaluator(config.map.squash, config.map.auc_domain)
        self.monitor = ExperimentMonitor(run_id=config.name)
        self.logger = get_logger(__name__).bind(experiment=config.name)

    def _run_method(self, method: MethodConfig, data: MappingInput) -> EvalReport:
        counters = RunCounters().merge(data.counters)
        mapper = IncrementalMapper(
            method,
            self.config.training,
            data.reference,
            self.config.map.query_margin,
            self.config.seed,
            counters=counters,
        )
        report = EvalReport(method=method.name, profile=data.profile, seed=self.config.seed)

        start_time = time.perf_counter()
        for step, (pose, scan) in enumerate(zip(data.beliefs, data.scans)):
            try:
                with self.monitor.monitor_step(method.name, step):
                    mapper.step(pose, scan)
            except GpomError as e:
                report.error = f"step {step}: {type(e).__name__}: {e}"
                break
        report.runtime_s = time.perf_counter() - start_time
        report.steps = mapper.steps
        report.step_timings = [t for t in self.monitor.timings if t.method == method.name]

        occupancy = mapper.result()
        write_map(occupancy, self.output_directory, method.name, self.config.map.squash)
        try:
            report.auc, report.auc_known = self.evaluator.evaluate(occupancy, data.reference)
        except GpomError as e:
            report.error = report.error or f"{type(e).__name__}: {e}"
        if report.auc is None and report.error is None:
            report.error = f"{UndefinedAucError.__name__}: reference holds a single class over the scored cells"
        report.counters = counters.as_dict()

        self.logger.info(
            "method_completed",
            method=method.name,
            profile=data.profile,
            auc=report.auc,
            steps=report.steps,
            step_seconds=round(self.monitor.total_step_time(method.name), 4),
            error=report.error,
        )
        return report

    def run(self) -> List[EvalReport]:
        data = prepare_input(self.config)
        self.output_directory.mkdir(parents=True, exist_ok=True)
        write_reference(data.reference, self.output_directory)
        reports = [self._run_method(method, data) for method in self.config.methods]
        write_reports(reports, self.output_directory, self.config.report_runtime)
        return reports


def _failed_reports(config: ExperimentConfig, profile: str, error: Exception) -> List[EvalReport]:
    return [
        EvalReport(method=m.name, profile=profile, seed=config.seed, error=f"{type(error).__name__}: {error}")
        for m in config.methods
    ]


def run_experiment(config: ExperimentConfig, output_directory: Optional[Path] = None) -> List[EvalReport]:
    """One report per configured method; maps, reference and reports are written out"""
    return ExperimentRunner(config, output_directory).run()


def sweep(config: ExperimentConfig, profiles: Optional[Sequence[str]] = None) -> List[EvalReport]:
    """
    Run the experiment once per noise profile with the same seed

    Profiles run concurrently when worker_threads > 1; reports come back in
    profile order. A profile that fails before mapping yields error rows
    instead of aborting the sweep.
    """
    profiles = [p.upper() for p in (profiles or config.profiles)]
    if config.dataset is not None:
        profiles = [DATASET_PROFILE]
    root = Path(config.output_directory)

    def run_profile(profile: str) -> List[EvalReport]:
        cell_config = config.for_profile(profile) if profile != DATASET_PROFILE else config
        try:
            return run_experiment(cell_config, root / profile)
        except GpomError as e:
            logger.error("profile_failed", profile=profile, error=str(e), error_type=type(e).__name__)
            return _failed_reports(config, profile, e)

    workers = get_settings().worker_threads
    if workers > 1 and len(profiles) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_profile, profiles))
    else:
        results = [run_profile(p) for p in profiles]

    reports = [r for cell in results for r in cell]
    write_reports(reports, root, config.report_runtime)
    best = compare_reports(reports)["best_performers"]
    logger.info("sweep_completed", profiles=profiles, rows=len(reports), highest_auc=best["highest_auc"])
    return reports
