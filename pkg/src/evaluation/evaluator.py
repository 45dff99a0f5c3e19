"""
Map Evaluation Framework
AUC scoring of squashed maps against reference grids, run reports and
cross-method comparison
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from src.mapping.occupancy import OCCUPIED, OccupancyMap, ReferenceGrid, squash
from src.models.errors import InvalidInputError, UndefinedAucError
from src.observability.monitor import StepTiming, get_logger


logger = get_logger(__name__)

COUNTER_COLUMNS = (
    "dropped_points",
    "degenerate_fusions",
    "psd_clips",
    "pose_covariance_clips",
    "skipped_records",
    "malformed_records",
)


def roc_auc(scores, labels) -> float:
    """
    Area under the ROC curve by the Mann-Whitney rank statistic

    Tied scores share their mid-rank, so identical scores give 0.5.

    Args:
        scores: occupancy probabilities
        labels: truthy for occupied, falsy for free

    Raises:
        UndefinedAucError: labels hold a single class
    """
    scores = np.asarray(scores, dtype=float).reshape(-1)
    positive = np.asarray(labels).reshape(-1).astype(bool)
    if scores.shape != positive.shape:
        raise InvalidInputError(f"{scores.size} scores for {positive.size} labels")
    if not np.all(np.isfinite(scores)):
        raise InvalidInputError("scores must be finite")
    n_pos = int(np.count_nonzero(positive))
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAucError(f"AUC needs both classes, got {n_pos} occupied and {n_neg} free")

    ranks = rankdata(scores, method="average")
    u = float(np.sum(ranks[positive])) - 0.5 * n_pos * (n_pos + 1)
    return u / (n_pos * n_neg)


@dataclass
class EvalReport:
    """Outcome of one method on one data source"""

    method: str
    profile: str
    seed: int
    auc: Optional[float] = None
    auc_known: Optional[float] = None
    runtime_s: float = 0.0
    steps: int = 0
    step_timings: List[StepTiming] = field(default_factory=list)
    counters: Dict[str, int] = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_row(self, include_runtime: bool = False) -> Dict[str, Any]:
        row: Dict[str, Any] = {
            "method": self.method,
            "profile": self.profile,
            "seed": self.seed,
            "auc": self.auc,
            "auc_known": self.auc_known,
            "steps": self.steps,
        }
        if include_runtime:
            row["runtime_s"] = round(self.runtime_s, 6)
        for name in COUNTER_COLUMNS:
            row[name] = int(self.counters.get(name, 0))
        row["error"] = self.error or ""
        return row


class MapEvaluator:
    """
    Scores maps against a reference grid

    Features:
    - AUC over cells observed by the map and known in the reference
    - AUC over every known reference cell (unobserved cells score 0.5)
    - Cross-method comparison and report files
    """

    def __init__(self, squash_kind: str = "probit", domain: str = "observed"):
        if domain not in ("observed", "known"):
            raise InvalidInputError(f"unknown AUC domain '{domain}'")
        self.squash_kind = squash_kind
        self.domain = domain
        self.logger = get_logger(__name__)

    def _score(self, probability: np.ndarray, reference: ReferenceGrid, mask: np.ndarray) -> Optional[float]:
        try:
            return roc_auc(probability[mask], reference.state[mask] == OCCUPIED)
        except UndefinedAucError as e:
            self.logger.warning("auc_undefined", reason=str(e), cells=int(mask.sum()))
            return None

    def evaluate_probability(
        self,
        probability: np.ndarray,
        observed: np.ndarray,
        reference: ReferenceGrid,
    ) -> Tuple[Optional[float], Optional[float]]:
        """
        Returns:
            (AUC over the configured domain, AUC over all known cells);
            None where one class is missing
        """
        probability = np.asarray(probability, dtype=float).reshape(-1)
        if probability.shape[0] != reference.state.shape[0]:
            raise InvalidInputError("map and reference grids differ in size")
        known = reference.known
        auc_known = self._score(probability, reference, known)
        if self.domain == "known":
            return auc_known, auc_known
        return self._score(probability, reference, known & observed), auc_known

    def evaluate(self, occupancy: OccupancyMap, reference: ReferenceGrid) -> Tuple[Optional[float], Optional[float]]:
        if not reference.aligned_with(occupancy):
            raise InvalidInputError("map and reference grids are not aligned")
        return self.evaluate_probability(squash(occupancy, self.squash_kind), occupancy.observed, reference)


def compare_reports(reports: Sequence[EvalReport]) -> Dict[str, Any]:
    """Best AUC and fastest run among the successful reports"""
    comparison: Dict[str, Any] = {
        "methods": [r.method for r in reports],
        "auc": {f"{r.method}/{r.profile}": r.auc for r in reports},
        "runtime_s": {f"{r.method}/{r.profile}": r.runtime_s for r in reports},
        "failed": [f"{r.method}/{r.profile}" for r in reports if not r.ok],
    }
    scored = [r for r in reports if r.ok and r.auc is not None]
    finished = [r for r in reports if r.ok]
    comparison["best_performers"] = {
        "highest_auc": max(scored, key=lambda r: r.auc).method if scored else None,
        "fastest": min(finished, key=lambda r: r.runtime_s).method if finished else None,
    }
    return comparison


# ============================================================================
# REPORT FILES
# ============================================================================

def report_frame(reports: Sequence[EvalReport], include_runtime: bool = False) -> pd.DataFrame:
    return pd.DataFrame([r.to_row(include_runtime) for r in reports])


def auc_table(reports: Sequence[EvalReport]) -> pd.DataFrame:
    """AUC against noise profile, one column per method"""
    frame = pd.DataFrame([
        {"profile": r.profile, "method": r.method, "auc": r.auc} for r in reports
    ])
    if frame.empty:
        return pd.DataFrame(columns=["profile"])
    frame["auc"] = pd.to_numeric(frame["auc"], errors="coerce")
    table = frame.pivot_table(index="profile", columns="method", values="auc", aggfunc="mean", dropna=False)
    methods = list(dict.fromkeys(r.method for r in reports))
    return table.reindex(columns=methods).reset_index()


def timings_frame(reports: Sequence[EvalReport]) -> pd.DataFrame:
    rows = [
        {"method": r.method, "profile": r.profile, "step": t.step, "seconds": t.seconds, "status": t.status}
        for r in reports
        for t in r.step_timings
    ]
    return pd.DataFrame(rows, columns=["method", "profile", "step", "seconds", "status"])


def render_summary(reports: Sequence[EvalReport]) -> str:
    lines = [f"{'method':<8} {'profile':<8} {'auc':>8} {'auc_known':>10} {'steps':>6}  status"]
    for r in reports:
        auc = "-" if r.auc is None else f"{r.auc:.4f}"
        known = "-" if r.auc_known is None else f"{r.auc_known:.4f}"
        status = "ok" if r.ok else f"error: {r.error}"
        lines.append(f"{r.method:<8} {r.profile:<8} {auc:>8} {known:>10} {r.steps:>6}  {status}")
    best = compare_reports(reports)["best_performers"]
    lines.append("")
    lines.append(f"highest AUC: {best['highest_auc'] or '-'}")
    return "\n".join(lines) + "\n"


def write_reports(
    reports: Sequence[EvalReport],
    directory,
    include_runtime: bool = False,
) -> Dict[str, Path]:
    """
    report.csv and report.txt are deterministic for fixed seeds; timings.csv
    carries the wall-clock breakdown
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": directory / "report.csv",
        "summary": directory / "report.txt",
        "auc_vs_profile": directory / "auc_vs_profile.csv",
        "timings": directory / "timings.csv",
    }
    report_frame(reports, include_runtime).to_csv(paths["report"], index=False)
    paths["summary"].write_text(render_summary(reports), encoding="utf-8")
    auc_table(reports).to_csv(paths["auc_vs_profile"], index=False)
    timings_frame(reports).to_csv(paths["timings"], index=False)
    logger.info("reports_written", directory=str(directory), rows=len(reports))
    return paths
