"""
Observability System
Structured logging, tracing spans and run counters for mapping experiments
"""
import logging
import sys
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional

import structlog
from opentelemetry import trace
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import ConsoleSpanExporter, SimpleSpanProcessor

from config.settings import get_settings


# ============================================================================
# STRUCTURED LOGGING
# ============================================================================

def setup_logging():
    """Configure structured logging with structlog"""
    settings = get_settings()
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, settings.log_level),
        force=True,
    )
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer() if settings.log_format == "json"
            else structlog.dev.ConsoleRenderer()
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def get_logger(name: str):
    """Get a structured logger instance"""
    return structlog.get_logger(name)


# ============================================================================
# RUN COUNTERS
# ============================================================================

@dataclass
class RunCounters:
    """Event counts accumulated over one experiment"""
    dropped_points: int = 0
    degenerate_fusions: int = 0
    psd_clips: int = 0
    pose_covariance_clips: int = 0
    skipped_records: int = 0
    malformed_records: int = 0

    def merge(self, other: "RunCounters") -> "RunCounters":
        for name, value in asdict(other).items():
            setattr(self, name, getattr(self, name) + value)
        return self

    def as_dict(self) -> Dict[str, int]:
        return asdict(self)


# ============================================================================
# TRACING
# ============================================================================

_provider_installed = False


class TracingManager:
    """Wraps an OpenTelemetry tracer; spans are no-ops unless tracing is enabled"""

    def __init__(self):
        self.settings = get_settings()
        self._setup_tracing()
        self.tracer = trace.get_tracer(__name__)
        self.logger = get_logger(__name__)

    def _setup_tracing(self):
        global _provider_installed
        if not self.settings.enable_tracing or _provider_installed:
            return

        resource = Resource.create({
            "service.name": self.settings.app_name,
            "service.version": self.settings.app_version,
            "environment": self.settings.environment
        })
        tracer_provider = TracerProvider(resource=resource)
        tracer_provider.add_span_processor(SimpleSpanProcessor(ConsoleSpanExporter()))
        trace.set_tracer_provider(tracer_provider)
        _provider_installed = True

    @contextmanager
    def start_span(
        self,
        name: str,
        attributes: Optional[Dict[str, Any]] = None
    ):
        """Start a new trace span"""
        with self.tracer.start_as_current_span(name) as span:
            if attributes:
                for key, value in attributes.items():
                    span.set_attribute(key, str(value))

            self.logger.debug("span_started", span_name=name)

            try:
                yield span
            except Exception as e:
                span.set_status(trace.Status(trace.StatusCode.ERROR))
                span.record_exception(e)
                self.logger.debug("span_error", span_name=name, error=str(e))
                raise
            finally:
                self.logger.debug("span_completed", span_name=name)


# ============================================================================
# EXPERIMENT MONITOR
# ============================================================================

@dataclass
class StepTiming:
    method: str
    step: int
    seconds: float
    status: str


class ExperimentMonitor:
    """
    Per-experiment monitoring
    Combines logging, tracing and per-step timing
    """

    def __init__(self, run_id: str = "run"):
        self.run_id = run_id
        self.logger = get_logger(__name__).bind(run_id=run_id)
        self.tracing = TracingManager()
        self.timings: List[StepTiming] = []

    @contextmanager
    def monitor_step(self, method: str, step: int):
        """Time one incremental mapping step"""
        start_time = time.perf_counter()
        with self.tracing.start_span(
            f"mapping.{method}.step",
            attributes={"method": method, "step": step}
        ) as span:
            try:
                yield span
                duration = time.perf_counter() - start_time
                self.timings.append(StepTiming(method, step, duration, "ok"))
                self.logger.debug("step_completed", method=method, step=step, duration=duration)
            except Exception as e:
                duration = time.perf_counter() - start_time
                self.timings.append(StepTiming(method, step, duration, "error"))
                self.logger.error(
                    "step_failed",
                    method=method,
                    step=step,
                    error=str(e),
                    error_type=type(e).__name__,
                    duration=duration
                )
                raise

    def total_step_time(self, method: Optional[str] = None) -> float:
        return sum(t.seconds for t in self.timings if method is None or t.method == method)


# Setup logging on import
setup_logging()
