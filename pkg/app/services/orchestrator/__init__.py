from .rollout import SwarmLearner, SwarmRunner
from .training_service import TrainingService, checkpoint_name
from .evaluation_service import EvaluationService, parse_value
from .trace import TraceRecorder, coverage_counts, emit_coverage_grid, read_trace
from .metrics import read_metrics, summarize, write_metrics

__all__ = [
    "SwarmLearner",
    "SwarmRunner",
    "TrainingService",
    "checkpoint_name",
    "EvaluationService",
    "parse_value",
    "TraceRecorder",
    "coverage_counts",
    "emit_coverage_grid",
    "read_trace",
    "read_metrics",
    "summarize",
    "write_metrics",
]
