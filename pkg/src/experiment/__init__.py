from .compare import compare_agents
from .metrics import (
    FrameAccumulator,
    FrameMetrics,
    TrainingSeries,
    clar_slot,
    frame_metrics_from_trace,
    moving_average,
    sclar,
    xi_empirical,
)
from .models import EvaluationSummary, ExperimentConfig, Manifest, RunRecord
from .runner import ExperimentRunner, evaluate_policy, run_experiment

__all__ = [
    "EvaluationSummary",
    "ExperimentConfig",
    "ExperimentRunner",
    "FrameAccumulator",
    "FrameMetrics",
    "Manifest",
    "RunRecord",
    "TrainingSeries",
    "clar_slot",
    "compare_agents",
    "evaluate_policy",
    "frame_metrics_from_trace",
    "moving_average",
    "run_experiment",
    "sclar",
    "xi_empirical",
]
