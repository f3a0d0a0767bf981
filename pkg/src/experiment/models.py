"""
Experiment-level data models: campaign configuration, per-run records and
the manifest that makes a campaign reproducible.
"""

from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

from learning.models import AgentKind
from network.models import NetworkConfig
from network.scenarios import SCENARIOS, get_scenario

MANIFEST_VERSION = 1


class ExperimentConfig(BaseModel):
    """A seed x agent x frame-size campaign over one scenario."""

    scenario: str = "S1"
    network: Dict[str, Any] = Field(
        default_factory=dict, description="Overrides applied to the scenario preset"
    )
    agents: List[AgentKind] = Field(default_factory=lambda: [AgentKind.RESDNN])
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    out_dir: Path = Path("runs")
    frame_sizes: List[int] = Field(
        default_factory=list, description="Empty means the scenario's own frame size"
    )
    eval_frames: Optional[int] = Field(default=None, ge=1)
    # greedy frames run before evaluation metrics start, to fill the history
    eval_warmup_frames: int = Field(default=1, ge=0)
    ma_window: int = Field(default=100, ge=1)
    write_trace: bool = False

    # Convenience switches, applied on top of `network`
    faithful_dqn: Optional[bool] = None
    ideal_sic: Optional[bool] = None
    invert_jam_pattern: Optional[bool] = None
    redraw_fud_per_frame: Optional[bool] = None

    @field_validator("scenario")
    @classmethod
    def validate_scenario(cls, v: str) -> str:
        if v.upper() not in SCENARIOS:
            raise ValueError(f"unknown scenario '{v}'")
        return v.upper()

    @field_validator("frame_sizes")
    @classmethod
    def validate_frame_sizes(cls, v: List[int]) -> List[int]:
        if any(s < 1 for s in v):
            raise ValueError("frame sizes must be positive")
        return list(dict.fromkeys(v))  # Remove duplicates, keep order

    def network_overrides(self) -> Dict[str, Any]:
        overrides: Dict[str, Any] = {
            key: (dict(value) if isinstance(value, dict) else value)
            for key, value in self.network.items()
        }
        for flag in ("ideal_sic", "invert_jam_pattern", "redraw_fud_per_frame"):
            value = getattr(self, flag)
            if value is not None:
                overrides[flag] = value
        if self.faithful_dqn is not None:
            learning = dict(overrides.get("learning", {}))
            learning["faithful_dqn"] = self.faithful_dqn
            overrides["learning"] = learning
        return overrides

    def network_config(self, frame_size: Optional[int] = None) -> NetworkConfig:
        overrides = self.network_overrides()
        if frame_size is not None:
            overrides["slots_per_frame"] = frame_size
        return get_scenario(self.scenario, overrides)

    def frame_size_grid(self) -> List[Optional[int]]:
        return list(self.frame_sizes) or [None]


class EvaluationSummary(BaseModel):
    """Greedy-policy performance over a held-out run."""

    frames: int
    mean_reward: float
    mean_sclar: float
    utilization: float
    collisions: int
    jammed_tx: int


class RunRecord(BaseModel):
    scenario: str
    agent: AgentKind
    seed: int
    frame_size: int
    fingerprint: str
    network: Dict[str, Any]
    paths: Dict[str, str] = Field(default_factory=dict)
    wall_clock_seconds: float
    final_reward_ma: float
    final_sclar: float
    early_sclar: float
    late_sclar: float
    evaluation: EvaluationSummary
    baseline: EvaluationSummary


class Manifest(BaseModel):
    """Everything needed to reproduce and compare a campaign."""

    version: int = MANIFEST_VERSION
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    config: Dict[str, Any]
    ma_window: int
    runs: List[RunRecord] = Field(default_factory=list)

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig.model_validate(self.config)

    def fingerprints(self) -> set:
        return {run.fingerprint for run in self.runs}

    def seeds(self) -> set:
        return {run.seed for run in self.runs}

    @classmethod
    def load(cls, path: Path) -> "Manifest":
        return cls.model_validate_json(Path(path).read_text())
