"""
Exception hierarchy shared by the simulator, learners and experiment runner.
"""

from typing import Any, Dict, Optional


class SimulationError(Exception):
    """Base class for every error raised on purpose by this project."""


class ConfigurationError(SimulationError, ValueError):
    """Invalid scenario, network or experiment configuration."""


class EnvironmentStateError(SimulationError, RuntimeError):
    """Environment used out of order (step before reset, step after the episode)."""


class TrainingError(SimulationError, RuntimeError):
    """Numerical failure during learning, with diagnostics for the log."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def __str__(self) -> str:
        if not self.diagnostics:
            return super().__str__()
        details = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
        return f"{super().__str__()} ({details})"


class ComparisonError(SimulationError, ValueError):
    """Manifests that cannot be compared with each other."""
