from .agents import (
    BaseAgent,
    DQNAgent,
    HoldAgent,
    TabularAgent,
    load_agent,
    make_agent,
)
from .models import AgentKind, EpsilonSchedule, Experience
from .replay import ReplayBuffer
from .training import SlotLog, TrainingResult, run_evaluation, run_training

__all__ = [
    "AgentKind",
    "BaseAgent",
    "DQNAgent",
    "EpsilonSchedule",
    "Experience",
    "HoldAgent",
    "ReplayBuffer",
    "SlotLog",
    "TabularAgent",
    "TrainingResult",
    "load_agent",
    "make_agent",
    "run_evaluation",
    "run_training",
]
