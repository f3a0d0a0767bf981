"""
Network Simulation Package

Slotted uplink simulator: channel and SINR model, MAC resolution with the
periodic jammer, and the reset/step environment the learners interact with.
"""

from .env import ChannelAccessEnv, SlotRecord, StateLayout, StepResult
from .models import (
    Action,
    ChannelRealization,
    LearningConfig,
    NetworkConfig,
    PowerProfile,
    SlotClass,
    SlotOutcome,
    UdStatus,
)
from .scenarios import get_scenario, scenario_names

__all__ = [
    "Action",
    "ChannelAccessEnv",
    "ChannelRealization",
    "LearningConfig",
    "NetworkConfig",
    "PowerProfile",
    "SlotClass",
    "SlotOutcome",
    "SlotRecord",
    "StateLayout",
    "StepResult",
    "UdStatus",
    "get_scenario",
    "scenario_names",
]
