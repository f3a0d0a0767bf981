"""
iUD learners: tabular Q-learning, FC-DNN and ResDNN DQNs, and the
always-hold baseline.
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np

from network.env import StateLayout
from network.models import NetworkConfig

from ..models import AgentKind
from .base_agent import BaseAgent, HoldAgent, select_action_eps_greedy
from .dqn_agent import DQNAgent, dqn_train_step, maybe_sync_target
from .tabular_agent import TabularAgent, TabularQ, tabular_update


def make_agent(
    kind: AgentKind,
    config: NetworkConfig,
    layout: StateLayout,
    rng: np.random.Generator,
    logger: Optional[logging.Logger] = None,
) -> BaseAgent:
    kind = AgentKind(kind)
    if kind == AgentKind.TABULAR:
        return TabularAgent(config, layout, rng, logger)
    if kind == AgentKind.RESDNN:
        return DQNAgent(config, layout, rng, residual=True, logger=logger)
    if kind == AgentKind.FCDNN:
        return DQNAgent(config, layout, rng, residual=False, logger=logger)
    return HoldAgent(config, layout, rng, logger)


def load_agent(
    kind: AgentKind,
    path: Path,
    config: NetworkConfig,
    layout: StateLayout,
    rng: np.random.Generator,
    logger: Optional[logging.Logger] = None,
) -> BaseAgent:
    """Rebuild an agent of the given kind and restore its saved policy."""
    agent = make_agent(kind, config, layout, rng, logger)
    if isinstance(agent, (TabularAgent, DQNAgent)):
        agent.load_policy(path)
    return agent


__all__ = [
    "BaseAgent",
    "DQNAgent",
    "HoldAgent",
    "TabularAgent",
    "TabularQ",
    "dqn_train_step",
    "load_agent",
    "make_agent",
    "maybe_sync_target",
    "select_action_eps_greedy",
    "tabular_update",
]
