import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import logfire
import numpy as np

from network.env import ChannelAccessEnv
from network.models import Action, NetworkConfig, SlotClass, SlotOutcome

from .agents import BaseAgent
from .models import Experience


@dataclass(frozen=True)
class SlotLog:
    """Per-slot telemetry emitted by training and evaluation runs."""

    t: int
    episode: int
    frame: int
    slot: int
    reward: float
    epsilon: float
    action: Action
    slot_class: SlotClass
    outcome: SlotOutcome
    loss: Optional[float] = None


SlotCallback = Callable[[SlotLog], None]


@dataclass
class TrainingResult:
    agent: BaseAgent
    slots: List[SlotLog] = field(default_factory=list)
    losses: List[float] = field(default_factory=list)
    elapsed_seconds: float = 0.0

    @property
    def rewards(self) -> np.ndarray:
        return np.array([log.reward for log in self.slots])


def run_training(
    config: NetworkConfig,
    env: ChannelAccessEnv,
    agent: BaseAgent,
    on_slot: Optional[SlotCallback] = None,
    logger: Optional[logging.Logger] = None,
) -> TrainingResult:
    """
    Train the iUD over config.episodes episodes of num_frames frames.

    Every slot: epsilon-greedy action, env.step, deposit the experience,
    learn (replay sampling, gradient step and target sync happen inside the
    agent), and decay epsilon.

    Args:
        config: Scenario and learning parameters
        env: Environment to train in; reset at the start of every episode
        agent: Learner to train
        on_slot: Optional callback receiving every SlotLog as it is produced
        logger: Optional logger instance

    Returns:
        TrainingResult with the slot stream and batch losses
    """
    logger = logger or logging.getLogger("Training")
    with logfire.span(
        "training.run",
        agent=agent.kind.value,
        episodes=config.episodes,
        slots_per_episode=env.slots_per_episode,
    ):
        return _run_training_impl(config, env, agent, on_slot, logger)


def _run_training_impl(
    config: NetworkConfig,
    env: ChannelAccessEnv,
    agent: BaseAgent,
    on_slot: Optional[SlotCallback],
    logger: logging.Logger,
) -> TrainingResult:
    result = TrainingResult(agent=agent)
    start_time = time.time()
    t = 0

    for episode in range(config.episodes):
        state = env.reset()
        episode_reward = 0.0
        while not env.done:
            frame, slot = divmod(env.t, config.slots_per_frame)
            epsilon = agent.epsilon
            action = agent.act(state, epsilon)

            step = env.step(action)
            loss = agent.observe(Experience(state, action, step.reward, step.state))
            if loss is not None:
                result.losses.append(loss)

            log = SlotLog(
                t=t,
                episode=episode,
                frame=episode * config.num_frames + frame,
                slot=slot,
                reward=step.reward,
                epsilon=epsilon,
                action=Action(action),
                slot_class=step.outcome.slot_class,
                outcome=step.outcome,
                loss=loss,
            )
            result.slots.append(log)
            if on_slot:
                on_slot(log)

            episode_reward += step.reward
            state = step.state
            t += 1

        logger.info(
            f"Episode {episode + 1}/{config.episodes} finished: "
            f"mean reward {episode_reward / env.slots_per_episode:.3f}, "
            f"epsilon {agent.epsilon:.3f}"
        )

    result.elapsed_seconds = time.time() - start_time
    logger.info(
        f"Training of {agent.kind.value} agent completed in "
        f"{result.elapsed_seconds:.2f}s over {t} slots"
    )
    return result


def run_evaluation(
    env: ChannelAccessEnv,
    agent: BaseAgent,
    on_slot: Optional[SlotCallback] = None,
    logger: Optional[logging.Logger] = None,
) -> List[SlotLog]:
    """Run one episode with the greedy policy (epsilon = 0) and no learning."""
    logger = logger or logging.getLogger("Evaluation")
    logs: List[SlotLog] = []
    with logfire.span("training.evaluate", agent=agent.kind.value):
        state = env.reset()
        while not env.done:
            frame, slot = divmod(env.t, env.config.slots_per_frame)
            action = agent.greedy_action(state)
            step = env.step(action)
            log = SlotLog(
                t=len(logs),
                episode=0,
                frame=frame,
                slot=slot,
                reward=step.reward,
                epsilon=0.0,
                action=Action(action),
                slot_class=step.outcome.slot_class,
                outcome=step.outcome,
            )
            logs.append(log)
            if on_slot:
                on_slot(log)
            state = step.state

    logger.info(
        f"Greedy evaluation of {agent.kind.value} agent over {len(logs)} slots: "
        f"mean reward {np.mean([log.reward for log in logs]):.3f}"
    )
    return logs
