import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import TrainingError
from network.env import StateLayout
from network.models import NetworkConfig

from ..models import AgentKind, Experience
from ..nn import (
    Optimizer,
    ParamSet,
    backward,
    build_network,
    forward,
    forward_with_cache,
    load_params,
    make_optimizer,
    mse_loss,
    save_params,
    sgd_step,
    soft_update,
)
from ..replay import ReplayBuffer
from .base_agent import BaseAgent


def dqn_train_step(
    pred: ParamSet,
    target: ParamSet,
    batch: Sequence[Experience],
    alpha: float,
    gamma: float,
    optimizer: Optional[Optimizer] = None,
    faithful: bool = False,
    reward_scale: float = 1.0,
    batch_size: Optional[int] = None,
) -> Tuple[ParamSet, float]:
    """
    One semi-gradient step on a replay batch.

    By default the prediction network scores (s, a) and the target network
    supplies the bootstrap max_a' Q(s', a'). With faithful=True the roles
    follow the printed batch loss: the bootstrap comes from the prediction
    network and the scored term from the target network, whose gradient is
    applied to the prediction parameters.

    Args:
        pred: Prediction network parameters
        target: Target network parameters
        batch: Replay experiences
        alpha: Step size used when no optimizer is given
        gamma: Discount factor
        optimizer: Optional stateful optimizer replacing plain SGD
        faithful: Use the printed network assignment
        reward_scale: Multiplier applied to rewards before the backup
        batch_size: Expected batch length, checked when given

    Returns:
        Updated prediction parameters and the batch loss before the step
    """
    if not batch:
        raise ValueError("dqn_train_step needs a non-empty batch")
    if batch_size is not None and len(batch) != batch_size:
        raise ValueError(f"expected a batch of {batch_size}, got {len(batch)}")

    states = np.stack([e.state for e in batch])
    next_states = np.stack([e.next_state for e in batch])
    actions = np.array([e.action for e in batch], dtype=int)
    rewards = np.array([e.reward for e in batch], dtype=float) * reward_scale

    bootstrap_net, scored_net = (pred, target) if faithful else (target, pred)
    bootstrap = forward(bootstrap_net, next_states).max(axis=1)
    y = rewards + gamma * bootstrap

    q_all, cache = forward_with_cache(scored_net, states)
    rows = np.arange(len(batch))
    q = q_all[rows, actions]
    loss = mse_loss(q, y)
    if not np.isfinite(loss):
        raise TrainingError(
            "non-finite DQN batch loss",
            {
                "loss": loss,
                "max_abs_target": float(np.nanmax(np.abs(y))),
                "max_abs_q": float(np.nanmax(np.abs(q_all))),
                "max_abs_reward": float(np.max(np.abs(rewards))),
            },
        )

    grad_out = np.zeros_like(q_all)
    grad_out[rows, actions] = 2.0 * (q - y) / len(batch)
    grads = backward(scored_net, cache, grad_out)

    updated = optimizer.step(pred, grads) if optimizer else sgd_step(pred, grads, alpha)
    if not updated.all_finite():
        raise TrainingError("non-finite parameters after update", {"loss": loss})
    return updated, loss


def maybe_sync_target(
    t: int,
    tau: float,
    target: ParamSet,
    pred: ParamSet,
    sync_period: int = 1,
) -> ParamSet:
    """Soft-update the target network every sync_period steps."""
    if sync_period < 1:
        raise ValueError(f"sync_period must be positive, got {sync_period}")
    if t % sync_period == 0:
        return soft_update(target, pred, tau)
    return target


class DQNAgent(BaseAgent):
    """
    DQN learner with replay and a softly tracked target network.

    residual=True gives the ResDNN approximator, residual=False the FC-DNN
    baseline of the same depth.
    """

    def __init__(
        self,
        config: NetworkConfig,
        layout: StateLayout,
        rng: np.random.Generator,
        residual: bool = True,
        logger: Optional[logging.Logger] = None,
    ):
        self.kind = AgentKind.RESDNN if residual else AgentKind.FCDNN
        super().__init__(config, layout, rng, logger)
        learning = config.learning

        self.pred = build_network(
            self.kind.value,
            layout.length,
            width=learning.hidden_width,
            blocks=learning.residual_blocks,
            rng=rng,
        )
        self.target = self.pred.copy()
        self.buffer = ReplayBuffer(learning.replay_capacity, rng)
        self.optimizer = make_optimizer(
            learning.effective_optimizer,
            learning.alpha,
            beta1=learning.adam_beta1,
            beta2=learning.adam_beta2,
        )
        self.train_steps = 0
        self.losses: List[float] = []

        self.logger.info(
            f"{self.kind.value} network with {self.pred.num_params} parameters, "
            f"optimizer={learning.effective_optimizer}, "
            f"faithful={learning.faithful_dqn}"
        )

    def q_values(self, state: np.ndarray) -> np.ndarray:
        return forward(self.pred, state)

    def learn(self, experience: Experience) -> Optional[float]:
        learning = self.config.learning
        self.buffer.add(experience)
        if not self.buffer.can_sample(learning.batch_size):
            return None

        batch = self.buffer.sample(learning.batch_size)
        try:
            self.pred, loss = dqn_train_step(
                self.pred,
                self.target,
                batch,
                alpha=learning.alpha,
                gamma=learning.gamma,
                optimizer=self.optimizer,
                faithful=learning.faithful_dqn,
                reward_scale=learning.learner_reward_scale,
                batch_size=learning.batch_size,
            )
        except TrainingError as e:
            self.logger.error(f"Training step {self.train_steps} failed: {e}")
            raise

        self.train_steps += 1
        self.losses.append(loss)
        # slot clock, counting this slot
        self.target = maybe_sync_target(
            self.steps + 1,
            learning.tau_soft,
            self.target,
            self.pred,
            sync_period=learning.sync_period,
        )
        return loss

    def save_policy(self, path: Path) -> Path:
        written = save_params(
            self.pred,
            path,
            metadata={"kind": self.kind.value, "state_length": self.layout.length},
        )
        self.logger.info(f"Saved {self.kind.value} parameters to {written}")
        return written

    def load_policy(self, path: Path) -> None:
        params, metadata = load_params(path)
        if metadata.get("kind") != self.kind.value:
            raise ValueError(
                f"{path} holds a {metadata.get('kind')} policy, not {self.kind.value}"
            )
        self.pred.check_compatible(params)
        self.pred = params
        self.target = params.copy()
