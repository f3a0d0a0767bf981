import logging
from collections import deque
from dataclasses import dataclass
from typing import Deque, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from errors import EnvironmentStateError

from .mac import (
    classify_slot,
    gen_fud_schedule,
    jammer_active,
    lookup_reward_row,
    reward,
    utility,
)
from .models import (
    Action,
    FudSchedule,
    NetworkConfig,
    RewardMode,
    SlotClass,
    SlotOutcome,
    UdStatus,
)
from .phy import ChannelModel

OUTCOME_CODES = 4
# action bit + outcome one-hot + realized rate
PER_UD_WIDTH = 1 + OUTCOME_CODES + 1


@dataclass(frozen=True)
class StateLayout:
    """Shape of the flattened observation: window x UD x per-UD encoding."""

    window: int
    num_uds: int
    width: int = PER_UD_WIDTH

    @property
    def length(self) -> int:
        return self.window * self.num_uds * self.width

    def idle_slot(self) -> np.ndarray:
        block = np.zeros((self.num_uds, self.width))
        block[:, 1 + UdStatus.IDLE.code] = 1.0
        return block

    def encode_slot(
        self,
        transmitted: Sequence[int],
        statuses: Sequence[UdStatus],
        rates: Sequence[float],
    ) -> np.ndarray:
        block = np.zeros((self.num_uds, self.width))
        for ud, (tx, status, rate) in enumerate(zip(transmitted, statuses, rates)):
            block[ud, 0] = float(tx)
            block[ud, 1 + status.code] = 1.0
            block[ud, -1] = rate
        return block

    def discrete_key(self, state: np.ndarray) -> Tuple[int, ...]:
        """Actions and outcome codes of the whole window, rates dropped."""
        blocks = np.asarray(state).reshape(self.window, self.num_uds, self.width)
        return tuple(blocks[:, :, :-1].astype(np.int8).ravel().tolist())

    def rate_key(self, state: np.ndarray, step: float) -> Tuple[int, ...]:
        """Discrete key followed by every rate rounded to a multiple of step."""
        blocks = np.asarray(state).reshape(self.window, self.num_uds, self.width)
        rates = np.rint(blocks[:, :, -1] / step).astype(int).ravel().tolist()
        return self.discrete_key(state) + tuple(rates)


@dataclass(frozen=True)
class SlotRecord:
    """One row of the per-slot trace."""

    frame: int
    slot: int
    fud_bits: Tuple[int, ...]
    jam: int
    iud_action: Action
    slot_class: SlotClass
    reward: float
    outcome: SlotOutcome


class StepResult(NamedTuple):
    state: np.ndarray
    reward: float
    ack: UdStatus
    outcome: SlotOutcome


class ChannelAccessEnv:
    """
    Slotted uplink shared by fixed-schedule UDs, a periodic jammer and the iUD.

    One episode spans num_frames frames of slots_per_frame slots. The
    observation stacks the last `window` slots of (action, ACK outcome,
    realized rate) for every legitimate UD, fUDs first and the iUD last.
    """

    def __init__(
        self,
        config: NetworkConfig,
        rng: np.random.Generator,
        logger: Optional[logging.Logger] = None,
        record_trace: bool = False,
        schedule: Optional[FudSchedule] = None,
    ):
        self.config = config
        self.rng = rng
        self.logger = logger or logging.getLogger("ChannelAccessEnv")
        self.layout = StateLayout(window=config.window, num_uds=config.num_uds)
        self.channel_model = ChannelModel(config, rng, self.logger)
        self.record_trace = record_trace

        self.schedule: Optional[FudSchedule] = schedule
        self.trace: List[SlotRecord] = []
        self._t: Optional[int] = None
        self._history: Deque[np.ndarray] = deque(maxlen=self.layout.window)

    @property
    def slots_per_episode(self) -> int:
        return self.config.slots_per_frame * self.config.num_frames

    @property
    def done(self) -> bool:
        return self._t is not None and self._t >= self.slots_per_episode

    @property
    def t(self) -> int:
        return self._t or 0

    def reset(self, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """
        Start a new episode and return the all-idle initial observation.

        The fUD schedule is quasi-static: it is drawn once and reused by
        later resets unless a new generator is supplied.
        """
        if rng is not None:
            self.rng = rng
            self.channel_model = ChannelModel(self.config, rng, self.logger)
            self.schedule = None

        if self.schedule is None:
            self.schedule = gen_fud_schedule(self.config, self.rng)
            self.logger.info(
                f"Drew fUD schedule with {int(self.schedule.bits.sum())} active "
                f"slot(s) over {self.config.num_fuds} fUD(s)"
            )

        self._t = 0
        self.trace = []
        self._history.clear()
        for _ in range(self.layout.window):
            self._history.append(self.layout.idle_slot())
        return self._observation()

    def step(self, action: int) -> StepResult:
        """Advance one slot with the iUD's action."""
        if self._t is None or self.schedule is None:
            raise EnvironmentStateError("step() called before reset()")
        if self.done:
            raise EnvironmentStateError(
                f"episode exhausted after {self.slots_per_episode} slots"
            )

        action = Action(int(action))
        frame, slot = divmod(self._t, self.config.slots_per_frame)
        if slot == 0 and frame > 0 and self.config.redraw_fud_per_frame:
            self.schedule = gen_fud_schedule(self.config, self.rng)

        fud_bits = self.schedule.slot_bits(slot)
        jam = jammer_active(self._t, self.config)
        jam_any = int(jam.any())
        slot_class, statuses = classify_slot(fud_bits, action, jam_any)
        transmitted = np.array([s != UdStatus.IDLE for s in statuses], dtype=np.int8)

        channels, powers = self.channel_model.draw(new_frame=slot == 0)
        sinr = self.channel_model.sinr(channels, powers, transmitted, jam)
        attempted = np.log2(1.0 + sinr)
        success = np.array([s == UdStatus.SUCCESS for s in statuses])
        realized = np.where(success, attempted, 0.0)

        row = lookup_reward_row(slot_class, action)
        attempted_mode = self.config.reward_mode == RewardMode.ATTEMPTED
        credited = attempted if attempted_mode else realized
        utilities = [utility(float(rate), row.nu_ud) for rate in credited]
        r = reward(utilities[-1], utilities[:-1], row.nu_net)

        outcome = SlotOutcome(
            statuses=statuses,
            slot_class=slot_class,
            rates=realized,
            attempted_rates=attempted,
        )
        self._history.append(self.layout.encode_slot(transmitted, statuses, realized))

        if self.record_trace:
            self.trace.append(
                SlotRecord(
                    frame=frame,
                    slot=slot,
                    fud_bits=tuple(int(b) for b in fud_bits),
                    jam=jam_any,
                    iud_action=action,
                    slot_class=slot_class,
                    reward=r,
                    outcome=outcome,
                )
            )

        self.logger.debug(
            f"t={self._t} frame={frame} slot={slot} class={slot_class.value} "
            f"action={action.name} ack={statuses[-1].value} reward={r:.4f}"
        )
        self._t += 1
        return StepResult(self._observation(), r, statuses[-1], outcome)

    def _observation(self) -> np.ndarray:
        return np.concatenate([block.ravel() for block in self._history])
