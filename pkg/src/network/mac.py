"""
Medium access rules of the slotted uplink: fUD schedules, the periodic
jammer, collision/jam resolution and the decision-dependent reward table.
"""

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from .models import Action, Decision, FudSchedule, NetworkConfig, SlotClass, UdStatus


@dataclass(frozen=True)
class RewardRow:
    decision: Decision
    nu_ud: float
    nu_net: float


REWARD_TABLE: Dict[Tuple[SlotClass, Action], RewardRow] = {
    (SlotClass.JAMMED, Action.HOLD): RewardRow(Decision.GOOD, 4.0, 5.0),
    (SlotClass.OCCUPIED, Action.HOLD): RewardRow(Decision.GOOD, 4.0, 5.0),
    (SlotClass.FREE, Action.HOLD): RewardRow(Decision.WORST, 1.0, -10.0),
    (SlotClass.JAMMED, Action.DISPATCH): RewardRow(Decision.WORST, 1.0, -10.0),
    (SlotClass.OCCUPIED, Action.DISPATCH): RewardRow(Decision.BAD, 3.0, -5.0),
    (SlotClass.FREE, Action.DISPATCH): RewardRow(Decision.EXCELLENT, 5.0, 10.0),
}


def lookup_reward_row(slot_class: SlotClass, action: Action) -> RewardRow:
    return REWARD_TABLE[(SlotClass(slot_class), Action(action))]


def gen_fud_schedule(config: NetworkConfig, rng: np.random.Generator) -> FudSchedule:
    """
    Draw the (fUD x slot) Bernoulli(omega) transmission pattern.

    A scripted pattern in the config takes precedence over the draw.
    """
    if config.fixed_fud_bits is not None:
        bits = np.array(config.fixed_fud_bits, dtype=np.int8).reshape(
            config.num_fuds, config.slots_per_frame
        )
        return FudSchedule(bits=bits)

    draws = rng.random((config.num_fuds, config.slots_per_frame))
    return FudSchedule(bits=(draws < config.omega).astype(np.int8))


def jammer_active(t: int, config: NetworkConfig) -> np.ndarray:
    """
    Activity of every jammer in global slot t.

    Each period of jam_period slots opens with jam_quiet silent slots and
    the jammer transmits for the rest; invert_jam_pattern swaps the two.
    """
    if t < 0:
        raise ValueError(f"slot index must be non-negative, got {t}")
    phase = t % config.jam_period
    active = phase >= config.jam_quiet
    if config.invert_jam_pattern:
        active = not active
    return np.full(config.num_jammers, int(active), dtype=np.int8)


def classify_slot(
    fud_bits: Sequence[int], iud_action: Action, jam: int
) -> Tuple[SlotClass, Tuple[UdStatus, ...]]:
    """
    Resolve one slot.

    Returns:
        The slot class (ignoring the iUD's own action) and the status of
        every UD, fUDs first and the iUD last
    """
    transmitting = [bool(b) for b in fud_bits] + [Action(iud_action) == Action.DISPATCH]

    if jam:
        slot_class = SlotClass.JAMMED
    elif any(transmitting[:-1]):
        slot_class = SlotClass.OCCUPIED
    else:
        slot_class = SlotClass.FREE

    senders = sum(transmitting)
    if jam:
        busy = UdStatus.JAMMED
    elif senders >= 2:
        busy = UdStatus.COLLISION
    else:
        busy = UdStatus.SUCCESS

    statuses = tuple(busy if tx else UdStatus.IDLE for tx in transmitting)
    return slot_class, statuses


def utility(ud_rate: float, nu_ud: float) -> float:
    if ud_rate < 0:
        raise ValueError(f"rate must be non-negative, got {ud_rate}")
    return nu_ud * ud_rate


def reward(iud_utility: float, fud_utilities: Sequence[float], nu_net: float) -> float:
    return nu_net * (iud_utility + float(np.sum(fud_utilities)))
