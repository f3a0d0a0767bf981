import numpy as np
import pytest

from errors import EnvironmentStateError
from network.env import PER_UD_WIDTH, ChannelAccessEnv, StateLayout
from network.models import Action, FudSchedule, RewardMode, SlotClass, UdStatus

pytestmark = pytest.mark.unit

D1_CLASSES = [
    SlotClass.OCCUPIED,
    SlotClass.FREE,
    SlotClass.JAMMED,
    SlotClass.JAMMED,
    SlotClass.JAMMED,
]


def _last_block(env: ChannelAccessEnv, state: np.ndarray) -> np.ndarray:
    layout = env.layout
    blocks = state.reshape(layout.window, layout.num_uds, layout.width)
    return blocks[-1]


def test_reset_returns_idle_history(small_config, rng):
    env = ChannelAccessEnv(small_config, rng)
    state = env.reset()
    layout = env.layout
    assert state.shape == (small_config.window * small_config.num_uds * PER_UD_WIDTH,)
    blocks = state.reshape(layout.window, layout.num_uds, layout.width)
    assert np.all(blocks[:, :, 0] == 0)
    assert np.all(blocks[:, :, 1 + UdStatus.IDLE.code] == 1)
    assert np.all(blocks[:, :, -1] == 0)


def test_step_before_reset_fails(small_config, rng):
    env = ChannelAccessEnv(small_config, rng)
    with pytest.raises(EnvironmentStateError):
        env.step(Action.HOLD)


def test_step_after_episode_fails(small_config, rng):
    env = ChannelAccessEnv(small_config.model_copy(update={"num_frames": 1}), rng)
    env.reset()
    for _ in range(small_config.slots_per_frame):
        env.step(Action.HOLD)
    assert env.done
    with pytest.raises(EnvironmentStateError):
        env.step(Action.HOLD)


def test_d1_slot_classes_repeat_every_frame(d1_config, rng):
    env = ChannelAccessEnv(d1_config, rng)
    env.reset()
    classes = [env.step(Action.HOLD).outcome.slot_class for _ in range(15)]
    assert classes == D1_CLASSES * 3


def test_dispatch_in_free_slot_succeeds(d1_config, rng):
    env = ChannelAccessEnv(d1_config, rng)
    env.reset()
    env.step(Action.HOLD)
    result = env.step(Action.DISPATCH)
    assert result.outcome.slot_class == SlotClass.FREE
    assert result.ack == UdStatus.SUCCESS
    assert result.reward > 0

    block = _last_block(env, result.state)
    assert block[-1, 0] == 1.0
    assert block[-1, 1 + UdStatus.SUCCESS.code] == 1.0
    assert block[-1, -1] == pytest.approx(result.outcome.rates[-1])
    assert block[-1, -1] > 0


def test_dispatch_in_occupied_slot_collides(d1_config, rng):
    env = ChannelAccessEnv(d1_config, rng)
    env.reset()
    result = env.step(Action.DISPATCH)
    assert result.ack == UdStatus.COLLISION
    assert result.outcome.statuses[0] == UdStatus.COLLISION
    # attempted rates make the collision penalty bite
    assert result.reward < 0
    np.testing.assert_array_equal(result.outcome.rates, [0.0, 0.0])


def test_jammed_dispatch_is_penalised(d1_config, rng):
    env = ChannelAccessEnv(d1_config, rng)
    env.reset()
    env.step(Action.HOLD)
    env.step(Action.HOLD)
    result = env.step(Action.DISPATCH)
    assert result.outcome.slot_class == SlotClass.JAMMED
    assert result.ack == UdStatus.JAMMED
    assert result.reward < 0


def test_realized_mode_gives_zero_for_destroyed_packets(d1_config, rng):
    config = d1_config.model_copy(update={"reward_mode": RewardMode.REALIZED})
    env = ChannelAccessEnv(config, rng)
    env.reset()
    result = env.step(Action.DISPATCH)
    assert result.ack == UdStatus.COLLISION
    assert result.reward == 0.0


def test_hold_in_free_slot_earns_nothing(d1_config, rng):
    env = ChannelAccessEnv(d1_config, rng)
    env.reset()
    env.step(Action.HOLD)
    result = env.step(Action.HOLD)
    assert result.outcome.slot_class == SlotClass.FREE
    assert result.reward == 0.0
    assert result.ack == UdStatus.IDLE


def test_schedule_is_quasi_static_across_resets(small_config, rng):
    env = ChannelAccessEnv(small_config, rng)
    env.reset()
    schedule = env.schedule
    env.reset()
    assert env.schedule is schedule


@pytest.mark.parametrize("redraw", [False, True])
def test_fud_schedule_redraw_per_frame(small_config, rng, redraw):
    config = small_config.model_copy(update={"redraw_fud_per_frame": redraw})
    env = ChannelAccessEnv(config, rng)
    env.reset()
    patterns = set()
    while not env.done:
        env.step(Action.HOLD)
        patterns.add(env.schedule.bits.tobytes())
    assert (len(patterns) > 1) == redraw


def test_given_schedule_is_used(small_config, rng):
    bits = np.array([[1, 1, 0, 0, 0], [0, 0, 0, 0, 1]], dtype=np.int8)
    env = ChannelAccessEnv(
        small_config.model_copy(update={"jam_quiet": 4}),
        rng,
        schedule=FudSchedule(bits=bits),
    )
    env.reset()
    classes = [env.step(Action.HOLD).outcome.slot_class for _ in range(5)]
    assert classes[:2] == [SlotClass.OCCUPIED, SlotClass.OCCUPIED]
    assert classes[2:4] == [SlotClass.FREE, SlotClass.FREE]
    assert classes[4] == SlotClass.JAMMED


def test_trace_records_every_slot(d1_config, rng):
    env = ChannelAccessEnv(d1_config, rng, record_trace=True)
    env.reset()
    for action in [Action.HOLD, Action.DISPATCH, Action.HOLD]:
        env.step(action)
    assert [r.slot for r in env.trace] == [0, 1, 2]
    assert env.trace[1].iud_action == Action.DISPATCH
    assert env.trace[0].fud_bits == (1,)
    assert [r.jam for r in env.trace] == [0, 0, 1]


def test_same_seed_same_rewards(small_config):
    actions = np.random.default_rng(0).integers(0, 2, 50)
    runs = []
    for _ in range(2):
        env = ChannelAccessEnv(small_config, np.random.default_rng(99))
        env.reset()
        runs.append([env.step(int(a)).reward for a in actions])
    assert runs[0] == runs[1]


def test_discrete_key_ignores_rates():
    layout = StateLayout(window=2, num_uds=2)
    statuses = [UdStatus.SUCCESS, UdStatus.IDLE]
    idle = layout.idle_slot().ravel()
    a = np.concatenate([idle, layout.encode_slot([1, 0], statuses, [3.2, 0.0]).ravel()])
    b = np.concatenate([idle, layout.encode_slot([1, 0], statuses, [1.1, 0.0]).ravel()])
    assert layout.discrete_key(a) == layout.discrete_key(b)
    assert len(layout.discrete_key(a)) == 2 * 2 * (PER_UD_WIDTH - 1)


def test_rate_key_rounds_rates_to_step():
    layout = StateLayout(window=2, num_uds=2)
    statuses = [UdStatus.SUCCESS, UdStatus.IDLE]
    idle = layout.idle_slot().ravel()

    def state(rate):
        slot = layout.encode_slot([1, 0], statuses, [rate, 0.0]).ravel()
        return np.concatenate([idle, slot])

    key = layout.rate_key(state(3.21), step=0.1)
    assert key == layout.rate_key(state(3.19), step=0.1)
    assert key != layout.rate_key(state(3.39), step=0.1)
    discrete = layout.discrete_key(state(3.21))
    assert key[: len(discrete)] == discrete
    assert key[-4:] == (0, 0, 32, 0)
