"""
Built-in scenarios addressable by name.

D1 is fully scripted so its optimal policy can be written down by hand;
S1-S3 are the randomised networks of the frame-size sweep.
"""

from typing import Any, Dict, Optional

from pydantic import ValidationError

from errors import ConfigurationError

from .models import NetworkConfig, RewardMode

# Sparse fUD traffic and one jammed slot in five leave nearly every schedule
# with a free unjammed slot. The tabular baseline keys on rates at 0.1 b/s/Hz.
_SWEEP_BASE: Dict[str, Any] = {
    "num_uds": 4,
    "num_jammers": 1,
    "num_antennas": 4,
    "omega": 0.1,
    "jam_period": 5,
    "jam_quiet": 4,
    "num_frames": 400,
    "reward_mode": RewardMode.ATTEMPTED,
    "learning": {"tabular_rate_step": 0.1},
}

SCENARIOS: Dict[str, Dict[str, Any]] = {
    # one fUD, exactly one free unjammed slot per frame (slot 1)
    "D1": {
        "num_uds": 2,
        "num_jammers": 1,
        "num_antennas": 4,
        "slots_per_frame": 5,
        "num_frames": 400,
        "jam_period": 5,
        "jam_quiet": 2,
        "fixed_fud_bits": [[1, 0, 0, 1, 0]],
        "reward_mode": RewardMode.ATTEMPTED,
    },
    "S1": {**_SWEEP_BASE, "slots_per_frame": 5},
    "S2": {**_SWEEP_BASE, "slots_per_frame": 10},
    "S3": {**_SWEEP_BASE, "slots_per_frame": 20},
}


def scenario_names() -> list[str]:
    return sorted(SCENARIOS)


def get_scenario(
    name: str, overrides: Optional[Dict[str, Any]] = None
) -> NetworkConfig:
    """
    Build the NetworkConfig of a named scenario.

    Args:
        name: Preset name (case-insensitive)
        overrides: Field values applied on top of the preset; nested
            sections (powers, learning, units) merge key by key

    Returns:
        Validated NetworkConfig
    """
    key = name.upper()
    if key not in SCENARIOS:
        raise ConfigurationError(
            f"unknown scenario '{name}', expected one of {', '.join(scenario_names())}"
        )

    values: Dict[str, Any] = dict(SCENARIOS[key])
    for field, value in (overrides or {}).items():
        if isinstance(value, dict) and isinstance(values.get(field), dict):
            values[field] = {**values[field], **value}
        else:
            values[field] = value

    try:
        return NetworkConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigurationError(
            f"invalid configuration for scenario {key}: {e}"
        ) from e
