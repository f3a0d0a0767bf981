"""
Physical layer of the slotted uplink.

Draws Rayleigh channel vectors, transmit powers and noise, and evaluates the
matched-filter SINR and the resulting per-slot achievable rate of every UD.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from errors import ConfigurationError

from .models import ChannelRealization, ChannelRedraw, NetworkConfig, PowerProfile


def dbm_to_linear(p_dbm: float) -> float:
    """Convert a power in dBm to the linear milliwatt scale."""
    return float(10.0 ** (p_dbm / 10.0))


def linear_to_dbm(p_linear: float) -> float:
    if p_linear <= 0:
        raise ValueError(f"linear power must be positive, got {p_linear}")
    return float(10.0 * np.log10(p_linear))


def _complex_gaussian(rng: np.random.Generator, shape: Tuple[int, int]) -> np.ndarray:
    # CN(0, 1): real and imaginary parts each carry half the variance
    scale = 1.0 / np.sqrt(2.0)
    return rng.normal(0.0, scale, shape) + 1j * rng.normal(0.0, scale, shape)


def sample_channels(
    config: NetworkConfig, rng: np.random.Generator
) -> ChannelRealization:
    """
    Draw one channel realization for the whole network.

    Args:
        config: Scenario providing K, N and M
        rng: Caller-owned seeded generator

    Returns:
        ChannelRealization with H (K x N), G (K x M) and a linear noise variance
    """
    k, n, m = config.num_antennas, config.num_uds, config.num_jammers
    if k <= 0 or n <= 0 or m < 0:
        raise ConfigurationError(
            f"invalid network dimensions K={k}, N={n}, M={m}"
        )

    H = _complex_gaussian(rng, (k, n))
    G = _complex_gaussian(rng, (k, m))
    noise_dbm = rng.uniform(config.powers.noise_dbm_low, config.powers.noise_dbm_high)
    return ChannelRealization(H=H, G=G, noise_var=dbm_to_linear(noise_dbm))


def sample_powers(config: NetworkConfig, rng: np.random.Generator) -> PowerProfile:
    """Draw every UD and jammer transmit power uniformly in dBm, returned linear."""
    ranges = config.powers
    p_ud_dbm = rng.uniform(ranges.ud_dbm_low, ranges.ud_dbm_high, config.num_uds)
    p_jam_dbm = rng.uniform(ranges.jam_dbm_low, ranges.jam_dbm_high, config.num_jammers)
    return PowerProfile(
        p_ud=np.power(10.0, p_ud_dbm / 10.0),
        p_jam=np.power(10.0, p_jam_dbm / 10.0),
    )


def _check_vectors(
    ch: ChannelRealization, pw: PowerProfile, a: np.ndarray, j: np.ndarray
) -> None:
    if len(a) != ch.num_uds or len(pw.p_ud) != ch.num_uds:
        raise ValueError(
            f"transmission vector/powers must have length {ch.num_uds}, "
            f"got {len(a)} and {len(pw.p_ud)}"
        )
    if len(j) != ch.num_jammers or len(pw.p_jam) != ch.num_jammers:
        raise ValueError(
            f"jammer vector/powers must have length {ch.num_jammers}, "
            f"got {len(j)} and {len(pw.p_jam)}"
        )


def compute_sinr_mf(
    ch: ChannelRealization,
    pw: PowerProfile,
    a: np.ndarray,
    j: np.ndarray,
    n: int,
    ideal_sic: bool = False,
) -> float:
    """
    Matched-filter SINR of UD n.

    The co-UD interference term is kept unless ideal_sic is set, in which
    case successive cancellation is assumed to remove it entirely.

    Args:
        ch: Channel realization for the slot
        pw: Linear transmit powers
        a: 0/1 transmission status of every UD
        j: 0/1 activity of every jammer
        n: Index of the UD of interest

    Returns:
        The SINR (linear); 0.0 when UD n is silent
    """
    if not 0 <= n < ch.num_uds:
        raise IndexError(f"UD index {n} out of range [0, {ch.num_uds})")
    _check_vectors(ch, pw, a, j)
    if not a[n]:
        return 0.0

    h = ch.H[:, n]
    gain = float(np.real(np.vdot(h, h)))
    signal = pw.p_ud[n] * gain**2

    interference = 0.0
    if not ideal_sic:
        for other in range(ch.num_uds):
            if other != n and a[other]:
                interference += pw.p_ud[other] * abs(np.vdot(h, ch.H[:, other])) ** 2

    jamming = 0.0
    for m in range(ch.num_jammers):
        if j[m]:
            jamming += pw.p_jam[m] * abs(np.vdot(h, ch.G[:, m])) ** 2

    return float(signal / (interference + jamming + gain * ch.noise_var))


def compute_sinr_all(
    ch: ChannelRealization,
    pw: PowerProfile,
    a: np.ndarray,
    j: np.ndarray,
    ideal_sic: bool = False,
) -> np.ndarray:
    """Vectorised form of compute_sinr_mf for every UD at once."""
    _check_vectors(ch, pw, a, j)
    a = np.asarray(a, dtype=float)
    j = np.asarray(j, dtype=float)

    gram = np.abs(ch.H.conj().T @ ch.H) ** 2  # |h_n^H h_n'|^2
    gains = np.real(np.einsum("kn,kn->n", ch.H.conj(), ch.H))

    active_power = a * pw.p_ud
    if ideal_sic:
        interference = np.zeros(ch.num_uds)
    else:
        cross = gram.copy()
        np.fill_diagonal(cross, 0.0)
        interference = cross @ active_power

    if ch.num_jammers:
        jam_gram = np.abs(ch.H.conj().T @ ch.G) ** 2
        jamming = jam_gram @ (j * pw.p_jam)
    else:
        jamming = np.zeros(ch.num_uds)

    signal = active_power * gains**2
    return signal / (interference + jamming + gains * ch.noise_var)


def rate_per_slot(gamma: float) -> float:
    """Achievable rate in bits per slot per hertz for SINR gamma."""
    if gamma < 0:
        raise ValueError(f"SINR must be non-negative, got {gamma}")
    return float(np.log2(1.0 + gamma))


def frame_rate(
    slot_rates: np.ndarray, shape: Optional[Tuple[int, int]] = None
) -> float:
    """Sum of per-slot rates over every UD and every slot of a frame."""
    slot_rates = np.asarray(slot_rates, dtype=float)
    if slot_rates.ndim != 2:
        raise ValueError(
            f"slot_rates must be a UD x slot matrix, got {slot_rates.ndim}-D"
        )
    if shape is not None and slot_rates.shape != shape:
        raise ValueError(f"slot_rates shape {slot_rates.shape} does not match {shape}")
    return float(slot_rates.sum())


class ChannelModel:
    """
    Per-run owner of the PHY draws.

    Hands out a fresh (channels, powers) pair every slot, or one pair per
    frame when the config asks for frame-level redraws.
    """

    def __init__(
        self,
        config: NetworkConfig,
        rng: np.random.Generator,
        logger: Optional[logging.Logger] = None,
    ):
        self.config = config
        self.rng = rng
        self.logger = logger or logging.getLogger("ChannelModel")
        self._cached: Optional[Tuple[ChannelRealization, PowerProfile]] = None

    def draw(self, new_frame: bool) -> Tuple[ChannelRealization, PowerProfile]:
        if (
            self.config.channel_redraw == ChannelRedraw.FRAME
            and not new_frame
            and self._cached is not None
        ):
            return self._cached

        channels = sample_channels(self.config, self.rng)
        powers = sample_powers(self.config, self.rng)
        self._cached = (channels, powers)
        self.logger.debug(
            f"Drew channels: mean |h|^2 "
            f"{float(np.mean(np.sum(np.abs(channels.H) ** 2, axis=0))):.3f}, "
            f"noise {channels.noise_var:.3e}, "
            f"max UD power {float(powers.p_ud.max()):.3e}"
        )
        return self._cached

    def sinr(
        self,
        channels: ChannelRealization,
        powers: PowerProfile,
        transmitting: np.ndarray,
        jamming: np.ndarray,
    ) -> np.ndarray:
        return compute_sinr_all(
            channels, powers, transmitting, jamming, ideal_sic=self.config.ideal_sic
        )
