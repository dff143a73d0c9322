"""
SIMO Rayleigh tapped-delay-line channel with Jakes Doppler.

This is a stand-in for a geometric 3GPP UMa model: six exponentially
decaying taps, all shorter than the cyclic prefix, each evolving in time
with the classical Jakes spectrum. Per-RE frequency responses are the DFT
of the tap gains at each OFDM symbol.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .ofdm import FrameConfig

SPEED_OF_LIGHT = 299792458.0
DEFAULT_TAP_DELAYS = (0, 1, 2, 3, 5, 8)
NUM_SINUSOIDS = 32


def exponential_profile(delays, decay: float = 3.0) -> tuple:
    p = np.exp(-np.asarray(delays, dtype=float) / decay)
    return tuple(p / p.sum())


def kmh_to_ms(kmh: float) -> float:
    return kmh / 3.6


@dataclass(frozen=True)
class ChannelConfig:
    num_rx: int = 2
    carrier_freq: float = 28e9
    speed: float = 25.0  # m/s
    tap_delays: tuple = DEFAULT_TAP_DELAYS
    tap_powers: tuple | None = None
    doppler_model: str = "jakes"
    block_fading: bool = False

    def __post_init__(self):
        object.__setattr__(self, "tap_delays", tuple(int(d) for d in self.tap_delays))
        if self.tap_powers is None:
            object.__setattr__(self, "tap_powers", exponential_profile(self.tap_delays))
        else:
            object.__setattr__(self, "tap_powers", tuple(float(p) for p in self.tap_powers))
        if len(self.tap_powers) != len(self.tap_delays):
            raise ConfigError("tap_delays and tap_powers differ in length")
        if abs(sum(self.tap_powers) - 1.0) > 1e-9:
            raise ConfigError(f"tap powers must sum to 1, got {sum(self.tap_powers)}")
        if self.doppler_model not in ("jakes", "static"):
            raise ConfigError(f"unknown doppler model {self.doppler_model!r}")
        if self.num_rx < 1 or self.speed < 0:
            raise ConfigError("num_rx must be >= 1 and speed >= 0")


@dataclass
class ChannelRealization:
    freq_response: np.ndarray  # (num_rx, num_symbols, fft_size)


def doppler_freq(speed: float, carrier: float) -> float:
    """Maximum Doppler shift in Hz for a speed in m/s."""
    if speed < 0:
        raise ConfigError("speed must be non-negative")
    return speed * carrier / SPEED_OF_LIGHT


def jakes_process(rng: np.random.Generator, shape, times, fd: float, num_sinusoids: int = NUM_SINUSOIDS) -> np.ndarray:
    """Unit-power complex fading processes sampled at ``times``.

    Each process is ``sum_n c_n exp(j 2 pi fd t cos(a_n))`` with complex
    Gaussian weights ``c_n ~ CN(0, 1/M)`` (Rayleigh amplitude, uniform phase)
    and arrival angles ``a_n = (2 pi n + theta) / M`` with a random offset
    ``theta``. Marginals are exactly CN(0, 1) and the ensemble autocorrelation
    is ``J0(2 pi fd tau)``.

    Returns an array of shape ``shape + (len(times),)``.
    """
    shape = tuple(shape)
    M = num_sinusoids
    times = np.asarray(times, dtype=float)
    theta = rng.uniform(-np.pi, np.pi, size=shape + (1,))
    alpha = (2 * np.pi * np.arange(M) + theta) / M
    c = (rng.standard_normal(shape + (M,)) + 1j * rng.standard_normal(shape + (M,))) / np.sqrt(2 * M)
    w = 2 * np.pi * fd * np.cos(alpha)
    return np.einsum("...m,...mt->...t", c, np.exp(1j * w[..., None] * times))


def draw_channels(cfg: ChannelConfig, frame: FrameConfig, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` independent realizations, shape ``(count, num_rx, S, F)``."""
    if max(cfg.tap_delays) >= max(frame.cp_len, 1):
        raise ConfigError("longest tap delay must be shorter than the cyclic prefix")
    fd = 0.0 if cfg.doppler_model == "static" else doppler_freq(cfg.speed, cfg.carrier_freq)
    if cfg.block_fading:
        times = np.zeros(1)
    else:
        times = np.arange(frame.num_symbols) * frame.symbol_duration
    L = len(cfg.tap_delays)
    g = jakes_process(rng, (count, cfg.num_rx, L), times, fd)
    g = g * np.sqrt(np.asarray(cfg.tap_powers))[:, None]
    if cfg.block_fading:
        g = np.repeat(g, frame.num_symbols, axis=-1)
    k = np.arange(frame.fft_size)
    steer = np.exp(-2j * np.pi * np.outer(cfg.tap_delays, k) / frame.fft_size)  # (L, F)
    return np.einsum("carl,lf->carf", g.transpose(0, 1, 3, 2), steer)


def generate_channel(cfg: ChannelConfig, frame: FrameConfig, seed) -> ChannelRealization:
    rng = np.random.default_rng(seed)
    return ChannelRealization(draw_channels(cfg, frame, rng, 1)[0])


def ebno_to_noise_var(ebno_db: float, m: int, code_rate: float) -> float:
    """Noise variance per receive antenna for unit-energy symbols."""
    if m < 1 or not 0 < code_rate <= 1:
        raise ConfigError("need m >= 1 and 0 < code_rate <= 1")
    return 1.0 / (10 ** (ebno_db / 10) * code_rate * m)
