"""
OFDM resource grid, (I)FFT modulation with cyclic prefix and the
frequency-domain per-RE channel model ``y = H x + n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ConfigError, FramingError, InvalidNoiseError
from .mapping import constellation


@dataclass(frozen=True)
class FrameConfig:
    num_symbols: int = 14
    fft_size: int = 128
    subcarrier_spacing: float = 240e3
    cp_len: int = 16
    pilot_symbol_indices: tuple = (2, 11)
    bits_per_symbol: int = 6
    code_rate: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "pilot_symbol_indices", tuple(sorted(set(self.pilot_symbol_indices))))
        if any(p < 0 or p >= self.num_symbols for p in self.pilot_symbol_indices):
            raise ConfigError("pilot symbol index outside the frame")
        if not 0 <= self.cp_len < self.fft_size:
            raise ConfigError("cp_len must be smaller than fft_size")
        if self.bits_per_symbol not in (2, 4, 6):
            raise ConfigError(f"unsupported bits_per_symbol {self.bits_per_symbol}")

    @property
    def order(self) -> int:
        return 2**self.bits_per_symbol

    @property
    def pilot_mask(self) -> np.ndarray:
        mask = np.zeros((self.num_symbols, self.fft_size), dtype=bool)
        mask[list(self.pilot_symbol_indices), :] = True
        return mask

    @property
    def num_data_re(self) -> int:
        return (self.num_symbols - len(self.pilot_symbol_indices)) * self.fft_size

    @property
    def data_bits(self) -> int:
        return self.num_data_re * self.bits_per_symbol

    @property
    def symbol_duration(self) -> float:
        """OFDM symbol duration including the cyclic prefix, in seconds."""
        return (self.fft_size + self.cp_len) / (self.fft_size * self.subcarrier_spacing)


@dataclass
class ResourceGrid:
    symbols: np.ndarray
    pilot_mask: np.ndarray
    pilot_values: np.ndarray = field(repr=False)

    def data(self) -> np.ndarray:
        return self.symbols[~self.pilot_mask]


@dataclass
class ReceivedGrid:
    samples: np.ndarray  # (num_rx, num_symbols, fft_size)
    noise_var: float

    @property
    def num_rx(self) -> int:
        return self.samples.shape[0]


def pilot_values(cfg: FrameConfig, pilot_seed: int) -> np.ndarray:
    """QPSK pilots, shape ``(len(pilot_symbol_indices), fft_size)``."""
    rng = np.random.default_rng(pilot_seed)
    labels = rng.integers(0, 4, size=(len(cfg.pilot_symbol_indices), cfg.fft_size))
    return constellation(4)[labels]


def build_grid(data_symbols, cfg: FrameConfig, pilot_seed: int) -> ResourceGrid:
    """Place pilots on whole OFDM symbols and fill the rest row-major."""
    data_symbols = np.asarray(data_symbols, dtype=np.complex128).ravel()
    if data_symbols.size != cfg.num_data_re:
        raise CapacityError(cfg.num_data_re, data_symbols.size)
    mask = cfg.pilot_mask
    grid = np.empty(mask.shape, dtype=np.complex128)
    pv = pilot_values(cfg, pilot_seed)
    grid[list(cfg.pilot_symbol_indices)] = pv
    grid[~mask] = data_symbols
    return ResourceGrid(grid, mask, pv)


def ofdm_modulate(grid, cfg: FrameConfig) -> np.ndarray:
    """Unitary IDFT per OFDM symbol, then prepend the cyclic prefix."""
    X = grid.symbols if isinstance(grid, ResourceGrid) else np.asarray(grid)
    if X.shape != (cfg.num_symbols, cfg.fft_size):
        raise FramingError(f"grid shape {X.shape} does not match frame")
    x = np.fft.ifft(X, axis=-1, norm="ortho")
    x = np.concatenate([x[:, cfg.fft_size - cfg.cp_len :], x], axis=-1)
    return x.ravel()


def ofdm_demodulate(samples, cfg: FrameConfig) -> np.ndarray:
    """Strip the cyclic prefix and apply the unitary DFT per symbol.

    Accepts ``(L,)`` or ``(num_rx, L)`` sample arrays.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    block = cfg.fft_size + cfg.cp_len
    if samples.shape[-1] % block:
        raise FramingError(f"{samples.shape[-1]} samples is not a multiple of {block}")
    blocks = samples.reshape(samples.shape[:-1] + (-1, block))[..., cfg.cp_len :]
    return np.fft.fft(blocks, axis=-1, norm="ortho")


def apply_channel_freq(grid, chan, noise_var: float, noise_seed) -> ReceivedGrid:
    """Per-RE ``y[a,s,f] = H[a,s,f] x[s,f] + n`` with CN(0, noise_var) noise."""
    if noise_var < 0:
        raise InvalidNoiseError("noise variance must be >= 0")
    X = grid.symbols if isinstance(grid, ResourceGrid) else np.asarray(grid)
    H = np.asarray(getattr(chan, "freq_response", chan), dtype=np.complex128)
    if H.shape[-2:] != X.shape:
        raise FramingError(f"channel shape {H.shape} does not match grid {X.shape}")
    y = H * X
    if noise_var > 0:
        rng = np.random.default_rng(noise_seed)
        scale = np.sqrt(noise_var / 2)
        y = y + scale * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return ReceivedGrid(y, float(noise_var))
