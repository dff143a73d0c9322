"""
Conventional receiver: LS pilot estimation, linear time interpolation,
per-RE MMSE SIMO combining and soft demapping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SingularChannelError
from .mapping import qam_demap_llr
from .ofdm import FrameConfig, ReceivedGrid, pilot_values

SINGULAR_THRESHOLD = 1e-12
MIN_EFFECTIVE_NOISE = 1e-10


@dataclass
class ChannelEstimate:
    h: np.ndarray  # (num_rx, num_symbols, fft_size)
    source_mask: np.ndarray  # True where the value comes straight from a pilot


@dataclass
class EqualizedGrid:
    x_hat: np.ndarray
    noise_eff: np.ndarray
    erased: np.ndarray


def ls_estimate(rx: ReceivedGrid, pilots: np.ndarray, pilot_mask: np.ndarray) -> ChannelEstimate:
    """Per-RE least-squares estimate ``y / x_p`` on pilot REs, zeros elsewhere.

    ``pilots`` holds the pilot symbols in row-major order of ``pilot_mask``
    (any shape whose size equals the number of pilot REs).
    """
    pilots = np.asarray(pilots, dtype=np.complex128).ravel()
    if np.any(np.abs(pilots) == 0):
        raise SingularChannelError("pilot symbols must be nonzero")
    h = np.zeros(rx.samples.shape, dtype=np.complex128)
    h[:, pilot_mask] = rx.samples[:, pilot_mask] / pilots
    return ChannelEstimate(h, pilot_mask.copy())


def interpolate_channel(est: ChannelEstimate, cfg: FrameConfig) -> ChannelEstimate:
    """Linear interpolation across OFDM symbols; flat extrapolation at the edges."""
    pidx = np.asarray(cfg.pilot_symbol_indices)
    if pidx.size == 0:
        raise ConfigError("channel interpolation needs at least one pilot symbol")
    hp = est.h[:, pidx, :]  # (A, P, F)
    if pidx.size == 1:
        h = np.repeat(hp, cfg.num_symbols, axis=1)
    else:
        s = np.arange(cfg.num_symbols)
        pos = np.clip(np.searchsorted(pidx, s, side="right") - 1, 0, pidx.size - 2)
        lo, hi = pidx[pos], pidx[pos + 1]
        w = np.clip((s - lo) / (hi - lo), 0.0, 1.0)[None, :, None]
        h = (1 - w) * hp[:, pos, :] + w * hp[:, pos + 1, :]
    return ChannelEstimate(h, est.source_mask)


def mmse_weights(h, noise_var: float) -> np.ndarray:
    """Raw MMSE combiner ``(h^H h + s2)^-1 h^H`` for a single-stream SIMO link.

    ``h`` has the antenna axis first; the result has the same shape.
    """
    h = np.asarray(h, dtype=np.complex128)
    gain = np.sum(np.abs(h) ** 2, axis=0)
    return np.conj(h) / (gain + noise_var)


def _combine(y, h, noise_var):
    gain = np.sum(np.abs(h) ** 2, axis=0)
    erased = gain < SINGULAR_THRESHOLD
    safe = np.where(erased, 1.0, gain)
    # bias-corrected MMSE output; equals the raw output scaled by (g + s2) / g
    x_hat = np.sum(np.conj(h) * y, axis=0) / safe
    noise_eff = noise_var / safe
    return np.where(erased, 0.0, x_hat), noise_eff, erased


def mmse_equalize(y, h, noise_var: float):
    """Bias-corrected MMSE estimate and its effective noise variance.

    Parameters
    ----------
    y, h : array_like, shape (num_rx, ...)
        Received samples and channel estimates, antenna axis first.
    noise_var : float

    Returns
    -------
    x_hat, noise_eff : ndarray
    """
    if noise_var < 0:
        raise ValueError("noise variance must be >= 0")
    y = np.asarray(y, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    x_hat, noise_eff, erased = _combine(y, h, noise_var)
    if np.any(erased):
        raise SingularChannelError("channel vector norm below threshold")
    return x_hat, noise_eff


def equalize_grid(rx: ReceivedGrid, h: np.ndarray, data_mask: np.ndarray) -> EqualizedGrid:
    x_hat, noise_eff, erased = _combine(rx.samples[:, data_mask], h[:, data_mask], rx.noise_var)
    return EqualizedGrid(x_hat, np.maximum(noise_eff, MIN_EFFECTIVE_NOISE), erased)


def baseline_receive(
    rx: ReceivedGrid,
    cfg: FrameConfig,
    pilot_seed: int,
    true_channel=None,
    mode: str = "exact",
) -> np.ndarray:
    """Full conventional chain; returns LLRs of shape ``(num_data_re, m)``.

    Passing ``true_channel`` (frequency response array or realization)
    replaces the LS estimate with perfect CSI.
    """
    mask = cfg.pilot_mask
    if true_channel is None:
        est = ls_estimate(rx, pilot_values(cfg, pilot_seed), mask)
        h = interpolate_channel(est, cfg).h
    else:
        h = np.asarray(getattr(true_channel, "freq_response", true_channel))
    eq = equalize_grid(rx, h, ~mask)
    llr = qam_demap_llr(eq.x_hat, eq.noise_eff, cfg.order, mode)
    llr[eq.erased] = 0.0
    return llr
