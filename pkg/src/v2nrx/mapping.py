"""
Gray-mapped square QAM and soft demapping.

Bit labels use the 3GPP construction: bit ``b0`` is the most significant bit
of the integer label, even-indexed bits drive the in-phase axis and
odd-indexed bits the quadrature axis.

LLRs are ``log P(b=1|x) / P(b=0|x)`` and clamped to ``[-LLR_CLAMP, LLR_CLAMP]``.
"""

from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .errors import FramingError, InvalidNoiseError

LLR_CLAMP = 40.0
SUPPORTED_ORDERS = (4, 16, 64)


def bits_per_symbol(order: int) -> int:
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported constellation order {order}")
    return int(np.log2(order))


def _label_bits(order: int) -> np.ndarray:
    """(order, m) matrix; row ``i`` is the MSB-first bit label of integer ``i``."""
    m = bits_per_symbol(order)
    labels = np.arange(order)[:, None]
    return ((labels >> np.arange(m - 1, -1, -1)) & 1).astype(np.uint8)


def _gray_points(bits: np.ndarray) -> np.ndarray:
    s = 1.0 - 2.0 * bits.astype(np.float64)
    m = bits.shape[-1]
    if m == 2:
        return (s[..., 0] + 1j * s[..., 1]) / np.sqrt(2)
    if m == 4:
        re = s[..., 0] * (2 - s[..., 2])
        im = s[..., 1] * (2 - s[..., 3])
        return (re + 1j * im) / np.sqrt(10)
    re = s[..., 0] * (4 - s[..., 2] * (2 - s[..., 4]))
    im = s[..., 1] * (4 - s[..., 3] * (2 - s[..., 5]))
    return (re + 1j * im) / np.sqrt(42)


@lru_cache(maxsize=None)
def constellation(order: int) -> np.ndarray:
    """Constellation points indexed by integer label (read-only array)."""
    pts = _gray_points(_label_bits(order))
    pts.setflags(write=False)
    return pts


@lru_cache(maxsize=None)
def label_bits(order: int) -> np.ndarray:
    b = _label_bits(order)
    b.setflags(write=False)
    return b


def qam_map(bits, order: int) -> np.ndarray:
    """Map a flat bit array to unit-energy QAM symbols."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    m = bits_per_symbol(order)
    if bits.size % m:
        raise FramingError(f"{bits.size} bits is not a multiple of {m} bits per symbol")
    return _gray_points(bits.reshape(-1, m))


def qam_demap_llr(x_hat, noise_var, order: int, mode: str = "exact") -> np.ndarray:
    """Per-bit LLRs for equalized symbols.

    Parameters
    ----------
    x_hat : array_like of complex, shape (N,)
    noise_var : float or array_like, shape (N,)
        Effective post-equalization noise variance, strictly positive.
    order : int
        4, 16 or 64.
    mode : {"exact", "max-log"}

    Returns
    -------
    ndarray, shape (N, m)
    """
    x_hat = np.atleast_1d(np.asarray(x_hat, dtype=np.complex128))
    noise_var = np.broadcast_to(np.asarray(noise_var, dtype=np.float64), x_hat.shape)
    if not (noise_var > 0).all():
        raise InvalidNoiseError("effective noise variance must be > 0")
    pts = constellation(order)
    lbl = label_bits(order).astype(bool)
    metric = -np.abs(x_hat[:, None] - pts[None, :]) ** 2 / noise_var[:, None]

    m = lbl.shape[1]
    out = np.empty((x_hat.size, m))
    for i in range(m):
        one, zero = metric[:, lbl[:, i]], metric[:, ~lbl[:, i]]
        if mode == "exact":
            out[:, i] = logsumexp(one, axis=1) - logsumexp(zero, axis=1)
        elif mode == "max-log":
            out[:, i] = one.max(axis=1) - zero.max(axis=1)
        else:
            raise ValueError(f"unknown demapping mode {mode!r}")
    return np.clip(out, -LLR_CLAMP, LLR_CLAMP)


def hard_decision(llrs) -> np.ndarray:
    """Bit 1 iff LLR > 0; exact zeros decide 0."""
    return (np.asarray(llrs) > 0).astype(np.uint8)
