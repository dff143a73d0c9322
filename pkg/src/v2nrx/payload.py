"""
Multi-modal payload codecs, transport-block framing and reconstruction metrics.

Only payload bodies travel through the link; headers and sizes are kept
out-of-band in :class:`PayloadMeta`.

Formats
-------
image   binary PGM (P5) or PPM (P6), maxval <= 255
audio   canonical 44-byte-header WAV, PCM16 mono
gps     text lines ``lat,lon`` in decimal degrees; sent as two big-endian
        int32 values scaled by 1e7 and reconstructed with 7 decimals
lidar   little-endian float32 ``x, y, z`` triples
radar   little-endian float32 interleaved I/Q samples
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FramingError, MetricError, PayloadFormatError

MODALITIES = ("image", "audio", "gps", "lidar", "radar")
METRIC_NAME = {"image": "psnr", "audio": "mse", "gps": "rmse", "lidar": "mse", "radar": "mse"}
GPS_SCALE = 10_000_000


@dataclass
class PayloadMeta:
    modality: str
    header: bytes = b""
    info: dict = field(default_factory=dict)
    body_len: int = 0

    @property
    def num_bits(self) -> int:
        return 8 * self.body_len


@dataclass
class TransportBlocks:
    blocks: np.ndarray  # (num_blocks, k) uint8
    pad_bits: int


# -- format parsing ------------------------------------------------------------

_PNM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _parse_pnm(data: bytes):
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise PayloadFormatError(0, "expected binary PGM (P5) or PPM (P6) magic")
    pos = 2
    vals = []
    for what in ("width", "height", "maxval"):
        m = _PNM_TOKEN.match(data, pos)
        if m is None or not m.group(1).isdigit():
            raise PayloadFormatError(pos, f"expected {what}")
        vals.append(int(m.group(1)))
        pos = m.end()
    width, height, maxval = vals
    if not 0 < maxval <= 255:
        raise PayloadFormatError(pos, f"only 8-bit images supported (maxval={maxval})")
    if pos >= len(data) or data[pos : pos + 1] not in (b" ", b"\n", b"\r", b"\t"):
        raise PayloadFormatError(pos, "expected single whitespace before raster")
    pos += 1
    channels = 1 if magic == b"P5" else 3
    size = width * height * channels
    if len(data) - pos != size:
        raise PayloadFormatError(pos, f"raster has {len(data) - pos} bytes, header implies {size}")
    info = {"width": width, "height": height, "channels": channels, "maxval": maxval}
    return data[:pos], info


def _parse_wav(data: bytes):
    if len(data) < 44:
        raise PayloadFormatError(len(data), "WAV shorter than 44-byte header")
    riff, _, wave = struct.unpack_from("<4sI4s", data, 0)
    if riff != b"RIFF" or wave != b"WAVE":
        raise PayloadFormatError(0, "missing RIFF/WAVE tags")
    fmt, fmt_len, audio_fmt, channels, rate, _, align, bits = struct.unpack_from("<4sIHHIIHH", data, 12)
    if fmt != b"fmt " or fmt_len != 16:
        raise PayloadFormatError(12, "expected canonical 16-byte fmt chunk")
    if audio_fmt != 1 or channels != 1 or bits != 16 or align != 2:
        raise PayloadFormatError(20, "only PCM16 mono supported")
    tag, size = struct.unpack_from("<4sI", data, 36)
    if tag != b"data":
        raise PayloadFormatError(36, "expected data chunk at offset 36")
    if len(data) - 44 != size or size % 2:
        raise PayloadFormatError(40, f"data chunk size {size} does not match {len(data) - 44} body bytes")
    return data[:44], {"sample_rate": rate, "num_samples": size // 2}


def _parse_gps(data: bytes):
    coords = []
    offset = 0
    for line in data.split(b"\n"):
        stripped = line.strip()
        if stripped:
            parts = stripped.split(b",")
            try:
                lat, lon = (float(p) for p in parts)
            except ValueError:
                raise PayloadFormatError(offset, "expected 'lat,lon'") from None
            if not (-90 <= lat <= 90 and -180 <= lon <= 180):
                raise PayloadFormatError(offset, "coordinate out of range")
            coords.append((lat, lon))
        offset += len(line) + 1
    return np.array(coords, dtype=np.float64).reshape(-1, 2)


# -- encode / decode -----------------------------------------------------------


def encode_payload(data: bytes, modality: str):
    """Split a file into its transmitted body bits and out-of-band metadata."""
    if modality not in MODALITIES:
        raise ValueError(f"unknown modality {modality!r}")
    header, info = b"", {}
    if modality == "image":
        header, info = _parse_pnm(data)
        body = data[len(header) :]
    elif modality == "audio":
        header, info = _parse_wav(data)
        body = data[44:]
    elif modality == "gps":
        coords = _parse_gps(data)
        fixed = np.round(coords * GPS_SCALE).astype(">i4")
        body = fixed.tobytes()
        info = {"count": len(coords)}
    else:
        width = 12 if modality == "lidar" else 8
        if len(data) % width:
            raise PayloadFormatError(len(data) - len(data) % width, f"length not a multiple of {width} bytes")
        body = data
        info = {"count": len(data) // width}
    bits = np.unpackbits(np.frombuffer(body, dtype=np.uint8))
    return bits, PayloadMeta(modality, header, info, len(body))


def decode_payload(bits, meta: PayloadMeta) -> bytes:
    """Rebuild file bytes from received body bits."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size != meta.num_bits:
        raise FramingError(f"expected {meta.num_bits} payload bits, got {bits.size}")
    body = np.packbits(bits).tobytes()
    if meta.modality == "gps":
        coords = gps_coordinates(body)
        return b"".join(b"%.7f,%.7f\n" % (lat, lon) for lat, lon in coords)
    return meta.header + body


def gps_coordinates(body: bytes) -> np.ndarray:
    """Fixed-point body to clamped ``(count, 2)`` degrees."""
    c = np.frombuffer(body, dtype=">i4").astype(np.float64).reshape(-1, 2) / GPS_SCALE
    c[:, 0] = np.clip(c[:, 0], -90, 90)
    c[:, 1] = np.clip(c[:, 1], -180, 180)
    return c


def _floats(raw: bytes) -> np.ndarray:
    with np.errstate(invalid="ignore"):  # corrupted patterns may be signalling NaNs
        v = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return np.where(np.isfinite(v), v, 0.0)


def payload_values(data: bytes, modality: str) -> np.ndarray:
    """Numeric view of a file used for metrics (corruption policy applied)."""
    if modality == "image":
        header, _ = _parse_pnm(data)
        return np.frombuffer(data[len(header) :], dtype=np.uint8).astype(np.float64)
    if modality == "audio":
        return np.frombuffer(data[44:], dtype="<i2").astype(np.float64) / 32768.0
    if modality == "gps":
        return np.round(_parse_gps(data) * GPS_SCALE) / GPS_SCALE
    return _floats(data)


# -- framing -------------------------------------------------------------------


def frame_segment(bits, k: int) -> TransportBlocks:
    if k <= 0:
        raise FramingError("block size must be positive")
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    nblk = max(1, -(-bits.size // k))
    pad = nblk * k - bits.size
    padded = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    return TransportBlocks(padded.reshape(nblk, k), pad)


def frame_reassemble(blocks, pad_bits: int) -> np.ndarray:
    flat = np.asarray(blocks, dtype=np.uint8).ravel()
    return flat[: flat.size - pad_bits] if pad_bits else flat


# -- metrics -------------------------------------------------------------------


def mse(a, b) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise MetricError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2)) if a.size else 0.0


def rmse(a, b) -> float:
    return float(np.sqrt(mse(a, b)))


def psnr(original, reconstructed, max_value: float = 255.0) -> float:
    err = mse(original, reconstructed)
    if err == 0:
        return float("inf")
    return float(10 * np.log10(max_value**2 / err))


def payload_metric(original: bytes, reconstructed: bytes, modality: str):
    """``(metric_name, value)`` comparing two files of one modality."""
    a = payload_values(original, modality)
    b = payload_values(reconstructed, modality)
    name = METRIC_NAME[modality]
    if name == "psnr":
        return name, psnr(a, b, 255.0)
    if name == "rmse":
        return name, rmse(a, b)
    return name, mse(a, b)
