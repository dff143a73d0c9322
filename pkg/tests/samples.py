"""Small synthetic payload files, one per modality."""

import struct

import numpy as np


def pgm(width=8, height=8, seed=0, comment=False):
    raster = np.random.default_rng(seed).integers(0, 256, size=width * height, dtype=np.uint8)
    head = b"P5\n" + (b"# synthetic\n" if comment else b"") + b"%d %d\n255\n" % (width, height)
    return head + raster.tobytes()


def ppm(width=6, height=4, seed=0):
    raster = np.random.default_rng(seed).integers(0, 256, size=width * height * 3, dtype=np.uint8)
    return b"P6 %d %d 255\n" % (width, height) + raster.tobytes()


def wav(num_samples=400, rate=16000, seed=0):
    t = np.arange(num_samples) / rate
    rng = np.random.default_rng(seed)
    pcm = (0.4 * np.sin(2 * np.pi * 440 * t) + 0.05 * rng.standard_normal(num_samples)) * 32767
    body = np.clip(pcm, -32768, 32767).astype("<i2").tobytes()
    header = struct.pack("<4sI4s4sIHHIIHH4sI", b"RIFF", 36 + len(body), b"WAVE", b"fmt ", 16, 1, 1,
                         rate, rate * 2, 2, 16, b"data", len(body))
    return header + body


def gps(count=20, seed=0):
    rng = np.random.default_rng(seed)
    lat = 48.85 + 0.01 * rng.random(count)
    lon = 2.35 + 0.01 * rng.random(count)
    return b"".join(b"%.7f,%.7f\n" % (a, b) for a, b in zip(lat, lon))


def lidar(points=100, seed=0):
    return (np.random.default_rng(seed).standard_normal((points, 3)) * 10).astype("<f4").tobytes()


def radar(samples=200, seed=0):
    rng = np.random.default_rng(seed)
    iq = np.exp(2j * np.pi * 0.05 * np.arange(samples)) + 0.1 * rng.standard_normal(samples)
    return np.column_stack([iq.real, iq.imag]).astype("<f4").tobytes()


def all_modalities(seed=0):
    return {"image": pgm(seed=seed), "audio": wav(seed=seed), "gps": gps(seed=seed),
            "lidar": lidar(seed=seed), "radar": radar(seed=seed)}
