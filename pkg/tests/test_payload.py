import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from v2nrx.errors import FramingError, MetricError, PayloadFormatError
from v2nrx.payload import (
    GPS_SCALE,
    METRIC_NAME,
    decode_payload,
    encode_payload,
    frame_reassemble,
    frame_segment,
    gps_coordinates,
    mse,
    payload_metric,
    payload_values,
    psnr,
    rmse,
)

from . import samples


@pytest.mark.parametrize("modality, data", list(samples.all_modalities().items())
                         + [("image", samples.ppm()), ("image", samples.pgm(comment=True))])
def test_lossless_roundtrip(modality, data):
    bits, meta = encode_payload(data, modality)
    assert bits.dtype == np.uint8 and set(np.unique(bits)) <= {0, 1}
    assert decode_payload(bits, meta) == data


def test_bit_counts():
    assert encode_payload(samples.pgm(8, 8), "image")[0].size == 512
    assert encode_payload(samples.lidar(100), "lidar")[0].size == 9600
    assert encode_payload(b"48.8566000,2.3522000\n", "gps")[0].size == 64


def test_msb_first():
    bits, _ = encode_payload(b"P5 1 1 255\n\x80", "image")
    assert bits.tolist() == [1, 0, 0, 0, 0, 0, 0, 0]


def test_headers_stay_out_of_band():
    data = samples.wav(10)
    bits, meta = encode_payload(data, "audio")
    assert bits.size == 8 * 20 and meta.header == data[:44]
    assert meta.info == {"sample_rate": 16000, "num_samples": 10}


def test_gps_fixed_point_encoding():
    bits, _ = encode_payload(b"48.8566000,2.3522000\n", "gps")
    words = np.packbits(bits).view(">i4")
    assert words.tolist() == [488566000, 23522000]


def test_gps_low_bit_flip_is_local():
    bits, meta = encode_payload(b"48.8566000,2.3522000\n", "gps")
    for pos in (31, 63, 25):  # lowest bit of each word, and a low-order bit
        hit = bits.copy()
        hit[pos] ^= 1
        c = gps_coordinates(np.packbits(hit).tobytes())
        assert np.abs(c - [[48.8566, 2.3522]]).max() < 1e-3


def test_gps_clamps_out_of_range():
    body = np.array([1_000_000_000, -2_000_000_000], dtype=">i4").tobytes()
    assert gps_coordinates(body).tolist() == [[90.0, -180.0]]


def test_nan_float_becomes_zero():
    raw = np.array([1.0, np.nan, np.inf, 2.0, 3.0, 4.0], dtype="<f4").tobytes()
    assert payload_values(raw, "lidar").tolist() == [1.0, 0.0, 0.0, 2.0, 3.0, 4.0]


def test_audio_values_normalised():
    v = payload_values(samples.wav(50), "audio")
    assert v.min() >= -1 and v.max() < 1


@pytest.mark.parametrize("modality, data, offset", [
    ("image", b"P4\n8 8\n255\n", 0),
    ("image", b"P5\n8 8\n255\n" + b"\0" * 63, 11),
    ("image", b"P5\n8 8\n65535\n" + b"\0" * 128, 12),
    ("audio", b"RIFF", 4),
    ("audio", samples.wav(10)[:-1], 40),
    ("gps", b"48.85,2.35\nnot a line\n", 11),
    ("gps", b"95.0,2.0\n", 0),
    ("lidar", b"\0" * 13, 12),
    ("radar", b"\0" * 9, 8),
])
def test_format_errors_name_offset(modality, data, offset):
    with pytest.raises(PayloadFormatError) as exc:
        encode_payload(data, modality)
    assert exc.value.offset == offset


def test_decode_bit_count_mismatch():
    bits, meta = encode_payload(samples.lidar(2), "lidar")
    with pytest.raises(FramingError):
        decode_payload(bits[:-8], meta)


def test_segmentation_examples():
    tb = frame_segment(np.zeros(9216, np.uint8), 512)
    assert tb.blocks.shape == (18, 512) and tb.pad_bits == 0
    tb = frame_segment(np.ones(10, np.uint8), 512)
    assert tb.blocks.shape == (1, 512) and tb.pad_bits == 502
    assert not tb.blocks[0, 10:].any()
    with pytest.raises(FramingError):
        frame_segment(np.zeros(4, np.uint8), 0)


def test_segmentation_inverse_1000_payloads():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        bits = rng.integers(0, 2, size=int(rng.integers(1, 3000)), dtype=np.uint8)
        k = int(rng.integers(1, 700))
        tb = frame_segment(bits, k)
        assert tb.blocks.size == bits.size + tb.pad_bits
        assert np.array_equal(frame_reassemble(tb.blocks, tb.pad_bits), bits)


@settings(max_examples=100, deadline=None)
@given(st.binary(min_size=1, max_size=400), st.integers(1, 600))
def test_segmentation_property(data, k):
    bits = np.unpackbits(np.frombuffer(data, np.uint8))
    tb = frame_segment(bits, k)
    assert 0 <= tb.pad_bits < k
    assert np.array_equal(frame_reassemble(tb.blocks, tb.pad_bits), bits)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-90, 90), st.floats(-180, 180)), min_size=1, max_size=20))
def test_gps_canonical_roundtrip_property(coords):
    text = b"".join(b"%.7f,%.7f\n" % c for c in coords)
    bits, meta = encode_payload(text, "gps")
    again = decode_payload(bits, meta)
    assert np.allclose(payload_values(again, "gps"), payload_values(text, "gps"), atol=0.6 / GPS_SCALE)


def test_metric_examples():
    img = np.arange(64, dtype=float)
    assert mse(img, img) == 0 and math.isinf(psnr(img, img))
    assert psnr(img, img + 5) == pytest.approx(10 * np.log10(255**2 / 25))
    assert psnr(img, img + 5) == pytest.approx(34.15, abs=0.01)
    assert rmse([0, 0], [3, 4]) == pytest.approx(np.sqrt(12.5))
    with pytest.raises(MetricError):
        mse([1, 2], [1, 2, 3])


def test_metric_names_per_modality():
    assert METRIC_NAME == {"image": "psnr", "audio": "mse", "gps": "rmse", "lidar": "mse", "radar": "mse"}
    data = samples.all_modalities()
    for modality, raw in data.items():
        name, value = payload_metric(raw, raw, modality)
        assert name == METRIC_NAME[modality]
        assert (math.isinf(value) and value > 0) if name == "psnr" else value == 0
