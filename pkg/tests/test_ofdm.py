import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from v2nrx.errors import CapacityError, ConfigError, FramingError, InvalidNoiseError
from v2nrx.ofdm import (
    FrameConfig,
    ReceivedGrid,
    apply_channel_freq,
    build_grid,
    ofdm_demodulate,
    ofdm_modulate,
    pilot_values,
)

CFG = FrameConfig()


def random_grid(cfg, seed=0):
    rng = np.random.default_rng(seed)
    data = (rng.standard_normal(cfg.num_data_re) + 1j * rng.standard_normal(cfg.num_data_re)) / np.sqrt(2)
    return build_grid(data, cfg, pilot_seed=seed)


def test_default_capacity():
    assert CFG.num_data_re == 1536
    assert CFG.data_bits == 9216


def test_pilots_are_seeded_qpsk():
    a, b = pilot_values(CFG, 9), pilot_values(CFG, 9)
    assert np.array_equal(a, b)
    assert np.allclose(np.abs(a), 1.0)
    assert not np.array_equal(a, pilot_values(CFG, 10))


def test_pilot_mask_exact():
    g = random_grid(CFG)
    assert g.pilot_mask.sum() == 2 * 128
    assert g.pilot_mask[[2, 11]].all() and not np.delete(g.pilot_mask, [2, 11], axis=0).any()


def test_data_fill_order_is_row_major():
    data = np.arange(CFG.num_data_re).astype(complex)
    g = build_grid(data, CFG, 0)
    assert g.symbols[0, 0] == 0 and g.symbols[0, 1] == 1 and g.symbols[1, 0] == 128
    assert g.symbols[3, 0] == 2 * 128  # symbol 2 is a pilot
    assert np.array_equal(g.data(), data)


def test_capacity_error():
    with pytest.raises(CapacityError) as exc:
        build_grid(np.zeros(1535, complex), CFG, 0)
    assert (exc.value.expected, exc.value.actual) == (1536, 1535)


@pytest.mark.parametrize("kw", [{"pilot_symbol_indices": (14,)}, {"cp_len": 128}])
def test_invalid_frames(kw):
    with pytest.raises(ConfigError):
        FrameConfig(**kw)


def test_modulate_length_and_cp():
    x = ofdm_modulate(random_grid(CFG), CFG)
    assert x.size == 14 * 144 == 2016
    blocks = x.reshape(14, 144)
    assert np.array_equal(blocks[:, :16], blocks[:, -16:])


def test_roundtrip():
    g = random_grid(CFG, 4)
    assert np.abs(ofdm_demodulate(ofdm_modulate(g, CFG), CFG) - g.symbols).max() < 1e-12


def test_unitary_energy():
    g = random_grid(CFG, 5)
    body = ofdm_modulate(g, CFG).reshape(14, 144)[:, 16:]
    e_grid, e_time = np.sum(np.abs(g.symbols) ** 2), np.sum(np.abs(body) ** 2)
    assert abs(e_grid - e_time) / e_grid < 1e-10


def test_zero_samples_give_zero_grid():
    assert not ofdm_demodulate(np.zeros(2016, complex), CFG).any()


def test_bad_sample_length():
    with pytest.raises(FramingError):
        ofdm_demodulate(np.zeros(2015, complex), CFG)


def test_pure_tone_lands_on_one_subcarrier():
    k = 17
    n = np.arange(-CFG.cp_len, CFG.fft_size)
    block = np.exp(2j * np.pi * k * n / CFG.fft_size)
    grid = ofdm_demodulate(np.tile(block, CFG.num_symbols), CFG)
    others = np.delete(grid, k, axis=1)
    assert np.abs(others).max() < 1e-12
    assert np.allclose(grid[:, k], np.sqrt(CFG.fft_size))


def test_frequency_shortcut_matches_time_convolution():
    rng = np.random.default_rng(8)
    g = random_grid(CFG, 8)
    h = (rng.standard_normal(9) + 1j * rng.standard_normal(9)) / np.sqrt(18)  # 9 taps <= cp_len
    y = np.convolve(ofdm_modulate(g, CFG), h)[: 14 * 144]
    Hf = np.fft.fft(h, CFG.fft_size)
    expected = apply_channel_freq(g, np.broadcast_to(Hf, (1, 14, 128)), 0.0, 0).samples[0]
    assert np.abs(ofdm_demodulate(y, CFG) - expected).max() < 1e-8


def test_identity_and_scalar_channel():
    g = random_grid(CFG, 1)
    ones = np.ones((2, 14, 128), complex)
    assert np.array_equal(apply_channel_freq(g, ones, 0.0, 0).samples, np.broadcast_to(g.symbols, (2, 14, 128)))
    h = 0.5 - 0.5j
    out = apply_channel_freq(g, ones * h, 0.0, 0)
    assert isinstance(out, ReceivedGrid)
    assert np.allclose(out.samples, h * g.symbols, atol=0, rtol=1e-15)


def test_noise_variance_band():
    x = np.zeros((100, 5000), complex)
    y = apply_channel_freq(x, np.ones((2, 100, 5000)), 0.2, noise_seed=3).samples
    assert y.size == 10**6
    v = np.mean(np.abs(y) ** 2)
    assert 0.196 <= v <= 0.204
    assert abs(np.var(y.real) - 0.1) < 0.002 and abs(np.var(y.imag) - 0.1) < 0.002


def test_noise_is_seeded():
    g = random_grid(CFG, 2)
    a = apply_channel_freq(g, np.ones((2, 14, 128)), 0.3, 5).samples
    b = apply_channel_freq(g, np.ones((2, 14, 128)), 0.3, 5).samples
    assert np.array_equal(a, b)


def test_negative_noise_rejected():
    with pytest.raises(InvalidNoiseError):
        apply_channel_freq(random_grid(CFG), np.ones((2, 14, 128)), -0.1, 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 8), st.sampled_from([8, 16, 32]), st.integers(0, 7), st.integers(0, 2**31))
def test_roundtrip_property(S, F, cp, seed):
    cfg = FrameConfig(num_symbols=S, fft_size=F, cp_len=cp, pilot_symbol_indices=(0,))
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((S, F)) + 1j * rng.standard_normal((S, F))
    assert np.allclose(ofdm_demodulate(ofdm_modulate(X, cfg), cfg), X, atol=1e-12)
