import csv
import io
import math

import numpy as np
import pytest

from v2nrx import harness
from v2nrx.errors import ConfigError
from v2nrx.harness import (
    ARCH_HEADER,
    BER_HEADER,
    PAYLOAD_HEADER,
    ArchResult,
    BerPoint,
    ExperimentConfig,
    Link,
    arch_csv,
    ber_csv,
    min_snr_to_sentinel,
    monotonicity_flags,
    parse_config,
    payload_csv,
    run_ber_sweep,
    run_payload_eval,
    select_best_fit,
    simulate_point,
)
from v2nrx.seeding import derive_rng, derive_seed

from . import samples

QPSK_AWGN = dict(modulation_order=4, coded=False, channel_model="awgn", num_rx=1,
                 receiver=("perfect_csi_baseline",))


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_defaults_follow_nominal_setup():
    cfg = parse_config("")
    f = cfg.frame()
    assert (f.num_symbols, f.fft_size, f.subcarrier_spacing, f.bits_per_symbol, f.code_rate) == (14, 128, 240e3, 6, 0.5)
    assert cfg.num_rx == 2 and cfg.carrier_freq_hz == 28e9
    assert (cfg.num_blocks, cfg.num_heads, cfg.embed_dim, cfg.ffn_dim, cfg.batch_size) == (4, 8, 128, 128, 32)
    assert cfg.learning_rate == 1e-3


def test_config_parsing():
    cfg = parse_config("""
# comment line
snr_points_db = 1, 2.5 ,4   # trailing comment
receiver = baseline, perfect_csi_baseline
coded = false
speed_kmh = 120
pilot_symbols = 3
""")
    assert cfg.snr_points_db == (1.0, 2.5, 4.0)
    assert cfg.receiver == ("baseline", "perfect_csi_baseline")
    assert cfg.coded is False and cfg.speed_kmh == 120.0 and cfg.pilot_symbols == (3,)
    assert cfg.frame().code_rate == 1.0


@pytest.mark.parametrize("text", ["bogus_key = 1", "num_rx = two", "receiver = oracle", "snr_points_db =",
                                  "frames_per_point = 0", "channel_model = uma", "coded = maybe", "not a line"])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_overrides_win():
    assert parse_config("seed = 1", seed=9).seed == 9


def test_seed_splitting_is_keyed():
    a = derive_rng(5, "ber", 0, 3).integers(1 << 30, size=4)
    assert np.array_equal(a, derive_rng(5, "ber", 0, 3).integers(1 << 30, size=4))
    assert not np.array_equal(a, derive_rng(5, "ber", 3, 0).integers(1 << 30, size=4))
    assert not np.array_equal(a, derive_rng(6, "ber", 0, 3).integers(1 << 30, size=4))
    assert derive_seed(5, "ber", 0, 3).entropy == 5


def test_three_points_three_rows():
    cfg = ExperimentConfig(snr_points_db=(2.0, 4.0, 6.0), frames_per_point=1, max_frames=1, **QPSK_AWGN)
    table = rows(ber_csv(run_ber_sweep(cfg)))
    assert table[0] == BER_HEADER and len(table) == 4


def test_ber_row_fields_consistent():
    cfg = ExperimentConfig(snr_points_db=(4.0,), frames_per_point=3, max_frames=3, **QPSK_AWGN)
    (p,) = run_ber_sweep(cfg)
    r = dict(zip(BER_HEADER, rows(ber_csv([p]))[1]))
    assert int(r["bits"]) == 3 * 3072 and int(r["blocks"]) == 3
    assert float(r["ber"]) == pytest.approx(int(r["bit_errors"]) / int(r["bits"]))
    assert 0 <= float(r["ber"]) <= 1
    assert float(r["ci95"]) == pytest.approx(1.96 * math.sqrt(p.ber * (1 - p.ber) / p.bits))


def test_qpsk_awgn_harness_matches_q():
    from scipy.special import erfc

    cfg = ExperimentConfig(snr_points_db=(4.0,), frames_per_point=400, max_frames=400, **QPSK_AWGN)
    (p,) = run_ber_sweep(cfg)
    ref = 0.5 * erfc(np.sqrt(2 * 10 ** 0.4) / np.sqrt(2))
    assert p.bits >= 10**6
    assert abs(p.ber / ref - 1) < 0.03


def test_noiseless_coded_chain_is_error_free():
    cfg = ExperimentConfig(snr_points_db=(60.0,), frames_per_point=2, max_frames=2, channel_model="flat")
    (p,) = run_ber_sweep(cfg)
    assert p.bit_errors == 0 and p.bits == 2 * 9 * 512


def test_early_stop_rule():
    cfg = ExperimentConfig(**QPSK_AWGN)
    link = Link(cfg, "perfect_csi_baseline")
    noisy = simulate_point(link, 0.0, 0, 1, min_frames=2, target_errors=100, max_frames=50)
    assert noisy.blocks == 2 and noisy.bit_errors >= 100
    clean = simulate_point(link, 30.0, 0, 1, min_frames=2, target_errors=100, max_frames=7)
    assert clean.blocks == 7 and clean.bit_errors == 0


def test_frames_independent_of_batching_and_order():
    cfg = ExperimentConfig(**QPSK_AWGN)
    link = Link(cfg, "perfect_csi_baseline")
    whole = simulate_point(link, 2.0, 1, 4, min_frames=6, target_errors=0, max_frames=6)
    parts = BerPoint(2.0, link.receiver)
    for i in reversed(range(6)):
        harness._run_frame(link, 2.0, derive_rng(4, "ber", 1, i), parts)
    assert (whole.bits, whole.bit_errors, whole.block_errors) == (parts.bits, parts.bit_errors, parts.block_errors)


def test_sweep_determinism():
    cfg = ExperimentConfig(snr_points_db=(6.0, 10.0), frames_per_point=2, max_frames=4, seed=3,
                           receiver=("baseline", "perfect_csi_baseline"))
    assert ber_csv(run_ber_sweep(cfg)) == ber_csv(run_ber_sweep(cfg))


def test_receiver_order_does_not_change_results():
    base = dict(snr_points_db=(8.0,), frames_per_point=2, max_frames=2, seed=2)
    a = run_ber_sweep(ExperimentConfig(receiver=("baseline", "perfect_csi_baseline"), **base))
    b = run_ber_sweep(ExperimentConfig(receiver=("perfect_csi_baseline", "baseline"), **base))
    key = lambda p: (p.receiver, p.bits, p.bit_errors)  # noqa: E731
    assert sorted(map(key, a)) == sorted(map(key, b))


def test_neural_needs_checkpoint():
    with pytest.raises(ConfigError):
        Link(ExperimentConfig(receiver=("neural",)), "neural")


def test_codeword_must_fit_frame():
    with pytest.raises(ConfigError):
        Link(ExperimentConfig(num_symbols=4, fft_size=32, pilot_symbols=(1,), modulation_order=4), "baseline")


def test_monotonicity_flags():
    pts = [BerPoint(0, "baseline", 10**6, 1000), BerPoint(2, "baseline", 10**6, 5000),
           BerPoint(4, "baseline", 10**6, 10)]
    assert monotonicity_flags(pts) == [("baseline", 0, 2)]
    pts[1].bit_errors = 1020  # within the combined CI
    assert monotonicity_flags(pts) == []


def test_arch_csv_and_tie_break():
    results = [ArchResult(4, 2, 10.0, 0.0, 0.2), ArchResult(2, 2, 10.0, 0.0, 0.3),
               ArchResult(2, 2, 5.0, 0.1, 0.3), ArchResult(4, 2, 5.0, 0.05, 0.2)]
    text = arch_csv(results)
    assert rows(text)[0] == ARCH_HEADER
    assert select_best_fit(text) == (2, 2)
    text = arch_csv([ArchResult(2, 8, 10.0, 0.01, 0.1), ArchResult(2, 4, 10.0, 0.01, 0.1),
                     ArchResult(6, 2, 10.0, 0.005, 0.1)])
    assert select_best_fit(text) == (6, 2)
    text = arch_csv([ArchResult(2, 8, 10.0, 0.01, 0.1), ArchResult(2, 4, 10.0, 0.01, 0.1)])
    assert select_best_fit(text) == (2, 4)
    with pytest.raises(ConfigError):
        select_best_fit(",".join(ARCH_HEADER) + "\n")


def test_arch_sweep_needs_lists():
    with pytest.raises(ConfigError):
        harness.run_arch_sweep(ExperimentConfig(), [], [2])


def test_payload_eval_schema_and_sentinels():
    cfg = ExperimentConfig(snr_points_db=(-2.0, 40.0), channel_model="flat", seed=1)
    data = samples.all_modalities()
    rows_ = run_payload_eval(cfg, data)
    table = rows(payload_csv(rows_))
    assert table[0] == PAYLOAD_HEADER and len(table) == 1 + 5 * 2
    names = {r[0]: r[3] for r in table[1:]}
    assert names == {"image": "psnr", "audio": "mse", "gps": "rmse", "lidar": "mse", "radar": "mse"}
    clean = [r for r in table[1:] if r[1] == "40"]
    assert all(r[4] == ("inf" if r[3] == "psnr" else "0") for r in clean)
    noisy = [r for r in table[1:] if r[1] == "-2"]
    assert all(r[4] not in ("inf", "0") for r in noisy)
    summary = min_snr_to_sentinel(rows_)
    assert all(v == 40.0 for v in summary.values())


def test_min_snr_to_sentinel_definition():
    mk = lambda snr, v: harness.PayloadRow("audio", snr, "baseline", "mse", v)  # noqa: E731
    assert min_snr_to_sentinel([mk(8, 0.0), mk(4, 0.1), mk(6, 0.0)]) == {("audio", "baseline"): 6}
    assert min_snr_to_sentinel([mk(8, 0.2)]) == {("audio", "baseline"): None}
