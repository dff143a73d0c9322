import numpy as np
import pytest

from v2nrx.channel import ChannelConfig
from v2nrx.neural import NeuralReceiverConfig, train

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def report_criterion():
    """Record and print one pass/fail line, then assert."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


TOY_CFG = NeuralReceiverConfig(
    num_blocks=2, num_heads=2, embed_dim=32, ffn_dim=32, bits_per_symbol=2,
    num_symbols=4, fft_size=32, num_rx=2, pilot_symbol_indices=(1,),
)
TOY_CHANNEL = ChannelConfig(tap_delays=(0,), tap_powers=(1.0,), block_fading=True)
TOY_SEED = 1


@pytest.fixture(scope="session")
def toy_model():
    """The documented desk-scale run: 2000 iterations, batch 16, SNR 0-10 dB."""
    import time

    t0 = time.perf_counter()
    params, report = train(TOY_CFG, TOY_CFG.frame(), TOY_CHANNEL, 2000, 16, (0.0, 10.0), TOY_SEED)
    return params, report, time.perf_counter() - t0


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
