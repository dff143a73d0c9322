"""Train a small transformer receiver and compare it with the baseline.

The toy setting is QPSK on a 4x32 grid with one pilot symbol, flat Rayleigh
block fading and two receive antennas. The full run (2000 iterations) takes
about two minutes on a laptop core; pass a smaller count as the first
argument for a quick look.

    python demos/04_train_neural_receiver.py [iterations]
"""

import sys

import numpy as np

from v2nrx.baseline import baseline_receive
from v2nrx.channel import ChannelConfig
from v2nrx.neural import NeuralReceiverConfig, build_model, nr_forward, num_parameters, simulate_batch, train
from v2nrx.ofdm import ReceivedGrid
from v2nrx.seeding import derive_rng

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
cfg = NeuralReceiverConfig(num_blocks=2, num_heads=2, embed_dim=32, ffn_dim=32, bits_per_symbol=2,
                           num_symbols=4, fft_size=32, pilot_symbol_indices=(1,))
chan = ChannelConfig(tap_delays=(0,), tap_powers=(1.0,), block_fading=True)
frame = cfg.frame()
print(f"{num_parameters(build_model(cfg, 0))} parameters, {iterations} iterations")


def log(it, loss, acc):
    if (it + 1) % max(1, iterations // 10) == 0:
        print(f"  iteration {it + 1:5d}  BCE {loss:.4f}  bit accuracy {acc:.4f}")


params, report = train(cfg, frame, chan, iterations, 16, (0.0, 10.0), master_seed=1, log=log)

data = ~cfg.pilot_mask.reshape(-1)
for ebno_db in (2.0, 5.0, 8.0):
    y, nv, bits, H = simulate_batch(derive_rng(99, "demo", ebno_db), cfg, frame, chan, 300, (ebno_db, ebno_db))
    truth = bits[:, data]
    trained = np.mean((nr_forward(y, nv, params, cfg) > 0) != truth)
    fresh = np.mean((nr_forward(y, nv, build_model(cfg, 7), cfg) > 0) != truth)
    errs = {"ls": 0, "csi": 0}
    for i in range(len(y)):
        rx = ReceivedGrid(y[i], nv[i])
        errs["ls"] += int(((baseline_receive(rx, frame, 0) > 0) != truth[i]).sum())
        errs["csi"] += int(((baseline_receive(rx, frame, 0, true_channel=H[i]) > 0) != truth[i]).sum())
    print(f"Eb/N0 {ebno_db:3.0f} dB  neural {trained:.4f}  untrained {fresh:.3f}  "
          f"LS baseline {errs['ls'] / truth.size:.4f}  perfect CSI {errs['csi'] / truth.size:.4f}")
