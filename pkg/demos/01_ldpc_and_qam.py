"""Channel coding and soft demapping on their own.

Builds the rate-1/2 (3,6) LDPC code used by every link experiment, then
shows what it buys over plain BPSK on an AWGN channel, and how exact and
max-log LLRs from a 64-QAM demapper differ.

    python demos/01_ldpc_and_qam.py
"""

import numpy as np
from scipy.special import erfc

from v2nrx.ldpc import build_parity_matrix, ldpc_decode, ldpc_encode
from v2nrx.mapping import constellation, qam_demap_llr

code = build_parity_matrix(1024, seed=0)
print(f"LDPC code: n={code.n}, k={code.k}, column degrees {set(code.column_degrees)}, "
      f"row degrees {set(code.row_degrees)}")

# BPSK (0 -> +1, 1 -> -1) over AWGN, LLR = log P(1)/P(0) = -2y/sigma^2
rng = np.random.default_rng(1)
print("\nEb/N0   uncoded BER   coded BER")
for ebno_db in (1.0, 2.0, 3.0):
    sigma2 = 1.0 / (2 * 0.5 * 10 ** (ebno_db / 10))
    msgs = rng.integers(0, 2, size=(200, code.k), dtype=np.uint8)
    cw = ldpc_encode(msgs, code)
    y = 1.0 - 2.0 * cw + np.sqrt(sigma2) * rng.standard_normal(cw.shape)
    decoded, converged, _ = ldpc_decode(-2.0 * y / sigma2, code)
    uncoded = 0.5 * erfc(np.sqrt(10 ** (ebno_db / 10)))
    print(f"{ebno_db:4.1f} dB   {uncoded:.2e}      {np.mean(decoded != msgs):.2e}"
          f"   ({converged.mean():.0%} of codewords converged)")

# One noisy 64-QAM symbol, exact versus max-log LLRs
x = constellation(64)[37] + 0.15 * (1 - 1j)
for nv in (0.3, 0.03):
    exact = qam_demap_llr(x, nv, 64)[0]
    maxlog = qam_demap_llr(x, nv, 64, mode="max-log")[0]
    print(f"\nnoise variance {nv}:\n  exact   {np.round(exact, 2)}\n  max-log {np.round(maxlog, 2)}")
