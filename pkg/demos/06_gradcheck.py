"""Finite-difference verification of the autodiff engine.

Each layer (and a two-by-four-grid receiver end to end) is differentiated in
reverse mode and compared against central differences.

    python demos/06_gradcheck.py
"""

from v2nrx.gradcheck import TOLERANCE, run_gradcheck

for name, err in run_gradcheck(seed=0).items():
    print(f"{name:22s} {err:.2e}  {'ok' if err < TOLERANCE else 'FAIL'}")
