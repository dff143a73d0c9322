"""Coded BER/BLER versus Eb/N0 for the conventional receiver.

Runs the same experiment as ``v2nrx ber-sweep`` from Python and prints the
CSV. Frames per point are kept small so this finishes in seconds; raise
``frames_per_point`` and ``max_frames`` for smoother curves.

    python demos/03_ber_sweep.py
"""

from v2nrx.harness import ExperimentConfig, ber_csv, monotonicity_flags, run_ber_sweep

cfg = ExperimentConfig(
    snr_points_db=(4.0, 6.0, 8.0, 10.0, 12.0, 14.0),
    receiver=("baseline", "perfect_csi_baseline"),
    frames_per_point=10,
    max_frames=60,
    speed_kmh=90,
    seed=1,
)
points = run_ber_sweep(cfg)
print(ber_csv(points))
print("BER increases beyond the 95% CI:", monotonicity_flags(points) or "none")
