"""Command-line entry point: ``v2nrx <subcommand>`` or ``python -m v2nrx``.

Exit codes: 0 success, 1 check failure, 2 configuration error,
3 input-format error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import harness
from .errors import ConfigError, InputFormatError
from .gradcheck import TOLERANCE, passed, run_gradcheck
from .neural import save_checkpoint

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_FORMAT = 0, 1, 2, 3


def _common(p):
    p.add_argument("--config", help="key = value experiment file")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--checkpoint", help="neural receiver checkpoint path")


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="v2nrx", description="V2N uplink link-level simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("ber-sweep", help="BER/BLER versus Eb/N0"))
    p = sub.add_parser("arch-sweep", help="train and compare transformer depths and head counts")
    _common(p)
    p.add_argument("--blocks", type=_ints, default=[2, 4, 6, 8, 10])
    p.add_argument("--heads", type=_ints, default=[8])
    _common(sub.add_parser("train", help="train a neural receiver; --out gets the loss log"))
    p = sub.add_parser("payload-eval", help="multi-modal payload reconstruction metrics")
    _common(p)
    p.add_argument("--payload", action="append", default=[], metavar="MODALITY=PATH",
                   help="e.g. image=frame.pgm (repeatable)")
    sub.add_parser("gradcheck", help="finite-difference check of every autodiff layer")
    return ap


def _emit(text: str, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _config(args):
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "checkpoint", None):
        overrides["checkpoint"] = args.checkpoint
    return harness.load_config(args.config, **overrides)


def _ber_sweep(args):
    cfg = _config(args)
    points = harness.run_ber_sweep(cfg)
    _emit(harness.ber_csv(points), args.out)
    for rx, a, b in harness.monotonicity_flags(points):
        print(f"warning: {rx} BER rises from {a} dB to {b} dB beyond the 95% CI", file=sys.stderr)
    return EXIT_OK


def _arch_sweep(args):
    cfg = _config(args)
    text = harness.arch_csv(harness.run_arch_sweep(cfg, args.blocks, args.heads))
    _emit(text, args.out)
    nb, nh = harness.select_best_fit(text)
    print(f"best fit: num_blocks={nb} num_heads={nh}", file=sys.stderr)
    return EXIT_OK


def _train(args):
    cfg = _config(args)
    if not cfg.checkpoint:
        raise ConfigError("train needs --checkpoint (output path)")
    params, nr_cfg, report = harness.train_from_config(cfg)
    save_checkpoint(params, nr_cfg, cfg.checkpoint)
    rows = ["iteration,bce,bit_accuracy\n"]
    for i, (loss, acc) in enumerate(zip(report.loss_history, report.accuracy_history), start=1):
        rows.append(f"{i},{loss!r},{acc!r}\n")
    _emit("".join(rows), args.out)
    return EXIT_OK


def _payload_eval(args):
    cfg = _config(args)
    payloads = {}
    for spec in args.payload:
        modality, sep, path = spec.partition("=")
        if not sep or modality not in harness.METRIC_NAME:
            raise ConfigError(f"bad --payload {spec!r}; expected MODALITY=PATH")
        try:
            payloads[modality] = Path(path).read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not payloads:
        raise ConfigError("payload-eval needs at least one --payload")
    rows = harness.run_payload_eval(cfg, payloads)
    _emit(harness.payload_csv(rows), args.out)
    for (modality, rx), snr in harness.min_snr_to_sentinel(rows).items():
        print(f"min SNR to perfect {modality} ({rx}): {'none' if snr is None else snr}", file=sys.stderr)
    return EXIT_OK


def _gradcheck(args):
    report = run_gradcheck()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["check", "max_rel_error", "status"])
    for name, err in report.items():
        w.writerow([name, f"{err:.3e}", "ok" if err < TOLERANCE else "FAIL"])
    return EXIT_OK if passed(report) else EXIT_FAIL


COMMANDS = {
    "ber-sweep": _ber_sweep,
    "arch-sweep": _arch_sweep,
    "train": _train,
    "payload-eval": _payload_eval,
    "gradcheck": _gradcheck,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputFormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (ConfigError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


__all__ = ["main", "build_parser"]
