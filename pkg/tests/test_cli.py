import subprocess
import sys

import numpy as np

from v2nrx import autodiff as ad
from v2nrx.cli import main
from v2nrx.harness import BER_HEADER, PAYLOAD_HEADER

from . import samples

FAST = "modulation_order = 4\ncoded = false\nchannel_model = awgn\nnum_rx = 1\nsnr_points_db = 2, 4\n" \
       "frames_per_point = 2\nmax_frames = 2\n"


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_ber_sweep_to_file(tmp_path):
    cfg = write(tmp_path, "c.cfg", FAST)
    out = tmp_path / "ber.csv"
    assert main(["ber-sweep", "--config", cfg, "--seed", "4", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(BER_HEADER) and len(lines) == 3


def test_ber_sweep_stdout(tmp_path, capsys):
    assert main(["ber-sweep", "--config", write(tmp_path, "c.cfg", FAST)]) == 0
    assert capsys.readouterr().out.startswith("snr_db,receiver")


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["ber-sweep", "--config", write(tmp_path, "bad.cfg", "warp_factor = 9")]) == 2
    assert main(["ber-sweep", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["ber-sweep", "--config", write(tmp_path, "n.cfg", "receiver = neural")]) == 2
    assert main(["train", "--config", write(tmp_path, "t.cfg", "iterations = 1")]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_payload_format_error_exit_3(tmp_path):
    bad = tmp_path / "x.pgm"
    bad.write_bytes(b"P2\n1 1\n255\n0")
    assert main(["payload-eval", "--config", write(tmp_path, "c.cfg", FAST), "--payload", f"image={bad}"]) == 3


def test_payload_arguments_validated(tmp_path):
    cfg = write(tmp_path, "c.cfg", FAST)
    assert main(["payload-eval", "--config", cfg]) == 2
    assert main(["payload-eval", "--config", cfg, "--payload", "video=a.bin"]) == 2
    assert main(["payload-eval", "--config", cfg, "--payload", f"image={tmp_path / 'nope.pgm'}"]) == 2


def test_payload_eval_cli(tmp_path):
    paths = []
    for modality, data in samples.all_modalities().items():
        p = tmp_path / f"{modality}.bin"
        p.write_bytes(data)
        paths += ["--payload", f"{modality}={p}"]
    cfg = write(tmp_path, "c.cfg", "snr_points_db = 40\nchannel_model = flat\n")
    out = tmp_path / "payload.csv"
    assert main(["payload-eval", "--config", cfg, "--out", str(out), *paths]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(PAYLOAD_HEADER) and len(lines) == 6


def test_train_writes_checkpoint_and_log(tmp_path):
    cfg = write(tmp_path, "t.cfg", "num_symbols = 4\nfft_size = 8\ncp_len = 2\npilot_symbols = 1\n"
                "modulation_order = 4\nchannel_model = flat\nnum_blocks = 1\nnum_heads = 2\nembed_dim = 8\n"
                "ffn_dim = 8\niterations = 3\nbatch_size = 2\n")
    ckpt, log = tmp_path / "m.nrx", tmp_path / "loss.csv"
    assert main(["train", "--config", cfg, "--checkpoint", str(ckpt), "--out", str(log)]) == 0
    assert ckpt.read_bytes()[:4] == b"NRX1"
    lines = log.read_text().splitlines()
    assert lines[0] == "iteration,bce,bit_accuracy" and len(lines) == 4


def test_gradcheck_passes(capsys):
    assert main(["gradcheck"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "check,max_rel_error,status"
    assert any(line.startswith("multi_head_attention,") for line in out)
    assert all(line.endswith(",ok") for line in out[1:])


def test_gradcheck_negative_control(monkeypatch, capsys):
    def broken_relu(x):
        # forward is correct, backward forgets the mask
        return ad._node(np.maximum(x.data, 0.0), (x,), lambda g: ad._accum(x, g), "relu")

    monkeypatch.setattr(ad, "relu", broken_relu)
    assert main(["gradcheck"]) == 1
    assert "relu," in capsys.readouterr().out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "v2nrx", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for sub in ("ber-sweep", "arch-sweep", "train", "payload-eval", "gradcheck"):
        assert sub in r.stdout
