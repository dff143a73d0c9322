"""
Experiment orchestration: configuration files, the end-to-end link, BER
sweeps, architecture sweeps and multi-modal payload evaluation.

Config files are flat ``key = value`` lines with ``#`` comments and
comma-separated lists. Every key has a default, so an empty file gives the
nominal 64-QAM / rate-1/2 / 14x128 setup.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .baseline import baseline_receive
from .channel import ChannelConfig, draw_channels, ebno_to_noise_var, kmh_to_ms
from .errors import ConfigError
from .ldpc import build_parity_matrix, ldpc_decode, ldpc_encode
from .mapping import qam_map
from .neural import NeuralReceiverConfig, load_checkpoint, nr_forward, train
from .ofdm import FrameConfig, ReceivedGrid, build_grid
from .payload import METRIC_NAME, decode_payload, encode_payload, frame_reassemble, frame_segment, payload_metric
from .seeding import derive_rng

RECEIVERS = ("baseline", "perfect_csi_baseline", "neural")
BER_HEADER = ["snr_db", "receiver", "bits", "bit_errors", "ber", "blocks", "block_errors", "bler", "ci95"]
ARCH_HEADER = ["num_blocks", "num_heads", "snr_db", "ber", "train_final_bce"]
PAYLOAD_HEADER = ["modality", "snr_db", "receiver", "metric_name", "metric_value"]


@dataclass
class ExperimentConfig:
    num_symbols: int = 14
    fft_size: int = 128
    subcarrier_spacing_hz: float = 240e3
    cp_len: int = 16
    pilot_symbols: tuple = (2, 11)
    modulation_order: int = 64
    code_rate: float = 0.5
    codeword_len: int = 1024
    coded: bool = True
    num_rx: int = 2
    carrier_freq_hz: float = 28e9
    speed_kmh: float = 90.0
    doppler_model: str = "jakes"
    channel_model: str = "tdl"
    block_fading: bool = False
    snr_points_db: tuple = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0)
    frames_per_point: int = 10
    target_bit_errors: int = 100
    max_frames: int = 200
    receiver: tuple = ("baseline",)
    demap_mode: str = "exact"
    ldpc_seed: int = 0
    ldpc_max_iter: int = 20
    pilot_seed: int = 0
    seed: int = 0
    num_blocks: int = 4
    num_heads: int = 8
    embed_dim: int = 128
    ffn_dim: int = 128
    learning_rate: float = 1e-3
    weight_decay: float = 0.01
    batch_size: int = 32
    iterations: int = 2000
    snr_train_min_db: float = 0.0
    snr_train_max_db: float = 15.0
    checkpoint: str = ""

    def __post_init__(self):
        if not self.snr_points_db:
            raise ConfigError("snr_points_db must not be empty")
        if self.frames_per_point < 1:
            raise ConfigError("frames_per_point must be >= 1")
        for r in self.receiver:
            if r not in RECEIVERS:
                raise ConfigError(f"unknown receiver {r!r}")
        if self.channel_model not in ("tdl", "flat", "awgn"):
            raise ConfigError(f"unknown channel_model {self.channel_model!r}")
        if self.coded and self.code_rate != 0.5:
            raise ConfigError("only the rate-1/2 LDPC code is available")

    # derived objects

    def frame(self) -> FrameConfig:
        m = int(round(math.log2(self.modulation_order)))
        return FrameConfig(
            num_symbols=self.num_symbols,
            fft_size=self.fft_size,
            subcarrier_spacing=self.subcarrier_spacing_hz,
            cp_len=self.cp_len,
            pilot_symbol_indices=self.pilot_symbols,
            bits_per_symbol=m,
            code_rate=self.code_rate if self.coded else 1.0,
        )

    def channel(self) -> ChannelConfig | None:
        """Fading model, or ``None`` for a pure AWGN link (H = 1)."""
        if self.channel_model == "awgn":
            return None
        if self.channel_model == "flat":
            return ChannelConfig(num_rx=self.num_rx, carrier_freq=self.carrier_freq_hz, speed=kmh_to_ms(self.speed_kmh),
                                 tap_delays=(0,), tap_powers=(1.0,), doppler_model=self.doppler_model, block_fading=True)
        return ChannelConfig(num_rx=self.num_rx, carrier_freq=self.carrier_freq_hz, speed=kmh_to_ms(self.speed_kmh),
                             doppler_model=self.doppler_model, block_fading=self.block_fading)

    def receiver_config(self) -> NeuralReceiverConfig:
        return NeuralReceiverConfig(
            num_blocks=self.num_blocks, num_heads=self.num_heads, embed_dim=self.embed_dim, ffn_dim=self.ffn_dim,
            bits_per_symbol=self.frame().bits_per_symbol, num_symbols=self.num_symbols, fft_size=self.fft_size,
            num_rx=self.num_rx, pilot_symbol_indices=self.pilot_symbols, pilot_seed=self.pilot_seed,
        )


def _convert(f, raw: str):
    default = f.default
    raw = raw.strip()
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(raw)
    if isinstance(default, tuple):
        items = [x.strip() for x in raw.split(",") if x.strip()]
        kind = type(default[0]) if default else str
        return tuple(kind(x) for x in items)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config(text: str, **overrides) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",), delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    known = {f.name: f for f in fields(ExperimentConfig)}
    kw = {}
    for key, raw in parser["experiment"].items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            kw[key] = _convert(known[key], raw)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {raw!r}") from None
    kw.update(overrides)
    return ExperimentConfig(**kw)


def load_config(path: str | None, **overrides) -> ExperimentConfig:
    if path is None:
        return parse_config("", **overrides)
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), **overrides)


# -- link ----------------------------------------------------------------------


class Link:
    """Transmit chain, channel and one receiver for a fixed configuration.

    In coded mode every frame carries ``codewords_per_frame`` LDPC codewords;
    leftover grid capacity is filled with random bits that are not scored.
    In uncoded mode a transport block is one frame's worth of bits.
    """

    def __init__(self, cfg: ExperimentConfig, receiver: str, params=None, nr_cfg: NeuralReceiverConfig | None = None):
        self.cfg = cfg
        self.receiver = receiver
        self.frame = cfg.frame()
        self.chan = cfg.channel()
        self.code = build_parity_matrix(cfg.codeword_len, cfg.ldpc_seed) if cfg.coded else None
        capacity = self.frame.data_bits
        if self.code is not None:
            self.codewords_per_frame = capacity // self.code.n
            if self.codewords_per_frame < 1:
                raise ConfigError(f"codeword length {self.code.n} exceeds frame capacity {capacity}")
            self.block_bits = self.code.k
        else:
            self.codewords_per_frame = 1
            self.block_bits = capacity
        self.params, self.nr_cfg = params, nr_cfg
        if receiver == "neural":
            if params is None:
                if not cfg.checkpoint:
                    raise ConfigError("neural receiver requires a checkpoint")
                self.params, self.nr_cfg = load_checkpoint(cfg.checkpoint)
            want = cfg.receiver_config()
            got = self.nr_cfg
            if (got.num_symbols, got.fft_size, got.num_rx, got.bits_per_symbol, got.pilot_symbol_indices) != (
                want.num_symbols, want.fft_size, want.num_rx, want.bits_per_symbol, want.pilot_symbol_indices
            ):
                raise ConfigError("checkpoint was trained for a different frame layout")

    @property
    def blocks_per_frame(self) -> int:
        return self.codewords_per_frame

    def noise_var(self, ebno_db: float) -> float:
        return ebno_to_noise_var(ebno_db, self.frame.bits_per_symbol, self.frame.code_rate)

    def transmit(self, blocks: np.ndarray, ebno_db: float, rng: np.random.Generator) -> np.ndarray:
        """Send up to ``blocks_per_frame`` transport blocks in one frame.

        Returns the receiver's hard-decided blocks, same shape as ``blocks``.
        """
        blocks = np.atleast_2d(np.asarray(blocks, dtype=np.uint8))
        nblk = blocks.shape[0]
        if nblk > self.blocks_per_frame or blocks.shape[1] != self.block_bits:
            raise ConfigError("too many or mis-sized transport blocks for one frame")
        if self.code is not None:
            coded = ldpc_encode(blocks, self.code).ravel()
        else:
            coded = blocks.ravel()
        fill = self.frame.data_bits - coded.size
        tx_bits = np.concatenate([coded, rng.integers(0, 2, size=fill, dtype=np.uint8)])

        grid = build_grid(qam_map(tx_bits, self.frame.order), self.frame, self.cfg.pilot_seed)
        shape = (self.cfg.num_rx, self.frame.num_symbols, self.frame.fft_size)
        if self.chan is None:
            H = np.ones(shape, dtype=np.complex128)
        else:
            H = draw_channels(self.chan, self.frame, rng, 1)[0]
        nv = self.noise_var(ebno_db)
        noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(nv / 2)
        rx = ReceivedGrid(H * grid.symbols + noise, nv)

        if self.receiver == "neural":
            llr = nr_forward(rx, nv, self.params, self.nr_cfg)
        else:
            csi = H if self.receiver == "perfect_csi_baseline" else None
            llr = baseline_receive(rx, self.frame, self.cfg.pilot_seed, true_channel=csi, mode=self.cfg.demap_mode)
        llr = llr.ravel()[: coded.size]
        if self.code is None:
            return (llr > 0).astype(np.uint8).reshape(blocks.shape)
        msg, _, _ = ldpc_decode(llr.reshape(nblk, -1), self.code, self.cfg.ldpc_max_iter)
        return msg


# -- BER sweep -----------------------------------------------------------------


@dataclass
class BerPoint:
    snr_db: float
    receiver: str
    bits: int = 0
    bit_errors: int = 0
    blocks: int = 0
    block_errors: int = 0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def bler(self) -> float:
        return self.block_errors / self.blocks if self.blocks else 0.0

    @property
    def ci95(self) -> float:
        p = self.ber
        return 1.96 * math.sqrt(p * (1 - p) / self.bits) if self.bits else 0.0

    def row(self) -> list:
        return [_fmt(self.snr_db), self.receiver, self.bits, self.bit_errors, _fmt(self.ber),
                self.blocks, self.block_errors, _fmt(self.bler), _fmt(self.ci95)]


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    return f"{x:.10g}"


def simulate_point(link: Link, ebno_db: float, point_index: int, seed: int, min_frames: int,
                   target_errors: int, max_frames: int) -> BerPoint:
    """Frames ``i = 0, 1, ...`` use ``derive_rng(seed, "ber", point_index, i)``."""
    stats = BerPoint(ebno_db, link.receiver)
    frame = 0
    while frame < max(min_frames, 1):
        _run_frame(link, ebno_db, derive_rng(seed, "ber", point_index, frame), stats)
        frame += 1
    while stats.bit_errors < target_errors and frame < max_frames:
        _run_frame(link, ebno_db, derive_rng(seed, "ber", point_index, frame), stats)
        frame += 1
    return stats


def _run_frame(link, ebno_db, rng, stats):
    blocks = rng.integers(0, 2, size=(link.blocks_per_frame, link.block_bits), dtype=np.uint8)
    out = link.transmit(blocks, ebno_db, rng)
    err = (out != blocks)
    stats.bits += blocks.size
    stats.bit_errors += int(err.sum())
    stats.blocks += blocks.shape[0]
    stats.block_errors += int(err.any(axis=1).sum())


def run_ber_sweep(cfg: ExperimentConfig, params=None, nr_cfg=None) -> list:
    """One :class:`BerPoint` per (receiver, SNR)."""
    results = []
    for receiver in cfg.receiver:
        link = Link(cfg, receiver, params, nr_cfg)
        for i, snr in enumerate(cfg.snr_points_db):
            results.append(simulate_point(link, snr, i, cfg.seed, cfg.frames_per_point,
                                          cfg.target_bit_errors, max(cfg.max_frames, cfg.frames_per_point)))
    return results


def ber_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BER_HEADER)
    for p in points:
        w.writerow(p.row())
    return buf.getvalue()


def monotonicity_flags(points) -> list:
    """SNR pairs where BER rises by more than the combined 95% CIs."""
    flags = []
    by_rx = {}
    for p in points:
        by_rx.setdefault(p.receiver, []).append(p)
    for rx, pts in by_rx.items():
        pts = sorted(pts, key=lambda p: p.snr_db)
        for a, b in zip(pts, pts[1:]):
            if b.ber > a.ber and b.ber - a.ber > a.ci95 + b.ci95:
                flags.append((rx, a.snr_db, b.snr_db))
    return flags


# -- architecture sweep --------------------------------------------------------


@dataclass
class ArchResult:
    num_blocks: int
    num_heads: int
    snr_db: float
    ber: float
    train_final_bce: float

    def row(self) -> list:
        return [self.num_blocks, self.num_heads, _fmt(self.snr_db), _fmt(self.ber), _fmt(self.train_final_bce)]


def train_from_config(cfg: ExperimentConfig):
    nr_cfg = cfg.receiver_config()
    params, report = train(
        nr_cfg, cfg.frame(), cfg.channel(), cfg.iterations, cfg.batch_size,
        (cfg.snr_train_min_db, cfg.snr_train_max_db), cfg.seed,
        lr=cfg.learning_rate, weight_decay=cfg.weight_decay,
    )
    return params, nr_cfg, report


def run_arch_sweep(cfg: ExperimentConfig, blocks_list, heads_list) -> list:
    """Train and evaluate one model per (blocks, heads) pair."""
    if not blocks_list or not heads_list:
        raise ConfigError("blocks and heads lists must be non-empty")
    rows = []
    for nb in blocks_list:
        for nh in heads_list:
            variant = replace(cfg, num_blocks=int(nb), num_heads=int(nh), receiver=("neural",))
            params, nr_cfg, report = train_from_config(variant)
            tail = report.loss_history[-100:]
            final_bce = float(np.mean(tail))
            for p in run_ber_sweep(variant, params, nr_cfg):
                rows.append(ArchResult(int(nb), int(nh), p.snr_db, p.ber, final_bce))
    return rows


def arch_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ARCH_HEADER)
    for r in rows:
        w.writerow(r.row())
    return buf.getvalue()


def select_best_fit(csv_text: str) -> tuple:
    """Best ``(num_blocks, num_heads)`` from an arch-sweep CSV.

    Lowest BER at the highest SNR point; ties go to fewer blocks, then
    fewer heads.
    """
    rows = list(csv.DictReader(io.StringIO(csv_text)))
    if not rows:
        raise ConfigError("empty arch-sweep table")
    top = max(float(r["snr_db"]) for r in rows)
    cands = [(float(r["ber"]), int(r["num_blocks"]), int(r["num_heads"])) for r in rows if float(r["snr_db"]) == top]
    _, nb, nh = min(cands)
    return nb, nh


# -- payload evaluation --------------------------------------------------------


@dataclass
class PayloadRow:
    modality: str
    snr_db: float
    receiver: str
    metric_name: str
    metric_value: float

    def row(self) -> list:
        return [self.modality, _fmt(self.snr_db), self.receiver, self.metric_name, _fmt(self.metric_value)]


def transmit_payload(link: Link, data: bytes, modality: str, ebno_db: float, rng) -> bytes:
    bits, meta = encode_payload(data, modality)
    tb = frame_segment(bits, link.block_bits)
    out = np.empty_like(tb.blocks)
    step = link.blocks_per_frame
    for start in range(0, tb.blocks.shape[0], step):
        out[start : start + step] = link.transmit(tb.blocks[start : start + step], ebno_db, rng)
    return decode_payload(frame_reassemble(out, tb.pad_bits), meta)


def run_payload_eval(cfg: ExperimentConfig, payloads: dict, params=None, nr_cfg=None) -> list:
    """``payloads`` maps modality -> file bytes."""
    rows = []
    for receiver in cfg.receiver:
        link = Link(cfg, receiver, params, nr_cfg)
        for modality, data in payloads.items():
            encode_payload(data, modality)
            for i, snr in enumerate(cfg.snr_points_db):
                rng = derive_rng(cfg.seed, "payload", modality, i)
                recon = transmit_payload(link, data, modality, snr, rng)
                name, value = payload_metric(data, recon, modality)
                rows.append(PayloadRow(modality, snr, receiver, name, value))
    return rows


def payload_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PAYLOAD_HEADER)
    for r in rows:
        w.writerow(r.row())
    return buf.getvalue()


def is_sentinel(metric_name: str, value: float) -> bool:
    return math.isinf(value) if metric_name == "psnr" else value == 0


def min_snr_to_sentinel(rows) -> dict:
    """``(modality, receiver) -> smallest swept SNR with a perfect metric`` (None if never)."""
    out = {}
    for r in rows:
        key = (r.modality, r.receiver)
        out.setdefault(key, None)
        if is_sentinel(r.metric_name, r.metric_value):
            if out[key] is None or r.snr_db < out[key]:
                out[key] = r.snr_db
    return out


__all__ = [
    "ExperimentConfig", "parse_config", "load_config", "Link", "BerPoint", "run_ber_sweep", "ber_csv",
    "monotonicity_flags", "run_arch_sweep", "arch_csv", "select_best_fit", "run_payload_eval", "payload_csv",
    "min_snr_to_sentinel", "train_from_config", "METRIC_NAME",
]
