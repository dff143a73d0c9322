"""
Transformer neural receiver.

One token per resource element (symbol-major), features
``[Re y_a, Im y_a for each antenna, log10(noise_var), pilot_flag]``, an input
dense layer, a learned 2-D positional embedding, pre-LN transformer encoder
blocks, a final layer norm and an output dense layer producing one LLR per
bit (``log P(1)/P(0)``). Pilot-token outputs are dropped.
"""

from __future__ import annotations

import struct
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import autodiff as ad
from .autodiff import AttentionParams, Tensor
from .channel import ChannelConfig, draw_channels, ebno_to_noise_var
from .errors import ConfigError, CorruptCheckpointError, DivergedError, ShapeError
from .mapping import constellation
from .ofdm import FrameConfig, ReceivedGrid, pilot_values
from .seeding import derive_rng


@dataclass(frozen=True)
class NeuralReceiverConfig:
    num_blocks: int = 4
    num_heads: int = 8
    embed_dim: int = 128
    ffn_dim: int = 128
    bits_per_symbol: int = 6
    num_symbols: int = 14
    fft_size: int = 128
    num_rx: int = 2
    pilot_symbol_indices: tuple = (2, 11)
    pilot_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pilot_symbol_indices", tuple(int(i) for i in self.pilot_symbol_indices))
        if self.embed_dim % self.num_heads:
            raise ConfigError(f"embed_dim {self.embed_dim} not divisible by num_heads {self.num_heads}")
        if min(self.num_blocks, self.num_heads, self.embed_dim, self.ffn_dim) < 1:
            raise ConfigError("model dimensions must be positive")

    @property
    def num_features(self) -> int:
        return 2 * self.num_rx + 2

    @property
    def pilot_mask(self) -> np.ndarray:
        mask = np.zeros((self.num_symbols, self.fft_size), dtype=bool)
        mask[list(self.pilot_symbol_indices)] = True
        return mask

    def frame(self, **overrides) -> FrameConfig:
        return FrameConfig(
            num_symbols=self.num_symbols,
            fft_size=self.fft_size,
            pilot_symbol_indices=self.pilot_symbol_indices,
            bits_per_symbol=self.bits_per_symbol,
            **overrides,
        )

    def to_items(self) -> dict:
        d = asdict(self)
        d["pilot_symbol_indices"] = ",".join(map(str, self.pilot_symbol_indices))
        return {k: str(v) for k, v in d.items()}

    @classmethod
    def from_items(cls, items: dict) -> "NeuralReceiverConfig":
        kw = {}
        for f in fields(cls):
            if f.name not in items:
                raise CorruptCheckpointError(f"config key {f.name!r} missing")
            raw = items[f.name]
            if f.name == "pilot_symbol_indices":
                kw[f.name] = tuple(int(x) for x in raw.split(",") if x)
            else:
                kw[f.name] = int(raw)
        return cls(**kw)


@dataclass
class TrainReport:
    loss_history: list = field(default_factory=list)
    accuracy_history: list = field(default_factory=list)
    seconds_history: list = field(default_factory=list)


# -- parameters --------------------------------------------------------------


def param_shapes(cfg: NeuralReceiverConfig) -> dict:
    E, F, m = cfg.embed_dim, cfg.ffn_dim, cfg.bits_per_symbol
    shapes = {
        "input.w": (cfg.num_features, E),
        "input.b": (E,),
        "pos.symbol": (cfg.num_symbols, E),
        "pos.subcarrier": (cfg.fft_size, E),
    }
    for i in range(cfg.num_blocks):
        p = f"block{i}."
        shapes.update({p + "ln1.g": (E,), p + "ln1.b": (E,)})
        for name in ("q", "k", "v", "o"):
            shapes[p + f"attn.w{name}"] = (E, E)
            shapes[p + f"attn.b{name}"] = (E,)
        shapes.update({
            p + "ln2.g": (E,),
            p + "ln2.b": (E,),
            p + "ffn.w1": (E, F),
            p + "ffn.b1": (F,),
            p + "ffn.w2": (F, E),
            p + "ffn.b2": (E,),
        })
    shapes.update({"final_ln.g": (E,), "final_ln.b": (E,), "output.w": (E, m), "output.b": (m,)})
    return shapes


OUTPUT_INIT_SCALE = 0.1


def build_model(cfg: NeuralReceiverConfig, init_seed: int) -> dict:
    """Parameter dict of float64 Tensors.

    Weight matrices are uniform in ``+-1/sqrt(fan_in)``; positional tables
    use ``fan_in = embed_dim``; the output projection is shrunk by
    ``OUTPUT_INIT_SCALE`` so initial LLRs sit near 0. Biases start at 0 and
    layer-norm gains at 1.
    """
    rng = np.random.default_rng(init_seed)
    params = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith(".g"):
            data = np.ones(shape)
        elif len(shape) == 1:
            data = np.zeros(shape)
        else:
            fan_in = cfg.embed_dim if name.startswith("pos.") else shape[0]
            lim = 1.0 / np.sqrt(fan_in)
            if name == "output.w":
                lim *= OUTPUT_INIT_SCALE
            data = rng.uniform(-lim, lim, size=shape)
        params[name] = Tensor(data, requires_grad=True)
    return params


def num_parameters(params: dict) -> int:
    return sum(p.data.size for p in params.values())


# -- forward -----------------------------------------------------------------


def input_features(y: np.ndarray, noise_var, pilot_mask: np.ndarray) -> np.ndarray:
    """Token features for a batch ``y`` of shape ``(B, num_rx, S, F)``.

    Returns ``(B, S*F, 2*num_rx + 2)``.
    """
    B, A, S, F = y.shape
    yt = y.reshape(B, A, S * F).transpose(0, 2, 1)
    feats = np.empty((B, S * F, 2 * A + 2))
    feats[..., 0 : 2 * A : 2] = yt.real
    feats[..., 1 : 2 * A : 2] = yt.imag
    feats[..., 2 * A] = np.log10(np.broadcast_to(np.asarray(noise_var, dtype=float), (B,)))[:, None]
    feats[..., 2 * A + 1] = pilot_mask.reshape(-1)
    return feats


def _block(h: Tensor, params: dict, i: int, num_heads: int) -> Tensor:
    p = f"block{i}."
    attn = AttentionParams(
        *(params[p + f"attn.{n}"] for n in ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")),
        num_heads=num_heads,
    )
    x = ad.layer_norm(h, params[p + "ln1.g"], params[p + "ln1.b"])
    h = h + ad.multi_head_attention(x, attn)
    x = ad.layer_norm(h, params[p + "ln2.g"], params[p + "ln2.b"])
    x = ad.dense(ad.relu(ad.dense(x, params[p + "ffn.w1"], params[p + "ffn.b1"])), params[p + "ffn.w2"], params[p + "ffn.b2"])
    return h + x


def forward_logits(feats: np.ndarray, params: dict, cfg: NeuralReceiverConfig) -> Tensor:
    """Per-token logits ``(B, S*F, m)`` from features ``(B, S*F, num_features)``."""
    B, T, nf = feats.shape
    if T != cfg.num_symbols * cfg.fft_size or nf != cfg.num_features:
        raise ShapeError("neural receiver input", feats.shape, (B, cfg.num_symbols * cfg.fft_size, cfg.num_features))
    E = cfg.embed_dim
    h = ad.dense(Tensor(feats), params["input.w"], params["input.b"])
    pos = ad.reshape(params["pos.symbol"], (cfg.num_symbols, 1, E)) + ad.reshape(params["pos.subcarrier"], (1, cfg.fft_size, E))
    h = h + ad.reshape(pos, (T, E))
    for i in range(cfg.num_blocks):
        h = _block(h, params, i, cfg.num_heads)
    h = ad.layer_norm(h, params["final_ln.g"], params["final_ln.b"])
    return ad.dense(h, params["output.w"], params["output.b"])


def nr_forward(rx, noise_var, params: dict, cfg: NeuralReceiverConfig) -> np.ndarray:
    """LLRs ``(num_data_re, m)`` for one received grid, or ``(B, num_data_re, m)``
    when ``rx`` is a batch array ``(B, num_rx, S, F)``."""
    y = rx.samples if isinstance(rx, ReceivedGrid) else np.asarray(rx)
    single = y.ndim == 3
    y = y[None] if single else y
    expected = (cfg.num_rx, cfg.num_symbols, cfg.fft_size)
    if y.shape[1:] != expected:
        raise ShapeError("nr_forward", y.shape[1:], expected)
    mask = cfg.pilot_mask
    logits = forward_logits(input_features(y, noise_var, mask), params, cfg).data
    out = logits[:, ~mask.reshape(-1), :]
    return out[0] if single else out


# -- training ----------------------------------------------------------------


def simulate_batch(rng, cfg: NeuralReceiverConfig, frame: FrameConfig, chan_cfg: ChannelConfig | None, batch: int, snr_range_db):
    """Random uncoded frames through the channel (``chan_cfg=None``: AWGN only).

    Returns ``(y, noise_var, bits, channel)`` with ``bits`` shaped
    ``(B, S*F, m)`` (zeros on pilot tokens).
    """
    S, F, m = cfg.num_symbols, cfg.fft_size, cfg.bits_per_symbol
    mask = cfg.pilot_mask
    lo, hi = snr_range_db
    ebno = rng.uniform(lo, hi, size=batch)
    noise_var = np.array([ebno_to_noise_var(e, m, frame.code_rate) for e in ebno])
    bits = np.zeros((batch, S * F, m), dtype=np.uint8)
    data_tok = ~mask.reshape(-1)
    bits[:, data_tok] = rng.integers(0, 2, size=(batch, int(data_tok.sum()), m))
    weights = 1 << np.arange(m - 1, -1, -1)
    labels = (bits * weights).sum(-1)
    x = constellation(2**m)[labels].reshape(batch, S, F)
    x[:, mask] = pilot_values(frame, cfg.pilot_seed).ravel()
    if chan_cfg is None:
        H = np.ones((batch, cfg.num_rx, S, F), dtype=np.complex128)
    else:
        H = draw_channels(chan_cfg, frame, rng, batch)
    noise = (rng.standard_normal(H.shape) + 1j * rng.standard_normal(H.shape)) * np.sqrt(noise_var / 2)[:, None, None, None]
    y = H * x[:, None] + noise
    return y, noise_var, bits, H


def train(
    cfg: NeuralReceiverConfig,
    frame: FrameConfig,
    chan_cfg: ChannelConfig | None,
    iters: int,
    batch_size: int,
    snr_range_db,
    master_seed: int,
    lr: float = 1e-3,
    weight_decay: float = 0.01,
    init_seed: int | None = None,
    params: dict | None = None,
    log=None,
):
    """Train with BCE on raw (uncoded) bits; pilots are masked from the loss.

    Returns ``(params, TrainReport)``. Randomness for iteration ``i`` comes
    from ``derive_rng(master_seed, "train", i)``.
    """
    if iters < 1:
        raise ConfigError("iters must be >= 1")
    if frame.num_symbols != cfg.num_symbols or frame.fft_size != cfg.fft_size or frame.bits_per_symbol != cfg.bits_per_symbol:
        raise ConfigError("frame config does not match the receiver config")
    if params is None:
        params = build_model(cfg, master_seed if init_seed is None else init_seed)
    state = ad.OptimizerState(lr=lr, weight_decay=weight_decay)
    mask = cfg.pilot_mask
    loss_mask = np.broadcast_to(~mask.reshape(1, -1, 1), (batch_size, mask.size, cfg.bits_per_symbol))
    report = TrainReport()

    for it in range(iters):
        t0 = time.perf_counter()
        rng = derive_rng(master_seed, "train", it)
        y, nv, bits, _ = simulate_batch(rng, cfg, frame, chan_cfg, batch_size, snr_range_db)
        for p in params.values():
            p.zero_grad()
        logits = forward_logits(input_features(y, nv, mask), params, cfg)
        loss = ad.bce_with_logits(logits, bits, loss_mask)
        if not np.isfinite(loss.data):
            raise DivergedError(it + 1)
        loss.backward()
        ad.adamw_step(params, {k: p.grad for k, p in params.items()}, state)

        acc = ((logits.data > 0) == bits)[loss_mask].mean()
        report.loss_history.append(float(loss.data))
        report.accuracy_history.append(float(acc))
        report.seconds_history.append(time.perf_counter() - t0)
        if log is not None:
            log(it, float(loss.data), float(acc))
    return params, report


# -- checkpoint --------------------------------------------------------------

MAGIC = b"NRX1"
FORMAT_VERSION = 1


def _pack_str(s: str) -> bytes:
    b = s.encode("utf-8")
    return struct.pack("<I", len(b)) + b


def save_checkpoint(params: dict, cfg: NeuralReceiverConfig, path) -> None:
    out = bytearray(MAGIC)
    out += struct.pack("<I", FORMAT_VERSION)
    items = cfg.to_items()
    out += struct.pack("<I", len(items))
    for k, v in items.items():
        out += _pack_str(k) + _pack_str(v)
    out += struct.pack("<I", len(params))
    for name, p in params.items():
        data = np.ascontiguousarray(p.data if isinstance(p, Tensor) else p, dtype="<f8")
        out += _pack_str(name)
        out += struct.pack("<I", data.ndim)
        out += struct.pack(f"<{data.ndim}Q", *data.shape)
        out += data.tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(out))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf, self.pos = buf, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CorruptCheckpointError(f"truncated checkpoint at byte {self.pos}")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        try:
            return self.take(self.u32()).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptCheckpointError(f"bad UTF-8 near byte {self.pos}") from exc


def load_checkpoint(path, expect: NeuralReceiverConfig | None = None):
    """Read a checkpoint; returns ``(params, cfg)``.

    With ``expect`` given, the stored tensors must have exactly the shapes
    that config implies.
    """
    with open(path, "rb") as fh:
        r = _Reader(fh.read())
    if r.take(4) != MAGIC:
        raise CorruptCheckpointError("bad magic")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise CorruptCheckpointError(f"unsupported format version {version}")
    items = {}
    for _ in range(r.u32()):
        k = r.string()
        items[k] = r.string()
    try:
        cfg = NeuralReceiverConfig.from_items(items)
    except (ValueError, ConfigError) as exc:
        raise CorruptCheckpointError(f"bad config block: {exc}") from exc
    params = {}
    for _ in range(r.u32()):
        name = r.string()
        rank = r.u32()
        dims = struct.unpack(f"<{rank}Q", r.take(8 * rank))
        count = int(np.prod(dims)) if rank else 1
        data = np.frombuffer(r.take(8 * count), dtype="<f8").astype(np.float64).reshape(dims)
        params[name] = Tensor(data, requires_grad=True)
    if r.pos != len(r.buf):
        raise CorruptCheckpointError("trailing bytes after last tensor")

    for ref in (cfg, expect):
        if ref is None:
            continue
        shapes = param_shapes(ref)
        got = {k: v.shape for k, v in params.items()}
        if got != shapes:
            missing = sorted(set(shapes) ^ set(got)) or [k for k in shapes if shapes[k] != got[k]]
            raise CorruptCheckpointError(f"tensor shapes do not match config (first difference: {missing[0]})")
    return params, cfg
