"""Central-difference gradient checks for every autodiff layer and a tiny
end-to-end neural receiver."""

import numpy as np

from . import autodiff as ad
from .autodiff import AttentionParams, grad_check
from .neural import NeuralReceiverConfig, build_model, forward_logits, input_features

TOLERANCE = 1e-4
STEP = 1e-5


def _away_from_kinks(x, margin=1e-3):
    return np.where(np.abs(x) < margin, np.sign(x + (x == 0)) * margin, x)


def _cases(rng):
    proj = lambda shape: rng.standard_normal(shape)  # noqa: E731
    w22 = proj((3, 4, 5))

    def weighted(t, w):
        return ad.sum_(ad.mul(t, ad.Tensor(w)))

    cases = {
        "matmul": (lambda a, b: weighted(ad.matmul(a, b), w22), [proj((3, 4, 6)), proj((6, 5))]),
        "add": (lambda a, b: weighted(ad.add(a, b), w22), [proj((3, 4, 5)), proj((5,))]),
        "mul": (lambda a, b: weighted(ad.mul(a, b), w22), [proj((3, 4, 5)), proj((1, 4, 1))]),
        "scale": (lambda a: weighted(ad.scale(a, -1.7), w22), [proj((3, 4, 5))]),
        "relu": (lambda a: weighted(ad.relu(a), w22), [_away_from_kinks(proj((3, 4, 5)))]),
        "layer_norm": (lambda x, g, b: weighted(ad.layer_norm(x, g, b), w22), [proj((3, 4, 5)), proj((5,)), proj((5,))]),
        "softmax": (lambda a: weighted(ad.softmax(a), w22), [proj((3, 4, 5))]),
        "concat": (lambda a, b: weighted(ad.concat([a, b], axis=-1), w22), [proj((3, 4, 2)), proj((3, 4, 3))]),
        "slice": (lambda a: weighted(a[..., 1:6], w22), [proj((3, 4, 8))]),
        "reshape": (lambda a: weighted(ad.reshape(a, (3, 4, 5)), w22), [proj((12, 5))]),
        "transpose": (lambda a: weighted(ad.transpose(a), w22), [proj((3, 5, 4))]),
        "mean": (lambda a: ad.mean(ad.mul(a, a)), [proj((3, 4))]),
        "dense": (lambda x, w, b: weighted(ad.dense(x, w, b), w22), [proj((3, 4, 6)), proj((6, 5)), proj((5,))]),
    }

    E, T = 8, 5
    attn_w = rng.standard_normal((2, T, E))

    # the key bias shifts each score row uniformly, so its gradient is
    # identically zero and is held fixed here
    bk = ad.Tensor(proj((E,)))

    def mha(x, wq, bq, wk, wv, bv, wo, bo):
        p = AttentionParams(wq, bq, wk, bk, wv, bv, wo, bo, num_heads=2)
        return weighted(ad.multi_head_attention(x, p), attn_w)

    attn_inputs = [proj((2, T, E))]
    for i in range(4):
        attn_inputs.append(proj((E, E)) / np.sqrt(E))
        if i != 1:
            attn_inputs.append(proj((E,)))
    cases["multi_head_attention"] = (mha, attn_inputs)

    labels = rng.integers(0, 2, size=(4, 6)).astype(float)
    mask = rng.random((4, 6)) > 0.3
    cases["bce_with_logits"] = (lambda l: ad.bce_with_logits(l, labels, mask), [proj((4, 6)) * 2])
    return cases


def tiny_receiver_case(rng):
    """BCE of a 2x4-grid, embed-8 receiver as a function of all its parameters."""
    cfg = NeuralReceiverConfig(
        num_blocks=1, num_heads=2, embed_dim=8, ffn_dim=8, bits_per_symbol=2,
        num_symbols=2, fft_size=4, num_rx=2, pilot_symbol_indices=(0,),
    )
    params = build_model(cfg, int(rng.integers(2**31)))
    names = [n for n in params if not n.endswith("attn.bk")]
    for n in names:
        if n.endswith(".b") or n.endswith(".g") or n.endswith(("b1", "b2", "bq", "bk", "bv", "bo")):
            params[n].data = params[n].data + 0.1 * rng.standard_normal(params[n].shape)
    y = rng.standard_normal((3, 2, 2, 4)) + 1j * rng.standard_normal((3, 2, 2, 4))
    feats = input_features(y, np.array([0.1, 0.3, 1.0]), cfg.pilot_mask)
    bits = rng.integers(0, 2, size=(3, 8, 2)).astype(float)
    mask = np.broadcast_to(~cfg.pilot_mask.reshape(1, -1, 1), bits.shape)

    def f(*ts):
        p = dict(params)
        p.update(zip(names, ts))
        return ad.bce_with_logits(forward_logits(feats, p, cfg), bits, mask)

    return f, [params[n].data for n in names]


def run_gradcheck(seed: int = 0) -> dict:
    """Max relative error per layer plus ``"end_to_end"``."""
    rng = np.random.default_rng(seed)
    report = {}
    for name, (f, inputs) in _cases(rng).items():
        report[name] = grad_check(f, inputs, STEP)
    f, inputs = tiny_receiver_case(rng)
    report["end_to_end"] = grad_check(f, inputs, STEP)
    return report


def passed(report: dict) -> bool:
    return all(v < TOLERANCE for v in report.values())
