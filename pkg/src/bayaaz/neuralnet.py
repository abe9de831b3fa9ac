"""Numeric core: embedding, stacked LSTM, attention pooling and exact gradients.

Everything is float64 numpy.  The internal primitives operate on a batch
of equal-length token sequences (shape [B, T]); the public forward /
backward wrap the batch of one.  Gate pre-activations are stored in a
single [.., 4U] block ordered i, f, g, o.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConsistencyError, SequenceLengthError, ShapeError, VocabError


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    seq_len: int = 40
    embed_dim: int = 100
    lstm_units: int = 128
    lstm_layers: int = 3

    def __post_init__(self):
        for name in ("seq_len", "embed_dim", "lstm_units", "lstm_layers"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.vocab_size < 3:
            raise ValueError("vocab_size must be at least 3 (PAD, END, one real token)")

    def layer_input_dim(self, layer: int) -> int:
        return self.embed_dim if layer == 0 else self.lstm_units


@dataclass
class LayerParams:
    w_x: np.ndarray     # [in_dim, 4U]
    w_h: np.ndarray     # [U, 4U]
    b: np.ndarray       # [4U]


@dataclass
class ModelParams:
    config: ModelConfig
    embedding: np.ndarray           # [V, E]
    layers: list[LayerParams]
    attention_v: np.ndarray         # [U]
    w_out: np.ndarray               # [U, V]
    b_out: np.ndarray               # [V]

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        """All parameter tensors in the documented fixed order."""
        out = [("embedding", self.embedding)]
        for i, layer in enumerate(self.layers):
            out += [(f"layer{i}.w_x", layer.w_x), (f"layer{i}.w_h", layer.w_h), (f"layer{i}.b", layer.b)]
        out += [("attention_v", self.attention_v), ("w_out", self.w_out), ("b_out", self.b_out)]
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(
            config=self.config,
            embedding=self.embedding.copy(),
            layers=[LayerParams(l.w_x.copy(), l.w_h.copy(), l.b.copy()) for l in self.layers],
            attention_v=self.attention_v.copy(),
            w_out=self.w_out.copy(),
            b_out=self.b_out.copy(),
        )


def zeros_like_params(params: ModelParams) -> ModelParams:
    return ModelParams(
        config=params.config,
        embedding=np.zeros_like(params.embedding),
        layers=[LayerParams(np.zeros_like(l.w_x), np.zeros_like(l.w_h), np.zeros_like(l.b))
                for l in params.layers],
        attention_v=np.zeros_like(params.attention_v),
        w_out=np.zeros_like(params.w_out),
        b_out=np.zeros_like(params.b_out),
    )


def init_params(config: ModelConfig, rng: np.random.Generator) -> ModelParams:
    """Uniform(-s, s) with s = 1/sqrt(fan-in); forget-gate bias starts at 1."""
    u = config.lstm_units

    def uniform(shape, fan_in):
        s = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-s, s, size=shape)

    layers = []
    for ell in range(config.lstm_layers):
        in_dim = config.layer_input_dim(ell)
        b = np.zeros(4 * u)
        b[u:2 * u] = 1.0     # forget gate slice
        layers.append(LayerParams(
            w_x=uniform((in_dim, 4 * u), in_dim),
            w_h=uniform((u, 4 * u), u),
            b=b,
        ))
    return ModelParams(
        config=config,
        embedding=uniform((config.vocab_size, config.embed_dim), config.embed_dim),
        layers=layers,
        attention_v=uniform((u,), u),
        w_out=uniform((u, config.vocab_size), u),
        b_out=np.zeros(config.vocab_size),
    )


def sigmoid(x: np.ndarray) -> np.ndarray:
    # Stable in both tails.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


@dataclass
class GateRecord:
    """Single-step gate activations, kept for the backward pass."""
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray
    c_prev: np.ndarray


def lstm_cell_forward(x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray,
                      layer: LayerParams) -> tuple[np.ndarray, np.ndarray, GateRecord]:
    """One LSTM step: i,f,o = sigmoid, g = tanh, c = f*c_prev + i*g, h = o*tanh(c)."""
    u = layer.w_h.shape[0]
    if x.shape[-1] != layer.w_x.shape[0] or h_prev.shape[-1] != u or c_prev.shape[-1] != u:
        raise ShapeError(
            f"cell input dims {x.shape[-1]}/{h_prev.shape[-1]}/{c_prev.shape[-1]} "
            f"do not match layer dims {layer.w_x.shape[0]}/{u}")
    pre = x @ layer.w_x + h_prev @ layer.w_h + layer.b
    i = sigmoid(pre[..., :u])
    f = sigmoid(pre[..., u:2 * u])
    g = np.tanh(pre[..., 2 * u:3 * u])
    o = sigmoid(pre[..., 3 * u:])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c, GateRecord(i=i, f=f, g=g, o=o, c=c, c_prev=c_prev)


@dataclass
class ForwardCache:
    """Everything backward() needs, for a batch of equal-length contexts."""
    ids: np.ndarray                          # [B, T] int
    layer_inputs: list[np.ndarray]           # per layer: [B, T, in_dim]
    gates: list[list[GateRecord]]            # [layer][t], arrays [B, U]
    hidden: list[np.ndarray]                 # per layer: [B, T, U]
    alphas: np.ndarray                       # [B, T] attention weights
    context_vec: np.ndarray                  # [B, U]
    logits: np.ndarray                       # [B, V]
    probs: np.ndarray                        # [B, V]
    param_shape_sig: tuple = field(default=())


def _shape_sig(params: ModelParams) -> tuple:
    return tuple(t.shape for _, t in params.tensors())


def forward_batch(params: ModelParams, ids: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Forward pass over a [B, T] batch of token ids (same true length, no padding)."""
    cfg = params.config
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 2:
        raise ShapeError(f"expected [B, T] ids, got shape {ids.shape}")
    B, T = ids.shape
    if not 1 <= T <= cfg.seq_len:
        raise SequenceLengthError(f"context length {T} outside 1..{cfg.seq_len}")
    if ids.min() < 0 or ids.max() >= cfg.vocab_size:
        raise VocabError(f"token id out of range 0..{cfg.vocab_size - 1}")

    u = cfg.lstm_units
    x = params.embedding[ids]            # [B, T, E]
    layer_inputs, gates, hidden = [], [], []
    for layer in params.layers:
        layer_inputs.append(x)
        h = np.zeros((B, u))
        c = np.zeros((B, u))
        step_gates: list[GateRecord] = []
        hs = np.empty((B, T, u))
        for t in range(T):
            h, c, rec = lstm_cell_forward(x[:, t, :], h, c, layer)
            step_gates.append(rec)
            hs[:, t, :] = h
        gates.append(step_gates)
        hidden.append(hs)
        x = hs                            # stacked: next layer consumes this hidden sequence

    # Attention pooling over the final layer's hidden states.
    scores = hidden[-1] @ params.attention_v        # [B, T]
    alphas = softmax(scores, axis=1)
    context_vec = np.einsum("bt,btu->bu", alphas, hidden[-1])
    logits = context_vec @ params.w_out + params.b_out
    probs = softmax(logits, axis=1)

    cache = ForwardCache(ids=ids, layer_inputs=layer_inputs, gates=gates, hidden=hidden,
                         alphas=alphas, context_vec=context_vec, logits=logits, probs=probs,
                         param_shape_sig=_shape_sig(params))
    return probs, cache


def forward(params: ModelParams, context: list[int]) -> tuple[np.ndarray, ForwardCache]:
    """Next-token distribution for one context. Deterministic; sums to 1."""
    ids = np.asarray(context, dtype=np.int64)
    if ids.ndim != 1 or ids.size == 0:
        raise SequenceLengthError("context must be a non-empty 1-D id sequence")
    probs, cache = forward_batch(params, ids[None, :])
    return probs[0], cache


def cross_entropy(probs: np.ndarray, target: int) -> float:
    """-ln p[target], with the probability clamped to at least 1e-12."""
    probs = np.asarray(probs)
    if not 0 <= target < probs.shape[-1]:
        raise VocabError(f"target {target} out of range for vocab of {probs.shape[-1]}")
    return float(-np.log(max(float(probs[..., target] if probs.ndim == 1 else probs[target]), 1e-12)))


def backward_batch(cache: ForwardCache, targets: np.ndarray, params: ModelParams) -> ModelParams:
    """Gradients of summed cross-entropy over the batch. Same shapes as params."""
    if cache.param_shape_sig != _shape_sig(params):
        raise ConsistencyError("forward cache does not match these parameters")
    cfg = params.config
    B, T = cache.ids.shape
    u = cfg.lstm_units
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != (B,):
        raise ShapeError(f"expected {B} targets, got shape {targets.shape}")
    if targets.min() < 0 or targets.max() >= cfg.vocab_size:
        raise VocabError("target id out of range")

    grads = zeros_like_params(params)

    # Softmax + cross-entropy: dlogits = p - onehot(target).
    dlogits = cache.probs.copy()
    dlogits[np.arange(B), targets] -= 1.0

    grads.w_out += cache.context_vec.T @ dlogits
    grads.b_out += dlogits.sum(axis=0)
    dctx = dlogits @ params.w_out.T                   # [B, U]

    # Attention pooling backward.
    h_top = cache.hidden[-1]                          # [B, T, U]
    alphas = cache.alphas
    dh_top = alphas[:, :, None] * dctx[:, None, :]    # via context_vec = sum a_t h_t
    da = np.einsum("bu,btu->bt", dctx, h_top)
    dscores = alphas * (da - np.sum(alphas * da, axis=1, keepdims=True))
    grads.attention_v += np.einsum("bt,btu->u", dscores, h_top)
    dh_top = dh_top + dscores[:, :, None] * params.attention_v[None, None, :]

    # Backprop through time, top layer down.
    dh_seq = dh_top
    for ell in reversed(range(cfg.lstm_layers)):
        layer = params.layers[ell]
        g_layer = grads.layers[ell]
        x_seq = cache.layer_inputs[ell]
        step_gates = cache.gates[ell]
        dx_seq = np.empty((B, T, x_seq.shape[2]))
        dh_next = np.zeros((B, u))
        dc_next = np.zeros((B, u))
        for t in reversed(range(T)):
            rec = step_gates[t]
            dh = dh_seq[:, t, :] + dh_next
            tanh_c = np.tanh(rec.c)
            do = dh * tanh_c
            dc = dh * rec.o * (1.0 - tanh_c ** 2) + dc_next
            di = dc * rec.g
            df = dc * rec.c_prev
            dg = dc * rec.i
            dc_next = dc * rec.f
            dpre = np.concatenate([
                di * rec.i * (1.0 - rec.i),
                df * rec.f * (1.0 - rec.f),
                dg * (1.0 - rec.g ** 2),
                do * rec.o * (1.0 - rec.o),
            ], axis=1)                                 # [B, 4U]
            g_layer.w_x += x_seq[:, t, :].T @ dpre
            g_layer.b += dpre.sum(axis=0)
            h_prev = cache.hidden[ell][:, t - 1, :] if t > 0 else np.zeros((B, u))
            g_layer.w_h += h_prev.T @ dpre
            dx_seq[:, t, :] = dpre @ layer.w_x.T
            dh_next = dpre @ layer.w_h.T
        dh_seq = dx_seq

    # dh_seq now holds the embedding-sequence gradient.
    np.add.at(grads.embedding, cache.ids, dh_seq)
    return grads


def backward(cache: ForwardCache, target: int, params: ModelParams) -> ModelParams:
    """Exact gradients of cross_entropy(forward(params, context), target)."""
    return backward_batch(cache, np.asarray([target]), params)


def global_grad_norm(grads: ModelParams) -> float:
    return float(np.sqrt(sum(float(np.sum(t * t)) for _, t in grads.tensors())))


def clip_gradients(grads: ModelParams, max_norm: float) -> float:
    """Scale all gradients in place so the global norm is at most max_norm."""
    norm = global_grad_norm(grads)
    if norm > max_norm and norm > 0:
        scale = max_norm / norm
        for _, t in grads.tensors():
            t *= scale
    return norm


def apply_gradients(params: ModelParams, grads: ModelParams, lr: float) -> None:
    for (_, p), (_, g) in zip(params.tensors(), grads.tensors()):
        p -= lr * g


def scale_gradients(grads: ModelParams, factor: float) -> None:
    for _, t in grads.tensors():
        t *= factor


def accumulate_gradients(total: ModelParams, part: ModelParams) -> None:
    for (_, a), (_, b) in zip(total.tensors(), part.tensors()):
        a += b


def params_equal(a: ModelParams, b: ModelParams) -> bool:
    if a.config != b.config:
        return False
    return all(na == nb and np.array_equal(ta, tb)
               for (na, ta), (nb, tb) in zip(a.tensors(), b.tensors()))
