"""Training: window construction, split, epoch loop and checkpoint persistence.

Checkpoint file layout (little-endian throughout):
  magic "BYZ1" | format_version u32 | metadata length u64 | metadata JSON (utf-8)
  then per tensor, in the order ModelParams.tensors() documents:
  ndim u32 | each dim u64 | raw float64 data.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .corpus import CharVocab, END_ID, SampleSet, build_vocab
from .errors import (
    CheckpointCorruptError,
    CheckpointFormatError,
    CheckpointVersionError,
    InsufficientDataError,
)
from .neuralnet import (
    LayerParams,
    ModelConfig,
    ModelParams,
    accumulate_gradients,
    backward_batch,
    clip_gradients,
    cross_entropy,
    forward_batch,
    init_params,
    zeros_like_params,
)

logger = logging.getLogger(__name__)

MAGIC = b"BYZ1"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    split: float = 0.80
    batch_size: int = 64
    learning_rate: float = 1e-3
    grad_clip: float = 5.0
    window_stride: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.split < 1:
            raise ValueError("split must lie strictly between 0 and 1")
        for name in ("epochs", "batch_size", "window_stride"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


@dataclass
class TrainHistory:
    epochs: list[tuple[float, float]] = field(default_factory=list)  # (train_loss, val_loss)
    overfit_epoch: int | None = None    # 1-based epoch where val rose while train fell

    def record(self, train_loss: float, val_loss: float) -> None:
        if self.epochs and self.overfit_epoch is None:
            prev_train, prev_val = self.epochs[-1]
            if val_loss > prev_val and train_loss < prev_train:
                self.overfit_epoch = len(self.epochs) + 1
        self.epochs.append((train_loss, val_loss))


@dataclass
class Checkpoint:
    config: ModelConfig
    vocab: CharVocab
    params: ModelParams
    history: TrainHistory
    format_version: int = FORMAT_VERSION


def make_windows(samples: SampleSet, vocab: CharVocab, seq_len: int,
                 stride: int = 1) -> list[tuple[list[int], int]]:
    """Next-character prediction windows that never cross sample boundaries.

    Each sample is encoded with END appended; the target position sweeps
    the sample by `stride`, its context being the (up to seq_len)
    preceding tokens, so short samples yield growing-prefix windows.
    """
    if stride < 1:
        raise ValueError("stride must be at least 1")
    windows: list[tuple[list[int], int]] = []
    skipped = 0
    for sample in samples.samples:
        ids = vocab.encode(sample) + [END_ID]
        if len(ids) < 2:
            skipped += 1
            continue
        for j in range(1, len(ids), stride):
            windows.append((ids[max(0, j - seq_len):j], ids[j]))
    if skipped:
        logger.warning("make_windows skipped %d sample(s) shorter than 2 tokens", skipped)
    return windows


def split_windows(windows, split: float, rng: np.random.Generator):
    """Shuffle once, then cut into disjoint train/validation sets."""
    perm = rng.permutation(len(windows))
    shuffled = [windows[i] for i in perm]
    n_train = int(split * len(shuffled))
    if n_train < 1 or n_train >= len(shuffled):
        raise InsufficientDataError(
            f"split {split} leaves no train or no validation window out of {len(shuffled)}")
    return shuffled[:n_train], shuffled[n_train:]


def _length_groups(batch: list[tuple[list[int], int]]):
    """Group a minibatch by context length, ascending, preserving inner order."""
    groups: dict[int, list[tuple[list[int], int]]] = {}
    for w in batch:
        groups.setdefault(len(w[0]), []).append(w)
    for length in sorted(groups):
        yield groups[length]


def _mean_loss(params: ModelParams, windows: list[tuple[list[int], int]],
               group_size: int = 256) -> float:
    total = 0.0
    for start in range(0, len(windows), group_size):
        for group in _length_groups(windows[start:start + group_size]):
            ids = np.array([ctx for ctx, _ in group], dtype=np.int64)
            probs, _ = forward_batch(params, ids)
            p = probs[np.arange(len(group)), [t for _, t in group]]
            total += float(-np.log(np.maximum(p, 1e-12)).sum())
    return total / len(windows)


def train(samples: SampleSet, config: TrainConfig, model_config: ModelConfig,
          vocab: CharVocab | None = None,
          progress: bool = False) -> Checkpoint:
    """Minibatch gradient descent with norm clipping and a fixed learning rate.

    The vocabulary is derived from the samples unless one is passed in;
    model_config.vocab_size is replaced by the actual vocabulary size.
    """
    if vocab is None:
        vocab = build_vocab(samples)
    model_config = ModelConfig(
        vocab_size=len(vocab),
        seq_len=model_config.seq_len,
        embed_dim=model_config.embed_dim,
        lstm_units=model_config.lstm_units,
        lstm_layers=model_config.lstm_layers,
    )
    windows = make_windows(samples, vocab, model_config.seq_len, config.window_stride)
    if len(windows) < 2:
        raise InsufficientDataError(f"{len(windows)} window(s); need at least 2")

    rng = np.random.default_rng(config.seed)
    params = init_params(model_config, rng)
    train_set, val_set = split_windows(windows, config.split, rng)

    history = TrainHistory()
    for epoch in range(config.epochs):
        epoch_loss = 0.0
        for start in range(0, len(train_set), config.batch_size):
            batch = train_set[start:start + config.batch_size]
            grads = zeros_like_params(params)
            for group in _length_groups(batch):
                ids = np.array([ctx for ctx, _ in group], dtype=np.int64)
                targets = np.array([t for _, t in group], dtype=np.int64)
                probs, cache = forward_batch(params, ids)
                p = probs[np.arange(len(group)), targets]
                epoch_loss += float(-np.log(np.maximum(p, 1e-12)).sum())
                accumulate_gradients(grads, backward_batch(cache, targets, params))
            for _, t in grads.tensors():
                t /= len(batch)
            clip_gradients(grads, config.grad_clip)
            for (_, p_), (_, g) in zip(params.tensors(), grads.tensors()):
                p_ -= config.learning_rate * g
        train_loss = epoch_loss / len(train_set)
        val_loss = _mean_loss(params, val_set)
        history.record(train_loss, val_loss)
        if progress:
            logger.info("epoch %d/%d train %.4f val %.4f",
                        epoch + 1, config.epochs, train_loss, val_loss)
    return Checkpoint(config=model_config, vocab=vocab, params=params, history=history)


def _metadata_dict(ck: Checkpoint, train_config: TrainConfig | None) -> dict:
    return {
        "model_config": asdict(ck.config),
        "train_config": asdict(train_config) if train_config else None,
        "vocab_tokens": ck.vocab.tokens,
        "history": {
            "epochs": ck.history.epochs,
            "overfit_epoch": ck.history.overfit_epoch,
        },
    }


def save_checkpoint(ck: Checkpoint, path: str, train_config: TrainConfig | None = None) -> None:
    meta = json.dumps(_metadata_dict(ck, train_config), ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", ck.format_version))
        fh.write(struct.pack("<Q", len(meta)))
        fh.write(meta)
        for _, tensor in ck.params.tensors():
            arr = np.ascontiguousarray(tensor, dtype="<f8")
            fh.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<Q", dim))
            fh.write(arr.tobytes())


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointCorruptError(f"truncated checkpoint: wanted {n} bytes, got {len(data)}")
    return data


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise CheckpointFormatError(f"{path} is not a checkpoint (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != FORMAT_VERSION:
            raise CheckpointVersionError(f"unsupported checkpoint version {version}")
        (meta_len,) = struct.unpack("<Q", _read_exact(fh, 8))
        try:
            meta = json.loads(_read_exact(fh, meta_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointCorruptError(f"unreadable checkpoint metadata: {exc}") from exc
        config = ModelConfig(**meta["model_config"])
        vocab = CharVocab.from_tokens(meta["vocab_tokens"])
        history = TrainHistory(
            epochs=[tuple(pair) for pair in meta["history"]["epochs"]],
            overfit_epoch=meta["history"]["overfit_epoch"],
        )

        def read_tensor(expected_shape):
            (ndim,) = struct.unpack("<I", _read_exact(fh, 4))
            shape = tuple(struct.unpack("<Q", _read_exact(fh, 8))[0] for _ in range(ndim))
            if shape != tuple(expected_shape):
                raise CheckpointCorruptError(f"tensor shape {shape} != expected {tuple(expected_shape)}")
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(_read_exact(fh, 8 * count), dtype="<f8")
            return data.reshape(shape).astype(np.float64)

        u, v, e = config.lstm_units, config.vocab_size, config.embed_dim
        embedding = read_tensor((v, e))
        layers = []
        for ell in range(config.lstm_layers):
            in_dim = config.layer_input_dim(ell)
            layers.append(LayerParams(
                w_x=read_tensor((in_dim, 4 * u)),
                w_h=read_tensor((u, 4 * u)),
                b=read_tensor((4 * u,)),
            ))
        params = ModelParams(
            config=config,
            embedding=embedding,
            layers=layers,
            attention_v=read_tensor((u,)),
            w_out=read_tensor((u, v)),
            b_out=read_tensor((v,)),
        )
        if fh.read(1):
            raise CheckpointCorruptError("trailing bytes after final tensor")
    return Checkpoint(config=config, vocab=vocab, params=params, history=history,
                      format_version=version)


def checkpoints_equal(a: Checkpoint, b: Checkpoint) -> bool:
    from .neuralnet import params_equal
    return (a.config == b.config
            and a.vocab.tokens == b.vocab.tokens
            and a.history.epochs == b.history.epochs
            and a.history.overfit_epoch == b.history.overfit_epoch
            and params_equal(a.params, b.params))
