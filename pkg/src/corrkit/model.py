"""Position-wise log-linear corrector and its two-stage training loop.

The model scores output token ``y`` at position ``t`` as

    b[y] + sum_{o=-r..r} W[o, x[t+o], y]

with ``x`` padded by ``<pad>`` beyond the sentence, and normalizes with a
softmax restricted to regular (non-special) tokens. Training is minibatch
SGD on mean cross-entropy plus an L2 penalty on ``W``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .align import AlignedPair
from .corpus import N_SPECIAL, PAD_ID, Vocab
from .perturb import MaskPolicy, make_loss_mask, mask_corpus, pair_rng

MODEL_FORMAT_VERSION = 1


class ToyCorrector:
    def __init__(self, vocab_size: int, radius: int = 2, vocab_digest: str = ""):
        if vocab_size <= N_SPECIAL:
            raise ValueError("vocabulary has no regular tokens")
        if radius < 0:
            raise ValueError("radius must be >= 0")
        self.vocab_size = vocab_size
        self.radius = radius
        self.vocab_digest = vocab_digest
        self.W = np.zeros((2 * radius + 1, vocab_size, vocab_size))
        self.b = np.zeros(vocab_size)
        self.losses: list[float] = []

    @classmethod
    def for_vocab(cls, vocab: Vocab, radius: int = 2) -> "ToyCorrector":
        return cls(len(vocab), radius, vocab.digest())

    @property
    def width(self) -> int:
        return 2 * self.radius + 1

    def copy(self) -> "ToyCorrector":
        other = ToyCorrector(self.vocab_size, self.radius, self.vocab_digest)
        other.W = self.W.copy()
        other.b = self.b.copy()
        return other

    # ------------------------------------------------------------------ scoring

    def windows(self, sequences: Sequence[Sequence[int]]) -> np.ndarray:
        """``(n_positions, 2r+1)`` input ids around every position of every sequence."""
        r = self.radius
        lengths = np.fromiter((len(s) for s in sequences), dtype=np.int64, count=len(sequences))
        if lengths.sum() == 0:
            return np.zeros((0, self.width), dtype=np.int64)
        # sequences laid end to end with r pads before, between and after them
        starts = r + np.concatenate(([0], np.cumsum(lengths + r)[:-1]))
        flat = np.full(int(lengths.sum() + r * (len(sequences) + 1)), PAD_ID, dtype=np.int64)
        centers = np.concatenate([np.arange(s, s + n) for s, n in zip(starts, lengths) if n])
        flat[centers] = np.fromiter((t for s in sequences for t in s), dtype=np.int64, count=len(centers))
        X = np.lib.stride_tricks.sliding_window_view(flat, self.width)[centers - r]
        if X.min() < 0 or X.max() >= self.vocab_size:
            raise ValueError("token id outside the model vocabulary")
        return X

    def logits(self, X: np.ndarray) -> np.ndarray:
        z = np.broadcast_to(self.b, (len(X), self.vocab_size)).copy()
        for o in range(self.width):
            z += self.W[o][X[:, o]]
        z[:, :N_SPECIAL] = -np.inf
        return z

    def probabilities(self, X: np.ndarray) -> np.ndarray:
        z = self.logits(X)
        z -= z.max(axis=1, keepdims=True)
        np.exp(z, out=z)
        z /= z.sum(axis=1, keepdims=True)
        return z

    def loss_and_grad(self, X: np.ndarray, Y: np.ndarray, weights: np.ndarray | None = None, l2: float = 0.0):
        """Mean weighted cross-entropy + ``l2/2 * ||W||^2`` and its gradients.

        ``weights`` is 1 for trained positions and 0 for skipped ones; the
        mean runs over trained positions.
        """
        if weights is None:
            weights = np.ones(len(Y))
        denom = max(float(weights.sum()), 1.0)
        P = self.probabilities(X)
        rows = np.arange(len(Y))
        with np.errstate(divide="ignore"):
            nll = -np.log(P[rows, Y])
        loss = float(np.dot(weights, nll)) / denom + 0.5 * l2 * float(np.sum(self.W * self.W))
        G = P
        G[rows, Y] -= 1.0
        G *= (weights / denom)[:, None]
        V = self.vocab_size
        rows_of = (X + np.arange(self.width) * V) * V  # flat row offset of W[o, x] per window slot
        flat = (rows_of[:, :, None] + np.arange(V)).reshape(-1)
        scattered = np.bincount(flat, weights=np.repeat(G[:, None, :], self.width, axis=1).reshape(-1), minlength=self.W.size)
        gW = scattered.reshape(self.W.shape) + l2 * self.W
        gb = G.sum(axis=0)
        return loss, gW, gb

    # -------------------------------------------------------------------- I/O

    def save(self, path: str | Path) -> None:
        meta = {
            "format_version": MODEL_FORMAT_VERSION,
            "radius": self.radius,
            "vocab_size": self.vocab_size,
            "vocab_digest": self.vocab_digest,
        }
        with open(path, "wb") as f:
            np.savez(f, W=self.W, b=self.b, meta=np.array(json.dumps(meta, sort_keys=True)))

    @classmethod
    def load(cls, path: str | Path) -> "ToyCorrector":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            if meta.get("format_version") != MODEL_FORMAT_VERSION:
                raise ValueError(f"unsupported model format {meta.get('format_version')!r}")
            model = cls(meta["vocab_size"], meta["radius"], meta["vocab_digest"])
            model.W = data["W"].copy()
            model.b = data["b"].copy()
        return model


def forward(model: ToyCorrector, source: Sequence[int], position: int) -> np.ndarray:
    """Output distribution over the vocabulary at one position."""
    if not 0 <= position < len(source):
        raise IndexError(f"position {position} outside a sequence of length {len(source)}")
    r = model.radius
    window = [source[position + o] if 0 <= position + o < len(source) else PAD_ID for o in range(-r, r + 1)]
    return model.probabilities(np.asarray([window], dtype=np.int64))[0]


def predict(model: ToyCorrector, source: Sequence[int]) -> list[int]:
    """Per-position argmax; ties resolve to the lowest id."""
    if len(source) == 0:
        return []
    return np.argmax(model.logits(model.windows([source])), axis=1).tolist()


def predict_many(model: ToyCorrector, sources: Sequence[Sequence[int]]) -> list[list[int]]:
    flat = np.argmax(model.logits(model.windows(sources)), axis=1) if sources else np.zeros(0, np.int64)
    out, pos = [], 0
    for s in sources:
        out.append(flat[pos : pos + len(s)].tolist())
        pos += len(s)
    return out


# --------------------------------------------------------------------- training


@dataclass(frozen=True)
class TrainSchedule:
    mask_epochs: int = 5
    finetune_epochs: int = 3
    lr: float = 10.0
    l2: float = 1e-5
    batch_size: int = 256
    seed: int = 0
    loss_mask_fraction: float = 0.0
    finetune_lr: float | None = None

    def __post_init__(self):
        if self.mask_epochs < 0 or self.finetune_epochs < 0:
            raise ValueError("epoch counts must be >= 0")
        if self.lr <= 0 or (self.finetune_lr is not None and self.finetune_lr <= 0):
            raise ValueError("learning rates must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.loss_mask_fraction <= 1.0:
            raise ValueError("loss_mask_fraction must lie in [0, 1]")

    def to_json(self) -> dict:
        return asdict(self)


def _epoch_arrays(model, pairs, policy, vocab_size, schedule, epoch):
    sources = [list(p.source) for p in pairs] if policy.p == 0 else mask_corpus(pairs, policy, vocab_size, salt=epoch)
    X = model.windows(sources)
    Y = np.fromiter((t for p in pairs for t in p.target), dtype=np.int64, count=len(X))
    if schedule.loss_mask_fraction > 0:
        flags = "".join(
            make_loss_mask(p, schedule.loss_mask_fraction, pair_rng(schedule.seed, i, 1_000_000 + epoch))
            for i, p in enumerate(pairs)
        )
        weights = np.frombuffer(flags.encode("ascii"), dtype=np.uint8) == ord("T")
        weights = weights.astype(np.float64)
    else:
        weights = np.ones(len(Y))
    return X, Y, weights


def _run_epoch(model, X, Y, weights, lr, l2, batch_size, rng) -> float:
    order = rng.permutation(len(Y))
    total, seen = 0.0, 0.0
    for start in range(0, len(order), batch_size):
        idx = order[start : start + batch_size]
        w = weights[idx]
        if not w.any():
            continue
        loss, gW, gb = model.loss_and_grad(X[idx], Y[idx], w, l2)
        model.W -= lr * gW
        model.b -= lr * gb
        total += loss * w.sum()
        seen += w.sum()
    return total / max(seen, 1.0)


def train(
    pairs: Sequence[AlignedPair],
    vocab_size: int,
    policy: MaskPolicy,
    schedule: TrainSchedule,
    radius: int = 2,
    model: ToyCorrector | None = None,
) -> ToyCorrector:
    """Masked training followed by unmasked finetuning.

    Stage one runs ``schedule.mask_epochs`` epochs with masks re-drawn every
    epoch (the epoch number salts the per-pair generators); stage two runs
    ``schedule.finetune_epochs`` epochs with the same policy at ``p = 0``.
    Pairs must be equal-length id sequences with regular-token targets.
    Per-epoch mean losses are recorded in ``model.losses``.
    """
    for i, p in enumerate(pairs):
        if len(p.source) != len(p.target):
            raise ValueError(f"pair {i}: source and target lengths differ ({len(p.source)} vs {len(p.target)})")
        if any(t < N_SPECIAL or t >= vocab_size for t in p.target):
            raise ValueError(f"pair {i}: target holds a special or out-of-vocabulary id")
    if model is None:
        model = ToyCorrector(vocab_size, radius)
    else:
        model = model.copy()
    unmasked = MaskPolicy(0.0, policy.m, policy.n, policy.seed)
    stages = [(policy, schedule.lr)] * schedule.mask_epochs
    stages += [(unmasked, schedule.finetune_lr or schedule.lr)] * schedule.finetune_epochs
    static = None
    for epoch, (stage_policy, lr) in enumerate(stages):
        rng = np.random.default_rng([int(schedule.seed), 2, epoch])
        if stage_policy.p == 0 and schedule.loss_mask_fraction == 0:
            if static is None:
                static = _epoch_arrays(model, pairs, stage_policy, vocab_size, schedule, epoch)
            X, Y, w = static
        else:
            X, Y, w = _epoch_arrays(model, pairs, stage_policy, vocab_size, schedule, epoch)
        model.losses.append(_run_epoch(model, X, Y, w, lr, schedule.l2, schedule.batch_size, rng))
    return model


def token_accuracy(model: ToyCorrector, pairs: Sequence[AlignedPair]) -> float:
    preds = predict_many(model, [p.source for p in pairs])
    hits = sum(int(a == b) for pred, p in zip(preds, pairs) for a, b in zip(pred, p.target))
    total = sum(len(p.target) for p in pairs)
    return hits / total if total else 1.0
