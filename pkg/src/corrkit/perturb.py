"""Training-data perturbations for correction corpora.

Three transformations live here:

* :func:`apply_mask` hides a fraction of the *correct* source tokens (those
  aligned to an identical target token) behind ``<mask>`` or a random other
  token, leaving error tokens and the target alone.
* :func:`augment_copy` re-adds identity pairs to a corpus to raise the share
  of trivially copied tokens.
* :func:`make_loss_mask` drops a fraction of correct target positions from the
  training loss.

Every random draw comes from a generator keyed on ``(seed, salt, index)`` so
results do not depend on how a corpus is sharded.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

import numpy as np

from .align import AlignedPair
from .corpus import MASK_ID, N_SPECIAL, ParallelCorpus, Vocab

TRAIN, SKIP = "T", "S"


def round_half_up(fraction: float, count: int) -> int:
    """``round(fraction * count)`` with halves rounded up, immune to binary float noise."""
    exact = Decimal(repr(float(fraction))) * count
    return int(exact.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def pair_rng(seed: int, index: int, salt: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(salt), int(index)])


def _check_fraction(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class MaskPolicy:
    p: float = 0.20
    m: float = 0.80
    n: float = 0.10
    seed: int = 0

    def __post_init__(self):
        for name in ("p", "m", "n"):
            _check_fraction(name, getattr(self, name))
        if self.m + self.n > 1.0 + 1e-12:
            raise ValueError(f"m + n must not exceed 1 (got {self.m} + {self.n})")

    @classmethod
    def spelling(cls, seed: int = 0) -> "MaskPolicy":
        return cls(0.20, 0.80, 0.10, seed)

    @classmethod
    def asr(cls, seed: int = 0) -> "MaskPolicy":
        return cls(0.15, 0.80, 0.10, seed)

    @property
    def keep(self) -> float:
        return max(0.0, 1.0 - self.m - self.n)


@dataclass(frozen=True)
class CopyAugmentPolicy:
    q: float = 0.0
    seed: int = 0

    def __post_init__(self):
        _check_fraction("q", self.q)


def draw_other_token(rng: np.random.Generator, vocab_size: int, original: int) -> int:
    """Uniform non-special id different from ``original``."""
    n_regular = vocab_size - N_SPECIAL
    if original >= N_SPECIAL:
        k = int(rng.integers(n_regular - 1)) + N_SPECIAL
        return k + 1 if k >= original else k
    return int(rng.integers(n_regular)) + N_SPECIAL


def apply_mask(
    pair: AlignedPair,
    policy: MaskPolicy,
    vocab: Vocab | int,
    rng: np.random.Generator,
) -> list[int]:
    """Return a perturbed copy of ``pair.source`` (token ids).

    Exactly ``round(p * #correct)`` correct positions are chosen without
    replacement. Each chosen token becomes ``<mask>`` with probability ``m``,
    a random other regular token with probability ``n``, and is otherwise
    kept.

    Args:
        pair: alignment of id sequences; its labels decide which positions
            are correct.
        policy: mask ratio and replacement probabilities.
        vocab: vocabulary (or its size) used for random replacements.
        rng: generator for this pair, normally ``pair_rng(seed, index)``.
    """
    vocab_size = vocab if isinstance(vocab, int) else len(vocab)
    if policy.n > 0 and vocab_size - N_SPECIAL < 2:
        raise ValueError("vocabulary needs at least two regular tokens for random replacement")
    out = list(pair.source)
    correct = pair.correct_source_positions()
    k = round_half_up(policy.p, len(correct))
    if k == 0:
        return out
    chosen = rng.choice(len(correct), size=k, replace=False)
    u = rng.random(k)
    for idx, draw in zip(np.sort(chosen), u):
        pos = correct[idx]
        if draw < policy.m:
            out[pos] = MASK_ID
        elif draw < policy.m + policy.n:
            out[pos] = draw_other_token(rng, vocab_size, out[pos])
    return out


def mask_corpus(
    pairs: Sequence[AlignedPair],
    policy: MaskPolicy,
    vocab: Vocab | int,
    salt: int = 0,
    start_index: int = 0,
) -> list[list[int]]:
    """Apply :func:`apply_mask` to every pair with its own index-keyed generator.

    ``salt`` distinguishes re-draws of the same corpus (the trainer passes the
    epoch number); ``start_index`` lets a shard reproduce the full-corpus draw.
    """
    return [
        apply_mask(pair, policy, vocab, pair_rng(policy.seed, start_index + i, salt))
        for i, pair in enumerate(pairs)
    ]


def augment_copy(corpus: ParallelCorpus, policy: CopyAugmentPolicy) -> ParallelCorpus:
    """Append ``round(q * |C|)`` identity pairs drawn without replacement from ``C``."""
    identity = corpus.identity_indices()
    k = round_half_up(policy.q, len(identity))
    if policy.q > 0 and not identity:
        raise ValueError("corpus has no identity pairs to copy")
    if k == 0:
        return corpus
    rng = np.random.default_rng([int(policy.seed)])
    picked = sorted(rng.choice(len(identity), size=k, replace=False))
    extra = tuple(corpus.pairs[identity[i]] for i in picked)
    return ParallelCorpus(corpus.pairs + extra, corpus.mode)


def make_loss_mask(pair: AlignedPair, skip_fraction: float, rng: np.random.Generator | int) -> str:
    """T/S flag per target position; ``S`` only on Match-aligned target positions."""
    _check_fraction("skip_fraction", skip_fraction)
    flags = [TRAIN] * len(pair.target)
    correct = pair.correct_target_positions()
    k = round_half_up(skip_fraction, len(correct))
    if k:
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng([int(rng)])
        for idx in rng.choice(len(correct), size=k, replace=False):
            flags[correct[idx]] = SKIP
    return "".join(flags)
