"""Synthetic error generation and a Markov-chain toy language."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Mapping, MutableMapping, Sequence

import numpy as np

from .align import DEL, INS, SUB, align
from .corpus import N_SPECIAL, CorpusFormatError, Vocab
from .perturb import round_half_up

ConfusionDict = dict  # token -> list of confusable tokens


def clean_confusion_dict(raw: Mapping[Hashable, Iterable[Hashable]]) -> ConfusionDict:
    """Drop self-maps and duplicates; tokens left with no candidates are removed."""
    out: ConfusionDict = {}
    for tok, cands in raw.items():
        seen = []
        for c in cands:
            if c != tok and c not in seen:
                seen.append(c)
        if seen:
            out[tok] = seen
    return out


def read_confusion_dict(path: str | Path) -> ConfusionDict:
    raw: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.count("\t") != 1:
                raise CorpusFormatError("expected `token<TAB>candidates`", lineno, str(path))
            tok, cands = line.split("\t")
            raw.setdefault(tok, []).extend(cands.split())
    return clean_confusion_dict(raw)


def write_confusion_dict(confusion: ConfusionDict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for tok in sorted(confusion, key=str):
            f.write(f"{tok}\t{' '.join(map(str, confusion[tok]))}\n")


def random_confusion_dict(tokens: Sequence[Hashable], size: int, seed: int) -> ConfusionDict:
    """Give every token ``size`` distinct confusables drawn from the other tokens."""
    rng = np.random.default_rng([int(seed), 7])
    tokens = list(tokens)
    out = {}
    for i, tok in enumerate(tokens):
        others = [j for j in range(len(tokens)) if j != i]
        picked = rng.choice(len(others), size=min(size, len(others)), replace=False)
        out[tok] = [tokens[others[j]] for j in sorted(picked)]
    return out


def _as_rng(rng: np.random.Generator | int) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng([int(rng)])


def noise_confusion(
    clean: Sequence[Hashable],
    confusion: ConfusionDict,
    rate: float,
    rng: np.random.Generator | int,
    denominator: str = "covered",
) -> list:
    """Replace ``round(rate * N)`` dictionary-covered tokens by a random confusable.

    ``N`` counts covered positions (``denominator="covered"``) or all positions
    (``"all"``; the count is then capped at the number of covered positions).
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate must lie in [0, 1], got {rate}")
    out = list(clean)
    covered = [i for i, tok in enumerate(out) if tok in confusion]
    if denominator == "covered":
        k = round_half_up(rate, len(covered))
    elif denominator == "all":
        k = min(round_half_up(rate, len(out)), len(covered))
    else:
        raise ValueError(f"denominator must be 'covered' or 'all', got {denominator!r}")
    if k == 0:
        return out
    rng = _as_rng(rng)
    for idx in np.sort(rng.choice(len(covered), size=k, replace=False)):
        pos = covered[idx]
        cands = confusion[out[pos]]
        out[pos] = cands[int(rng.integers(len(cands)))]
    return out


@dataclass
class ErrorRateProfile:
    """Per-token insertion/deletion/substitution rates of a noisy channel.

    ``sub_dict`` maps a clean token to the tokens it was observed being
    replaced by; tokens it does not cover are substituted uniformly.
    """

    ins: float = 0.0
    dele: float = 0.0
    sub: float = 0.0
    sub_dict: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, v in (("ins", self.ins), ("del", self.dele), ("sub", self.sub)):
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} rate must lie in [0, 1), got {v}")
        if self.ins + self.dele + self.sub >= 1.0:
            raise ValueError("ins + del + sub must be below 1")

    def to_json(self) -> dict:
        return {
            "ins": self.ins,
            "del": self.dele,
            "sub": self.sub,
            "sub_dict": {str(k): list(v) for k, v in sorted(self.sub_dict.items(), key=lambda kv: str(kv[0]))},
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "ErrorRateProfile":
        unknown = set(obj) - {"ins", "del", "sub", "sub_dict"}
        if unknown:
            raise ValueError(f"unknown profile keys: {sorted(unknown)}")
        return cls(
            float(obj.get("ins", 0.0)),
            float(obj.get("del", 0.0)),
            float(obj.get("sub", 0.0)),
            clean_confusion_dict(obj.get("sub_dict", {})),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, ensure_ascii=False, indent=1)
            f.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "ErrorRateProfile":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def estimate_profile(pairs: Iterable[tuple[Sequence, Sequence]]) -> ErrorRateProfile:
    """Error rates of ``(noisy source, clean target)`` pairs, per target token.

    A Delete op in the source->target script is a spurious source token, i.e.
    an insertion error; an Insert op is a token the source lost.
    """
    counts: Counter[str] = Counter()
    n_target = 0
    subs: dict = {}
    for src, tgt in pairs:
        n_target += len(tgt)
        pair = align(src, tgt)
        for op in pair.script:
            counts[op.kind] += 1
            if op.kind == SUB:
                observed = subs.setdefault(tgt[op.tgt_pos], [])
                if src[op.src_pos] not in observed:
                    observed.append(src[op.src_pos])
    if n_target == 0:
        raise ValueError("cannot estimate error rates from a corpus with no target tokens")
    return ErrorRateProfile(
        ins=counts[DEL] / n_target,
        dele=counts[INS] / n_target,
        sub=counts[SUB] / n_target,
        sub_dict=clean_confusion_dict(subs),
    )


def _regular_tokens(vocab: Vocab | Sequence[Hashable]) -> list:
    if isinstance(vocab, Vocab):
        return vocab.tokens[N_SPECIAL:]
    return list(vocab)


def noise_asr(
    clean: Sequence[Hashable],
    profile: ErrorRateProfile,
    vocab: Vocab | Sequence[Hashable],
    rng: np.random.Generator | int,
    counts: MutableMapping[str, int] | None = None,
) -> list:
    """Position-wise random deletion, substitution and insertion.

    Each clean token is deleted with probability ``profile.dele``, substituted
    with probability ``profile.sub`` and kept otherwise; independently an
    insertion follows each clean position with probability ``profile.ins``.

    Args:
        clean: surface tokens (or any hashable tokens found in ``vocab``).
        profile: rates and the learned substitution dictionary.
        vocab: a :class:`Vocab` (its regular tokens are used) or an explicit
            list of candidate tokens for uniform draws.
        rng: generator or integer seed.
        counts: if given, incremented under ``"ins"``, ``"del"``, ``"sub"``
            and ``"positions"``.
    """
    pool = _regular_tokens(vocab)
    if len(pool) < 2:
        raise ValueError("vocabulary needs at least two regular tokens")
    rng = _as_rng(rng)
    n = len(clean)
    u = rng.random(n)
    fire_ins = rng.random(n) < profile.ins
    out = []
    n_del = n_sub = 0
    for i, tok in enumerate(clean):
        if u[i] < profile.dele:
            n_del += 1
        elif u[i] < profile.dele + profile.sub:
            n_sub += 1
            cands = profile.sub_dict.get(tok)
            if cands:
                out.append(cands[int(rng.integers(len(cands)))])
            else:
                out.append(_uniform_other(rng, pool, tok))
        else:
            out.append(tok)
        if fire_ins[i]:
            out.append(pool[int(rng.integers(len(pool)))])
    if counts is not None:
        counts["positions"] = counts.get("positions", 0) + n
        counts["del"] = counts.get("del", 0) + n_del
        counts["sub"] = counts.get("sub", 0) + n_sub
        counts["ins"] = counts.get("ins", 0) + int(fire_ins.sum())
    return out


def _uniform_other(rng: np.random.Generator, pool: list, tok: Hashable):
    while True:
        cand = pool[int(rng.integers(len(pool)))]
        if cand != tok:
            return cand


def markov_vocab(vocab_size: int) -> Vocab:
    """Vocabulary whose regular tokens ``w00, w01, ...`` line up with :func:`synth_markov` ids."""
    width = max(2, len(str(vocab_size - 1)))
    return Vocab(f"w{i:0{width}d}" for i in range(vocab_size))


def synth_markov(
    vocab_size: int,
    order: int,
    n_sentences: int,
    len_range: tuple[int, int],
    seed: int,
    concentration: float = 0.3,
) -> list[list[int]]:
    """Sample sentences from a random order-1 or order-2 Markov chain.

    Transition rows are Dirichlet(``concentration``) draws; the chain starts
    from an all-BOS context. Ids are offset past the reserved ids so they
    decode with ``markov_vocab(vocab_size)``.
    """
    if vocab_size < 8:
        raise ValueError("vocab_size must be at least 8")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    lo, hi = len_range
    if not 3 <= lo <= hi <= 100:
        raise ValueError("len_range must satisfy 3 <= lo <= hi <= 100")
    if n_sentences <= 0:
        return []

    chain_rng = np.random.default_rng([int(seed), 0])
    n_states = vocab_size + 1  # last state is the BOS context symbol
    n_ctx = n_states**order
    rows = chain_rng.dirichlet(np.full(vocab_size, concentration), size=n_ctx)
    cum = np.cumsum(rows, axis=1)
    cum[:, -1] = 1.0

    rng = np.random.default_rng([int(seed), 1])
    lengths = rng.integers(lo, hi + 1, size=n_sentences)
    tokens = np.empty((n_sentences, hi), dtype=np.int64)
    ctx = np.full((n_sentences, order), vocab_size, dtype=np.int64)
    for t in range(hi):
        flat = ctx[:, 0] if order == 1 else ctx[:, 0] * n_states + ctx[:, 1]
        u = rng.random(n_sentences)
        nxt = (cum[flat] < u[:, None]).sum(axis=1)
        np.minimum(nxt, vocab_size - 1, out=nxt)
        tokens[:, t] = nxt
        if order == 1:
            ctx[:, 0] = nxt
        else:
            ctx[:, 0] = ctx[:, 1]
            ctx[:, 1] = nxt
    return [(tokens[i, : lengths[i]] + N_SPECIAL).tolist() for i in range(n_sentences)]
