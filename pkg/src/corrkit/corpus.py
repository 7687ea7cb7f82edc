"""Tokenization, vocabularies and parallel-corpus file formats."""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

PAD, UNK, MASK, BOS = "<pad>", "<unk>", "<mask>", "<bos>"
SPECIAL_TOKENS = (PAD, UNK, MASK, BOS)
PAD_ID, UNK_ID, MASK_ID, BOS_ID = 0, 1, 2, 3
N_SPECIAL = len(SPECIAL_TOKENS)

MODES = ("char", "ws")


class CorpusFormatError(ValueError):
    """Raised for malformed corpus files. Carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)


def tokenize(text: str, mode: str = "ws") -> list[str]:
    """Split ``text`` into surface tokens.

    ``mode="char"`` yields one token per code point, dropping whitespace;
    ``mode="ws"`` splits on runs of whitespace.
    """
    if mode == "char":
        return [ch for ch in text if not ch.isspace()]
    if mode == "ws":
        return text.split()
    raise ValueError(f"unknown tokenization mode {mode!r}; expected one of {MODES}")


def detokenize(tokens: Sequence[str], mode: str = "ws") -> str:
    if mode == "char":
        return "".join(tokens)
    if mode == "ws":
        return " ".join(tokens)
    raise ValueError(f"unknown tokenization mode {mode!r}; expected one of {MODES}")


class Vocab:
    """Bijective token <-> id mapping with the four reserved ids first.

    >>> v = Vocab(["a", "b"])
    >>> v.encode(["b", "zzz"])
    [5, 1]
    """

    def __init__(self, tokens: Iterable[str] = ()):
        self._itos: list[str] = list(SPECIAL_TOKENS)
        self._stoi: dict[str, int] = {t: i for i, t in enumerate(self._itos)}
        for tok in tokens:
            if tok in self._stoi:
                if tok in SPECIAL_TOKENS:
                    continue
                raise ValueError(f"duplicate vocabulary entry {tok!r}")
            self._stoi[tok] = len(self._itos)
            self._itos.append(tok)

    def __len__(self) -> int:
        return len(self._itos)

    def __contains__(self, token: str) -> bool:
        return token in self._stoi

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocab) and self._itos == other._itos

    def __repr__(self) -> str:
        return f"Vocab(size={len(self)})"

    @property
    def tokens(self) -> list[str]:
        return list(self._itos)

    @property
    def regular_ids(self) -> range:
        """Ids of all non-special tokens."""
        return range(N_SPECIAL, len(self._itos))

    def lookup(self, token: str) -> int:
        return self._stoi.get(token, UNK_ID)

    def surface(self, idx: int) -> str:
        return self._itos[idx]

    def encode(self, tokens: Sequence[str]) -> list[int]:
        get = self._stoi.get
        return [get(t, UNK_ID) for t in tokens]

    def decode(self, ids: Sequence[int]) -> list[str]:
        itos = self._itos
        return [itos[i] for i in ids]

    def digest(self) -> str:
        """Stable hash of the id assignment, used to pair models with vocabularies."""
        h = hashlib.sha256("\n".join(self._itos).encode("utf-8"))
        return h.hexdigest()

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for tok in self._itos:
                f.write(tok + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        with open(path, encoding="utf-8") as f:
            lines = [line.rstrip("\n") for line in f]
        if tuple(lines[:N_SPECIAL]) != SPECIAL_TOKENS:
            raise CorpusFormatError("first four lines must be the reserved tokens", path=str(path))
        return cls(lines[N_SPECIAL:])


def build_vocab(pairs: Iterable[tuple[Sequence[str], Sequence[str]]], min_count: int = 1) -> Vocab:
    """Vocabulary over sources and targets, most frequent first, ties lexicographic."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: Counter[str] = Counter()
    for src, tgt in pairs:
        counts.update(src)
        counts.update(tgt)
    for tok in SPECIAL_TOKENS:
        counts.pop(tok, None)
    ordered = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    return Vocab(ordered)


@dataclass(frozen=True)
class ParallelCorpus:
    """Source/target pairs of surface tokens plus the tokenization mode they came from."""

    pairs: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]
    mode: str = "ws"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown tokenization mode {self.mode!r}")
        for i, (_, tgt) in enumerate(self.pairs):
            if len(tgt) == 0:
                raise ValueError(f"pair {i} has an empty target")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Sequence[str], Sequence[str]]], mode: str = "ws") -> "ParallelCorpus":
        return cls(tuple((tuple(s), tuple(t)) for s, t in pairs), mode)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[tuple[tuple[str, ...], tuple[str, ...]]]:
        return iter(self.pairs)

    def __getitem__(self, idx):
        return self.pairs[idx]

    @property
    def sources(self) -> list[tuple[str, ...]]:
        return [s for s, _ in self.pairs]

    @property
    def targets(self) -> list[tuple[str, ...]]:
        return [t for _, t in self.pairs]

    def identity_indices(self) -> list[int]:
        """Indices of pairs whose source equals the target."""
        return [i for i, (s, t) in enumerate(self.pairs) if s == t]

    def filter_length(self, max_len: int) -> "ParallelCorpus":
        kept = [(s, t) for s, t in self.pairs if len(s) <= max_len and len(t) <= max_len]
        return ParallelCorpus(tuple(kept), self.mode)


def parse_parallel_line(line: str, mode: str, lineno: int, path: str | None = None):
    line = line.rstrip("\n").rstrip("\r")
    if line.count("\t") != 1:
        raise CorpusFormatError("expected exactly one TAB separating source and target", lineno, path)
    src, tgt = line.split("\t")
    tgt_tokens = tokenize(tgt, mode)
    if not tgt_tokens:
        raise CorpusFormatError("empty target field", lineno, path)
    return tuple(tokenize(src, mode)), tuple(tgt_tokens)


def read_parallel_tsv(path: str | Path, mode: str = "ws") -> ParallelCorpus:
    pairs = []
    with open(path, encoding="utf-8", newline="") as f:
        for lineno, line in enumerate(f, start=1):
            pairs.append(parse_parallel_line(line, mode, lineno, str(path)))
    return ParallelCorpus(tuple(pairs), mode)


def write_parallel_tsv(corpus: ParallelCorpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for src, tgt in corpus.pairs:
            f.write(f"{detokenize(src, corpus.mode)}\t{detokenize(tgt, corpus.mode)}\n")


def read_lines(path: str | Path, mode: str = "ws") -> list[list[str]]:
    """Read one tokenized sentence per line (blank lines give empty sentences)."""
    with open(path, encoding="utf-8") as f:
        return [tokenize(line.rstrip("\n"), mode) for line in f]


def write_lines(sentences: Iterable[Sequence[str]], path: str | Path, mode: str = "ws") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for sent in sentences:
            f.write(detokenize(sent, mode) + "\n")


def dump_jsonl_record(record: dict) -> str:
    """Serialize one JSON-lines record with a fixed, byte-stable layout."""
    return json.dumps(record, ensure_ascii=False, separators=(", ", ": "))


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON: {exc.msg}", lineno, str(path)) from None
