"""Unit-cost Levenshtein alignment with a deterministic tie rule.

Among all minimal edit scripts, :func:`align` returns the one whose sequence
of operation kinds is lexicographically smallest under the ranking
Match < Substitute < Delete < Insert, read left to right. Equivalently, the
script is traced forward from the start of both sequences and at every cell
takes the first of M, S, D, I that stays on an optimal path. This places
matches as far left as possible: ``align("A A", "A")`` is ``[M(0,0), D(1)]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, NamedTuple, Sequence

MAX_ALIGN_LEN = 10_000

MATCH, SUB, DEL, INS = "M", "S", "D", "I"
KIND_RANK = {MATCH: 0, SUB: 1, DEL: 2, INS: 3}

CORRECT, ERROR = "C", "E"


class EditOp(NamedTuple):
    kind: str
    src_pos: int | None
    tgt_pos: int | None

    def to_json(self) -> list:
        return [
            self.kind,
            -1 if self.src_pos is None else self.src_pos,
            -1 if self.tgt_pos is None else self.tgt_pos,
        ]

    @classmethod
    def from_json(cls, item: Sequence) -> "EditOp":
        kind, s, t = item
        if kind not in KIND_RANK:
            raise ValueError(f"unknown edit op {kind!r}")
        return cls(kind, None if s < 0 else int(s), None if t < 0 else int(t))


@dataclass(frozen=True)
class AlignedPair:
    source: tuple
    target: tuple
    script: tuple[EditOp, ...]
    labels: str

    @property
    def n_correct(self) -> int:
        return self.labels.count(CORRECT)

    def correct_source_positions(self) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab == CORRECT]

    def correct_target_positions(self) -> list[int]:
        """Target indices aligned by Match ops."""
        return [op.tgt_pos for op in self.script if op.kind == MATCH]

    def op_counts(self) -> dict[str, int]:
        counts = {MATCH: 0, SUB: 0, DEL: 0, INS: 0}
        for op in self.script:
            counts[op.kind] += 1
        return counts

    @property
    def cost(self) -> int:
        return sum(1 for op in self.script if op.kind != MATCH)

    def to_record(self) -> dict:
        return {
            "src": list(self.source),
            "tgt": list(self.target),
            "labels": self.labels,
            "script": [op.to_json() for op in self.script],
        }

    @classmethod
    def from_record(cls, record: dict) -> "AlignedPair":
        src, tgt = tuple(record["src"]), tuple(record["tgt"])
        script = tuple(EditOp.from_json(x) for x in record["script"])
        labels = record["labels"]
        if len(labels) != len(src) or set(labels) - {CORRECT, ERROR}:
            raise ValueError("labels must be a C/E string with one flag per source token")
        if apply_script(src, tgt, script) != list(tgt):
            raise ValueError("script does not transform src into tgt")
        if labels != labels_from_script(len(src), script):
            raise ValueError("labels disagree with the script's Match ops")
        return cls(src, tgt, script, labels)


def _check_len(a: Sequence, b: Sequence) -> None:
    if len(a) > MAX_ALIGN_LEN or len(b) > MAX_ALIGN_LEN:
        raise ValueError(f"sequences longer than {MAX_ALIGN_LEN} tokens are not aligned")


def _suffix_table(a: Sequence[Hashable], b: Sequence[Hashable]) -> list[list[int]]:
    # dist[i][j] = edit distance between a[i:] and b[j:]
    n, m = len(a), len(b)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    last = dist[n]
    for j in range(m + 1):
        last[j] = m - j
    for i in range(n - 1, -1, -1):
        row, below = dist[i], dist[i + 1]
        ai = a[i]
        row[m] = n - i
        for j in range(m - 1, -1, -1):
            if ai == b[j]:
                row[j] = below[j + 1]
            else:
                d = below[j + 1]
                if below[j] < d:
                    d = below[j]
                if row[j + 1] < d:
                    d = row[j + 1]
                row[j] = d + 1
    return dist


def edit_distance(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Unit-cost Levenshtein distance."""
    _check_len(a, b)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, start=1):
            if x == y:
                cur[j] = prev[j - 1]
            else:
                cur[j] = 1 + min(prev[j - 1], prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def labels_from_script(n_source: int, script: Sequence[EditOp]) -> str:
    flags = [ERROR] * n_source
    for op in script:
        if op.kind == MATCH:
            flags[op.src_pos] = CORRECT
    return "".join(flags)


def align(a: Sequence[Hashable], b: Sequence[Hashable]) -> AlignedPair:
    """Minimal edit script turning ``a`` into ``b`` plus per-source-token labels."""
    _check_len(a, b)
    a, b = tuple(a), tuple(b)
    n, m = len(a), len(b)
    if a == b:
        script = tuple(EditOp(MATCH, i, i) for i in range(n))
        return AlignedPair(a, b, script, CORRECT * n)

    dist = _suffix_table(a, b)
    ops: list[EditOp] = []
    i = j = 0
    while i < n or j < m:
        here = dist[i][j]
        if i < n and j < m:
            if a[i] == b[j]:
                # equal tokens always sit on an optimal path
                ops.append(EditOp(MATCH, i, j))
                i += 1
                j += 1
                continue
            if dist[i + 1][j + 1] + 1 == here:
                ops.append(EditOp(SUB, i, j))
                i += 1
                j += 1
                continue
        if i < n and dist[i + 1][j] + 1 == here:
            ops.append(EditOp(DEL, i, None))
            i += 1
        else:
            ops.append(EditOp(INS, None, j))
            j += 1
    script = tuple(ops)
    return AlignedPair(a, b, script, labels_from_script(n, script))


def correct_token_positions(pair: AlignedPair) -> list[int]:
    return pair.correct_source_positions()


def apply_script(source: Sequence, target: Sequence, script: Sequence[EditOp]) -> list:
    """Replay ``script`` on ``source``; target tokens are read for S and I ops.

    Raises ``ValueError`` if the script is malformed (out-of-order positions,
    Match on unequal tokens, Substitute on equal tokens, or uncovered tokens).
    """
    out = []
    i = j = 0
    for op in script:
        if op.kind in (MATCH, SUB, DEL):
            if op.src_pos != i:
                raise ValueError(f"op {op} out of order: expected source position {i}")
            i += 1
        if op.kind in (MATCH, SUB, INS):
            if op.tgt_pos != j:
                raise ValueError(f"op {op} out of order: expected target position {j}")
            j += 1
        if op.kind == MATCH:
            if source[op.src_pos] != target[op.tgt_pos]:
                raise ValueError(f"Match {op} joins unequal tokens")
            out.append(source[op.src_pos])
        elif op.kind == SUB:
            if source[op.src_pos] == target[op.tgt_pos]:
                raise ValueError(f"Substitute {op} joins equal tokens")
            out.append(target[op.tgt_pos])
        elif op.kind == INS:
            out.append(target[op.tgt_pos])
    if i != len(source) or j != len(target):
        raise ValueError("script does not cover both sequences")
    return out
