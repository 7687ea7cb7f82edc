"""WER/WERR, sentence-level spelling metrics and the MaxMatch (M2) scorer.

All reported rates are percentages. JSON reports round them to two decimals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Sequence

from .align import DEL, INS, MATCH, SUB, align
from .corpus import CorpusFormatError


def _pct(num: float, den: float, empty: float = 0.0) -> float:
    return 100.0 * num / den if den else empty


def f_beta(p: float, r: float, beta: float = 1.0) -> float:
    """Weighted harmonic mean of precision and recall (fractions in [0, 1])."""
    b2 = beta * beta
    den = b2 * p + r
    if den == 0:
        return 0.0
    return (1 + b2) * p * r / den


# --------------------------------------------------------------------------- WER


@dataclass(frozen=True)
class WerReport:
    edits: int
    ref_tokens: int
    sub: int
    dele: int
    ins: int

    @property
    def wer(self) -> float:
        return 100.0 * self.edits / self.ref_tokens

    def to_json(self) -> dict:
        return {
            "wer": round(self.wer, 2),
            "edits": self.edits,
            "sub": self.sub,
            "del": self.dele,
            "ins": self.ins,
            "ref_tokens": self.ref_tokens,
        }


def wer(refs: Sequence[Sequence[Hashable]], hyps: Sequence[Sequence[Hashable]]) -> WerReport:
    if len(refs) != len(hyps):
        raise ValueError(f"{len(refs)} references but {len(hyps)} hypotheses")
    n_ref = sum(len(r) for r in refs)
    if n_ref == 0:
        raise ValueError("references contain no tokens")
    sub = dele = ins = 0
    for ref, hyp in zip(refs, hyps):
        counts = align(ref, hyp).op_counts()
        sub += counts[SUB]
        dele += counts[DEL]  # reference token missing from the hypothesis
        ins += counts[INS]
    return WerReport(sub + dele + ins, n_ref, sub, dele, ins)


def werr(wer_base: float, wer_sys: float) -> float:
    """Relative WER reduction in percent, two decimals."""
    if wer_base <= 0:
        raise ValueError("baseline WER must be positive")
    return round(100.0 * (wer_base - wer_sys) / wer_base, 2)


# ----------------------------------------------------------------- SIGHAN metrics


@dataclass(frozen=True)
class SentenceJudgment:
    gold_has_error: bool
    detected: bool
    detection_exact: bool
    correction_exact: bool


def judge_sentence(source: Sequence, gold: Sequence, pred: Sequence) -> SentenceJudgment:
    if not len(source) == len(gold) == len(pred):
        raise ValueError(
            f"source/gold/prediction lengths differ ({len(source)}, {len(gold)}, {len(pred)})"
        )
    gold_pos = {i for i, (s, g) in enumerate(zip(source, gold)) if s != g}
    pred_pos = {i for i, (s, p) in enumerate(zip(source, pred)) if s != p}
    same_positions = gold_pos == pred_pos
    return SentenceJudgment(
        gold_has_error=bool(gold_pos),
        detected=bool(pred_pos),
        detection_exact=same_positions,
        correction_exact=same_positions and list(pred) == list(gold),
    )


@dataclass(frozen=True)
class LevelScores:
    acc: float
    p: float
    r: float
    f1: float

    def to_json(self) -> dict:
        return {k: round(getattr(self, k), 2) for k in ("acc", "p", "r", "f1")}


@dataclass(frozen=True)
class SighanReport:
    detection: LevelScores
    correction: LevelScores
    sentences: int

    def to_json(self) -> dict:
        return {"detection": self.detection.to_json(), "correction": self.correction.to_json()}


def _level(judgments: list[SentenceJudgment], attr: str) -> LevelScores:
    flagged = sum(j.detected for j in judgments)
    positives = sum(j.gold_has_error for j in judgments)
    tp = sum(getattr(j, attr) and j.gold_has_error for j in judgments)
    right = sum(getattr(j, attr) for j in judgments)
    p = _pct(tp, flagged)
    r = _pct(tp, positives)
    return LevelScores(_pct(right, len(judgments)), p, r, 100.0 * f_beta(p / 100, r / 100, 1.0))


def sighan_eval(sources: Sequence[Sequence], golds: Sequence[Sequence], preds: Sequence[Sequence]) -> SighanReport:
    """Sentence-level detection and correction accuracy/precision/recall/F1.

    A sentence is detected correctly when the set of positions the system
    changed equals the set of erroneous positions, and corrected when in
    addition the prediction equals the gold sentence. Precision and recall
    count only sentences whose gold contains an error as true positives;
    an empty denominator gives 0.
    """
    if not len(sources) == len(golds) == len(preds):
        raise ValueError("sources, golds and predictions must have the same number of sentences")
    if not sources:
        raise ValueError("no sentences to evaluate")
    judgments = []
    for i, (s, g, p) in enumerate(zip(sources, golds, preds)):
        try:
            judgments.append(judge_sentence(s, g, p))
        except ValueError as exc:
            raise ValueError(f"sentence {i}: {exc}") from None
    return SighanReport(_level(judgments, "detection_exact"), _level(judgments, "correction_exact"), len(judgments))


# ---------------------------------------------------------------------------- M2


@dataclass(frozen=True, order=True)
class EditAnnotation:
    start: int
    end: int
    replacement: tuple = ()
    annotator: int = 0
    etype: str = field(default="", compare=False)

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"invalid edit span ({self.start}, {self.end})")

    @property
    def key(self) -> tuple:
        return (self.start, self.end, tuple(self.replacement))


@dataclass
class M2Sentence:
    source: tuple
    annotations: dict[int, list[EditAnnotation]]

    def annotators(self) -> list[int]:
        return sorted(self.annotations) or [0]

    def edits_of(self, annotator: int) -> list[EditAnnotation]:
        return self.annotations.get(annotator, [])


def check_annotator_edits(edits: Sequence[EditAnnotation], source_len: int | None = None) -> list[EditAnnotation]:
    """Sort one annotator's edits and reject overlaps or out-of-range spans."""
    ordered = sorted(edits, key=lambda e: (e.start, e.end))
    for e in ordered:
        if source_len is not None and e.end > source_len:
            raise ValueError(f"edit ({e.start}, {e.end}) runs past the sentence end ({source_len})")
    for prev, nxt in zip(ordered, ordered[1:]):
        both_insert_same_slot = prev.start == prev.end == nxt.start == nxt.end
        if nxt.start < prev.end or both_insert_same_slot:
            raise ValueError(
                f"overlapping gold edits for annotator {prev.annotator}: "
                f"({prev.start}, {prev.end}) and ({nxt.start}, {nxt.end})"
            )
    return ordered


def read_m2(path: str | Path) -> list[M2Sentence]:
    """Parse an M2 gold file into sentences with per-annotator edit lists."""
    sentences: list[M2Sentence] = []
    current: M2Sentence | None = None
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                current = None
                continue
            if line.startswith("S"):
                current = M2Sentence(tuple(line[1:].split()), {})
                sentences.append(current)
            elif line.startswith("A "):
                if current is None:
                    raise CorpusFormatError("annotation line before any S line", lineno, str(path))
                fields = line[2:].split("|||")
                if len(fields) != 6:
                    raise CorpusFormatError("annotation line needs six |||-separated fields", lineno, str(path))
                try:
                    start, end = (int(x) for x in fields[0].split())
                    annotator = int(fields[5])
                except ValueError:
                    raise CorpusFormatError("malformed span or annotator id", lineno, str(path)) from None
                edits = current.annotations.setdefault(annotator, [])
                if fields[1] == "noop" or (start == -1 and end == -1):
                    continue
                repl = fields[2].strip()
                tokens = () if repl in ("", "-NONE-") else tuple(repl.split())
                try:
                    edits.append(EditAnnotation(start, end, tokens, annotator, fields[1]))
                except ValueError as exc:
                    raise CorpusFormatError(str(exc), lineno, str(path)) from None
            else:
                raise CorpusFormatError("line must start with 'S' or 'A'", lineno, str(path))
    for sent in sentences:
        for ann, edits in sent.annotations.items():
            sent.annotations[ann] = check_annotator_edits(edits, len(sent.source))
    return sentences


def write_m2(sentences: Iterable[M2Sentence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for sent in sentences:
            f.write("S " + " ".join(sent.source) + "\n")
            for ann in sorted(sent.annotations):
                edits = sent.annotations[ann]
                if not edits:
                    f.write(f"A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||{ann}\n")
                for e in edits:
                    etype = e.etype or "UNK"
                    f.write(f"A {e.start} {e.end}|||{etype}|||{' '.join(e.replacement)}|||REQUIRED|||-NONE-|||{ann}\n")
            f.write("\n")


def apply_edits(source: Sequence, edits: Iterable[EditAnnotation]) -> list:
    """Rewrite ``source`` with non-overlapping edits."""
    out = []
    pos = 0
    for e in sorted(edits, key=lambda e: (e.start, e.end)):
        out.extend(source[pos : e.start])
        out.extend(e.replacement)
        pos = e.end
    out.extend(source[pos:])
    return out


def _optimal_lattice(a: Sequence, b: Sequence):
    """Forward edges (kind, next node) of every minimal-cost alignment path."""
    n, m = len(a), len(b)
    fwd = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        for j in range(m + 1):
            if i == 0 or j == 0:
                fwd[i][j] = i + j
                continue
            diag = fwd[i - 1][j - 1] + (a[i - 1] != b[j - 1])
            fwd[i][j] = min(diag, fwd[i - 1][j] + 1, fwd[i][j - 1] + 1)
    bwd = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n, -1, -1):
        for j in range(m, -1, -1):
            if i == n or j == m:
                bwd[i][j] = (n - i) + (m - j)
                continue
            diag = bwd[i + 1][j + 1] + (a[i] != b[j])
            bwd[i][j] = min(diag, bwd[i + 1][j] + 1, bwd[i][j + 1] + 1)
    total = fwd[n][m]

    def on_path(i, j):
        return fwd[i][j] + bwd[i][j] == total

    edges: dict[tuple[int, int], list[tuple[str, tuple[int, int]]]] = {}
    for i in range(n + 1):
        for j in range(m + 1):
            if not on_path(i, j):
                continue
            out = []
            if i < n and j < m and on_path(i + 1, j + 1):
                if a[i] == b[j] and fwd[i + 1][j + 1] == fwd[i][j]:
                    out.append((MATCH, (i + 1, j + 1)))
                elif a[i] != b[j] and fwd[i + 1][j + 1] == fwd[i][j] + 1:
                    out.append((SUB, (i + 1, j + 1)))
            if i < n and on_path(i + 1, j) and fwd[i + 1][j] == fwd[i][j] + 1:
                out.append((DEL, (i + 1, j)))
            if j < m and on_path(i, j + 1) and fwd[i][j + 1] == fwd[i][j] + 1:
                out.append((INS, (i, j + 1)))
            edges[(i, j)] = out
    return edges


def _edit_edges(edges, start, max_unchanged: int) -> set[tuple[int, int]]:
    """End nodes of every (possibly merged) edit starting at ``start``.

    An edit follows lattice edges, begins and ends with a non-Match op and
    contains no run of more than ``max_unchanged`` Match ops.
    """
    ends = set()
    seen = set()
    # state: (node, trailing match run); the first op must be an edit
    stack = []
    for kind, nxt in edges.get(start, ()):
        if kind != MATCH:
            stack.append((nxt, 0))
    while stack:
        state = stack.pop()
        if state in seen:
            continue
        seen.add(state)
        node, run = state
        if run == 0:
            ends.add(node)
        for kind, nxt in edges.get(node, ()):
            if kind == MATCH:
                if run + 1 <= max_unchanged:
                    stack.append((nxt, run + 1))
            else:
                stack.append((nxt, 0))
    return ends


@dataclass(frozen=True)
class M2Stats:
    matches: int
    sys_edits: int
    gold_edits: int
    annotator: int = 0
    system_edits: tuple = ()

    def __add__(self, other: "M2Stats") -> "M2Stats":
        return M2Stats(
            self.matches + other.matches,
            self.sys_edits + other.sys_edits,
            self.gold_edits + other.gold_edits,
        )


def best_system_edits(
    source: Sequence, system: Sequence, gold_keys: set, max_unchanged: int = 2
) -> tuple[int, list[tuple]]:
    """Segment the source->system alignment to agree with ``gold_keys``.

    Searches every minimal-cost alignment and every admissible merge of
    neighbouring edits; maximizes the number of edits found in ``gold_keys``
    and, among those, minimizes the number of edits. Returns the match count
    and the chosen ``(start, end, replacement)`` edits.
    """
    source, system = tuple(source), tuple(system)
    n, m = len(source), len(system)
    edges = _optimal_lattice(source, system)
    # best[node] = (matches, -edits, path) ; nodes visited in topological order
    best: dict[tuple[int, int], tuple[int, int, tuple]] = {(0, 0): (0, 0, ())}
    for i in range(n + 1):
        for j in range(m + 1):
            node = (i, j)
            if node not in best or node not in edges:
                continue
            score_m, score_e, path = best[node]
            candidates = []
            for kind, nxt in edges[node]:
                if kind == MATCH:
                    candidates.append((nxt, (score_m, score_e, path)))
            for end in _edit_edges(edges, node, max_unchanged):
                key = (i, end[0], system[j : end[1]])
                hit = 1 if key in gold_keys else 0
                candidates.append((end, (score_m + hit, score_e - 1, path + (key,))))
            for nxt, cand in candidates:
                cur = best.get(nxt)
                if cur is None or cand[:2] > cur[:2] or (cand[:2] == cur[:2] and cand[2] < cur[2]):
                    best[nxt] = cand
    matches, neg_edits, path = best[(n, m)]
    return matches, list(path)


def m2_sentence(
    source: Sequence,
    system: Sequence,
    gold: dict[int, Sequence[EditAnnotation]] | Sequence[Sequence[EditAnnotation]],
    max_unchanged: int = 2,
) -> M2Stats:
    """Best-annotator statistics for one sentence.

    The annotator maximizing (matches, -gold edits) is chosen; remaining ties
    go to the lowest annotator id.
    """
    if max_unchanged < 0:
        raise ValueError("max_unchanged must be >= 0")
    if not isinstance(gold, dict):
        gold = dict(enumerate(gold))
    if not gold:
        gold = {0: []}
    chosen: M2Stats | None = None
    for ann in sorted(gold):
        edits = check_annotator_edits(gold[ann], len(source))
        keys = {e.key for e in edits}
        matches, sys_edits = best_system_edits(source, system, keys, max_unchanged)
        stats = M2Stats(matches, len(sys_edits), len(edits), ann, tuple(sys_edits))
        if chosen is None or (stats.matches, -stats.gold_edits) > (chosen.matches, -chosen.gold_edits):
            chosen = stats
    return chosen


@dataclass(frozen=True)
class M2Report:
    matches: int
    sys_edits: int
    gold_edits: int

    @property
    def p(self) -> float:
        return _pct(self.matches, self.sys_edits, empty=100.0)

    @property
    def r(self) -> float:
        return _pct(self.matches, self.gold_edits, empty=100.0)

    @property
    def f_half(self) -> float:
        return 100.0 * f_beta(self.p / 100, self.r / 100, 0.5)

    def to_json(self) -> dict:
        return {
            "p": round(self.p, 2),
            "r": round(self.r, 2),
            "f_half": round(self.f_half, 2),
            "matches": self.matches,
            "sys_edits": self.sys_edits,
            "gold_edits": self.gold_edits,
        }


def m2_corpus(
    sources: Sequence[Sequence],
    systems: Sequence[Sequence],
    golds: Sequence,
    max_unchanged: int = 2,
) -> M2Report:
    if not len(sources) == len(systems) == len(golds):
        raise ValueError("sources, system outputs and gold annotations must align one-to-one")
    total = M2Stats(0, 0, 0)
    for src, hyp, gold in zip(sources, systems, golds):
        total = total + m2_sentence(src, hyp, gold, max_unchanged)
    return M2Report(total.matches, total.sys_edits, total.gold_edits)


def m2_score(source: Sequence, system: Sequence, gold, max_unchanged: int = 2) -> M2Report:
    """Single-sentence convenience wrapper around :func:`m2_corpus`."""
    return m2_corpus([source], [system], [gold], max_unchanged)
