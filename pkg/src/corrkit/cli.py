"""Command-line entry point: ``corrkit <command> ...``.

Exit status is 0 on success, 1 on runtime failures (unreadable files and the
like) and 2 on usage or input-format errors. Relative output paths are
placed under ``$CORRKIT_OUTPUT_DIR`` when that variable is set.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .align import AlignedPair, align
from .benchmark import ConfigError, ExperimentConfig, averaged_rows, corrupt_markov, rows_to_csv, run_benchmark
from .corpus import (
    MODES,
    N_SPECIAL,
    CorpusFormatError,
    ParallelCorpus,
    Vocab,
    build_vocab,
    dump_jsonl_record,
    parse_parallel_line,
    read_jsonl,
    read_lines,
    read_parallel_tsv,
    write_lines,
    write_parallel_tsv,
)
from .metrics import m2_corpus, read_m2, sighan_eval, wer, werr
from .noise import (
    ErrorRateProfile,
    estimate_profile,
    markov_vocab,
    noise_asr,
    noise_confusion,
    read_confusion_dict,
    synth_markov,
)
from .perturb import MaskPolicy, apply_mask, make_loss_mask, pair_rng

OUTPUT_DIR_ENV = "CORRKIT_OUTPUT_DIR"
CHUNK = 2000

# salts keeping the per-sentence streams of different commands apart
CONFUSION_SALT, ASR_SALT, LOSS_MASK_SALT = 4, 3, 1

log = logging.getLogger("corrkit")


def output_path(path: str | Path) -> Path:
    path = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def ordered_map(fn: Callable[[int, list], list], items: list, workers: int) -> list:
    """``fn(start_index, chunk)`` over fixed-size chunks, results concatenated in input order."""
    starts = range(0, len(items), CHUNK)
    chunks = [items[s : s + CHUNK] for s in starts]
    if workers <= 1 or len(chunks) <= 1:
        parts = [fn(s, c) for s, c in zip(starts, chunks)]
    else:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(fn, starts, chunks))
    return [x for part in parts for x in part]


def _write_text_lines(lines: Sequence[str], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


# ---------------------------------------------------------------------- align


def _align_chunk(mode: str, path: str, start: int, lines: list[str]) -> list:
    out = []
    for offset, line in enumerate(lines):
        src, tgt = parse_parallel_line(line, mode, start + offset + 1, path)
        out.append((len(src), len(tgt), dump_jsonl_record(align(src, tgt).to_record())))
    return out


def cmd_align(args) -> int:
    with open(args.pairs, encoding="utf-8", newline="") as f:
        lines = f.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    results = ordered_map(partial(_align_chunk, args.mode, args.pairs), lines, args.workers)
    if args.max_len is not None:
        kept = [r for r in results if r[0] <= args.max_len and r[1] <= args.max_len]
        if len(kept) < len(results):
            log.info("dropped %d pair(s) longer than %d tokens", len(results) - len(kept), args.max_len)
        results = kept
    _write_text_lines([r[2] for r in results], output_path(args.out))
    return 0


# ----------------------------------------------------------------------- mask


def _load_labeled(path: str) -> list[dict]:
    records = []
    for lineno, rec in read_jsonl(path):
        if not isinstance(rec, dict):
            raise CorpusFormatError("record must be a JSON object", lineno, path)
        try:
            AlignedPair.from_record(rec)
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusFormatError(f"bad labeled record ({exc})", lineno, path) from None
        records.append(rec)
    return records


def _mask_chunk(policy: MaskPolicy, vocab: Vocab, loss_mask: float | None, start: int, records: list) -> list:
    out = []
    for offset, rec in enumerate(records):
        index = start + offset
        surface = AlignedPair.from_record(rec)
        ids = AlignedPair(
            tuple(vocab.encode(surface.source)), tuple(vocab.encode(surface.target)), surface.script, surface.labels
        )
        masked_ids = apply_mask(ids, policy, vocab, pair_rng(policy.seed, index))
        masked = [
            tok if new == old else vocab.surface(new) for tok, old, new in zip(surface.source, ids.source, masked_ids)
        ]
        rec = dict(rec, masked_src=masked)
        if loss_mask is not None:
            rec["loss_mask"] = make_loss_mask(surface, loss_mask, pair_rng(policy.seed, index, LOSS_MASK_SALT))
        out.append(dump_jsonl_record(rec))
    return out


def cmd_mask(args) -> int:
    policy = MaskPolicy(args.p, args.m, args.n, args.seed)
    records = _load_labeled(args.labeled)
    if args.vocab:
        vocab = Vocab.load(args.vocab)
    else:
        vocab = build_vocab((r["src"], r["tgt"]) for r in records)
    lines = ordered_map(partial(_mask_chunk, policy, vocab, args.loss_mask), records, args.workers)
    _write_text_lines(lines, output_path(args.out))
    return 0


# ---------------------------------------------------------------------- noise


def _noise_outputs(args, clean: list, noisy: list) -> None:
    if args.out:
        write_lines(noisy, output_path(args.out), args.mode)
    if args.pairs_out:
        corpus = ParallelCorpus.from_pairs(zip(noisy, clean), args.mode)
        write_parallel_tsv(corpus, output_path(args.pairs_out))


def cmd_noise_confusion(args) -> int:
    clean = read_lines(args.input, args.mode)
    confusion = read_confusion_dict(args.dict)
    noisy = [
        noise_confusion(s, confusion, args.rate, pair_rng(args.seed, i, CONFUSION_SALT), args.rate_denominator)
        for i, s in enumerate(clean)
    ]
    _noise_outputs(args, clean, noisy)
    return 0


def cmd_noise_asr(args) -> int:
    clean = read_lines(args.input, args.mode)
    if args.profile:
        try:
            profile = ErrorRateProfile.load(args.profile)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"invalid profile JSON ({exc.msg})", exc.lineno, args.profile) from None
    else:
        paired = read_parallel_tsv(args.estimate_from, args.mode)
        profile = estimate_profile(paired.pairs)
    if args.save_profile:
        profile.save(output_path(args.save_profile))
    vocab = Vocab.load(args.vocab) if args.vocab else build_vocab((s, s) for s in clean)
    if len(vocab) - N_SPECIAL < 2:
        raise ValueError("need at least two distinct tokens to draw insertions and substitutions from")
    noisy = [noise_asr(s, profile, vocab, pair_rng(args.seed, i, ASR_SALT)) for i, s in enumerate(clean)]
    _noise_outputs(args, clean, noisy)
    return 0


def cmd_noise_synth(args) -> int:
    clean_ids = synth_markov(args.vocab_size, args.order, args.n_sentences, (args.min_len, args.max_len), args.seed)
    vocab = markov_vocab(args.vocab_size)
    clean = [vocab.decode(s) for s in clean_ids]
    noisy = [vocab.decode(s) for s in corrupt_markov(clean_ids, args.vocab_size, args.rate, args.confusion_size, args.seed)]
    args.mode = "ws"
    _noise_outputs(args, clean, noisy)
    if args.vocab_out:
        vocab.save(output_path(args.vocab_out))
    return 0


# ----------------------------------------------------------------------- eval


def _same_length(a: Sequence, b: Sequence, what: str) -> None:
    if len(a) != len(b):
        raise CorpusFormatError(f"{what}: line counts differ ({len(a)} vs {len(b)})")


def _print_json(obj: dict) -> None:
    print(json.dumps(obj, ensure_ascii=False))


def cmd_eval_wer(args) -> int:
    refs = read_lines(args.ref, args.mode)
    hyps = read_lines(args.hyp, args.mode)
    _same_length(refs, hyps, "ref/hyp")
    report = wer(refs, hyps).to_json()
    if args.baseline_wer is not None:
        report["werr"] = werr(args.baseline_wer, report["wer"])
    _print_json(report)
    return 0


def cmd_eval_sighan(args) -> int:
    srcs = read_lines(args.src, args.mode)
    golds = read_lines(args.gold, args.mode)
    preds = read_lines(args.pred, args.mode)
    _same_length(srcs, golds, "src/gold")
    _same_length(srcs, preds, "src/pred")
    _print_json(sighan_eval(srcs, golds, preds).to_json())
    return 0


def cmd_eval_m2(args) -> int:
    gold = read_m2(args.gold)
    hyps = read_lines(args.hyp, "ws")
    _same_length(gold, hyps, "gold/hyp")
    report = m2_corpus([g.source for g in gold], hyps, [g.annotations for g in gold], args.max_unchanged)
    _print_json(report.to_json())
    return 0


# ----------------------------------------------------------------- experiment


def cmd_experiment(args) -> int:
    config = ExperimentConfig.load(args.config)
    overrides = {}
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.out is not None:
        overrides["output"] = args.out
    if overrides:
        config = ExperimentConfig.from_dict({**config.to_dict(), **overrides})
    rows = run_benchmark(config)
    out = output_path(config.output or f"{config.experiment}.csv")
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write(rows_to_csv(rows))
    sys.stdout.write(rows_to_csv(averaged_rows(rows)))
    return 0


# ---------------------------------------------------------------------- parser


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrkit", description="Correction-corpus preparation, noising and scoring.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="label source tokens of a parallel TSV as correct/error")
    p.add_argument("--pairs", required=True, help="source<TAB>target file")
    p.add_argument("--mode", choices=MODES, default="ws")
    p.add_argument("--out", required=True, help="labeled JSON-lines output")
    p.add_argument("--max-len", type=_positive_int, help="drop pairs with a side longer than this many tokens")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("mask", help="add masked_src to a labeled corpus")
    p.add_argument("--labeled", required=True)
    p.add_argument("--p", type=_fraction, default=0.2)
    p.add_argument("--m", type=_fraction, default=0.8)
    p.add_argument("--n", type=_fraction, default=0.1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--vocab", help="vocabulary file for random replacements (default: built from the corpus)")
    p.add_argument("--loss-mask", type=_fraction, help="also emit a T/S loss_mask skipping this fraction of correct targets")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("noise", help="synthesize errors")
    nsub = p.add_subparsers(dest="noise_command", required=True)

    def outputs(q):
        q.add_argument("--out", help="noisy sentences, one per line")
        q.add_argument("--pairs-out", help="noisy<TAB>clean parallel TSV")

    q = nsub.add_parser("confusion", help="confusion-dictionary substitutions")
    q.add_argument("--input", required=True, help="clean sentences, one per line")
    q.add_argument("--dict", required=True, help="token<TAB>candidates file")
    q.add_argument("--rate", type=_fraction, default=0.15)
    q.add_argument("--rate-denominator", choices=("covered", "all"), default="covered")
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--mode", choices=MODES, default="char")
    outputs(q)
    q.set_defaults(func=cmd_noise_confusion)

    q = nsub.add_parser("asr", help="position-wise insertion/deletion/substitution")
    q.add_argument("--input", required=True)
    src = q.add_mutually_exclusive_group(required=True)
    src.add_argument("--profile", help="error-rate profile JSON")
    src.add_argument("--estimate-from", help="paired TSV to estimate the profile from")
    q.add_argument("--save-profile", help="write the profile in use to this JSON file")
    q.add_argument("--vocab", help="token pool for uniform draws (default: tokens of the input)")
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--mode", choices=MODES, default="ws")
    outputs(q)
    q.set_defaults(func=cmd_noise_asr)

    q = nsub.add_parser("synth", help="Markov-chain sentences, self-corrupted")
    q.add_argument("--vocab-size", type=int, default=50)
    q.add_argument("--order", type=int, choices=(1, 2), default=1)
    q.add_argument("--n-sentences", type=int, default=10_000)
    q.add_argument("--min-len", type=int, default=8)
    q.add_argument("--max-len", type=int, default=20)
    q.add_argument("--rate", type=_fraction, default=0.1, help="substitution rate of the self-corruption")
    q.add_argument("--confusion-size", type=_positive_int, default=3)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--vocab-out", help="write the matching vocabulary file")
    outputs(q)
    q.set_defaults(func=cmd_noise_synth)

    p = sub.add_parser("eval", help="score system output (JSON report on stdout)")
    esub = p.add_subparsers(dest="eval_command", required=True)
    q = esub.add_parser("wer", help="word error rate")
    q.add_argument("--ref", required=True)
    q.add_argument("--hyp", required=True)
    q.add_argument("--mode", choices=MODES, default="ws")
    q.add_argument("--baseline-wer", type=float, help="also report the reduction relative to this WER")
    q.set_defaults(func=cmd_eval_wer)
    q = esub.add_parser("sighan", help="sentence-level detection/correction metrics")
    q.add_argument("--src", required=True)
    q.add_argument("--gold", required=True)
    q.add_argument("--pred", required=True)
    q.add_argument("--mode", choices=MODES, default="char")
    q.set_defaults(func=cmd_eval_sighan)
    q = esub.add_parser("m2", help="MaxMatch precision/recall/F0.5")
    q.add_argument("--gold", required=True, help="M2 gold file")
    q.add_argument("--hyp", required=True, help="tokenized system output, one sentence per line")
    q.add_argument("--max-unchanged", type=int, default=2)
    q.set_defaults(func=cmd_eval_m2)

    p = sub.add_parser("experiment", help="run a training sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="CSV path (overrides the config)")
    p.add_argument("--workers", type=_positive_int)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (CorpusFormatError, ConfigError) as exc:
        print(f"corrkit: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"corrkit: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"corrkit: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"corrkit: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
