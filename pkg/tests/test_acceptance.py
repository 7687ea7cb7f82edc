"""Acceptance suite: one test per criterion, each recorded as a PASS/FAIL line.

The summary lines are printed at the end of the pytest run (see conftest).
The three directional tests train 75 small models between them and take a
few minutes on one core.
"""

import json
import random
import time

import numpy as np
import pytest
from oracles import brute_align, brute_edit_distance, brute_m2_sentence, gradient_relative_error
from test_metrics import random_m2_case

from corrkit.align import align, apply_script, edit_distance
from corrkit.benchmark import ExperimentConfig, averaged_rows, run_benchmark
from corrkit.cli import main
from corrkit.corpus import MASK_ID, N_SPECIAL
from corrkit.metrics import M2Report, f_beta, m2_sentence, werr
from corrkit.noise import ErrorRateProfile, estimate_profile, noise_asr
from corrkit.perturb import MaskPolicy, mask_corpus, pair_rng

SEEDS = [0, 1, 2, 3, 4]


def test_werr_anchors(criterion):
    a, b = werr(4.83, 4.16), werr(4.83, 4.08)
    ok = criterion("WERR anchors", a == 13.87 and b == 15.53, f"werr(4.83,4.16)={a:.2f} werr(4.83,4.08)={b:.2f}")
    assert ok


def test_f_half_anchor(criterion):
    value = f_beta(0.672, 0.300, 0.5)
    ok = criterion("F0.5 anchor", abs(value - 0.539) <= 0.002, f"f_beta(0.672,0.300,0.5)={value:.4f}")
    assert ok


def test_alignment_oracle(criterion):
    rng = random.Random(2024)
    start = time.perf_counter()
    failures = 0
    for _ in range(1000):
        a = [rng.choice("xyz") for _ in range(rng.randint(0, 6))]
        b = [rng.choice("xyz") for _ in range(rng.randint(0, 6))]
        pair = align(a, b)
        ok = (
            edit_distance(a, b) == brute_edit_distance(a, b) == pair.cost
            and apply_script(a, b, pair.script) == b
            and [tuple(op) for op in pair.script] == list(brute_align(a, b))
        )
        failures += not ok
    elapsed = time.perf_counter() - start
    ok = criterion("Alignment oracle", failures == 0 and elapsed < 30, f"1000 pairs, {failures} mismatches, {elapsed:.1f}s")
    assert ok


def test_mask_sampler_statistics(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(17)
    vocab_size = 60
    pairs = []
    for _ in range(6000):
        tgt = rng.integers(N_SPECIAL, vocab_size, rng.integers(10, 31)).tolist()
        src = [t if rng.random() > 0.12 else int(rng.integers(N_SPECIAL, vocab_size)) for t in tgt]
        pairs.append(align(src, tgt))
    before = [(bytes(json.dumps(p.target), "utf-8"), p.source) for p in pairs]
    masked = mask_corpus(pairs, MaskPolicy(0.2, 0.8, 0.1, seed=3), vocab_size)
    n_correct = n_mask = n_other = 0
    untouched = True
    for pair, (tgt_bytes, src), out in zip(pairs, before, masked):
        untouched &= bytes(json.dumps(pair.target), "utf-8") == tgt_bytes
        for i, lab in enumerate(pair.labels):
            if lab == "E":
                untouched &= out[i] == src[i]
            else:
                n_correct += 1
                n_mask += out[i] == MASK_ID
                n_other += out[i] not in (MASK_ID, src[i])
    f_mask, f_other = n_mask / n_correct, n_other / n_correct
    elapsed = time.perf_counter() - start
    ok = (
        n_correct >= 100_000
        and abs(f_mask - 0.16) <= 0.005
        and abs(f_other - 0.02) <= 0.002
        and untouched
        and elapsed < 10
    )
    detail = f"{n_correct} correct tokens, mask={f_mask:.4f} random={f_other:.4f}, unchanged={untouched}, {elapsed:.1f}s"
    assert criterion("Mask sampler statistics", ok, detail)


def test_noise_round_trip(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    tokens = [f"w{i:02d}" for i in range(40)]
    clean = [[tokens[i] for i in rng.integers(0, 40, 20)] for _ in range(5000)]
    profile = ErrorRateProfile(ins=0.05, dele=0.02, sub=0.08)
    noisy = [noise_asr(s, profile, tokens, pair_rng(1, i)) for i, s in enumerate(clean)]
    est = estimate_profile(zip(noisy, clean))
    elapsed = time.perf_counter() - start
    errs = (abs(est.ins - 0.05), abs(est.dele - 0.02), abs(est.sub - 0.08))
    ok = max(errs) <= 0.01 and elapsed < 30
    detail = f"10^5 tokens, estimated ins={est.ins:.4f} del={est.dele:.4f} sub={est.sub:.4f}, {elapsed:.1f}s"
    assert criterion("Noise round trip", ok, detail)


def test_m2_oracle(criterion):
    rng = random.Random(99)
    start = time.perf_counter()
    mismatches = 0
    ours = [0, 0, 0]
    ref = [0, 0, 0]
    for _ in range(500):
        source, system, gold = random_m2_case(rng, max_len=8, max_edits=2, n_annotators=rng.randint(1, 2))
        stats = m2_sentence(source, system, gold)
        gold_sets = {a: [(e.start, e.end, e.replacement) for e in es] for a, es in gold.items()}
        expected = brute_m2_sentence(source, system, gold_sets)
        got = (stats.matches, stats.sys_edits, stats.gold_edits)
        mismatches += got != expected
        ours = [x + y for x, y in zip(ours, got)]
        ref = [x + y for x, y in zip(ref, expected)]
    elapsed = time.perf_counter() - start
    f_ours, f_ref = M2Report(*ours).f_half, M2Report(*ref).f_half
    ok = mismatches == 0 and f_ours == f_ref and elapsed < 60
    detail = f"500 sentences, {mismatches} mismatches, F0.5 {f_ours:.2f} vs oracle {f_ref:.2f}, {elapsed:.1f}s"
    assert criterion("M2 oracle", ok, detail)


def test_gradient_check(criterion):
    start = time.perf_counter()
    errors = [gradient_relative_error(seed) for seed in range(100, 120)]
    elapsed = time.perf_counter() - start
    ok = max(errors) < 1e-4 and elapsed < 10
    assert criterion("Gradient check", ok, f"20 points, max relative error {max(errors):.2e}, {elapsed:.1f}s")


@pytest.fixture(scope="module")
def sweeps():
    """Seed-averaged benchmark rows keyed by experiment, with wall time."""
    out = {}
    for experiment, grid in (
        ("mask_ratio", None),
        ("copy_ratio", [0.0, 0.5]),
        ("loss_mask", [0.0, 0.5]),
    ):
        obj = {"experiment": experiment, "seeds": SEEDS}
        if grid is not None:
            obj["grid"] = grid
        start = time.perf_counter()
        rows = averaged_rows(run_benchmark(ExperimentConfig.from_dict(obj)))
        out[experiment] = ({r["param"]: r for r in rows}, time.perf_counter() - start)
    return out


def test_directional_mask_effect(criterion, sweeps):
    rows, elapsed = sweeps["mask_ratio"]
    f1 = {p: r["f1_correct"] for p, r in rows.items()}
    best = max(f1.values())
    ok = f1[0.15] >= f1[0.0] and f1[0.5] <= best and elapsed < 600
    curve = " ".join(f"{p:g}:{v:.2f}" for p, v in f1.items())
    assert criterion("Directional MaskCorrect effect", ok, f"F1c by p [{curve}], {elapsed:.0f}s")


def test_directional_copy_harm(criterion, sweeps):
    rows, elapsed = sweeps["copy_ratio"]
    w0, w5 = rows[0.0]["wer"], rows[0.5]["wer"]
    ok = w5 >= w0 and elapsed < 600
    assert criterion("Directional copy-harm effect", ok, f"WER q=0 {w0:.3f}, q=0.5 {w5:.3f}, {elapsed:.0f}s")


def test_directional_loss_mask_harm(criterion, sweeps):
    rows, elapsed = sweeps["loss_mask"]
    w0, w5 = rows[0.0]["wer"], rows[0.5]["wer"]
    ok = w5 >= w0 and elapsed < 600
    assert criterion("Directional loss-mask-harm effect", ok, f"WER f=0 {w0:.3f}, f=0.5 {w5:.3f}, {elapsed:.0f}s")


def test_cli_determinism(criterion, tmp_path):
    def pipeline(root, workers):
        root.mkdir()
        w = str(workers)
        codes = [
            main(["noise", "synth", "--n-sentences", "6000", "--seed", "3", "--pairs-out", str(root / "pairs.tsv"),
                  "--out", str(root / "noisy.txt")]),
            main(["align", "--pairs", str(root / "pairs.tsv"), "--out", str(root / "lab.jsonl"), "--workers", w]),
            main(["mask", "--labeled", str(root / "lab.jsonl"), "--seed", "5", "--out", str(root / "mask.jsonl"),
                  "--loss-mask", "0.3", "--workers", w]),
            main(["noise", "asr", "--input", str(root / "noisy.txt"), "--estimate-from", str(root / "pairs.tsv"),
                  "--seed", "2", "--pairs-out", str(root / "asr.tsv"), "--save-profile", str(root / "prof.json")]),
        ]
        config = {
            "experiment": "loss_mask",
            "grid": [0.0, 0.5],
            "seeds": [0, 1],
            "workers": workers,
            "corpus": {"n_sentences": 400, "vocab_size": 12},
            "schedule": {"mask_epochs": 1, "finetune_epochs": 1},
        }
        (root / "exp.json").write_text(json.dumps(config), encoding="utf-8")
        codes.append(main(["experiment", "--config", str(root / "exp.json"), "--out", str(root / "exp.csv")]))
        return codes, {p.name: p.read_bytes() for p in sorted(root.iterdir()) if p.name != "exp.json"}

    codes_a, files_a = pipeline(tmp_path / "run1", 1)
    codes_b, files_b = pipeline(tmp_path / "run2", 1)
    codes_c, files_c = pipeline(tmp_path / "run3", 3)
    ok = codes_a == codes_b == codes_c == [0] * 5 and files_a == files_b == files_c
    detail = f"{len(files_a)} artifacts byte-identical across 2 reruns and workers 1 vs 3"
    assert criterion("Determinism", ok, detail)
