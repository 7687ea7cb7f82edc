import random

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from oracles import brute_edit_distance, brute_m2_sentence

from corrkit.align import edit_distance
from corrkit.metrics import (
    EditAnnotation,
    M2Sentence,
    apply_edits,
    check_annotator_edits,
    f_beta,
    m2_corpus,
    m2_score,
    m2_sentence,
    read_m2,
    sighan_eval,
    wer,
    werr,
    write_m2,
)

# ----------------------------------------------------------------------- WER


def test_wer_identity_and_single_sub():
    assert wer([["a", "b"]], [["a", "b"]]).wer == 0
    report = wer([["a", "b", "c"]], [["a", "x", "c"]])
    assert report.to_json() == {"wer": 33.33, "edits": 1, "sub": 1, "del": 0, "ins": 0, "ref_tokens": 3}


def test_wer_deletion_and_insertion_directions():
    r = wer([["a", "b", "c"]], [["a", "c"]])
    assert (r.dele, r.ins) == (1, 0)
    r = wer([["a", "c"]], [["a", "b", "c"]])
    assert (r.dele, r.ins) == (0, 1)


def test_wer_errors():
    with pytest.raises(ValueError):
        wer([["a"]], [])
    with pytest.raises(ValueError):
        wer([[]], [["a"]])


def test_wer_against_brute_force():
    rng = random.Random(3)
    refs, hyps = [], []
    for _ in range(200):
        refs.append([rng.choice("abc") for _ in range(rng.randint(1, 6))])
        hyps.append([rng.choice("abc") for _ in range(rng.randint(0, 6))])
    report = wer(refs, hyps)
    edits = sum(brute_edit_distance(r, h) for r, h in zip(refs, hyps))
    assert report.edits == edits == report.sub + report.dele + report.ins
    assert report.wer == pytest.approx(100 * edits / sum(map(len, refs)))


sent = st.lists(st.sampled_from("abc"), min_size=1, max_size=8)
corpus = st.lists(st.tuples(sent, st.lists(st.sampled_from("abc"), max_size=8)), min_size=1, max_size=6)


@given(corpus, corpus)
def test_wer_of_concatenation_is_weighted_mean(a, b):
    ra = wer([r for r, _ in a], [h for _, h in a])
    rb = wer([r for r, _ in b], [h for _, h in b])
    rab = wer([r for r, _ in a + b], [h for _, h in a + b])
    weighted = (ra.wer * ra.ref_tokens + rb.wer * rb.ref_tokens) / (ra.ref_tokens + rb.ref_tokens)
    assert rab.wer == pytest.approx(weighted)
    assert min(ra.wer, rb.wer) - 1e-9 <= rab.wer <= max(ra.wer, rb.wer) + 1e-9


def test_werr_table_values():
    assert werr(4.83, 4.16) == 13.87
    assert werr(4.83, 4.08) == 15.53
    assert werr(3.0, 3.0) == 0
    assert werr(4.83, 0) == 100
    with pytest.raises(ValueError):
        werr(0, 1)


@given(st.floats(0.01, 100), st.floats(0, 100), st.floats(0, 100))
def test_werr_decreasing(base, x, y):
    assume(abs(x - y) > 0.01)
    lo, hi = sorted((x, y))
    assert werr(base, lo) >= werr(base, hi)


def test_f_beta():
    assert f_beta(1, 1, 0.5) == 1
    assert f_beta(0, 0, 0.5) == 0
    assert f_beta(0.672, 0.300, 0.5) == pytest.approx(0.539, abs=0.002)


# -------------------------------------------------------------------- SIGHAN


def test_sighan_perfect():
    srcs = [list("abcd"), list("abcd"), list("wxyz"), list("wxyz")]
    golds = [list("abcd"), list("abxd"), list("wxyz"), list("qxyz")]
    report = sighan_eval(srcs, golds, golds)
    for level in (report.detection, report.correction):
        assert (level.acc, level.p, level.r, level.f1) == (100, 100, 100, 100)


def test_sighan_hand_contingency():
    srcs = [list("abc"), list("abc"), list("abc")]
    golds = [list("xbc"), list("abc"), list("axc")]
    preds = [list("xbc"), list("abz"), list("abc")]
    d = sighan_eval(srcs, golds, preds).to_json()["detection"]
    assert d == {"acc": 33.33, "p": 50.0, "r": 50.0, "f1": 50.0}


def test_sighan_right_position_wrong_token():
    report = sighan_eval([list("abc")], [list("xbc")], [list("ybc")])
    assert report.detection.p == 100
    assert report.correction.p == 0


def test_sighan_length_mismatch():
    with pytest.raises(ValueError):
        sighan_eval([list("ab")], [list("abc")], [list("ab")])


triples = st.lists(
    st.integers(1, 6).flatmap(
        lambda n: st.tuples(*[st.lists(st.sampled_from("ab"), min_size=n, max_size=n)] * 3)
    ),
    min_size=1,
    max_size=20,
)


@given(triples)
def test_sighan_correction_never_beats_detection(ts):
    report = sighan_eval(*zip(*ts))
    assert report.correction.f1 <= report.detection.f1 + 1e-9
    assert report.correction.acc <= report.detection.acc + 1e-9


# ------------------------------------------------------------------------ M2


def test_m2_empty_gold_and_unchanged_system():
    report = m2_score(list("abc"), list("abc"), [[]])
    assert (report.p, report.r, report.f_half) == (100, 100, 100)


def test_m2_single_matching_edit():
    gold = [[EditAnnotation(1, 2, ("x",))]]
    report = m2_score("a b c".split(), "a x c".split(), gold)
    assert report.to_json() == {"p": 100.0, "r": 100.0, "f_half": 100.0, "matches": 1, "sys_edits": 1, "gold_edits": 1}


def test_m2_merges_adjacent_changes_to_meet_gold():
    source = "the cat sat on mat".split()
    system = "a dog sat on the mat".split()
    gold = [[EditAnnotation(0, 2, ("a", "dog")), EditAnnotation(4, 4, ("the",))]]
    stats = m2_sentence(source, system, gold)
    assert (stats.matches, stats.sys_edits) == (2, 2)


def test_m2_best_annotator_choice():
    source = "a b c".split()
    system = "a x c".split()
    gold = {0: [EditAnnotation(0, 1, ("z",))], 1: [EditAnnotation(1, 2, ("x",))]}
    stats = m2_sentence(source, system, gold)
    assert stats.annotator == 1 and stats.matches == 1


def test_m2_rejects_overlapping_gold():
    with pytest.raises(ValueError):
        check_annotator_edits([EditAnnotation(0, 2, ("a",)), EditAnnotation(1, 3, ("b",))])
    with pytest.raises(ValueError):
        m2_score(list("abc"), list("abc"), [[EditAnnotation(0, 2), EditAnnotation(1, 2)]])


def test_m2_file_roundtrip(tmp_path):
    text = (
        "S the cat sat\n"
        "A 1 2|||R:NOUN|||dog|||REQUIRED|||-NONE-|||0\n"
        "A 3 3|||M:PUNCT|||.|||REQUIRED|||-NONE-|||0\n"
        "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||1\n"
        "\n"
        "S ok\n"
        "\n"
    )
    path = tmp_path / "g.m2"
    path.write_text(text, encoding="utf-8")
    sents = read_m2(path)
    assert len(sents) == 2
    assert sents[0].annotations[0][0].replacement == ("dog",)
    assert sents[0].annotations[1] == []
    assert sents[1].annotators() == [0]
    out = tmp_path / "out.m2"
    write_m2(sents, out)
    again = read_m2(out)
    assert [(s.source, s.annotations) for s in again] == [(s.source, s.annotations) for s in sents]


def test_m2_corpus_totals():
    sources = [list("abc"), list("abc")]
    systems = [list("axc"), list("abc")]
    golds = [[[EditAnnotation(1, 2, ("x",))]], [[EditAnnotation(0, 1, ("q",))]]]
    report = m2_corpus(sources, systems, golds)
    assert (report.matches, report.sys_edits, report.gold_edits) == (1, 1, 2)
    assert report.p == 100 and report.r == 50
    assert report.f_half == pytest.approx(100 * 1.25 * 0.5 / (0.25 + 0.5))


def random_m2_case(rng, max_len=8, max_edits=2, n_annotators=1):
    n = rng.randint(1, max_len)
    source = [rng.choice("abcd") for _ in range(n)]
    gold = {}
    for ann in range(n_annotators):
        edits, pos = [], 0
        for _ in range(rng.randint(0, max_edits)):
            if pos > n:
                break
            start = rng.randint(pos, n)
            end = min(n, start + rng.randint(0, 2))
            repl = tuple(rng.choice("abcdx") for _ in range(rng.randint(0 if end > start else 1, 2)))
            edits.append(EditAnnotation(start, end, repl, ann))
            pos = end + 1
        gold[ann] = edits
    pick = gold[rng.randrange(n_annotators)]
    system = apply_edits(source, pick) if rng.random() < 0.6 else list(source)
    for _ in range(rng.randint(0, 2)):
        if system and rng.random() < 0.5:
            system[rng.randrange(len(system))] = rng.choice("abcdx")
        else:
            system.insert(rng.randint(0, len(system)), rng.choice("abcdx"))
    return source, system, gold


def test_m2_against_brute_force_small():
    rng = random.Random(11)
    for _ in range(100):
        source, system, gold = random_m2_case(rng, n_annotators=rng.randint(1, 2))
        stats = m2_sentence(source, system, gold)
        gold_sets = {a: [(e.start, e.end, e.replacement) for e in es] for a, es in gold.items()}
        assert (stats.matches, stats.sys_edits, stats.gold_edits) == brute_m2_sentence(source, system, gold_sets)


@given(st.lists(st.sampled_from("abcd"), min_size=1, max_size=8), st.data())
def test_m2_system_equal_to_gold_application_is_perfect(source, data):
    n = len(source)
    edits, pos = [], 0
    for _ in range(data.draw(st.integers(0, 3))):
        if pos > n:
            break
        start = data.draw(st.integers(pos, n))
        end = data.draw(st.integers(start, min(n, start + 2)))
        repl = tuple(data.draw(st.lists(st.sampled_from("wxyz"), min_size=1 if start == end else 0, max_size=2)))
        edits.append(EditAnnotation(start, end, repl))
        pos = end + 1
    system = apply_edits(source, edits)
    # system edits come from minimal alignments, so the gold edits must lie on one
    # (replacement letters never occur in the source, so each edit costs max(span, repl))
    gold_cost = sum(max(e.end - e.start, len(e.replacement)) for e in edits)
    assume(gold_cost == edit_distance(source, system))
    report = m2_score(source, system, [edits])
    assert (report.p, report.r, report.f_half) == (100, 100, 100)


def test_m2_sentence_type_roundtrip():
    s = M2Sentence(("a",), {})
    assert s.annotators() == [0] and s.edits_of(0) == []


def test_pruned_oracle_matches_full_enumeration():
    from oracles import all_scripts, minimal_scripts, script_cost

    rng = random.Random(4)
    for _ in range(200):
        a = [rng.choice("abc") for _ in range(rng.randint(0, 6))]
        b = [rng.choice("abc") for _ in range(rng.randint(0, 6))]
        full = all_scripts(a, b)
        best = min(map(script_cost, full))
        assert sorted(s for s in full if script_cost(s) == best) == sorted(minimal_scripts(a, b)[1])
