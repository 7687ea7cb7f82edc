"""
Scoring corrections
===================

WER and its relative reduction for ASR-style output, sentence-level
detection/correction scores for spelling, and MaxMatch precision, recall
and F0.5 for span edits.
"""

from corrkit.metrics import EditAnnotation, m2_score, sighan_eval, wer, werr

refs = [["a", "b", "c", "d"], ["e", "f"]]
hyps = [["a", "x", "c"], ["e", "f"]]
report = wer(refs, hyps)
print(report.to_json())
print("WERR vs 4.83:", werr(4.83, 4.16))

sources = [list("我爱北惊"), list("天气很好"), list("他去学效")]
golds = [list("我爱北京"), list("天气很好"), list("他去学校")]
preds = [list("我爱北京"), list("天汽很好"), list("他去学效")]
print(sighan_eval(sources, golds, preds).to_json())

source = "the cat sat on mat".split()
system = "a dog sat on the mat".split()
gold = [[EditAnnotation(0, 2, ("a", "dog")), EditAnnotation(4, 4, ("the",))]]
print(m2_score(source, system, gold).to_json())
