"""
Finding correct tokens and masking them
=======================================

A correction pair is aligned with unit-cost edit distance. Source tokens that
line up with an identical target token are *correct*; everything else is an
error. Masking then hides some of the correct tokens so a model has to look
at the context instead of copying.
"""

from corrkit import MaskPolicy, Vocab, align, apply_mask
from corrkit.perturb import pair_rng

source = "the cat sat on on the mat".split()
target = "the cat sat on the mat".split()

pair = align(source, target)
print("labels:", pair.labels)
for op in pair.script:
    print("  ", op.kind, op.src_pos, op.tgt_pos)

# ties go to the leftmost match
print(align(["A", "A"], ["A"]).script)

# masking works on ids; error positions and the target never change
vocab = Vocab(sorted(set(source + target)))
ids = align(vocab.encode(source), vocab.encode(target))
policy = MaskPolicy(p=0.5, m=0.8, n=0.1, seed=0)
for index in range(3):
    masked = apply_mask(ids, policy, vocab, pair_rng(policy.seed, index))
    print(" ".join(vocab.decode(masked)))
