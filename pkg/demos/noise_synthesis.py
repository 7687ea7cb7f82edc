"""
Synthesizing training errors
============================

Two ways to turn clean text into (noisy, clean) pairs: confusion-dictionary
substitutions at a fixed rate, and position-wise insertions, deletions and
substitutions at rates measured on real paired data.
"""

import numpy as np

from corrkit.noise import ErrorRateProfile, estimate_profile, noise_asr, noise_confusion

clean = list("今天天气很好我们去公园散步")
confusion = {"天": ["夭", "大"], "气": ["汽"], "园": ["圆", "元"], "步": ["部"]}
print("".join(noise_confusion(clean, confusion, rate=0.5, rng=1)))

# rates -> noisy corpus -> estimated rates
rng = np.random.default_rng(0)
tokens = [f"w{i}" for i in range(30)]
sentences = [[tokens[i] for i in rng.integers(0, 30, 20)] for _ in range(2000)]
profile = ErrorRateProfile(ins=0.05, dele=0.02, sub=0.08)
noisy = [noise_asr(s, profile, tokens, rng) for s in sentences]
est = estimate_profile(zip(noisy, sentences))
print(f"estimated ins={est.ins:.3f} del={est.dele:.3f} sub={est.sub:.3f}")

# estimated profiles carry the substitutions seen, which are then reused
noisy_again = [noise_asr(s, est, tokens, rng) for s in sentences[:3]]
for a, b in zip(sentences[:3], noisy_again):
    print(" ".join(a), "->", " ".join(b))
