"""
Mask ratio on a toy corrector
=============================

Trains the log-linear toy corrector on a synthetic Markov corpus with 10%
confusion substitutions, once per mask ratio, and reports correction F1 and
WER on held-out sentences. A reduced corpus and two seeds keep this under a
minute; ``corrkit experiment`` runs the full-size version.
"""

from corrkit.benchmark import ExperimentConfig, averaged_rows, rows_to_csv, run_benchmark

config = ExperimentConfig.from_dict(
    {
        "experiment": "mask_ratio",
        "grid": [0.0, 0.15, 0.3, 0.5],
        "seeds": [0, 1],
        "corpus": {"n_sentences": 4000},
    }
)
rows = run_benchmark(config)
print(rows_to_csv(averaged_rows(rows)))
