"""Desk-scale sweeps: mask ratio, copy ratio and target-loss masking.

Each run builds a synthetic corpus, corrupts it with 10% confusion-set
substitutions, splits it 9:1, trains a :class:`~corrkit.model.ToyCorrector`
and scores the held-out split.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from pathlib import Path
from typing import Any

from .align import AlignedPair, align
from .corpus import N_SPECIAL, ParallelCorpus
from .metrics import sighan_eval, wer
from .model import TrainSchedule, predict_many, train
from .noise import ErrorRateProfile, noise_asr, random_confusion_dict, synth_markov
from .perturb import CopyAugmentPolicy, MaskPolicy, augment_copy, pair_rng

log = logging.getLogger(__name__)

EXPERIMENTS = ("mask_ratio", "copy_ratio", "loss_mask")
DEFAULT_GRIDS = {
    "mask_ratio": [0.0, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5],
    "copy_ratio": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
    "loss_mask": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
}
CSV_HEADER = ["experiment", "param", "seed", "f1_detect", "f1_correct", "wer"]


class ConfigError(ValueError):
    pass


def _from_dict(cls, obj: Any, where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(obj) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(repr(k) for k in unknown)}")
    try:
        return cls(**obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class CorpusParams:
    vocab_size: int = 50
    order: int = 1
    n_sentences: int = 10_000
    min_len: int = 8
    max_len: int = 20
    concentration: float = 0.3
    noise_rate: float = 0.1
    confusion_size: int = 3
    test_fraction: float = 0.1

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must lie in (0, 1)")
        if self.confusion_size < 1:
            raise ValueError("confusion_size must be >= 1")


@dataclass(frozen=True)
class ScheduleParams:
    mask_epochs: int = 5
    finetune_epochs: int = 3
    lr: float = 10.0
    l2: float = 1e-5
    batch_size: int = 256
    finetune_lr: float | None = None

    def schedule(self, seed: int, loss_mask_fraction: float = 0.0) -> TrainSchedule:
        return TrainSchedule(seed=seed, loss_mask_fraction=loss_mask_fraction, **asdict(self))


@dataclass(frozen=True)
class MaskParams:
    """Policy used by every sweep; the mask-ratio sweep overrides ``p``."""

    p: float = 0.0
    m: float = 0.8
    n: float = 0.1


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    grid: tuple[float, ...] = ()
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    corpus: CorpusParams = field(default_factory=CorpusParams)
    schedule: ScheduleParams = field(default_factory=ScheduleParams)
    mask: MaskParams = field(default_factory=MaskParams)
    radius: int = 2
    output: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        if not self.grid:
            object.__setattr__(self, "grid", tuple(DEFAULT_GRIDS[self.experiment]))
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ConfigError("seeds must be a non-empty list")
        for g in self.grid:
            if not 0.0 <= g <= 1.0:
                raise ConfigError(f"grid value {g} outside [0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(repr(k) for k in unknown)}")
        if "experiment" not in obj:
            raise ConfigError("config needs an 'experiment' key")
        kwargs = dict(obj)
        kwargs["corpus"] = _from_dict(CorpusParams, obj.get("corpus", {}), "corpus")
        kwargs["schedule"] = _from_dict(ScheduleParams, obj.get("schedule", {}), "schedule")
        kwargs["mask"] = _from_dict(MaskParams, obj.get("mask", {}), "mask")
        for key in ("grid", "seeds"):
            if key in kwargs and not isinstance(kwargs[key], list):
                raise ConfigError(f"{key} must be a list")
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as f:
            try:
                obj = json.load(f)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from None
        return cls.from_dict(obj)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = list(self.grid)
        d["seeds"] = list(self.seeds)
        return d


@dataclass
class BenchmarkData:
    train: list[AlignedPair]
    test: list[AlignedPair]
    vocab_size: int


def corrupt_markov(
    clean: list[list[int]], vocab_size: int, rate: float, confusion_size: int, seed: int
) -> list[list[int]]:
    """Substitute each token w.p. ``rate`` by one of its seeded random confusables."""
    ids = list(range(N_SPECIAL, N_SPECIAL + vocab_size))
    confusion = random_confusion_dict(ids, confusion_size, seed)
    profile = ErrorRateProfile(sub=rate, sub_dict=confusion)
    return [noise_asr(c, profile, ids, pair_rng(seed, i, 3)) for i, c in enumerate(clean)]


@lru_cache(maxsize=8)
def make_benchmark_data(params: CorpusParams, seed: int) -> BenchmarkData:
    """Clean Markov sentences as targets, confusion-noised copies as sources."""
    clean = synth_markov(
        params.vocab_size,
        params.order,
        params.n_sentences,
        (params.min_len, params.max_len),
        seed,
        params.concentration,
    )
    noisy = corrupt_markov(clean, params.vocab_size, params.noise_rate, params.confusion_size, seed)
    pairs = [align(x, c) for x, c in zip(noisy, clean)]
    n_test = max(1, round(len(pairs) * params.test_fraction))
    return BenchmarkData(pairs[:-n_test], pairs[-n_test:], N_SPECIAL + params.vocab_size)


def _score(model, test: list[AlignedPair]) -> dict:
    sources = [p.source for p in test]
    golds = [p.target for p in test]
    preds = predict_many(model, sources)
    report = sighan_eval(sources, golds, preds)
    return {
        "f1_detect": report.detection.f1,
        "f1_correct": report.correction.f1,
        "wer": wer(golds, preds).wer,
    }


def run_point(config: ExperimentConfig, param: float, seed: int) -> dict:
    """Train and score one (grid value, seed) cell."""
    data = make_benchmark_data(config.corpus, seed)
    train_pairs = data.train
    p = config.mask.p
    loss_mask = 0.0
    if config.experiment == "mask_ratio":
        p = param
    elif config.experiment == "copy_ratio":
        corpus = ParallelCorpus.from_pairs([(x.source, x.target) for x in train_pairs])
        augmented = augment_copy(corpus, CopyAugmentPolicy(param, seed))
        train_pairs = train_pairs + [align(s, t) for s, t in augmented.pairs[len(corpus) :]]
    else:
        loss_mask = param
    policy = MaskPolicy(p, config.mask.m, config.mask.n, seed)
    model = train(
        train_pairs,
        data.vocab_size,
        policy,
        config.schedule.schedule(seed, loss_mask),
        radius=config.radius,
    )
    row = {"experiment": config.experiment, "param": param, "seed": seed}
    row.update(_score(model, data.test))
    log.info("%s param=%g seed=%d -> F1c=%.2f WER=%.2f", config.experiment, param, seed, row["f1_correct"], row["wer"])
    return row


def _run_point_args(args):
    return run_point(*args)


def run_benchmark(config: ExperimentConfig) -> list[dict]:
    """All (grid value, seed) rows, each grid value followed by its seed-mean row.

    Cells are independent and seeded, so ``config.workers`` only changes
    wall-clock time, never the rows.
    """
    tasks = [(config, g, s) for s in config.seeds for g in config.grid]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(_run_point_args, tasks))
    else:
        results = [run_point(*t) for t in tasks]
    by_cell = {(r["param"], r["seed"]): r for r in results}
    rows = []
    for g in config.grid:
        cell_rows = [by_cell[(g, s)] for s in config.seeds]
        rows.extend(cell_rows)
        mean = {"experiment": config.experiment, "param": g, "seed": "mean"}
        for key in ("f1_detect", "f1_correct", "wer"):
            mean[key] = sum(r[key] for r in cell_rows) / len(cell_rows)
        rows.append(mean)
    return rows


def averaged_rows(rows: list[dict]) -> list[dict]:
    return [r for r in rows if r["seed"] == "mean"]


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(
            [r["experiment"], f"{r['param']:g}", r["seed"]]
            + [f"{r[k]:.2f}" for k in ("f1_detect", "f1_correct", "wer")]
        )
    return buf.getvalue()
