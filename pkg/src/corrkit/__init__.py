"""Tools for building, perturbing, noising and scoring text-correction corpora."""

from .align import AlignedPair, EditOp, align, correct_token_positions, edit_distance
from .corpus import MASK_ID, N_SPECIAL, ParallelCorpus, Vocab, build_vocab, read_parallel_tsv, tokenize, write_parallel_tsv
from .metrics import f_beta, m2_score, sighan_eval, wer, werr
from .model import ToyCorrector, TrainSchedule, forward, predict, train
from .noise import ErrorRateProfile, estimate_profile, noise_asr, noise_confusion, synth_markov
from .perturb import CopyAugmentPolicy, MaskPolicy, apply_mask, augment_copy, make_loss_mask

__version__ = "0.1.0"

__all__ = [
    "AlignedPair",
    "CopyAugmentPolicy",
    "EditOp",
    "ErrorRateProfile",
    "MASK_ID",
    "MaskPolicy",
    "N_SPECIAL",
    "ParallelCorpus",
    "ToyCorrector",
    "TrainSchedule",
    "Vocab",
    "align",
    "apply_mask",
    "augment_copy",
    "build_vocab",
    "correct_token_positions",
    "edit_distance",
    "estimate_profile",
    "f_beta",
    "forward",
    "m2_score",
    "make_loss_mask",
    "noise_asr",
    "noise_confusion",
    "predict",
    "read_parallel_tsv",
    "sighan_eval",
    "synth_markov",
    "tokenize",
    "train",
    "wer",
    "werr",
    "write_parallel_tsv",
]
