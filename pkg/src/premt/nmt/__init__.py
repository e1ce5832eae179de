"""Attentional encoder-decoder translation, implemented directly in numpy."""

from .decode import Translation, greedy, translate
from .estimator import AttentionNMT
from .gradcheck import GradCheckReport, gradient_check, random_check_params
from .model import attend, backward, encode, forward, make_batch
from .params import AdamState, Checkpoint, Dims, Seq2SeqParams
from .train import TrainingConfig, TrainingError, select_best, train_loop, train_step

__all__ = [
    "Translation", "greedy", "translate", "AttentionNMT", "GradCheckReport", "gradient_check",
    "random_check_params", "attend", "backward", "encode", "forward", "make_batch", "AdamState",
    "Checkpoint", "Dims", "Seq2SeqParams", "TrainingConfig", "TrainingError", "select_best",
    "train_loop", "train_step",
]
