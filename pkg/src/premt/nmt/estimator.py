"""Token-level attentional NMT estimator."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..bpe import MergeTable, apply_bpe, learn_bpe, undo_bpe
from ..corpus import BOS, PAD, ParallelCorpus, Vocabulary, build_vocabulary, check_sentence
from .decode import translate
from .params import Dims, Seq2SeqParams
from .train import TrainingConfig, select_best, train_loop


_DROPPED = (BOS, PAD)


class AttentionNMT(BaseEstimator):
    """Bi-directional GRU encoder, additive attention, GRU decoder.

    ``fit(sources, targets)`` trains on token sequences; ``predict``
    returns token tuples.  With ``bpe_merges > 0`` a joint BPE model is
    learned on the training pairs and applied on both ends (``merges``
    supplies a ready-made table instead).  With ``ensemble > 1`` the last
    that many checkpoints decode jointly.
    """

    def __init__(self, embed_dim: int = 32, hidden_dim: int = 64, att_dim: int = 0,
                 learning_rate: float = 1e-3, batch_size: int = 16, max_iterations: int = 1000,
                 checkpoint_interval: int = 250, clip_norm: float = 5.0, seed: int = 0,
                 beam_size: int = 5, max_len: int | None = None, ensemble: int = 1,
                 bpe_merges: int = 0, merges: MergeTable | None = None):
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.att_dim = att_dim
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_iterations = max_iterations
        self.checkpoint_interval = checkpoint_interval
        self.clip_norm = clip_norm
        self.seed = seed
        self.beam_size = beam_size
        self.max_len = max_len
        self.ensemble = ensemble
        self.bpe_merges = bpe_merges
        self.merges = merges

    @property
    def config(self) -> TrainingConfig:
        return TrainingConfig(self.learning_rate, self.batch_size, self.max_iterations,
                              self.checkpoint_interval, self.clip_norm, self.seed)

    def fit(self, X, y=None, *, dev=None, callback=None):
        """Train; ``dev=(sources, targets)`` selects the best checkpoint by BLEU."""
        corpus = X if isinstance(X, ParallelCorpus) else ParallelCorpus.from_sides(X, y)
        if self.merges is not None:
            self.merges_ = self.merges
        elif self.bpe_merges > 0:
            self.merges_ = learn_bpe(corpus, self.bpe_merges, joint=True)
        else:
            self.merges_ = None
        if self.merges_ is not None:
            corpus = ParallelCorpus.from_sides(self.segment(corpus.sources),
                                               self.segment(corpus.targets))
        self.src_vocab_ = build_vocabulary(corpus, "source")
        self.tgt_vocab_ = build_vocabulary(corpus, "target")
        pairs = [(self.src_vocab_.encode(s), self.tgt_vocab_.encode(t)) for s, t in corpus]
        dims = Dims(len(self.src_vocab_), len(self.tgt_vocab_), self.embed_dim,
                    self.hidden_dim, self.att_dim)
        params = Seq2SeqParams.initialize(dims, np.random.default_rng([self.seed, 1]))
        cfg = self.config
        self.checkpoints_ = train_loop(pairs, cfg, params, src_vocab=self.src_vocab_.tokens,
                                       tgt_vocab=self.tgt_vocab_.tokens,
                                       pad=(Vocabulary.pad_id, Vocabulary.pad_id), callback=callback)
        if dev is not None and len(self.checkpoints_) > 1:
            dev_src, dev_tgt = dev
            dev_src, dev_tgt = self.segment(dev_src), self.segment(dev_tgt)
            self.best_ = select_best(self.checkpoints_, dev_src, dev_tgt,
                                     lambda ck, s: self._join(self._translate([ck.params], s)[0]))
        else:
            self.best_ = self.checkpoints_[-1]
        return self

    @classmethod
    def from_checkpoints(cls, checkpoints, **params) -> "AttentionNMT":
        """Rebuild a decoder from stored checkpoints (the last one is "best")."""
        checkpoints = list(checkpoints)
        est = cls(**params)
        first = checkpoints[-1]
        est.src_vocab_ = Vocabulary(tuple(first.src_vocab))
        est.tgt_vocab_ = Vocabulary(tuple(first.tgt_vocab))
        est.checkpoints_ = checkpoints
        est.best_ = first
        est.merges_ = est.merges
        return est

    def segment(self, sentences) -> list:
        """Apply the model's subword segmentation (identity without one)."""
        if getattr(self, "merges_", None) is None:
            return [tuple(s) for s in sentences]
        return [apply_bpe(s, self.merges_) for s in sentences]

    def _join(self, tokens):
        if getattr(self, "merges_", None) is None:
            return tuple(tokens)
        # a truncated hypothesis may end in a continuation unit
        tokens = list(tokens)
        if tokens and tokens[-1].endswith(self.merges_.marker):
            tokens[-1] = tokens[-1][:-len(self.merges_.marker)]
        return undo_bpe(tokens, self.merges_.marker)

    @property
    def models_(self) -> list:
        check_is_fitted(self, "checkpoints_")
        if self.ensemble > 1:
            return [ck.params for ck in self.checkpoints_[-self.ensemble:]]
        return [self.best_.params]

    def _max_len(self, n_src: int) -> int:
        return self.max_len if self.max_len is not None else 2 * n_src + 10

    def _translate(self, models, sentence):
        sentence = check_sentence(sentence)
        if not sentence:
            return (), np.zeros((1, 0)), 0.0
        ids = self.src_vocab_.encode(sentence)
        out = translate(models, ids, self.beam_size, self._max_len(len(ids)),
                        bos=Vocabulary.bos_id, eos=Vocabulary.eos_id)
        decoded = self.tgt_vocab_.decode(out.ids)
        keep = [i for i, t in enumerate(decoded) if t not in _DROPPED] + [len(decoded)]
        return tuple(decoded[i] for i in keep[:-1]), out.attention[keep], out.score

    def translate(self, sentence):
        """``(units, attention, score)`` on the subword level.

        ``attention`` has one row per output unit plus one for ``</s>`` and
        one column per source unit.
        """
        return self._translate(self.models_, self.segment([sentence])[0])

    def predict(self, X) -> list:
        models = self.models_
        return [self._join(self._translate(models, s)[0]) for s in self.segment(X)]

    def save(self, path) -> None:
        self.best_.save(path)
