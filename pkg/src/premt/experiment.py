"""End-to-end experiment driver: train every component, decode, report.

A configuration is a flat ``key=value`` text file (``#`` starts a
comment).  Keys are the field names of :class:`ExperimentConfig`; lists
are comma-separated and booleans are ``true``/``false``.  Every run writes
``manifest.txt`` containing the complete resolved configuration, so::

    premt experiment --config out/manifest.txt --out again/

reproduces ``out`` byte for byte.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bpe import learn_bpe
from .combine import StageError, PreTranslationMT
from .corpus import build_vocabulary, load_corpus, write_sentences
from .eval import bleu, frequency_sweep
from .nmt.estimator import AttentionNMT
from .smt.system import PhraseBasedMT

log = logging.getLogger(__name__)

MODES = ("nmt-only", "pbmt-only", "pipeline", "mixed")
SYSTEM_OF_MODE = {"nmt-only": "nmt", "pbmt-only": "pbmt", "pipeline": "pipeline", "mixed": "mixed"}


class ConfigError(ValueError):
    pass


def _none_int(v):
    return None if v in (None, "", "none", "None") else int(v)


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("true", "1", "yes"):
        return True
    if s in ("false", "0", "no"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _int_list(v):
    if isinstance(v, (list, tuple)):
        return tuple(int(x) for x in v)
    return tuple(int(x) for x in str(v).split(",") if x.strip())


@dataclass
class ExperimentConfig:
    train_src: str = ""
    train_tgt: str = ""
    dev_src: str = ""
    dev_tgt: str = ""
    test_src: str = ""
    test_tgt: str = ""
    mode: str = "mixed"
    compare: bool = True          # also train the nmt and pbmt baselines
    seed: int = 0
    bpe_merges: int = 200
    # phrase-based system
    max_phrase_len: int = 3
    lm_order: int = 3
    ibm_iterations: int = 5
    pbmt_beam: int | None = 50
    distortion_limit: int | None = 6
    mert_rounds: int = 0
    mert_nbest: int = 100
    filter_singletons: bool = True
    # neural systems
    embed_dim: int = 32
    hidden_dim: int = 64
    learning_rate: float = 1e-3
    batch_size: int = 16
    max_iterations: int = 3000
    checkpoint_interval: int = 750
    clip_norm: float = 5.0
    nmt_beam: int = 5
    ensemble: int = 1
    select_checkpoint: bool = False   # pick the best dev-BLEU checkpoint
    # reporting
    freq_thresholds: tuple = (1, 2, 3, 10, 100)
    attention_dumps: int = 10
    out: str = field(default="", metadata={"manifest": False})

    _converters = {
        "pbmt_beam": _none_int, "distortion_limit": _none_int, "compare": _bool,
        "filter_singletons": _bool, "select_checkpoint": _bool, "freq_thresholds": _int_list,
    }

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
            conv = cls._converters.get(key)
            if conv is None:
                default = known[key].default
                conv = type(default) if default is not None and not isinstance(default, str) else str
            try:
                kwargs[key] = conv(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        values = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value")
                key, value = line.split("=", 1)
                values[key.strip()] = value.strip()
        values.update(overrides or {})
        return cls.from_mapping(values)

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}; got {self.mode!r}")
        for key in ("train_src", "train_tgt", "test_src", "test_tgt"):
            if not getattr(self, key):
                raise ConfigError(f"{key} is required")
        for key in ("train_src", "train_tgt", "dev_src", "dev_tgt", "test_src", "test_tgt"):
            value = getattr(self, key)
            if value and not Path(value).is_file():
                raise ConfigError(f"{key}: no such file {value}")
        if bool(self.dev_src) != bool(self.dev_tgt):
            raise ConfigError("dev_src and dev_tgt must be given together")
        if (self.mert_rounds or self.select_checkpoint) and not self.dev_src:
            raise ConfigError("mert_rounds and select_checkpoint need a dev set")
        if self.ensemble < 1:
            raise ConfigError("ensemble must be >= 1")

    def manifest(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            if not f.metadata.get("manifest", True):
                continue
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = str(v).lower()
            elif isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    def systems(self) -> list:
        main = SYSTEM_OF_MODE[self.mode]
        names = ["nmt", "pbmt"] if self.compare else []
        if main not in names:
            names.append(main)
        return names

    def nmt_estimator(self) -> AttentionNMT:
        return AttentionNMT(embed_dim=self.embed_dim, hidden_dim=self.hidden_dim,
                            learning_rate=self.learning_rate, batch_size=self.batch_size,
                            max_iterations=self.max_iterations,
                            checkpoint_interval=self.checkpoint_interval, clip_norm=self.clip_norm,
                            seed=self.seed, beam_size=self.nmt_beam, ensemble=self.ensemble)


def _write_tsv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")


def write_attention(path, attention: np.ndarray, inputs, outputs) -> None:
    """Attention as TSV: a header of input units, then one row per output
    unit (the last row is ``</s>``)."""
    labels = list(outputs) + ["</s>"]
    if attention.shape != (len(labels), len(inputs)):
        raise ValueError(f"attention shape {attention.shape} does not match labels")
    _write_tsv(Path(path), [""] + list(inputs),
               ([lab] + [f"{w:.6f}" for w in row] for lab, row in zip(labels, attention)))


def bleu_rows(scores: dict):
    for name, rep in scores.items():
        yield [name, f"{rep.bleu:.6f}"] + [f"{p:.6f}" for p in rep.precisions] + [
            f"{rep.brevity_penalty:.6f}", str(rep.hyp_len), str(rep.ref_len)]


BLEU_HEADER = ["system", "bleu", "p1", "p2", "p3", "p4", "bp", "hyp_len", "ref_len"]


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def run_experiment(config: ExperimentConfig) -> dict:
    """Train the configured systems and write all reports under ``config.out``.

    Returns ``{system: BleuReport}`` for the test set.  Trained components
    are saved under ``models/`` as soon as they exist, so a failure in a
    later stage leaves them in place.
    """
    config.validate()
    if not config.out:
        raise ConfigError("out directory is required")
    out = Path(config.out)
    (out / "models").mkdir(parents=True, exist_ok=True)
    (out / "systems").mkdir(exist_ok=True)
    (out / "manifest.txt").write_text(config.manifest(), encoding="utf-8")

    with _Stage("load"):
        train = load_corpus(config.train_src, config.train_tgt)
        test = load_corpus(config.test_src, config.test_tgt)
        dev = load_corpus(config.dev_src, config.dev_tgt) if config.dev_src else None
        counts = build_vocabulary(train, "target")
        counts.save(out / "models" / "vocab.tgt.txt")
    systems = config.systems()
    need_pbmt = any(s != "nmt" for s in systems)
    need_nmt_kind = [s for s in systems if s in ("nmt", "pipeline", "mixed")]
    dev_pair = (dev.sources, dev.targets) if dev is not None and config.select_checkpoint else None

    merges = None
    if need_nmt_kind:
        with _Stage("bpe"):
            merges = learn_bpe(train, config.bpe_merges, joint=True)
            merges.save(out / "models" / "bpe.txt")

    hyps = {}
    pbmt = None
    if need_pbmt:
        with _Stage("pbmt"):
            pbmt = PhraseBasedMT(config.max_phrase_len, config.lm_order, config.ibm_iterations,
                                 config.pbmt_beam, config.distortion_limit).fit(train)
            if config.mert_rounds > 0:
                pbmt.tune(dev.sources, dev.targets, rounds=config.mert_rounds, seed=config.seed,
                          nbest=config.mert_nbest)
            pbmt.save(out / "models" / "pbmt")
            if "pbmt" in systems:
                hyps["pbmt"] = pbmt.predict(test.sources)

    if "nmt" in systems:
        with _Stage("nmt"):
            nmt = config.nmt_estimator().set_params(merges=merges)
            nmt.fit(train, dev=dev_pair)
            nmt.save(out / "models" / "nmt.bin")
            hyps["nmt"] = nmt.predict(test.sources)

    combos = {}
    for name in ("pipeline", "mixed"):
        if name not in systems:
            continue
        with _Stage(name):
            combo = PreTranslationMT(name, nmt=config.nmt_estimator(),
                                     filter_singletons=config.filter_singletons)
            combo.fit(train, smt_fitted=pbmt, merges=merges, dev=dev_pair)
            combo.nmt_.save(out / "models" / f"{name}.bin")
            combos[name] = combo
            hyps[name] = combo.predict(test.sources)

    with _Stage("report"):
        for name, h in hyps.items():
            write_sentences(out / "systems" / f"{name}.txt", h)
        main = SYSTEM_OF_MODE[config.mode]
        write_sentences(out / "hyp.txt", hyps[main])
        scores = {name: bleu(h, test.targets) for name, h in hyps.items()}
        _write_tsv(out / "bleu.tsv", BLEU_HEADER, bleu_rows(scores))
        report = frequency_sweep(hyps, test.targets, counts, config.freq_thresholds, main)
        (out / "freq.tsv").write_text(report.to_tsv(), encoding="utf-8")
        if config.mode == "mixed" and config.attention_dumps > 0:
            (out / "attn").mkdir(exist_ok=True)
            for i, src in enumerate(test.sources[:config.attention_dumps]):
                res = combos["mixed"].translate(src)
                write_attention(out / "attn" / f"{i:03d}.tsv", res.attention, res.units,
                                res.output_units)
    return scores


def write_rare_word_corpus(directory, seed: int = 0, **kwargs) -> dict:
    """Write the synthetic rare-word corpus as ``{train,dev,test}.{src,tgt}``;
    returns the config keys pointing at the files."""
    from .synthetic import rare_word_corpus
    data = rare_word_corpus(seed, **kwargs)
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    keys = {}
    for split in ("train", "dev", "test"):
        corpus = getattr(data, split)
        for side, sents in (("src", corpus.sources), ("tgt", corpus.targets)):
            path = d / f"{split}.{side}"
            write_sentences(path, sents)
            keys[f"{split}_{side}"] = str(path)
    return keys


__all__ = ["ExperimentConfig", "ConfigError", "MODES", "run_experiment", "write_attention",
           "write_rare_word_corpus"]
