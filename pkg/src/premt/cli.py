"""Command-line interface: one subcommand per pipeline stage.

Files are UTF-8, one whitespace-tokenized sentence per line.  ``-`` (the
default for ``--input``/``--output``) means stdin/stdout.  On failure the
process exits with status 1 after printing a single line of the form::

    premt-error: <subcommand>: <ErrorType>: <message>
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bpe import MergeTable, apply_bpe, learn_bpe, undo_bpe
from .combine import (MarkingScheme, apply_bpe_marked, mixed_translate, pipeline_translate,
                      pretranslate_corpus)
from .corpus import (ParallelCorpus, Vocabulary, build_vocabulary, check_sentence, load_corpus,
                     read_sentences, tokenize)
from .eval import bleu, frequency_sweep
from .experiment import BLEU_HEADER, ExperimentConfig, bleu_rows, run_experiment, write_attention
from .lm import NGramModel, perplexity, score_sequence, train_lm
from .nmt import AttentionNMT, Checkpoint, Dims, gradient_check, random_check_params
from .smt import (LogLinearWeights, PhraseBasedMT, PhraseTable, extract_phrases, filter_singletons,
                  train_ibm1, tune_weights, word_align)
from .smt.align import align_viterbi

ERROR_PREFIX = "premt-error"


# -- helpers -----------------------------------------------------------------

def _read(path, *, allow_marker: bool = True) -> list:
    if path in (None, "-"):
        out = [check_sentence(tokenize(line), allow_marker=allow_marker) for line in sys.stdin]
        while out and not out[-1]:
            out.pop()
        return out
    return read_sentences(path, allow_marker=allow_marker)


class _Output:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        if self.path in (None, "-"):
            self.fh = sys.stdout
        else:
            self.fh = open(self.path, "w", encoding="utf-8", newline="\n")
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not sys.stdout:
            self.fh.close()
        return False


def _write_lines(path, sentences) -> None:
    with _Output(path) as fh:
        for s in sentences:
            fh.write(" ".join(s) + "\n")


def _limit(value: str):
    """Integer option where ``inf``/``none`` means unbounded."""
    if value.lower() in ("inf", "none", "unbounded"):
        return None
    n = int(value)
    if n < 0:
        raise argparse.ArgumentTypeError("must be >= 0 or 'inf'")
    return n


def _read_alignments(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            links = []
            for item in line.split():
                i, j = item.split("-")
                links.append((int(i), int(j)))
            out.append(links)
    return out


def _load_pbmt(args) -> PhraseBasedMT:
    system = PhraseBasedMT.load(args.pbmt)
    if getattr(args, "beam", None) is not None:
        system.beam_size = None if args.beam == "inf" else int(args.beam)
    return system


def _load_nmt(paths, args, merges=None) -> AttentionNMT:
    checkpoints = [Checkpoint.load(p) for p in paths]
    params = dict(beam_size=args.nmt_beam, max_len=args.max_len, ensemble=len(checkpoints))
    if merges is not None:
        params["merges"] = merges
    return AttentionNMT.from_checkpoints(checkpoints, **params)


# -- subcommands ---------------------------------------------------------------

def cmd_bpe_learn(args):
    sentences = []
    for path in args.input:
        sentences.extend(_read(path, allow_marker=False))
    merges = learn_bpe(sentences, args.merges, joint=True, marker=args.marker)
    merges.save(args.output)
    print(f"learned {len(merges)} merges", file=sys.stderr)


def cmd_bpe_apply(args):
    sentences = _read(args.input)
    if args.undo:
        out = [undo_bpe(s, args.marker) for s in sentences]
    else:
        merges = MergeTable.load(args.merges, args.marker)
        scheme = MarkingScheme(args.pbmt_prefix, args.source_prefix) if args.marked else None
        if scheme is not None:
            out = [apply_bpe_marked(s, merges, scheme) for s in sentences]
        else:
            out = [apply_bpe(s, merges) for s in sentences]
    _write_lines(args.output, out)


def cmd_align(args):
    corpus = load_corpus(args.src, args.tgt)
    fwd = train_ibm1(corpus, args.iterations)
    if args.symmetric:
        alignments, _, _ = word_align(corpus, args.iterations)
    else:
        alignments = [align_viterbi(pair, fwd) for pair in corpus]
    with _Output(args.output) as fh:
        for links in alignments:
            fh.write(" ".join(f"{i}-{j}" for i, j in sorted(links)) + "\n")
    if args.lex:
        with open(args.lex, "w", encoding="utf-8", newline="\n") as fh:
            for (f, e), p in sorted(fwd.probs.items()):
                fh.write(f"{f}\t{e}\t{p:.12g}\n")


def cmd_phrase_extract(args):
    corpus = load_corpus(args.src, args.tgt)
    alignments = _read_alignments(args.align)
    if len(alignments) != len(corpus):
        raise ValueError(f"{len(alignments)} alignment lines for {len(corpus)} sentence pairs")
    lex_ef = train_ibm1(corpus, args.iterations)
    flipped = ParallelCorpus.from_sides(corpus.targets, corpus.sources)
    lex_fe = train_ibm1(flipped, args.iterations)
    table = extract_phrases(corpus, alignments, args.max_len, lex_ef, lex_fe)
    table.save(args.output)
    print(f"extracted {len(table)} phrase pairs", file=sys.stderr)


def cmd_phrase_filter(args):
    table = PhraseTable.load(args.table)
    kept = filter_singletons(table)
    kept.save(args.output)
    print(f"kept {len(kept)} of {len(table)} phrase pairs", file=sys.stderr)


def cmd_lm_train(args):
    model = train_lm(_read(args.input), args.order, args.discount)
    model.save(args.output)


def cmd_lm_score(args):
    model = NGramModel.load(args.lm)
    sentences = _read(args.input)
    with _Output(args.output) as fh:
        for s in sentences:
            fh.write(f"{score_sequence(model, s):.6f}\n")
    print(f"perplexity {perplexity(model, sentences):.4f}", file=sys.stderr)


def cmd_pbmt_train(args):
    corpus = load_corpus(args.src, args.tgt)
    lm_data = _read(args.lm_data) if args.lm_data else None
    system = PhraseBasedMT(args.max_len, args.lm_order, args.iterations,
                           args.beam, args.distortion).fit(corpus, lm_data=lm_data)
    system.save(args.out)
    print(f"phrase table: {len(system.table_)} pairs", file=sys.stderr)


def cmd_pbmt_decode(args):
    table = PhraseTable.load(args.table)
    lm = NGramModel.load(args.lm)
    weights = LogLinearWeights.load(args.weights) if args.weights else LogLinearWeights.default(table.feature_names)
    system = PhraseBasedMT.from_components(table, lm, weights, beam_size=args.beam,
                                           distortion_limit=args.distortion)
    with _Output(args.output) as fh:
        for idx, s in enumerate(_read(args.input)):
            result = system.decode(s, nbest=args.nbest)
            if args.nbest > 1:
                for tgt, score, feats in result.nbest:
                    fh.write(f"{idx} ||| {' '.join(tgt)} ||| {' '.join(f'{x:.6f}' for x in feats)}"
                             f" ||| {score:.6f}\n")
            else:
                fh.write(" ".join(result.translation) + "\n")


def cmd_mert(args):
    table = PhraseTable.load(args.table)
    lm = NGramModel.load(args.lm)
    initial = LogLinearWeights.load(args.weights) if args.weights else LogLinearWeights.default(table.feature_names)
    dev = load_corpus(args.dev_src, args.dev_tgt)
    history = []
    tuned = tune_weights(dev, table, lm, initial, args.rounds, nbest=args.nbest,
                         restarts=args.restarts, beam_size=args.beam,
                         distortion_limit=args.distortion, seed=args.seed, history=history)
    tuned.save(args.output)
    for k, (_, score) in enumerate(history, 1):
        print(f"decode {k}: dev BLEU {100 * score:.2f}", file=sys.stderr)


def _training_estimator(args) -> AttentionNMT:
    return AttentionNMT(embed_dim=args.embed, hidden_dim=args.hidden, learning_rate=args.lr,
                        batch_size=args.batch, max_iterations=args.iterations,
                        checkpoint_interval=args.checkpoint_interval, clip_norm=args.clip,
                        seed=args.seed, beam_size=args.nmt_beam)


def cmd_nmt_train(args):
    corpus = load_corpus(args.src, args.tgt, allow_marker=args.presegmented)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    est = _training_estimator(args)
    if args.merges:
        est.set_params(merges=MergeTable.load(args.merges))
    elif args.bpe_merges:
        est.set_params(bpe_merges=args.bpe_merges)
    dev = None
    if args.dev_src:
        dev_corpus = load_corpus(args.dev_src, args.dev_tgt, allow_marker=args.presegmented)
        dev = (dev_corpus.sources, dev_corpus.targets)

    def progress(it, loss, params):
        if it % args.log_interval == 0:
            print(f"iteration {it} loss {loss:.4f}", file=sys.stderr)
        return False

    est.fit(corpus, dev=dev, callback=progress)
    for ck in est.checkpoints_:
        ck.save(out / f"ckpt-{ck.iteration:06d}.bin")
    est.best_.save(out / "best.bin")
    if est.merges_ is not None:
        est.merges_.save(out / "bpe.txt")
    print(f"best checkpoint: iteration {est.best_.iteration}", file=sys.stderr)


def _nmt_merges(args):
    return MergeTable.load(args.merges) if args.merges else None


def _model_paths(args) -> list:
    paths = list(args.model or [])
    if getattr(args, "ensemble", None):
        paths += [x for x in args.ensemble.split(",") if x]
    if not paths:
        raise ValueError("give at least one --model or --ensemble checkpoint")
    return paths


def cmd_nmt_translate(args):
    est = _load_nmt(_model_paths(args), args, _nmt_merges(args))
    _write_lines(args.output, est.predict(_read(args.input)))


def cmd_nmt_gradcheck(args):
    dims = Dims(args.vocab, args.vocab, args.embed, args.hidden)
    params = random_check_params(dims, args.seed)
    rng = np.random.default_rng(args.seed)
    special = 4   # ids reserved for <unk> <s> </s> <pad>
    pair = (list(rng.integers(special, args.vocab, args.src_len)),
            list(rng.integers(special, args.vocab, args.tgt_len)))
    report = gradient_check(params, pair, args.epsilon, args.tolerance, args.samples, args.seed)
    print(report.summary())
    if not report.passed:
        raise RuntimeError(f"gradient check failed: max relative error {report.worst:.3g}")


def cmd_attention_dump(args):
    merges = _nmt_merges(args)
    est = _load_nmt(_model_paths(args), args, merges)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, s in enumerate(_read(args.input)[:args.limit]):
        units = est.segment([s])[0]
        outputs, attention, _ = est.translate(s)
        write_attention(out / f"{i:03d}.tsv", attention, units, outputs)


def cmd_pretranslate(args):
    system = _load_pbmt(args)
    sources = _read(args.input, allow_marker=False)
    dummy = ParallelCorpus.from_sides(sources, sources)
    pre = pretranslate_corpus(dummy, system, args.filter_singletons)
    _write_lines(args.output, pre.sources)


def cmd_premt_pipeline(args):
    smt = _load_pbmt(args)
    nmt = _load_nmt(args.model, args)
    merges = MergeTable.load(args.merges)
    _write_lines(args.output, [pipeline_translate(s, smt, nmt, merges) for s in _read(args.input)])


def cmd_premt_mixed(args):
    smt = _load_pbmt(args)
    nmt = _load_nmt(args.model, args)
    merges = MergeTable.load(args.merges)
    scheme = MarkingScheme(args.pbmt_prefix, args.source_prefix)
    results = [mixed_translate(s, smt, nmt, merges, scheme) for s in _read(args.input)]
    _write_lines(args.output, [r.translation for r in results])
    if args.attn_dir:
        d = Path(args.attn_dir)
        d.mkdir(parents=True, exist_ok=True)
        for i, r in enumerate(results[:args.attn_limit]):
            write_attention(d / f"{i:03d}.tsv", r.attention, r.units, r.output_units)


def cmd_evaluate(args):
    refs = _read(args.ref)
    scores = {}
    for path in args.hyps:
        hyps = _read(path)
        scores[path] = bleu(hyps, refs, marker=args.marker)
    width = max(len(p) for p in scores)
    for path, rep in scores.items():
        print(f"{path:<{width}}  {rep}")
    if args.tsv:
        with _Output(args.tsv) as fh:
            fh.write("\t".join(BLEU_HEADER) + "\n")
            for row in bleu_rows(scores):
                fh.write("\t".join(row) + "\n")


def _named_systems(items) -> dict:
    systems = {}
    for item in items:
        if "=" not in item:
            raise ValueError(f"expected NAME=FILE, got {item!r}")
        name, path = item.split("=", 1)
        if name in systems:
            raise ValueError(f"duplicate system name {name!r}")
        systems[name] = _read(path)
    return systems


def cmd_freq_analysis(args):
    refs = _read(args.ref)
    counts = Vocabulary.load(args.counts)
    thresholds = [int(x) for x in args.thresholds.split(",")]
    report = frequency_sweep(_named_systems(args.system), refs, counts, thresholds, args.normalize_to)
    with _Output(args.output) as fh:
        fh.write(report.to_tsv())


def cmd_vocab(args):
    sentences = _read(args.input)
    build_vocabulary(sentences, min_count=args.min_count).save(args.output)


def cmd_experiment(args):
    overrides = {k: v for k, v in vars(args).items()
                 if k.startswith("cfg_") and v is not None}
    overrides = {k[4:]: v for k, v in overrides.items()}
    if args.seed is not None:
        overrides["seed"] = args.seed
    overrides["out"] = args.out
    if args.config:
        config = ExperimentConfig.from_file(args.config, overrides)
    else:
        config = ExperimentConfig.from_mapping(overrides)
    scores = run_experiment(config)
    for name, rep in scores.items():
        print(f"{name}\t{rep}")


# -- parser ------------------------------------------------------------------


def _add_io(p, output=True):
    p.add_argument("--input", "-i", default="-", help="input file (default stdin)")
    if output:
        p.add_argument("--output", "-o", default="-", help="output file (default stdout)")


def _add_nmt_decoding(p, beam_alias=False):
    flags = ("--nmt-beam", "--beam") if beam_alias else ("--nmt-beam",)
    p.add_argument(*flags, dest="nmt_beam", type=int, default=5, help="NMT beam size (1 = greedy)")
    p.add_argument("--max-len", type=int, default=None,
                   help="maximum output length in units (default 2*source+10)")


def _add_scheme(p):
    p.add_argument("--pbmt-prefix", default="D_")
    p.add_argument("--source-prefix", default="E_")


class _Parser(argparse.ArgumentParser):
    """Usage errors follow the same one-line format as runtime errors."""

    def error(self, message):
        command = self.prog.split()[-1]
        message = " ".join(message.split())
        self.exit(2, f"{ERROR_PREFIX}: {command}: UsageError: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="premt", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--seed", type=int, default=None if name == "experiment" else 0,
                       help="random seed")
        p.set_defaults(func=func)
        return p

    p = add("bpe-learn", cmd_bpe_learn, "learn joint BPE merges from one or more text files")
    p.add_argument("--input", "-i", nargs="+", required=True)
    p.add_argument("--merges", "-n", type=int, required=True, help="number of merge operations")
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--marker", default="@@")

    p = add("bpe-apply", cmd_bpe_apply, "segment text with a merge table (or undo segmentation)")
    _add_io(p)
    p.add_argument("--merges")
    p.add_argument("--undo", action="store_true", help="join subword units instead")
    p.add_argument("--marked", action="store_true", help="input carries D_/E_ marking prefixes")
    p.add_argument("--marker", default="@@")
    _add_scheme(p)

    p = add("align", cmd_align, "IBM Model 1 word alignment (links as i-j, source-target)")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--symmetric", action="store_true", help="intersect both directions")
    p.add_argument("--lex", help="also write the lexical table t(e|f) here")
    p.add_argument("--output", "-o", default="-")

    p = add("phrase-extract", cmd_phrase_extract, "extract a phrase table from aligned text")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--align", required=True)
    p.add_argument("--max-len", type=int, default=3)
    p.add_argument("--iterations", type=int, default=5, help="IBM-1 iterations for lexical weights")
    p.add_argument("--output", "-o", required=True)

    p = add("phrase-filter", cmd_phrase_filter, "remove phrase pairs seen only once")
    p.add_argument("--table", required=True)
    p.add_argument("--output", "-o", required=True)

    p = add("lm-train", cmd_lm_train, "train an n-gram language model")
    _add_io(p, output=False)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--discount", type=float, default=0.75)
    p.add_argument("--output", "-o", required=True)

    p = add("lm-score", cmd_lm_score, "per-sentence natural-log probabilities and corpus perplexity")
    p.add_argument("--lm", required=True)
    _add_io(p)

    p = add("pbmt-train", cmd_pbmt_train, "train a phrase-based system into a directory")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--lm-data", help="LM training text (default: target side)")
    p.add_argument("--max-len", type=int, default=3)
    p.add_argument("--lm-order", type=int, default=3)
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--beam", type=_limit, default=50)
    p.add_argument("--distortion", type=_limit, default=6)
    p.add_argument("--out", required=True)

    p = add("pbmt-decode", cmd_pbmt_decode, "decode with a phrase table and LM")
    p.add_argument("--table", required=True)
    p.add_argument("--lm", required=True)
    p.add_argument("--weights")
    p.add_argument("--beam", type=_limit, default=100, help="stack size, or 'inf'")
    p.add_argument("--distortion", type=_limit, default=6, help="distortion limit, or 'inf'")
    p.add_argument("--nbest", type=int, default=1)
    _add_io(p)

    p = add("mert", cmd_mert, "tune log-linear weights on a dev set")
    p.add_argument("--table", required=True)
    p.add_argument("--lm", required=True)
    p.add_argument("--weights", help="initial weights")
    p.add_argument("--dev-src", required=True)
    p.add_argument("--dev-tgt", required=True)
    p.add_argument("--rounds", type=int, default=5)
    p.add_argument("--nbest", type=int, default=100)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--beam", type=_limit, default=100)
    p.add_argument("--distortion", type=_limit, default=6)
    p.add_argument("--output", "-o", required=True)

    p = add("nmt-train", cmd_nmt_train, "train an attentional encoder-decoder")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--dev-src")
    p.add_argument("--dev-tgt")
    p.add_argument("--merges", help="apply this merge table to both sides")
    p.add_argument("--bpe-merges", type=int, default=0, help="learn this many joint merges")
    p.add_argument("--presegmented", action="store_true", help="input already contains subword units")
    p.add_argument("--embed", type=int, default=32)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--checkpoint-interval", type=int, default=250)
    p.add_argument("--clip", type=float, default=5.0)
    p.add_argument("--log-interval", type=int, default=100)
    p.add_argument("--out", required=True, help="checkpoint directory")
    _add_nmt_decoding(p)

    p = add("nmt-translate", cmd_nmt_translate, "translate; several --model files form an ensemble")
    p.add_argument("--model", nargs="+")
    p.add_argument("--ensemble", help="comma-separated checkpoint files decoded jointly")
    p.add_argument("--merges")
    _add_nmt_decoding(p, beam_alias=True)
    _add_io(p)

    p = add("nmt-gradcheck", cmd_nmt_gradcheck, "compare analytic and finite-difference gradients")
    p.add_argument("--embed", type=int, default=8)
    p.add_argument("--hidden", type=int, default=8)
    p.add_argument("--vocab", type=int, default=20)
    p.add_argument("--src-len", type=int, default=5)
    p.add_argument("--tgt-len", type=int, default=4)
    p.add_argument("--samples", type=int, default=200, help="coordinates per tensor")
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)

    p = add("attention-dump", cmd_attention_dump, "write attention matrices as TSV")
    p.add_argument("--model", nargs="+")
    p.add_argument("--ensemble", help="comma-separated checkpoint files decoded jointly")
    p.add_argument("--merges")
    p.add_argument("--limit", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--input", "-i", default="-")
    _add_nmt_decoding(p)

    p = add("pretranslate", cmd_pretranslate, "translate text with a phrase-based system directory")
    p.add_argument("--pbmt", required=True)
    p.add_argument("--filter-singletons", action="store_true")
    p.add_argument("--beam", default=None, help="override the stored stack size ('inf' allowed)")
    _add_io(p)

    p = add("premt-pipeline", cmd_premt_pipeline, "PBMT followed by a monolingual NMT post-editor")
    p.add_argument("--pbmt", required=True)
    p.add_argument("--model", nargs="+", required=True)
    p.add_argument("--merges", required=True)
    p.add_argument("--beam", default=None)
    _add_nmt_decoding(p)
    _add_io(p)

    p = add("premt-mixed", cmd_premt_mixed, "NMT over marked PBMT output plus marked source")
    p.add_argument("--pbmt", required=True)
    p.add_argument("--model", nargs="+", required=True)
    p.add_argument("--merges", required=True)
    p.add_argument("--beam", default=None)
    p.add_argument("--attn-dir", help="write attention matrices here")
    p.add_argument("--attn-limit", type=int, default=10)
    _add_scheme(p)
    _add_nmt_decoding(p)
    _add_io(p)

    p = add("evaluate", cmd_evaluate, "corpus BLEU of one or more hypothesis files")
    p.add_argument("--ref", required=True)
    p.add_argument("hyps", nargs="+")
    p.add_argument("--marker", default=None, help="join subword units with this marker first")
    p.add_argument("--tsv", help="also write a TSV table here")

    p = add("freq-analysis", cmd_freq_analysis, "BLEU after masking words rarer than each threshold")
    p.add_argument("--ref", required=True)
    p.add_argument("--counts", required=True, help="vocabulary file with training counts")
    p.add_argument("--thresholds", default="1,10,100,1000")
    p.add_argument("--normalize-to", required=True)
    p.add_argument("--system", action="append", required=True, metavar="NAME=FILE")
    p.add_argument("--output", "-o", default="-")

    p = add("vocab", cmd_vocab, "write a vocabulary file with token counts")
    _add_io(p)
    p.add_argument("--min-count", type=int, default=1)

    p = add("experiment", cmd_experiment, "train every configured system and write its reports")
    p.add_argument("--config", help="key=value configuration file (e.g. a manifest)")
    p.add_argument("--out", required=True)
    for f in dataclasses.fields(ExperimentConfig):
        if f.name in ("seed", "out"):
            continue
        p.add_argument("--" + f.name.replace("_", "-"), dest="cfg_" + f.name, default=None,
                       metavar="VALUE", help=f"override {f.name}")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except KeyboardInterrupt:
        print(f"{ERROR_PREFIX}: {args.command}: Interrupted: interrupted", file=sys.stderr)
        return 130
    except Exception as exc:  # noqa: BLE001 - the CLI reports every failure the same way
        message = " ".join(str(exc).split()) or "no details"
        print(f"{ERROR_PREFIX}: {args.command}: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
