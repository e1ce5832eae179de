"""Synthetic parallel corpora with designed weaknesses for each system type.

The rare-word corpus pairs a verb-second source language with a
verb-final target language, so a monotone phrase-based decoder with short
phrases cannot place the verb.  A set of "named entities" with unrelated
source and target spellings occurs exactly twice each in the training
data; these are easy for a phrase table and hard for a small neural
model.  Every test sentence contains at least one of them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import ParallelCorpus

# (source, target) lexicon for the frequent part of the vocabulary
NOUNS = [("dog", "hund"), ("cat", "katze"), ("house", "haus"), ("tree", "baum"),
         ("car", "wagen"), ("book", "buch"), ("river", "fluss"), ("city", "stadt"),
         ("bird", "vogel"), ("ship", "schiff"), ("garden", "garten"), ("horse", "pferd"),
         ("table", "tisch"), ("window", "fenster"), ("king", "koenig"), ("child", "kind")]
ADJECTIVES = [("big", "gross"), ("small", "klein"), ("old", "alt"), ("new", "neu"),
              ("red", "rot"), ("green", "gruen"), ("quiet", "leise"), ("fast", "schnell")]
VERBS = [("sees", "sieht"), ("finds", "findet"), ("takes", "nimmt"), ("likes", "mag"),
         ("builds", "baut"), ("sells", "verkauft"), ("paints", "malt"), ("follows", "folgt")]
PREPOSITIONS = [("near", "bei"), ("behind", "hinter"), ("under", "unter"), ("with", "mit")]
DETERMINER = ("the", "die")
PERIOD = (".", ".")
# names are spelled with disjoint syllable sets on the two sides
SOURCE_SYLLABLES = ["ka", "lo", "mi", "ru", "sa", "vi", "zu", "do"]
TARGET_SYLLABLES = ["pe", "tu", "gi", "no", "be", "fa", "xe", "ho"]


@dataclass(frozen=True)
class RareWordCorpus:
    train: ParallelCorpus
    dev: ParallelCorpus
    test: ParallelCorpus
    entities: tuple     # (source form, target form) pairs used in dev and test
    background: tuple   # further names, also twice each, in training only
    hapax: tuple        # words that occur once in training


def _name(rng, syllables, length: int) -> str:
    return "".join(syllables[i] for i in rng.integers(0, len(syllables), length))


def _unique_names(rng, count: int, taken: set, syllables, lengths=(3, 4)) -> list:
    out = []
    while len(out) < count:
        w = _name(rng, syllables, int(rng.integers(lengths[0], lengths[1] + 1)))
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


def _noun_phrase(rng, noun=None):
    """A (source, target) noun phrase: "the [adj] noun"."""
    src_n, tgt_n = noun if noun is not None else NOUNS[rng.integers(len(NOUNS))]
    if rng.random() < 0.4:
        a_src, a_tgt = ADJECTIVES[rng.integers(len(ADJECTIVES))]
        return [DETERMINER[0], a_src, src_n], [DETERMINER[1], a_tgt, tgt_n]
    return [DETERMINER[0], src_n], [DETERMINER[1], tgt_n]


def _sentence(rng, slots: dict):
    """Source ``SUBJ VERB OBJ [PREP NP] .``; target ``SUBJ OBJ [PREP NP] VERB .``.

    ``slots`` may force the subject, object or prepositional noun phrase
    (keys ``subj``/``obj``/``pp``) to a given ``(source, target)`` word.
    """
    def slot(key):
        if key in slots:
            s, t = slots[key]
            return [s], [t]
        return _noun_phrase(rng)

    subj_s, subj_t = slot("subj")
    verb_s, verb_t = VERBS[rng.integers(len(VERBS))]
    obj_s, obj_t = slot("obj")
    src = subj_s + [verb_s] + obj_s
    tgt = subj_t + obj_t
    if "pp" in slots or rng.random() < 0.5:
        prep_s, prep_t = PREPOSITIONS[rng.integers(len(PREPOSITIONS))]
        pp_s, pp_t = slot("pp")
        src += [prep_s] + pp_s
        tgt += [prep_t] + pp_t
    return tuple(src + [PERIOD[0]]), tuple(tgt + [verb_t, PERIOD[1]])


def _entity_sentence(rng, entities):
    keys = ["subj", "obj", "pp"]
    chosen = rng.choice(len(keys), size=len(entities), replace=False)
    return _sentence(rng, {keys[k]: e for k, e in zip(chosen, entities)})


def rare_word_corpus(seed: int = 0, n_train: int = 2000, n_dev: int = 100, n_test: int = 100,
                     n_entities: int = 50, n_background: int = 200, n_hapax: int = 50) -> RareWordCorpus:
    """Build the train/dev/test splits described in the module docstring.

    Each entity and each background name fills exactly two slots of
    training sentences (one to three names per sentence); ``n_hapax``
    further training sentences contain a noun seen nowhere else.  Dev and
    test sentences carry two or three of the entities each.
    """
    rng = np.random.default_rng(seed)
    taken = {w for lex in (NOUNS, ADJECTIVES, VERBS, PREPOSITIONS) for pair in lex for w in pair}
    taken.update(DETERMINER)
    n_names = n_entities + n_background
    names = list(zip(_unique_names(rng, n_names, taken, SOURCE_SYLLABLES),
                     _unique_names(rng, n_names, taken, TARGET_SYLLABLES)))
    entities, background = tuple(names[:n_entities]), tuple(names[n_entities:])
    hapax = tuple(zip(_unique_names(rng, n_hapax, taken, SOURCE_SYLLABLES, (2, 3)),
                      _unique_names(rng, n_hapax, taken, TARGET_SYLLABLES, (2, 3))))
    if 2 * len(names) + n_hapax > n_train:
        raise ValueError("training set too small for the requested names")

    slots = [names[i] for i in rng.permutation(2 * len(names)) // 2]
    pairs = []
    while slots:
        k = min(int(rng.integers(1, 4)), len(slots))
        pairs.append(_entity_sentence(rng, slots[:k]))
        slots = slots[k:]
    pairs += [_sentence(rng, {"obj": h}) for h in hapax]
    while len(pairs) < n_train:
        pairs.append(_sentence(rng, {}))
    order = rng.permutation(len(pairs))
    train = ParallelCorpus.from_sides([pairs[i][0] for i in order], [pairs[i][1] for i in order])

    def held_out(n):
        out = []
        for _ in range(n):
            k = 2 + int(rng.random() < 0.5)
            picks = rng.choice(n_entities, size=k, replace=False)
            out.append(_entity_sentence(rng, [entities[i] for i in picks]))
        return ParallelCorpus.from_sides([s for s, _ in out], [t for _, t in out])

    return RareWordCorpus(train, held_out(n_dev), held_out(n_test), entities, background, hapax)


def toy_corpus(seed: int = 0, n: int = 500) -> ParallelCorpus:
    """Small corpus from the frequent lexicon only (no rare words)."""
    rng = np.random.default_rng(seed)
    pairs = [_sentence(rng, {}) for _ in range(n)]
    return ParallelCorpus.from_sides([s for s, _ in pairs], [t for _, t in pairs])
