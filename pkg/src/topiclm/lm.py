"""Capped-vocabulary trigram language model with Witten-Bell smoothing.

The interpolated Witten-Bell recursion

    P(w | h) = (c(h, w) + T(h) * P(w | h')) / (c(h) + T(h))

with T(h) the number of distinct continuations of history h, is stored in
backoff form: seen n-grams keep their interpolated probability and the
backoff weight of h is T(h) / (c(h) + T(h)).  The unigram level is
interpolated with a uniform distribution over vocabulary + unknown marker
(+ sentence end), so every predictable word has positive probability and
every conditional distribution sums to exactly 1.

Models serialize to the standard ARPA plain-text layout, log base 10.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

_LOG10_NEVER = -99.0  # conventional ARPA stand-in for "not predicted"


@dataclass(frozen=True)
class Vocabulary:
    terms: Tuple[str, ...]
    cap: int

    def __post_init__(self):
        if self.cap < 1:
            raise ValueError("cap must be >= 1")
        if len(self.terms) > self.cap:
            raise ValueError("vocabulary exceeds cap")
        if len(set(self.terms)) != len(self.terms):
            raise ValueError("duplicate vocabulary terms")
        for special in (BOS, EOS, UNK):
            if special in self.terms:
                raise ValueError("special marker %s may not be a regular term" % special)

    def __contains__(self, term: str) -> bool:
        return term in self._term_set

    @property
    def _term_set(self):
        # cached lazily; frozen dataclass forbids plain attribute writes
        cached = self.__dict__.get("_terms_cache")
        if cached is None:
            cached = frozenset(self.terms)
            self.__dict__["_terms_cache"] = cached
        return cached

    def predicted_events(self) -> List[str]:
        """Every symbol the model may be asked to predict: terms, UNK, EOS."""
        return list(self.terms) + [UNK, EOS]


@dataclass
class NGramCounts:
    unigram: Counter = field(default_factory=Counter)
    bigram: Counter = field(default_factory=Counter)
    trigram: Counter = field(default_factory=Counter)
    total: int = 0  # predicted tokens: words + sentence ends, no BOS
    order: int = 3


@dataclass
class NGramModel:
    vocabulary: Vocabulary
    # n-gram tuple -> log10 interpolated probability
    logprobs: Dict[Tuple[str, ...], float] = field(default_factory=dict)
    # history tuple -> log10 backoff weight (absent history backs off with weight 1)
    backoffs: Dict[Tuple[str, ...], float] = field(default_factory=dict)
    order: int = 3


def select_vocabulary(documents, cap: int) -> Vocabulary:
    """Keep the cap most frequent corpus terms; ties break lexicographically."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    freqs = Counter()
    for doc in documents:
        freqs.update(doc.tokens)
    for special in (BOS, EOS, UNK):
        freqs.pop(special, None)
    ranked = sorted(freqs.items(), key=lambda item: (-item[1], item[0]))
    return Vocabulary(terms=tuple(term for term, _ in ranked[:cap]), cap=cap)


def _sentence_symbols(tokens: Sequence[str], vocabulary: Vocabulary) -> List[str]:
    return [t if t in vocabulary else UNK for t in tokens]


def count_ngrams(documents, vocabulary: Vocabulary, order: int = 3) -> NGramCounts:
    """Count padded n-grams; each document's token sequence is one sentence.

    Sentences get order-1 start pads and one end marker; out-of-vocabulary
    tokens are replaced with the unknown marker before counting.
    """
    if order not in (2, 3):
        raise ValueError("order must be 2 or 3")
    counts = NGramCounts(order=order)
    for doc in documents:
        tokens = doc.tokens if hasattr(doc, "tokens") else doc
        if not tokens:
            continue
        words = _sentence_symbols(tokens, vocabulary)
        events = words + [EOS]
        counts.unigram.update(events)
        counts.total += len(events)
        stream2 = [BOS] + events
        for i in range(len(stream2) - 1):
            counts.bigram[(stream2[i], stream2[i + 1])] += 1
        if order >= 3:
            stream3 = [BOS, BOS] + events
            for i in range(len(stream3) - 2):
                counts.trigram[(stream3[i], stream3[i + 1], stream3[i + 2])] += 1
    return counts


def _wb_layer(counts: Counter, lower_prob) -> Tuple[Dict[tuple, float], Dict[tuple, float]]:
    """One Witten-Bell level: seen-gram probabilities and history backoff weights."""
    history_total: Counter = Counter()
    history_types: Counter = Counter()
    for gram, c in counts.items():
        hist = gram[:-1]
        history_total[hist] += c
        history_types[hist] += 1
    probs = {}
    bows = {}
    for gram, c in counts.items():
        hist = gram[:-1]
        denom = history_total[hist] + history_types[hist]
        probs[gram] = (c + history_types[hist] * lower_prob(gram[-1], hist)) / denom
    for hist in history_total:
        bows[hist] = history_types[hist] / (history_total[hist] + history_types[hist])
    return probs, bows


def estimate_model(counts: NGramCounts, vocabulary: Vocabulary) -> NGramModel:
    """Estimate interpolated Witten-Bell probabilities in backoff form."""
    if counts.total <= 0:
        raise ValueError("cannot estimate a model from zero tokens")

    events = vocabulary.predicted_events()
    n_events = len(events)
    uniform = 1.0 / n_events

    c_total = counts.total
    t1 = len(counts.unigram)
    unigram_denom = c_total + t1

    def p1(word: str) -> float:
        return (counts.unigram.get(word, 0) + t1 * uniform) / unigram_denom

    p2_table, bow1 = _wb_layer(counts.bigram, lambda w, hist: p1(w))

    def p2(word: str, hist: tuple) -> float:
        gram = hist + (word,)
        if gram in p2_table:
            return p2_table[gram]
        return bow1.get(hist, 1.0) * p1(word)

    model = NGramModel(vocabulary=vocabulary, order=counts.order)
    for word in events:
        model.logprobs[(word,)] = math.log10(p1(word))
    model.logprobs[(BOS,)] = _LOG10_NEVER
    for gram, p in p2_table.items():
        model.logprobs[gram] = math.log10(p)
    for hist, bow in bow1.items():
        model.backoffs[hist] = math.log10(bow)

    if counts.order >= 3 and counts.trigram:
        p3_table, bow2 = _wb_layer(counts.trigram,
                                   lambda w, hist: p2(w, hist[1:]))
        for gram, p in p3_table.items():
            model.logprobs[gram] = math.log10(p)
        for hist, bow in bow2.items():
            model.backoffs[hist] = math.log10(bow)
            if hist not in model.logprobs:
                # double start pad is a trigram history but never a bigram
                # event; it still needs an ARPA entry to carry its weight
                model.logprobs[hist] = _LOG10_NEVER

    return model


def train(documents, cap: int, order: int = 3) -> NGramModel:
    """Convenience: vocabulary selection, counting and estimation in one call."""
    docs = list(documents)
    vocabulary = select_vocabulary(docs, cap)
    return estimate_model(count_ngrams(docs, vocabulary, order), vocabulary)


def map_symbol(model: NGramModel, word: str) -> str:
    if word in (BOS, EOS, UNK):
        return word
    return word if word in model.vocabulary else UNK


def logprob(model: NGramModel, word: str, history: Sequence[str] = ()) -> float:
    """log10 P(word | history) with backoff; OOV words map to the unknown marker."""
    w = map_symbol(model, word)
    n_hist = model.order - 1
    hist = tuple(map_symbol(model, h) for h in history)
    hist = hist[-n_hist:] if n_hist > 0 else ()
    lp = 0.0
    while True:
        gram = hist + (w,)
        if gram in model.logprobs and not (len(gram) == 1 and w == BOS):
            return lp + model.logprobs[gram]
        if not hist:
            # BOS is never predicted; anything else in the unigram table
            return lp + model.logprobs.get((w,), _LOG10_NEVER)
        lp += model.backoffs.get(hist, 0.0)
        hist = hist[1:]


def sentence_logprob(model: NGramModel, tokens: Sequence[str]) -> Tuple[float, int]:
    """Total log10 probability of a sentence and the number of predicted events."""
    n_hist = max(model.order - 1, 0)
    history = [BOS] * n_hist
    total = 0.0
    n = 0
    for token in list(tokens) + [EOS]:
        total += logprob(model, token, history)
        n += 1
        if n_hist:
            history = (history + [map_symbol(model, token)])[-n_hist:]
    return total, n


def serialize(model: NGramModel, fh) -> None:
    """Write the model in ARPA plain-text format (log base 10, UTF-8)."""
    grams_by_order: Dict[int, List[tuple]] = {}
    for gram in model.logprobs:
        grams_by_order.setdefault(len(gram), []).append(gram)
    orders = sorted(grams_by_order)
    fh.write("\\data\\\n")
    for n in orders:
        fh.write("ngram %d=%d\n" % (n, len(grams_by_order[n])))
    for n in orders:
        fh.write("\n\\%d-grams:\n" % n)
        for gram in sorted(grams_by_order[n]):
            line = "%.10f\t%s" % (model.logprobs[gram], " ".join(gram))
            if n < model.order and gram in model.backoffs:
                line += "\t%.10f" % model.backoffs[gram]
            fh.write(line + "\n")
    fh.write("\n\\end\\\n")


def save(model: NGramModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        serialize(model, fh)


def parse_arpa(fh) -> NGramModel:
    """Load an ARPA model file written by serialize() or external tools."""
    logprobs: Dict[tuple, float] = {}
    backoffs: Dict[tuple, float] = {}
    declared: Dict[int, int] = {}
    section = None
    max_order = 1
    for raw in fh:
        line = raw.strip()
        if not line:
            continue
        if line == "\\data\\":
            section = "data"
            continue
        if line == "\\end\\":
            break
        if line.endswith("-grams:") and line.startswith("\\"):
            section = int(line[1:line.index("-")])
            max_order = max(max_order, section)
            continue
        if section == "data":
            if line.startswith("ngram"):
                spec_part = line.split(None, 1)[1]
                n, count = spec_part.split("=")
                declared[int(n)] = int(count)
            continue
        if isinstance(section, int):
            parts = line.split("\t")
            if len(parts) == 1:
                parts = line.split()
                lp = float(parts[0])
                gram = tuple(parts[1:1 + section])
                bow = float(parts[1 + section]) if len(parts) > 1 + section else None
            else:
                lp = float(parts[0])
                gram = tuple(parts[1].split())
                bow = float(parts[2]) if len(parts) > 2 else None
            if len(gram) != section:
                raise ValueError("bad %d-gram line: %r" % (section, line))
            logprobs[gram] = lp
            if bow is not None:
                backoffs[gram] = bow

    for n, count in declared.items():
        have = sum(1 for g in logprobs if len(g) == n)
        if have != count:
            raise ValueError("ARPA header declares %d %d-grams, found %d"
                             % (count, n, have))

    terms = tuple(sorted(g[0] for g in logprobs
                         if len(g) == 1 and g[0] not in (BOS, EOS, UNK)))
    vocabulary = Vocabulary(terms=terms, cap=max(len(terms), 1))
    return NGramModel(vocabulary=vocabulary, logprobs=logprobs,
                      backoffs=backoffs, order=max_order)


def load(path) -> NGramModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_arpa(fh)
