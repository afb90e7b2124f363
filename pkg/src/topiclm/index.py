"""Inverted index and Okapi-style probabilistic ranking.

The relevance score of document d for query q is

    sum_t f_tq * ((K+1) * f_td) / (K * ((1-b) + dl_d / (b*avgdl)) + f_td)
          * ln((N - n_t + 0.5) / (n_t + 0.5))

with term frequencies f_tq / f_td, document length dl_d, collection size N,
document frequency n_t and average document length avgdl.  Natural log; the
base only rescales scores and cannot change a ranking.
"""

import math
import pickle
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple

from .corpus import Document, TokenizerConfig, extract_content_terms, tokenize

_MAGIC = b"TLMIDX"
_VERSION = 1


@dataclass(frozen=True)
class BM25Params:
    k: float = 2.0
    b: float = 0.8
    clamp_idf: bool = False

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("K must be nonnegative")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must be in [0, 1]")


@dataclass(frozen=True)
class QueryProfile:
    terms: Dict[str, int]

    def __post_init__(self):
        if any(f <= 0 for f in self.terms.values()):
            raise ValueError("query term frequencies must be positive")


@dataclass
class InvertedIndex:
    postings: Dict[str, List[Tuple[str, int]]] = field(default_factory=dict)
    doc_lengths: Dict[str, int] = field(default_factory=dict)
    avgdl: float = 0.0

    @property
    def n_docs(self) -> int:
        return len(self.doc_lengths)

    def doc_freq(self, term: str) -> int:
        return len(self.postings.get(term, ()))


def build_index(documents: Iterable[Document]) -> InvertedIndex:
    """Index content terms of a non-empty document collection."""
    index = InvertedIndex()
    total_length = 0
    for doc in documents:
        if doc.id in index.doc_lengths:
            raise ValueError("duplicate document id: %s" % doc.id)
        index.doc_lengths[doc.id] = doc.length
        total_length += doc.length
        for term, freq in doc.content_terms.items():
            index.postings.setdefault(term, []).append((doc.id, freq))
    if not index.doc_lengths:
        raise ValueError("cannot index an empty collection (avgdl undefined)")
    index.avgdl = total_length / len(index.doc_lengths)
    for plist in index.postings.values():
        plist.sort(key=lambda entry: entry[0])
    return index


def make_query_profile(text: str, config: TokenizerConfig) -> QueryProfile:
    """Build a query term bag with the same tokenize/content-term path as documents."""
    terms = extract_content_terms(tokenize(text, config), config.stoplist)
    return QueryProfile(terms=terms)


def _idf(index: InvertedIndex, term: str, params: BM25Params) -> float:
    n_t = index.doc_freq(term)
    value = math.log((index.n_docs - n_t + 0.5) / (n_t + 0.5))
    if params.clamp_idf and value < 0.0:
        return 0.0
    return value


def _term_weight(f_td: int, dl: int, avgdl: float, params: BM25Params) -> float:
    if params.b == 0.0:
        # literal formula divides dl by b*avgdl; the limit b -> 0 sends the
        # denominator to infinity and the contribution to zero
        return 0.0
    denom = params.k * ((1.0 - params.b) + dl / (params.b * avgdl)) + f_td
    return (params.k + 1.0) * f_td / denom


def bm25_score(query: QueryProfile, doc_id: str, index: InvertedIndex,
               params: BM25Params = BM25Params()) -> float:
    """Relevance score of one document; terms absent from it contribute 0."""
    if doc_id not in index.doc_lengths:
        raise KeyError("unknown document id: %s" % doc_id)
    dl = index.doc_lengths[doc_id]
    score = 0.0
    for term in sorted(query.terms):
        f_tq = query.terms[term]
        f_td = 0
        for pid, pfreq in index.postings.get(term, ()):
            if pid == doc_id:
                f_td = pfreq
                break
        if f_td == 0:
            continue
        score += f_tq * _term_weight(f_td, dl, index.avgdl, params) * _idf(index, term, params)
    return score


def retrieve_top_n(query: QueryProfile, index: InvertedIndex,
                   params: BM25Params = BM25Params(), n: int = 5000,
                   keep_nonpositive: bool = False) -> List[Tuple[str, float]]:
    """Rank candidate documents, descending score, ties by ascending doc id.

    Only documents sharing at least one query term can score non-zero, so
    scoring is restricted to the union of the query terms' postings.
    Zero/negative-score documents are dropped unless keep_nonpositive.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    accum: Dict[str, float] = {}
    for term in sorted(query.terms):
        f_tq = query.terms[term]
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = _idf(index, term, params)
        for doc_id, f_td in plist:
            w = f_tq * _term_weight(f_td, index.doc_lengths[doc_id], index.avgdl, params) * idf
            accum[doc_id] = accum.get(doc_id, 0.0) + w
    hits = [(doc_id, score) for doc_id, score in accum.items()
            if keep_nonpositive or score > 0.0]
    hits.sort(key=lambda hit: (-hit[1], hit[0]))
    return hits[:n]


def index_query_frequencies(tokens_or_counts) -> QueryProfile:
    if isinstance(tokens_or_counts, dict):
        return QueryProfile(terms=dict(tokens_or_counts))
    return QueryProfile(terms=dict(Counter(tokens_or_counts)))


def save_index(index: InvertedIndex, path) -> None:
    """Single-file binary image with a versioned header."""
    payload = {
        "postings": index.postings,
        "doc_lengths": index.doc_lengths,
        "avgdl": index.avgdl,
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(bytes([_VERSION]))
        pickle.dump(payload, fh, protocol=4)


def load_index(path) -> InvertedIndex:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError("%s: not an index file" % path)
        version = fh.read(1)[0]
        if version != _VERSION:
            raise ValueError("%s: unsupported index version %d" % (path, version))
        payload = pickle.load(fh)
    return InvertedIndex(postings=payload["postings"],
                         doc_lengths=payload["doc_lengths"],
                         avgdl=payload["avgdl"])


def dump_postings(index: InvertedIndex, fh) -> None:
    """Plain-text postings dump for debugging: term TAB doc:freq ..."""
    fh.write("#docs\t%d\tavgdl\t%.6f\n" % (index.n_docs, index.avgdl))
    for term in sorted(index.postings):
        entries = " ".join("%s:%d" % (d, f) for d, f in index.postings[term])
        fh.write("%s\t%s\n" % (term, entries))


def write_run(hits: List[Tuple[str, float]], fh) -> None:
    """One line per hit: rank TAB doc_id TAB score (6 decimals)."""
    for rank, (doc_id, score) in enumerate(hits, 1):
        fh.write("%d\t%s\t%.6f\n" % (rank, doc_id, score))
