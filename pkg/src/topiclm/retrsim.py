"""Segment retrieval under simulated recognition errors.

Indexes transcript segments, corrupts them with a seeded token-level noisy
channel calibrated to a target word error rate, and measures how retrieval
quality at different query lengths degrades as errors increase.
"""

import hashlib
import math
import random
import re
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Set, Tuple

from .corpus import Document, TokenizerConfig, tokenize
from .index import BM25Params, InvertedIndex, QueryProfile, build_index, retrieve_top_n

DEFAULT_MIX = (0.6, 0.2, 0.2)  # substitution / deletion / insertion


@dataclass(frozen=True)
class Segment:
    segment_id: str
    lecture_id: str
    start: float
    end: float
    tokens: Tuple[str, ...]


@dataclass(frozen=True)
class NoiseSpec:
    target_wer: float
    mix: Tuple[float, float, float] = DEFAULT_MIX
    seed: int = 0
    confusion_vocab: Tuple[str, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.target_wer <= 100.0:
            raise ValueError("target_wer must be in [0, 100]")
        if any(p < 0 for p in self.mix):
            raise ValueError("mix proportions must be nonnegative")
        if abs(sum(self.mix) - 1.0) > 1e-9:
            raise ValueError("mix proportions must sum to 1")
        object.__setattr__(self, "confusion_vocab",
                           tuple(sorted(set(self.confusion_vocab))))


def _segment_rng(spec: NoiseSpec, segment_id: str) -> random.Random:
    # stable across processes, unlike builtin hash()
    digest = hashlib.sha256(("%d:%s" % (spec.seed, segment_id)).encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _collision_scale(e: float, p_del: float, p_ins: float) -> float:
    """Scale factor compensating for edits that alignment merges.

    An insertion next to a deletion (the deleted token itself, or the token
    right after the insertion point) aligns as a single substitution, so two
    applied edits register as one error.  Each happens with probability
    p_del * p_ins per token, so the expected measured rate for probabilities
    scaled by s is s*e - 2*(s*p_del)*(s*p_ins).  Solve for the s that makes
    this equal e (smaller quadratic root, near 1).
    """
    dq = p_del * p_ins
    if dq == 0.0 or e == 0.0:
        return 1.0
    disc = e * e - 8.0 * dq * e
    if disc <= 0.0:
        return e / (4.0 * dq)
    return (e - math.sqrt(disc)) / (4.0 * dq)


def corrupt(segment: Segment, spec: NoiseSpec) -> Segment:
    """Apply an i.i.d. noisy channel so the expected WER equals the target.

    Per reference token: delete or substitute with probability e*mix, then
    independently insert a random confusion token after it with probability
    e*mix_ins, where e = target_wer/100.  Probabilities carry a small upward
    correction for adjacent insert/delete pairs that alignment scores as one
    substitution.  Substitutions never reproduce the original token.
    Deterministic given (spec.seed, segment_id).
    """
    e = spec.target_wer / 100.0
    if e == 0.0:
        return Segment(segment.segment_id, segment.lecture_id,
                       segment.start, segment.end, segment.tokens)
    p_sub, p_del, p_ins = (e * p for p in spec.mix)
    scale = _collision_scale(e, p_del, p_ins)
    p_sub, p_del, p_ins = (min(scale * p, 1.0) for p in (p_sub, p_del, p_ins))
    vocab = spec.confusion_vocab or tuple(sorted(set(segment.tokens)))
    rng = _segment_rng(spec, segment.segment_id)
    out: List[str] = []
    for token in segment.tokens:
        r = rng.random()
        if r < p_del:
            pass
        elif r < p_del + p_sub:
            repl = rng.choice(vocab)
            while repl == token and len(vocab) > 1:
                repl = rng.choice(vocab)
            out.append(repl)
        else:
            out.append(token)
        if rng.random() < p_ins:
            out.append(rng.choice(vocab))
    return Segment(segment.segment_id, segment.lecture_id,
                   segment.start, segment.end, tuple(out))


def segment_document(segment: Segment, stoplist=frozenset()) -> Document:
    terms = Counter(t for t in segment.tokens if t not in stoplist)
    return Document(id=segment.segment_id, tokens=segment.tokens,
                    content_terms=dict(terms))


def index_segments(segments: Iterable[Segment], stoplist=frozenset()) -> InvertedIndex:
    """Index segments as documents, one per segment."""
    return build_index(segment_document(s, stoplist) for s in segments)


_SENTENCE_RE = re.compile(r"[.!?]+")


def make_queries(source: str, mode: str, count: int, seed: int,
                 config: TokenizerConfig = TokenizerConfig()) -> List[QueryProfile]:
    """Sample query spans of the requested granularity from a source text."""
    if mode == "paragraph":
        spans = [p for p in re.split(r"\n\s*\n", source) if p.strip()]
        pools = [tokenize(p, config) for p in spans]
    elif mode == "sentence":
        spans = [s for s in _SENTENCE_RE.split(source) if s.strip()]
        pools = [tokenize(s, config) for s in spans]
    elif mode == "keyword":
        tokens = [t for t in tokenize(source, config) if t not in config.stoplist]
        pools = [[t] for t in sorted(set(tokens))]
    else:
        raise ValueError("unknown query mode: %r" % (mode,))
    pools = [p for p in pools if p]
    if len(pools) < count:
        raise ValueError("source yields only %d %s spans, need %d"
                         % (len(pools), mode, count))
    rng = random.Random(seed)
    chosen = rng.sample(range(len(pools)), count)
    return [QueryProfile(terms=dict(Counter(pools[i]))) for i in chosen]


def score_run(relevance: Dict[str, Set[str]],
              results: Dict[str, Sequence[str]], k: int) -> Dict[str, float]:
    """Recall@k and mean reciprocal rank over a labeled query set."""
    if not relevance:
        raise ValueError("no queries to score")
    recall_sum = 0.0
    rr_sum = 0.0
    for qid, relevant in relevance.items():
        if not relevant:
            raise ValueError("query %s has no relevant segments" % qid)
        ranked = list(results.get(qid, ()))
        top = ranked[:k]
        recall_sum += len(relevant.intersection(top)) / len(relevant)
        rr = 0.0
        for rank, seg_id in enumerate(ranked, 1):
            if seg_id in relevant:
                rr = 1.0 / rank
                break
        rr_sum += rr
    n = len(relevance)
    return {"recall_at_k": recall_sum / n, "mrr": rr_sum / n}


@dataclass
class BenchResult:
    mode: str
    wer: float
    seed: int
    recall_at_10: float
    mrr: float


def run_bench(segments: Sequence[Segment], wer_targets: Sequence[float],
              modes: Sequence[str], seeds: Sequence[int],
              queries_per_seed: int = 30, k: int = 10,
              params: BM25Params = BM25Params(),
              confusion_vocab: Sequence[str] = ()) -> List[BenchResult]:
    """Query-length robustness benchmark.

    Queries are drawn from the clean segments (the "textbook" side); the
    index is built over corrupted segments (the "transcript" side).  A
    query generated from segment s is relevant to s alone.
    """
    if not confusion_vocab:
        confusion_vocab = sorted({t for s in segments for t in s.tokens})
    # keyword queries favor discriminative terms: skip tokens occurring in
    # more than a third of the segments (stopword-like, negative idf)
    df: Counter = Counter()
    for seg in segments:
        df.update(set(seg.tokens))
    df_cutoff = max(len(segments) / 3.0, 1.0)
    results: List[BenchResult] = []
    for wer_target in wer_targets:
        for seed in seeds:
            spec = NoiseSpec(target_wer=wer_target, seed=seed,
                             confusion_vocab=tuple(confusion_vocab))
            noisy = [corrupt(s, spec) for s in segments]
            noisy_index = index_segments(noisy)
            rng = random.Random(seed * 7919 + 13)
            sampled = rng.sample(range(len(segments)), min(queries_per_seed, len(segments)))
            for mode in modes:
                relevance: Dict[str, Set[str]] = {}
                ranked: Dict[str, List[str]] = {}
                for qi in sampled:
                    seg = segments[qi]
                    if mode == "paragraph":
                        terms = dict(Counter(seg.tokens))
                    elif mode == "sentence":
                        span = max(len(seg.tokens) // 6, 1)
                        start = rng.randrange(0, max(len(seg.tokens) - span, 1))
                        terms = dict(Counter(seg.tokens[start:start + span]))
                    elif mode == "keyword":
                        pool = sorted({t for t in seg.tokens if df[t] <= df_cutoff})
                        if not pool:
                            pool = sorted(set(seg.tokens))
                        terms = {rng.choice(pool): 1}
                    else:
                        raise ValueError("unknown query mode: %r" % (mode,))
                    qid = "q-%s-%s" % (mode, seg.segment_id)
                    relevance[qid] = {seg.segment_id}
                    hits = retrieve_top_n(QueryProfile(terms=terms), noisy_index,
                                          params, n=k)
                    ranked[qid] = [doc_id for doc_id, _ in hits]
                scores = score_run(relevance, ranked, k)
                results.append(BenchResult(mode=mode, wer=wer_target, seed=seed,
                                           recall_at_10=scores["recall_at_k"],
                                           mrr=scores["mrr"]))
    return results


def write_bench_tsv(results: Sequence[BenchResult], fh) -> None:
    fh.write("mode\twer\tseed\trecall@10\tmrr\n")
    for r in results:
        fh.write("%s\t%g\t%d\t%.4f\t%.4f\n"
                 % (r.mode, r.wer, r.seed, r.recall_at_10, r.mrr))
