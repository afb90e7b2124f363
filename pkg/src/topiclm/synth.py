"""Synthetic topic corpora for benchmarks and end-to-end checks.

Generates a general corpus of short documents spanning several topic
vocabularies, plus per-topic "textbook" and test texts, and segmented
lecture transcripts for the retrieval robustness benchmark.  Everything is
seeded and deterministic.
"""

import random
from dataclasses import dataclass
from typing import Dict, List, Tuple

from .corpus import Document
from .retrsim import Segment


def _words(prefix: str, n: int) -> List[str]:
    return ["%s%03d" % (prefix, i) for i in range(n)]


@dataclass
class TopicCorpus:
    documents: List[Document]
    doc_topics: Dict[str, int]
    common_vocab: List[str]
    topic_core: List[List[str]]  # frequent in-topic words, per topic
    topic_rare: List[List[str]]  # rare in-topic words, per topic
    n_topics: int


def _draw_tokens(rng: random.Random, common, core, rare, length,
                 p_common=0.50, p_core=0.47) -> List[str]:
    tokens = []
    for _ in range(length):
        r = rng.random()
        if r < p_common:
            tokens.append(rng.choice(common))
        elif r < p_common + p_core:
            tokens.append(rng.choice(core))
        else:
            tokens.append(rng.choice(rare))
    return tokens


def make_topic_corpus(n_docs: int = 5000, n_topics: int = 5, seed: int = 0,
                      doc_length: int = 30, common_size: int = 200,
                      core_size: int = 150, rare_size: int = 100) -> TopicCorpus:
    """General corpus of short bag-of-words documents over distinct topics.

    Each document mixes a shared common vocabulary with its topic's core
    words (frequent) and rare words (infrequent enough to fall outside a
    frequency-capped vocabulary selected from the whole corpus).
    """
    rng = random.Random(seed)
    common = _words("common", common_size)
    cores = [_words("t%dcore" % t, core_size) for t in range(n_topics)]
    rares = [_words("t%drare" % t, rare_size) for t in range(n_topics)]
    documents = []
    doc_topics = {}
    for i in range(n_docs):
        topic = i % n_topics
        tokens = _draw_tokens(rng, common, cores[topic], rares[topic], doc_length)
        doc_id = "doc%05d" % i
        terms: Dict[str, int] = {}
        for t in tokens:
            terms[t] = terms.get(t, 0) + 1
        documents.append(Document(id=doc_id, tokens=tuple(tokens),
                                  content_terms=terms))
        doc_topics[doc_id] = topic
    return TopicCorpus(documents=documents, doc_topics=doc_topics,
                       common_vocab=common, topic_core=cores,
                       topic_rare=rares, n_topics=n_topics)


def make_topic_text(corpus: TopicCorpus, topic: int, n_tokens: int,
                    seed: int) -> str:
    """In-topic text (textbook or held-out test material) for one topic."""
    rng = random.Random(seed)
    tokens = _draw_tokens(rng, corpus.common_vocab,
                          corpus.topic_core[topic], corpus.topic_rare[topic],
                          n_tokens)
    lines = [" ".join(tokens[i:i + 12]) for i in range(0, len(tokens), 12)]
    return "\n".join(lines) + "\n"


def make_segments(n_topics: int = 10, segments_per_topic: int = 10,
                  segment_length: int = 120, seed: int = 0,
                  topic_vocab_size: int = 40,
                  common_size: int = 150) -> List[Segment]:
    """Lecture-style transcript segments with topic-specific vocabularies."""
    rng = random.Random(seed)
    common = _words("w", common_size)
    topic_vocabs = [_words("s%dv" % t, topic_vocab_size) for t in range(n_topics)]
    segments = []
    start = 0.0
    for t in range(n_topics):
        for s in range(segments_per_topic):
            tokens = []
            for _ in range(segment_length):
                if rng.random() < 0.6:
                    tokens.append(rng.choice(topic_vocabs[t]))
                else:
                    tokens.append(rng.choice(common))
            segments.append(Segment(
                segment_id="seg-%02d-%02d" % (t, s),
                lecture_id="lec-%02d" % t,
                start=start, end=start + 30.0,
                tokens=tuple(tokens)))
            start += 30.0
    return segments
