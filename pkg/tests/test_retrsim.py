import random

import pytest

from topiclm import synth
from topiclm.corpus import TokenizerConfig
from topiclm.evaluate import Transcript, wer
from topiclm.index import QueryProfile, retrieve_top_n
from topiclm.retrsim import (
    NoiseSpec,
    Segment,
    corrupt,
    index_segments,
    make_queries,
    run_bench,
    score_run,
)


def segment(tokens, seg_id="s1"):
    return Segment(segment_id=seg_id, lecture_id="lec", start=0.0, end=1.0,
                   tokens=tuple(tokens))


VOCAB = tuple("word%03d" % i for i in range(200))


def test_corrupt_zero_wer_is_identity():
    seg = segment(["a", "b", "c"])
    spec = NoiseSpec(target_wer=0.0, seed=3, confusion_vocab=VOCAB)
    assert corrupt(seg, spec).tokens == seg.tokens


def test_corrupt_all_deletions_empties_segment():
    seg = segment(["a", "b", "c", "d"])
    spec = NoiseSpec(target_wer=100.0, mix=(0.0, 1.0, 0.0), seed=1)
    assert corrupt(seg, spec).tokens == ()


def test_corrupt_reproducible():
    rng = random.Random(0)
    seg = segment([rng.choice(VOCAB) for _ in range(300)])
    spec = NoiseSpec(target_wer=30.0, seed=11, confusion_vocab=VOCAB)
    assert corrupt(seg, spec).tokens == corrupt(seg, spec).tokens


def test_corrupt_calibration_40_percent():
    # 10K tokens split into sentence-sized segments to keep alignment cheap
    rng = random.Random(5)
    spec = NoiseSpec(target_wer=40.0, seed=2, confusion_vocab=VOCAB)
    ref_sents, hyp_sents = [], []
    for i in range(100):
        tokens = [rng.choice(VOCAB) for _ in range(100)]
        seg = segment(tokens, "s%d" % i)
        ref_sents.append(tuple(tokens))
        hyp_sents.append(corrupt(seg, spec).tokens)
    ref = Transcript(lecture_id="lec", sentences=tuple(ref_sents))
    hyp = Transcript(lecture_id="lec", sentences=tuple(hyp_sents))
    measured = wer(ref, hyp)
    assert 38.0 <= measured <= 42.0


def test_corrupt_wer_monotone_in_target():
    rng = random.Random(9)
    tokens = [rng.choice(VOCAB) for _ in range(500)]
    seg = segment(tokens)
    ref = Transcript(lecture_id="lec", sentences=(tuple(tokens),))
    means = []
    for target in (5.0, 20.0, 50.0):
        values = []
        for seed in range(20):
            spec = NoiseSpec(target_wer=target, seed=seed, confusion_vocab=VOCAB)
            hyp = Transcript(lecture_id="lec",
                             sentences=(corrupt(seg, spec).tokens,))
            values.append(wer(ref, hyp))
        means.append(sum(values) / len(values))
    assert means[0] <= means[1] <= means[2]


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(target_wer=-1.0)
    with pytest.raises(ValueError):
        NoiseSpec(target_wer=10.0, mix=(0.5, 0.5, 0.5))


def test_index_segments_delegates():
    segs = [segment(["a", "b", "a"], "s1"), segment(["b", "c"], "s2")]
    index = index_segments(segs)
    assert index.postings["a"] == [("s1", 2)]
    assert index.n_docs == 2


def test_clean_corruption_preserves_retrieval():
    segs = synth.make_segments(n_topics=4, segments_per_topic=5, seed=0)
    spec = NoiseSpec(target_wer=0.0, seed=7)
    clean_index = index_segments(segs)
    noisy_index = index_segments([corrupt(s, spec) for s in segs])
    query = QueryProfile(terms={segs[0].tokens[0]: 1, segs[0].tokens[5]: 2})
    assert retrieve_top_n(query, clean_index, n=10) == \
        retrieve_top_n(query, noisy_index, n=10)


def test_make_queries_keyword():
    queries = make_queries("alpha beta gamma delta", "keyword", 3, seed=1)
    assert len(queries) == 3
    for q in queries:
        assert len(q.terms) == 1 and list(q.terms.values()) == [1]


def test_make_queries_paragraph_exhaustion():
    text = "first paragraph here\n\nsecond paragraph there"
    queries = make_queries(text, "paragraph", 2, seed=0)
    bags = sorted(tuple(sorted(q.terms)) for q in queries)
    assert bags == [("first", "here", "paragraph"),
                    ("paragraph", "second", "there")]


def test_make_queries_deterministic():
    rng = random.Random(2)
    text = ". ".join(" ".join(rng.choice(VOCAB) for _ in range(8))
                     for _ in range(40))
    a = make_queries(text, "sentence", 5, seed=42)
    b = make_queries(text, "sentence", 5, seed=42)
    assert [q.terms for q in a] == [q.terms for q in b]


def test_make_queries_insufficient_source():
    with pytest.raises(ValueError):
        make_queries("one two", "paragraph", 5, seed=0)


def test_score_run_perfect_and_missing():
    relevance = {"q1": {"s1"}, "q2": {"s2"}}
    results = {"q1": ["s1", "x"], "q2": ["s2", "y"]}
    scores = score_run(relevance, results, k=10)
    assert scores["mrr"] == 1.0
    assert scores["recall_at_k"] == 1.0
    scores = score_run(relevance, {"q1": ["x"], "q2": []}, k=10)
    assert scores["recall_at_k"] == 0.0
    assert scores["mrr"] == 0.0


def test_score_run_matches_hand_computation():
    relevance = {"q1": {"a", "b"}, "q2": {"c"}}
    results = {"q1": ["x", "a", "y", "b"], "q2": ["p", "q", "c"]}
    scores = score_run(relevance, results, k=3)
    # q1: 1 of 2 relevant in top 3, first hit rank 2; q2: rank 3 in top 3
    assert scores["recall_at_k"] == pytest.approx((0.5 + 1.0) / 2)
    assert scores["mrr"] == pytest.approx((1 / 2 + 1 / 3) / 2)


def test_bench_smoke_and_determinism():
    segs = synth.make_segments(n_topics=3, segments_per_topic=4,
                               segment_length=60, seed=1)
    kwargs = dict(wer_targets=[0.0, 40.0], modes=["keyword", "paragraph"],
                  seeds=[0, 1], queries_per_seed=6)
    a = run_bench(segs, **kwargs)
    b = run_bench(segs, **kwargs)
    assert [(r.mode, r.wer, r.seed, r.recall_at_10, r.mrr) for r in a] == \
        [(r.mode, r.wer, r.seed, r.recall_at_10, r.mrr) for r in b]
    assert len(a) == 2 * 2 * 2
