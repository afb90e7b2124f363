import io
import math
import random
from collections import Counter

import pytest

from topiclm import lm
from topiclm.corpus import Document
from topiclm.lm import BOS, EOS, UNK, Vocabulary

from oracles import count_ngrams_window


def doc(doc_id, text):
    tokens = tuple(text.split())
    return Document(id=doc_id, tokens=tokens, content_terms=dict(Counter(tokens)))


def corpus_from_counts(counts):
    tokens = []
    for term, freq in counts.items():
        tokens.extend([term] * freq)
    return [Document(id="d", tokens=tuple(tokens),
                     content_terms=dict(counts))]


def random_docs(rng, n_docs=20, vocab_size=12, max_len=15):
    alphabet = ["w%02d" % i for i in range(vocab_size)]
    return [doc("d%d" % i,
                " ".join(rng.choice(alphabet)
                         for _ in range(rng.randint(1, max_len))))
            for i in range(n_docs)]


def prob(model, word, history=()):
    return 10.0 ** lm.logprob(model, word, history)


def total_mass(model, history):
    return sum(prob(model, w, history)
               for w in model.vocabulary.predicted_events())


# --- vocabulary selection ---

def test_select_vocabulary_frequency_and_tie_break():
    docs = corpus_from_counts({"a": 5, "b": 3, "c": 3, "d": 1})
    vocab = lm.select_vocabulary(docs, cap=2)
    assert vocab.terms == ("a", "b")


def test_select_vocabulary_cap_above_distinct_terms():
    docs = corpus_from_counts({"a": 5, "b": 3})
    vocab = lm.select_vocabulary(docs, cap=100)
    assert set(vocab.terms) == {"a", "b"}


def test_select_vocabulary_matches_sort_oracle():
    rng = random.Random(5)
    docs = random_docs(rng, n_docs=40, vocab_size=300)
    freqs = Counter(t for d in docs for t in d.tokens)
    expected = [t for t, _ in sorted(freqs.items(), key=lambda kv: (-kv[1], kv[0]))][:100]
    vocab = lm.select_vocabulary(docs, cap=100)
    assert list(vocab.terms) == expected


def test_vocabulary_rejects_specials_and_duplicates():
    with pytest.raises(ValueError):
        Vocabulary(terms=("a", BOS), cap=10)
    with pytest.raises(ValueError):
        Vocabulary(terms=("a", "a"), cap=10)
    with pytest.raises(ValueError):
        Vocabulary(terms=("a", "b", "c"), cap=2)


# --- counting ---

def test_count_ngrams_single_sentence():
    vocab = Vocabulary(terms=("a", "b"), cap=10)
    counts = lm.count_ngrams([doc("d", "a b")], vocab)
    assert counts.trigram == Counter({(BOS, BOS, "a"): 1,
                                      (BOS, "a", "b"): 1,
                                      ("a", "b", EOS): 1})
    assert counts.unigram == Counter({"a": 1, "b": 1, EOS: 1})
    assert counts.total == 3


def test_count_ngrams_empty_corpus():
    vocab = Vocabulary(terms=("a",), cap=10)
    counts = lm.count_ngrams([], vocab)
    assert counts.total == 0
    assert not counts.unigram and not counts.bigram and not counts.trigram


def test_count_ngrams_oov_becomes_unk():
    vocab = Vocabulary(terms=("a",), cap=1)
    counts = lm.count_ngrams([doc("d", "a zz a")], vocab)
    assert counts.unigram[UNK] == 1
    assert counts.trigram[(BOS, "a", UNK)] == 1


def test_count_ngrams_matches_windowing_oracle():
    rng = random.Random(9)
    docs = random_docs(rng, n_docs=100, vocab_size=8, max_len=10)
    vocab = lm.select_vocabulary(docs, cap=6)
    counts = lm.count_ngrams(docs, vocab)

    def symbols(d):
        return [t if t in vocab else UNK for t in d.tokens] + [EOS]

    expected_tri = count_ngrams_window([[BOS, BOS] + symbols(d) for d in docs], 3)
    expected_bi = count_ngrams_window([[BOS] + symbols(d) for d in docs], 2)
    assert dict(counts.trigram) == expected_tri
    assert dict(counts.bigram) == expected_bi


def test_trigram_counts_bounded_by_bigram_history():
    rng = random.Random(2)
    docs = random_docs(rng)
    vocab = lm.select_vocabulary(docs, cap=10)
    counts = lm.count_ngrams(docs, vocab)
    by_history = Counter()
    for (u, v, w), c in counts.trigram.items():
        by_history[(u, v)] += c
    for (u, v), total in by_history.items():
        if u == BOS and v == BOS:
            continue
        assert total <= counts.bigram[(u, v)]


# --- estimation ---

TOY = [doc("d", "a b a")]


def toy_model():
    vocab = lm.select_vocabulary(TOY, cap=10)
    return lm.estimate_model(lm.count_ngrams(TOY, vocab), vocab)


def test_witten_bell_hand_computed_values():
    # events {a, b, <unk>, </s>}; unigrams a:2 b:1 </s>:1, 3 types:
    #   P1(w) = (c(w) + 3/4) / (4 + 3)
    # history 'a' has 2 continuations (b, </s>), both once:
    #   P2(b|a) = (1 + 2*P1(b)) / (2 + 2)
    # history (a, b) continues only to 'a':
    #   P3(a|a,b) = (1 + P2(a|b)) / 2,  P2(a|b) = (1 + P1(a)) / 2
    m = toy_model()
    p1a = 2.75 / 7
    assert prob(m, "a") == pytest.approx(p1a, abs=1e-12)
    assert prob(m, "b", ("a",)) == pytest.approx(0.375, abs=1e-12)
    p2ab = (1 + p1a) / 2
    assert prob(m, "a", ("a", "b")) == pytest.approx((1 + p2ab) / 2, abs=1e-12)


def test_backoff_unseen_trigram_seen_bigram():
    # history (b, a) was seen once with one continuation: weight 1/2
    m = toy_model()
    assert prob(m, "b", ("b", "a")) == pytest.approx(0.5 * 0.375, abs=1e-12)


def test_degenerate_corpus_prefers_seen_word():
    docs = [doc("d", "a a a a a a a a")]
    vocab = Vocabulary(terms=("a", "b"), cap=10)
    m = lm.estimate_model(lm.count_ngrams(docs, vocab), vocab)
    assert prob(m, "a", ("a", "a")) > prob(m, "b", ("a", "a"))


def test_normalization_all_history_kinds():
    m = toy_model()
    for history in [(), ("a",), ("b",), ("a", "b"), ("b", "a"),
                    (BOS, BOS), (BOS, "a"), ("zz", "qq"), (EOS, EOS)]:
        assert total_mass(m, history) == pytest.approx(1.0, abs=1e-6)


def test_positivity_and_oov_mapping():
    m = toy_model()
    for w in m.vocabulary.predicted_events():
        assert prob(m, w, ("a", "b")) > 0.0
    assert lm.logprob(m, "never-seen") == lm.logprob(m, UNK)


def test_estimate_zero_tokens_raises():
    vocab = Vocabulary(terms=("a",), cap=1)
    with pytest.raises(ValueError):
        lm.estimate_model(lm.count_ngrams([], vocab), vocab)


def test_adding_sentence_copy_does_not_lower_its_logprob():
    sentence = "a b c a"
    base_docs = [doc("d1", "a b c a"), doc("d2", "c b a"), doc("d3", "b b c")]
    vocab = lm.select_vocabulary(base_docs, cap=10)
    m1 = lm.estimate_model(lm.count_ngrams(base_docs, vocab), vocab)
    more = base_docs + [doc("d4", sentence)]
    m2 = lm.estimate_model(lm.count_ngrams(more, vocab), vocab)
    lp1, _ = lm.sentence_logprob(m1, sentence.split())
    lp2, _ = lm.sentence_logprob(m2, sentence.split())
    assert lp2 >= lp1


def test_cap_honored_on_random_corpora():
    rng = random.Random(17)
    docs = random_docs(rng, n_docs=200, vocab_size=5000, max_len=40)
    for cap in (10, 100, 1000):
        vocab = lm.select_vocabulary(docs, cap)
        assert len(vocab.terms) <= cap


# --- serialization ---

def test_arpa_roundtrip_identity():
    m = toy_model()
    buf = io.StringIO()
    lm.serialize(m, buf)
    m2 = lm.parse_arpa(io.StringIO(buf.getvalue()))
    assert set(m2.logprobs) == set(m.logprobs)
    for gram, lp in m.logprobs.items():
        assert m2.logprobs[gram] == pytest.approx(lp, abs=1e-9)
    for hist, bow in m.backoffs.items():
        assert m2.backoffs[hist] == pytest.approx(bow, abs=1e-9)


def test_arpa_two_order_model(tmp_path):
    docs = [doc("d", "a b a")]
    vocab = lm.select_vocabulary(docs, cap=10)
    m = lm.estimate_model(lm.count_ngrams(docs, vocab, order=2), vocab)
    path = tmp_path / "bigram.arpa"
    lm.save(m, path)
    text = path.read_text(encoding="utf-8")
    assert "\\3-grams:" not in text
    m2 = lm.load(path)
    assert m2.order == 2
    assert prob(m2, "b", ("a",)) == pytest.approx(prob(m, "b", ("a",)), abs=1e-9)


HAND_ARPA = """\
\\data\\
ngram 1=4
ngram 2=2

\\1-grams:
-0.5\tred\t-0.30103
-0.7\tblue
-1.0\t<unk>
-0.9\t</s>

\\2-grams:
-0.2\tred blue
-0.4\tred </s>

\\end\\
"""


def test_load_hand_written_arpa():
    m = lm.parse_arpa(io.StringIO(HAND_ARPA))
    assert lm.logprob(m, "red") == -0.5
    assert lm.logprob(m, "blue", ("red",)) == -0.2
    # unseen bigram: unigram backoff weight applies
    assert lm.logprob(m, "red", ("red",)) == pytest.approx(-0.30103 + -0.5)
    assert m.order == 2


def test_arpa_header_mismatch_rejected():
    bad = HAND_ARPA.replace("ngram 2=2", "ngram 2=3")
    with pytest.raises(ValueError):
        lm.parse_arpa(io.StringIO(bad))


def test_roundtrip_logprob_equality_on_random_corpus(tmp_path):
    rng = random.Random(23)
    docs = random_docs(rng, n_docs=50, vocab_size=30)
    m = lm.train(docs, cap=20)
    path = tmp_path / "model.arpa"
    lm.save(m, path)
    m2 = lm.load(path)
    for d in docs[:10]:
        lp1, n1 = lm.sentence_logprob(m, d.tokens)
        lp2, n2 = lm.sentence_logprob(m2, d.tokens)
        assert n1 == n2
        assert lp2 == pytest.approx(lp1, abs=1e-7)
