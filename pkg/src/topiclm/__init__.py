"""Topic-adapted language modeling and segment retrieval toolkit.

Retrieves topic-specific documents from a general corpus with probabilistic
ranking, trains capped-vocabulary trigram language models on the retrieved
subset, evaluates adaptation with OOV rate, perplexity and word error rate,
and simulates query-length robustness to recognition errors.
"""

__version__ = "0.1.0"
