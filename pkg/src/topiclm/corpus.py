"""Corpus ingestion: page filtering, tokenization, content-term extraction.

Raw collections arrive as line-delimited JSON records (id, uri, text),
optionally gzipped.  Pages that look like word lists, script dumps or
near-empty fragments are discarded before indexing and LM training.
"""

import gzip
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)

# Cleaning defaults; all overridable via CleaningConfig.
MIN_TOKENS = 20
MAX_TTR = 0.9
MIN_TTR = 0.05
TTR_MIN_TOKENS = 200
MAX_NONWORD_DENSITY = 0.40

REJECT_TOO_SHORT = "too-short"
REJECT_LOW_DIVERSITY = "low-lexical-diversity"
REJECT_WORD_LIST = "word-list-like"
REJECT_MARKUP = "markup-dominated"

REJECT_REASONS = (
    REJECT_TOO_SHORT,
    REJECT_LOW_DIVERSITY,
    REJECT_WORD_LIST,
    REJECT_MARKUP,
)


@dataclass(frozen=True)
class RawRecord:
    id: str
    text: str
    source_uri: Optional[str] = None


@dataclass(frozen=True)
class TokenizerConfig:
    mode: str = "unicode-words"  # or "whitespace"
    lowercase: bool = True
    stoplist: frozenset = frozenset()

    def __post_init__(self):
        if self.mode not in ("unicode-words", "whitespace"):
            raise ValueError("unknown tokenizer mode: %r" % (self.mode,))
        object.__setattr__(self, "stoplist", frozenset(self.stoplist))


@dataclass(frozen=True)
class CleaningConfig:
    min_tokens: int = MIN_TOKENS
    max_ttr: float = MAX_TTR
    min_ttr: float = MIN_TTR
    ttr_min_tokens: int = TTR_MIN_TOKENS
    max_nonword_density: float = MAX_NONWORD_DENSITY


@dataclass(frozen=True)
class Document:
    id: str
    tokens: tuple
    content_terms: dict  # term -> frequency, positive

    @property
    def length(self) -> int:
        return len(self.tokens)


@dataclass
class IngestStats:
    accepted: int = 0
    rejected: Counter = field(default_factory=Counter)
    skipped: int = 0  # undecodable / malformed records

    @property
    def total_rejected(self) -> int:
        return sum(self.rejected.values())


def tokenize(text: str, config: TokenizerConfig) -> list:
    """Split text into tokens under the configured segmentation mode."""
    if config.mode == "whitespace":
        tokens = text.split()
    else:
        tokens = _WORD_RE.findall(text)
    if config.lowercase:
        tokens = [t.lower() for t in tokens]
    return tokens


def extract_content_terms(tokens: Iterable[str], stoplist=frozenset()) -> dict:
    """Count token frequencies, dropping stoplist terms."""
    counts = Counter(t for t in tokens if t not in stoplist)
    return dict(counts)


def clean_page(record: RawRecord, cleaning: CleaningConfig = CleaningConfig()):
    """Classify a raw page as usable or extraneous.

    Returns None to accept, or one of REJECT_REASONS.  Total and
    deterministic: no I/O, no randomness.
    """
    text = record.text
    tokens = _WORD_RE.findall(text)
    if len(tokens) < cleaning.min_tokens:
        return REJECT_TOO_SHORT

    stripped = [c for c in text if not c.isspace()]
    if stripped:
        nonword = sum(1 for c in stripped if not _WORD_RE.match(c))
        if nonword / len(stripped) > cleaning.max_nonword_density:
            return REJECT_MARKUP

    if len(tokens) >= cleaning.ttr_min_tokens:
        ttr = len(set(tokens)) / len(tokens)
        if ttr > cleaning.max_ttr:
            return REJECT_WORD_LIST
        if ttr < cleaning.min_ttr:
            return REJECT_LOW_DIVERSITY

    return None


def ingest(records: Iterable[RawRecord], config: TokenizerConfig,
           cleaning: CleaningConfig = CleaningConfig(),
           stats: Optional[IngestStats] = None) -> Iterator[Document]:
    """Stream records through cleaning and tokenization.

    Yields accepted Documents in input order; bounded memory apart from
    the id-uniqueness set.  Duplicate ids are a hard error.
    """
    seen = set()
    for record in records:
        if record.id in seen:
            raise ValueError("duplicate record id: %s" % record.id)
        seen.add(record.id)
        reason = clean_page(record, cleaning)
        if reason is not None:
            if stats is not None:
                stats.rejected[reason] += 1
            continue
        tokens = tuple(tokenize(record.text, config))
        terms = extract_content_terms(tokens, config.stoplist)
        if stats is not None:
            stats.accepted += 1
        yield Document(id=record.id, tokens=tokens, content_terms=terms)


def _open_text(path, mode="rt"):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode, encoding="utf-8", errors=None)
    return open(path, mode, encoding="utf-8")


def read_records(path, stats: Optional[IngestStats] = None) -> Iterator[RawRecord]:
    """Read line-delimited JSON records; malformed lines are skipped with a warning."""
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                record = RawRecord(id=str(obj["id"]), text=obj["text"],
                                   source_uri=obj.get("uri"))
            except (json.JSONDecodeError, KeyError, TypeError,
                    UnicodeDecodeError) as exc:
                logger.warning("%s:%d: skipping malformed record (%s)",
                               path, lineno, exc)
                if stats is not None:
                    stats.skipped += 1
                continue
            yield record


def load_stoplist(path) -> frozenset:
    with _open_text(path) as fh:
        return frozenset(line.strip() for line in fh if line.strip())


def write_docstore(documents: Iterable[Document], path) -> int:
    """Write documents as line-delimited JSON; returns the document count."""
    n = 0
    with _open_text(path, "wt") as fh:
        for doc in documents:
            fh.write(json.dumps(
                {"id": doc.id, "tokens": list(doc.tokens),
                 "content_terms": doc.content_terms},
                ensure_ascii=False, sort_keys=True))
            fh.write("\n")
            n += 1
    return n


def read_docstore(path) -> Iterator[Document]:
    with _open_text(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            yield Document(id=obj["id"], tokens=tuple(obj["tokens"]),
                           content_terms=dict(obj["content_terms"]))
