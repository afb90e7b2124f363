"""Adaptation-quality metrics: OOV rate, test-set perplexity, word error rate.

All metrics run against reference transcripts with manually marked sentence
boundaries; results aggregate into a per-lecture report with an average row.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import lm
from .lm import NGramModel, Vocabulary

MATCH = "match"
SUB = "substitution"
DEL = "deletion"
INS = "insertion"


@dataclass(frozen=True)
class Transcript:
    lecture_id: str
    sentences: Tuple[Tuple[str, ...], ...]
    spans: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        if self.spans is not None and len(self.spans) != len(self.sentences):
            raise ValueError("span count differs from sentence count")

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def tokens(self) -> List[str]:
        return [t for s in self.sentences for t in s]


@dataclass
class Alignment:
    ops: List[Tuple[str, Optional[str], Optional[str]]]  # (op, ref, hyp)

    @property
    def distance(self) -> int:
        return sum(1 for op, _, _ in self.ops if op != MATCH)

    def counts(self) -> Dict[str, int]:
        out = {MATCH: 0, SUB: 0, DEL: 0, INS: 0}
        for op, _, _ in self.ops:
            out[op] += 1
        return out


def read_transcript(path, lecture_id: Optional[str] = None) -> Transcript:
    """One sentence per line; optional leading start/end time fields (tabs)."""
    sentences = []
    spans = []
    have_spans = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            span = None
            if len(parts) >= 3:
                try:
                    span = (float(parts[0]), float(parts[1]))
                    tokens = " ".join(parts[2:]).split()
                except ValueError:
                    tokens = line.split()
            else:
                tokens = line.split()
            if have_spans is None:
                have_spans = span is not None
            if have_spans != (span is not None):
                raise ValueError("%s: inconsistent time fields" % path)
            sentences.append(tuple(tokens))
            if span is not None:
                spans.append(span)
    if lecture_id is None:
        lecture_id = str(path)
    return Transcript(lecture_id=lecture_id,
                      sentences=tuple(sentences),
                      spans=tuple(spans) if have_spans else None)


def oov_rate(transcript: Transcript, vocabulary: Vocabulary) -> float:
    """Percentage of transcript tokens missing from the vocabulary."""
    total = 0
    oov = 0
    for sentence in transcript.sentences:
        for token in sentence:
            if token in (lm.BOS, lm.EOS, lm.UNK):
                continue
            total += 1
            if token not in vocabulary:
                oov += 1
    if total == 0:
        raise ValueError("empty transcript")
    return 100.0 * oov / total


def perplexity(model: NGramModel, transcript: Transcript,
               skip_oov: bool = False) -> float:
    """Test-set perplexity 10^(-avg log10 P), sentence ends included.

    OOV tokens score as the unknown marker by default; with skip_oov they
    are excluded from both the log-probability sum and the token count
    (they still condition subsequent predictions, as the unknown marker).
    """
    total_lp = 0.0
    n = 0
    n_hist = max(model.order - 1, 0)
    for sentence in transcript.sentences:
        history = [lm.BOS] * n_hist
        for token in list(sentence) + [lm.EOS]:
            is_oov = token != lm.EOS and lm.map_symbol(model, token) == lm.UNK
            if not (skip_oov and is_oov):
                total_lp += lm.logprob(model, token, history)
                n += 1
            if n_hist:
                history = (history + [lm.map_symbol(model, token)])[-n_hist:]
    if n == 0:
        raise ValueError("empty transcript")
    return 10.0 ** (-total_lp / n)


def align(reference: Sequence[str], hypothesis: Sequence[str]) -> Alignment:
    """Minimum unit-cost edit alignment.

    Backtrace ties prefer match > substitution > deletion > insertion, so
    the operation sequence is deterministic.
    """
    m, n = len(reference), len(hypothesis)
    dist = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        dist[i][0] = i
    for j in range(1, n + 1):
        dist[0][j] = j
    for i in range(1, m + 1):
        row = dist[i]
        prev = dist[i - 1]
        ref_tok = reference[i - 1]
        for j in range(1, n + 1):
            same = ref_tok == hypothesis[j - 1]
            row[j] = min(prev[j - 1] + (0 if same else 1),
                         prev[j] + 1,
                         row[j - 1] + 1)

    ops = []
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0 and reference[i - 1] == hypothesis[j - 1] \
                and dist[i][j] == dist[i - 1][j - 1]:
            ops.append((MATCH, reference[i - 1], hypothesis[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + 1:
            ops.append((SUB, reference[i - 1], hypothesis[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            ops.append((DEL, reference[i - 1], None))
            i = i - 1
        else:
            ops.append((INS, None, hypothesis[j - 1]))
            j = j - 1
    ops.reverse()
    return Alignment(ops=ops)


def strip_fillers(transcript: Transcript, fillers) -> Transcript:
    fillers = set(fillers)
    return Transcript(
        lecture_id=transcript.lecture_id,
        sentences=tuple(tuple(t for t in s if t not in fillers)
                        for s in transcript.sentences),
        spans=transcript.spans)


def wer(reference: Transcript, hypothesis: Transcript,
        per_sentence: bool = True, fillers=None) -> float:
    """Word error rate: 100 * (deletions + insertions + substitutions) / ref tokens.

    Sentences pair by index when per_sentence (the default); otherwise the
    lectures align as single token streams.  Can exceed 100 when insertions
    dominate.
    """
    if reference.lecture_id != hypothesis.lecture_id:
        raise ValueError("lecture ids differ: %s vs %s"
                         % (reference.lecture_id, hypothesis.lecture_id))
    if fillers:
        reference = strip_fillers(reference, fillers)
        hypothesis = strip_fillers(hypothesis, fillers)
    if per_sentence:
        if len(reference.sentences) != len(hypothesis.sentences):
            raise ValueError(
                "sentence count mismatch: reference has %d, hypothesis has %d"
                % (len(reference.sentences), len(hypothesis.sentences)))
        pairs = zip(reference.sentences, hypothesis.sentences)
    else:
        pairs = [(reference.tokens(), hypothesis.tokens())]
    errors = 0
    ref_tokens = 0
    for ref, hyp in pairs:
        errors += align(ref, hyp).distance
        ref_tokens += len(ref)
    if ref_tokens == 0:
        raise ValueError("empty reference transcript")
    return 100.0 * errors / ref_tokens


METRIC_KEYS = ("oov_percent", "perplexity", "wer_percent")
AVG_ROW = "Avg."


@dataclass
class EvalReport:
    conditions: List[str]
    lectures: List[str]
    # (condition, lecture) -> {metric key -> value}; lecture AVG_ROW holds means
    cells: Dict[Tuple[str, str], Dict[str, float]] = field(default_factory=dict)


def build_report(entries: List[Tuple[str, str, Dict[str, float]]]) -> EvalReport:
    """Assemble per-lecture metric rows plus an unweighted average row."""
    conditions: List[str] = []
    lectures: List[str] = []
    cells: Dict[Tuple[str, str], Dict[str, float]] = {}
    for condition, lecture, metrics in entries:
        if (condition, lecture) in cells:
            raise ValueError("duplicate report cell: (%s, %s)" % (condition, lecture))
        if condition not in conditions:
            conditions.append(condition)
        if lecture not in lectures:
            lectures.append(lecture)
        cells[(condition, lecture)] = dict(metrics)
    for condition in conditions:
        avg: Dict[str, float] = {}
        for key in METRIC_KEYS:
            values = [cells[(condition, lec)][key] for lec in lectures
                      if key in cells.get((condition, lec), {})]
            if values:
                avg[key] = math.fsum(values) / len(values)
        cells[(condition, AVG_ROW)] = avg
    return EvalReport(conditions=conditions, lectures=lectures, cells=cells)


_METRIC_LABELS = {"oov_percent": "OOV", "perplexity": "PP", "wer_percent": "WER"}


def _present_metrics(report: EvalReport) -> List[str]:
    return [k for k in METRIC_KEYS
            if any(k in report.cells.get((c, l), {})
                   for c in report.conditions
                   for l in report.lectures + [AVG_ROW])]


def render_tsv(report: EvalReport) -> str:
    keys = _present_metrics(report)
    lines = ["lecture\tcondition\t" + "\t".join(_METRIC_LABELS[k] for k in keys)]
    for lecture in report.lectures + [AVG_ROW]:
        for condition in report.conditions:
            metrics = report.cells.get((condition, lecture), {})
            values = "\t".join(
                "%.2f" % metrics[k] if k in metrics else "-" for k in keys)
            lines.append("%s\t%s\t%s" % (lecture, condition, values))
    return "\n".join(lines) + "\n"


def render_text(report: EvalReport) -> str:
    keys = _present_metrics(report)
    header = ["Lecture", ""] + report.conditions
    rows = [header]
    for lecture in report.lectures + [AVG_ROW]:
        for key in keys:
            row = [lecture if key == keys[0] else "", _METRIC_LABELS[key]]
            for condition in report.conditions:
                metrics = report.cells.get((condition, lecture), {})
                row.append("%.2f" % metrics[key] if key in metrics else "-")
            rows.append(row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    out = []
    for r, row in enumerate(rows):
        out.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
        if r == 0:
            out.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    return "\n".join(out) + "\n"
