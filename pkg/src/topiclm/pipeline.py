"""End-to-end adaptation experiment: Base vs +LM across vocabulary caps.

Driven by a single TOML config.  Every stage writes its artifact under the
output directory and is cached by a content hash of its inputs and
parameters, so reruns only redo work whose inputs changed; identical
configs reproduce byte-identical reports.
"""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

try:
    import tomllib as tomli
except ModuleNotFoundError:
    import tomli

from . import corpus as corpus_mod
from . import evaluate, lm
from .corpus import CleaningConfig, IngestStats, TokenizerConfig
from .index import BM25Params, build_index, load_index, make_query_profile, \
    retrieve_top_n, save_index, write_run
from .retrsim import NoiseSpec, Segment, corrupt

logger = logging.getLogger(__name__)

CONDITIONS = ("Base", "+LM")


class StageError(RuntimeError):
    def __init__(self, stage: str, lecture: Optional[str], cause: Exception):
        where = stage if lecture is None else "%s[%s]" % (stage, lecture)
        super().__init__("stage %s failed: %s" % (where, cause))
        self.stage = stage
        self.lecture = lecture
        self.cause = cause


@dataclass
class LectureSpec:
    lecture_id: str
    textbook: str
    transcript: str
    hypothesis: Optional[str] = None


@dataclass
class ExperimentConfig:
    corpus: str
    output_dir: str
    lectures: List[LectureSpec]
    corpus_format: str = "records"  # or "docstore"
    vocab_caps: List[int] = field(default_factory=lambda: [20000, 60000, 100000])
    top_n: int = 5000
    bm25: BM25Params = field(default_factory=BM25Params)
    conditions: List[str] = field(default_factory=lambda: list(CONDITIONS))
    seed: int = 0
    stoplist: Optional[str] = None
    tokenizer_mode: str = "unicode-words"
    lowercase: bool = True
    # optional stand-in hypotheses generated by the noise simulator
    simulate_hypotheses_wer: Optional[float] = None
    workers: int = 1


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        raw = tomli.load(fh)
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    lectures = []
    for lecture_id, spec in raw.get("lectures", {}).items():
        lectures.append(LectureSpec(
            lecture_id=lecture_id,
            textbook=resolve(spec["textbook"]),
            transcript=resolve(spec["transcript"]),
            hypothesis=resolve(spec["hypothesis"]) if "hypothesis" in spec else None))
    bm25_raw = raw.get("bm25", {})
    tok_raw = raw.get("tokenizer", {})
    sim_raw = raw.get("simulate_hypotheses", {})
    return ExperimentConfig(
        corpus=resolve(raw["corpus"]),
        corpus_format=raw.get("corpus_format", "records"),
        output_dir=resolve(raw["output_dir"]),
        lectures=lectures,
        vocab_caps=list(raw.get("vocab_caps", [20000, 60000, 100000])),
        top_n=raw.get("top_n", 5000),
        bm25=BM25Params(k=bm25_raw.get("k", 2.0), b=bm25_raw.get("b", 0.8),
                        clamp_idf=bm25_raw.get("clamp_idf", False)),
        conditions=list(raw.get("conditions", list(CONDITIONS))),
        seed=raw.get("seed", 0),
        stoplist=resolve(raw["stoplist"]) if "stoplist" in raw else None,
        tokenizer_mode=tok_raw.get("mode", "unicode-words"),
        lowercase=tok_raw.get("lowercase", True),
        simulate_hypotheses_wer=sim_raw.get("wer"),
        workers=raw.get("workers", 1))


def validate(config: ExperimentConfig) -> List[str]:
    """Collect every violation; nothing is silently fixed."""
    violations = []
    if not os.path.exists(config.corpus):
        violations.append("corpus: path does not exist: %s" % config.corpus)
    if config.corpus_format not in ("records", "docstore"):
        violations.append("corpus_format: must be 'records' or 'docstore'")
    if not config.lectures:
        violations.append("lectures: at least one lecture required")
    for lecture in config.lectures:
        if not os.path.exists(lecture.textbook):
            violations.append("lectures.%s: textbook path does not exist: %s"
                              % (lecture.lecture_id, lecture.textbook))
        if not os.path.exists(lecture.transcript):
            violations.append("lectures.%s: transcript path does not exist: %s"
                              % (lecture.lecture_id, lecture.transcript))
        if lecture.hypothesis and not os.path.exists(lecture.hypothesis):
            violations.append("lectures.%s: hypothesis path does not exist: %s"
                              % (lecture.lecture_id, lecture.hypothesis))
    if any(cap < 1 for cap in config.vocab_caps):
        violations.append("vocab_caps: caps must be positive")
    if config.vocab_caps != sorted(config.vocab_caps):
        violations.append("vocab_caps: caps must be sorted ascending")
    if config.top_n < 1:
        violations.append("top_n: must be >= 1")
    for condition in config.conditions:
        if condition not in CONDITIONS:
            violations.append("conditions: unknown condition %r" % condition)
    if config.stoplist and not os.path.exists(config.stoplist):
        violations.append("stoplist: path does not exist: %s" % config.stoplist)
    return violations


def _file_sha(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class _Cache:
    def __init__(self, out_dir: str):
        self.path = os.path.join(out_dir, "cache.json")
        self.entries: Dict[str, str] = {}
        if os.path.exists(self.path):
            with open(self.path, encoding="utf-8") as fh:
                self.entries = json.load(fh)

    def save(self):
        with open(self.path, "w", encoding="utf-8") as fh:
            json.dump(self.entries, fh, indent=0, sort_keys=True)

    def fresh(self, rel: str, key: str, path: str) -> bool:
        return os.path.exists(path) and self.entries.get(rel) == key

    def record(self, rel: str, key: str):
        self.entries[rel] = key
        self.save()


@dataclass
class PipelineResult:
    report: evaluate.EvalReport
    report_tsv_path: str
    report_txt_path: str
    stages: List[Tuple[str, str]]  # (stage name, "built" | "cached")


def _stage_key(*parts) -> str:
    return hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).hexdigest()


def run(config: ExperimentConfig) -> PipelineResult:
    violations = validate(config)
    if violations:
        raise ValueError("invalid config:\n" + "\n".join(violations))

    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    os.makedirs(os.path.join(out, "runs"), exist_ok=True)
    os.makedirs(os.path.join(out, "models"), exist_ok=True)
    cache = _Cache(out)
    stages: List[Tuple[str, str]] = []

    stoplist = corpus_mod.load_stoplist(config.stoplist) if config.stoplist else frozenset()
    tok_config = TokenizerConfig(mode=config.tokenizer_mode,
                                 lowercase=config.lowercase, stoplist=stoplist)
    corpus_hash = _file_sha(config.corpus)

    def stage(name, lecture, rel, key, build):
        path = os.path.join(out, rel)
        if cache.fresh(rel, key, path):
            stages.append((name if lecture is None else "%s[%s]" % (name, lecture),
                           "cached"))
            return path
        try:
            build(path)
        except Exception as exc:
            raise StageError(name, lecture, exc) from exc
        cache.record(rel, key)
        stages.append((name if lecture is None else "%s[%s]" % (name, lecture),
                       "built"))
        return path

    # ingest (or adopt an existing docstore)
    if config.corpus_format == "records":
        def build_docstore(path):
            stats = IngestStats()
            docs = corpus_mod.ingest(
                corpus_mod.read_records(config.corpus, stats), tok_config,
                CleaningConfig(), stats)
            n = corpus_mod.write_docstore(docs, path)
            logger.info("ingest: %d accepted, %d rejected, %d skipped",
                        n, stats.total_rejected, stats.skipped)
        docstore_path = stage(
            "ingest", None, "docstore.jsonl",
            _stage_key("ingest", corpus_hash, tok_config.mode,
                       tok_config.lowercase, sorted(stoplist)),
            build_docstore)
    else:
        docstore_path = config.corpus
    docstore_hash = _file_sha(docstore_path)

    def docs():
        return corpus_mod.read_docstore(docstore_path)

    need_retrieval = "+LM" in config.conditions
    if need_retrieval:
        index_path = stage(
            "index", None, "index.bin", _stage_key("index", docstore_hash),
            lambda path: save_index(build_index(docs()), path))
        index = load_index(index_path)

    run_paths: Dict[str, str] = {}
    if need_retrieval:
        for lecture in config.lectures:
            textbook_hash = _file_sha(lecture.textbook)

            def build_run(path, lecture=lecture):
                with open(lecture.textbook, encoding="utf-8") as fh:
                    profile = make_query_profile(fh.read(), tok_config)
                hits = retrieve_top_n(profile, index, config.bm25, config.top_n)
                with open(path, "w", encoding="utf-8") as fh:
                    write_run(hits, fh)

            run_paths[lecture.lecture_id] = stage(
                "retrieve", lecture.lecture_id,
                os.path.join("runs", "%s.run" % lecture.lecture_id),
                _stage_key("retrieve", docstore_hash, textbook_hash,
                           config.bm25.k, config.bm25.b, config.bm25.clamp_idf,
                           config.top_n),
                build_run)

    def train_model(path, doc_filter, cap):
        if doc_filter is None:
            source = list(docs())
        else:
            source = [d for d in docs() if d.id in doc_filter]
        model = lm.train(source, cap)
        lm.save(model, path)

    entries = []
    for cap in config.vocab_caps:
        for condition in config.conditions:
            doc_ids = None
            for lecture in config.lectures:
                if condition == "+LM":
                    with open(run_paths[lecture.lecture_id], encoding="utf-8") as fh:
                        doc_ids = {line.split("\t")[1] for line in fh if line.strip()}
                    model_key = _stage_key("lm", docstore_hash, cap, condition,
                                           _file_sha(run_paths[lecture.lecture_id]))
                else:
                    model_key = _stage_key("lm", docstore_hash, cap, condition)
                model_path = stage(
                    "lm-train", lecture.lecture_id,
                    os.path.join("models", "%s.%d.%s.arpa"
                                 % (lecture.lecture_id, cap,
                                    condition.replace("+", ""))),
                    model_key,
                    lambda path, f=doc_ids, c=cap: train_model(path, f, c))

                try:
                    model = lm.load(model_path)
                    transcript = evaluate.read_transcript(
                        lecture.transcript, lecture.lecture_id)
                    metrics = {
                        "oov_percent": evaluate.oov_rate(transcript, model.vocabulary),
                        "perplexity": evaluate.perplexity(model, transcript),
                    }
                    hyp = _hypothesis_for(config, lecture, transcript)
                    if hyp is not None:
                        metrics["wer_percent"] = evaluate.wer(transcript, hyp)
                except StageError:
                    raise
                except Exception as exc:
                    raise StageError("evaluate", lecture.lecture_id, exc) from exc
                entries.append(("%s/%dK" % (condition, cap // 1000)
                                if cap >= 1000 else "%s/%d" % (condition, cap),
                                lecture.lecture_id, metrics))

    report = evaluate.build_report(entries)
    tsv_path = os.path.join(out, "report.tsv")
    txt_path = os.path.join(out, "report.txt")
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write(evaluate.render_tsv(report))
    with open(txt_path, "w", encoding="utf-8") as fh:
        if config.simulate_hypotheses_wer is not None:
            fh.write("# WER hypotheses: simulated at %.1f%% target WER\n"
                     % config.simulate_hypotheses_wer)
        elif any(l.hypothesis for l in config.lectures):
            fh.write("# WER hypotheses: externally supplied transcripts\n")
        fh.write(evaluate.render_text(report))
    stages.append(("report", "built"))
    return PipelineResult(report=report, report_tsv_path=tsv_path,
                          report_txt_path=txt_path, stages=stages)


def _hypothesis_for(config: ExperimentConfig, lecture: LectureSpec,
                    reference: evaluate.Transcript):
    if lecture.hypothesis:
        return evaluate.read_transcript(lecture.hypothesis, lecture.lecture_id)
    if config.simulate_hypotheses_wer is not None:
        vocab = sorted({t for s in reference.sentences for t in s})
        spec = NoiseSpec(target_wer=config.simulate_hypotheses_wer,
                         seed=config.seed, confusion_vocab=tuple(vocab))
        sentences = []
        for i, sentence in enumerate(reference.sentences):
            seg = Segment(segment_id="%s-%d" % (lecture.lecture_id, i),
                          lecture_id=lecture.lecture_id, start=float(i),
                          end=float(i + 1), tokens=tuple(sentence))
            sentences.append(corrupt(seg, spec).tokens)
        return evaluate.Transcript(lecture_id=lecture.lecture_id,
                                   sentences=tuple(sentences))
    return None
