"""Command-line entry points: ingest, index, lm, eval, sim, pipeline."""

import argparse
import logging
import sys

from . import corpus as corpus_mod
from . import evaluate, lm, pipeline, retrsim, synth
from .corpus import CleaningConfig, IngestStats, TokenizerConfig
from .index import BM25Params, build_index, dump_postings, load_index, \
    make_query_profile, retrieve_top_n, save_index, write_run


def _tokenizer_config(args) -> TokenizerConfig:
    stoplist = corpus_mod.load_stoplist(args.stoplist) if getattr(args, "stoplist", None) \
        else frozenset()
    return TokenizerConfig(mode=getattr(args, "mode", "unicode-words"),
                           lowercase=not getattr(args, "keep_case", False),
                           stoplist=stoplist)


def cmd_ingest(args):
    stats = IngestStats()
    cleaning = CleaningConfig(min_tokens=args.min_tokens, max_ttr=args.max_ttr)
    docs = corpus_mod.ingest(corpus_mod.read_records(args.input, stats),
                             _tokenizer_config(args), cleaning, stats)
    n = corpus_mod.write_docstore(docs, args.out)
    print("accepted %d documents; rejected %d (%s); skipped %d malformed"
          % (n, stats.total_rejected,
             ", ".join("%s=%d" % (k, v) for k, v in sorted(stats.rejected.items()))
             or "none",
             stats.skipped))
    return 0


def cmd_index_build(args):
    index = build_index(corpus_mod.read_docstore(args.docs))
    save_index(index, args.out)
    print("indexed %d documents, %d terms, avgdl %.2f"
          % (index.n_docs, len(index.postings), index.avgdl))
    return 0


def cmd_index_query(args):
    index = load_index(args.idx)
    with open(args.query_file, encoding="utf-8") as fh:
        profile = make_query_profile(fh.read(), _tokenizer_config(args))
    params = BM25Params(k=args.k, b=args.b, clamp_idf=args.clamp_idf)
    hits = retrieve_top_n(profile, index, params, args.top)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        write_run(hits, out)
    finally:
        if args.out:
            out.close()
    return 0


def cmd_index_dump(args):
    index = load_index(args.idx)
    dump_postings(index, sys.stdout)
    return 0


def cmd_lm_train(args):
    docs = list(corpus_mod.read_docstore(args.docs))
    model = lm.train(docs, args.vocab_cap, order=args.order)
    lm.save(model, args.out)
    print("trained %d-gram model over %d/%d vocabulary terms"
          % (model.order, len(model.vocabulary.terms), args.vocab_cap))
    return 0


def cmd_eval_oov(args):
    model = lm.load(args.model)
    transcript = evaluate.read_transcript(args.transcript)
    print("%.2f" % evaluate.oov_rate(transcript, model.vocabulary))
    return 0


def cmd_eval_pp(args):
    model = lm.load(args.model)
    transcript = evaluate.read_transcript(args.transcript)
    print("%.2f" % evaluate.perplexity(model, transcript, skip_oov=args.skip_oov))
    return 0


def cmd_eval_wer(args):
    fillers = corpus_mod.load_stoplist(args.strip_fillers) if args.strip_fillers else None
    ref = evaluate.read_transcript(args.reference, "lecture")
    hyp = evaluate.read_transcript(args.hypothesis, "lecture")
    print("%.2f" % evaluate.wer(ref, hyp, per_sentence=not args.global_align,
                                fillers=fillers))
    return 0


def cmd_sim_corrupt(args):
    transcript = evaluate.read_transcript(args.input, "input")
    vocab = sorted({t for s in transcript.sentences for t in s})
    spec = retrsim.NoiseSpec(target_wer=args.wer, seed=args.seed,
                             confusion_vocab=tuple(vocab))
    with open(args.out, "w", encoding="utf-8") as fh:
        for i, sentence in enumerate(transcript.sentences):
            seg = retrsim.Segment(segment_id="s%d" % i, lecture_id="input",
                                  start=float(i), end=float(i + 1),
                                  tokens=tuple(sentence))
            fh.write(" ".join(retrsim.corrupt(seg, spec).tokens))
            fh.write("\n")
    return 0


def cmd_sim_bench(args):
    segments = synth.make_segments(seed=args.seed)
    results = retrsim.run_bench(
        segments,
        wer_targets=[float(w) for w in args.wer.split(",")],
        modes=args.modes.split(","),
        seeds=list(range(args.seeds)))
    with open(args.out, "w", encoding="utf-8") as fh:
        retrsim.write_bench_tsv(results, fh)
    print("wrote %d benchmark rows to %s" % (len(results), args.out))
    return 0


def cmd_pipeline_validate(args):
    config = pipeline.load_config(args.config)
    violations = pipeline.validate(config)
    if violations:
        for v in violations:
            print(v)
        return 1
    print("ok")
    return 0


def cmd_pipeline_run(args):
    config = pipeline.load_config(args.config)
    result = pipeline.run(config)
    for name, status in result.stages:
        print("%-30s %s" % (name, status))
    print("report: %s" % result.report_tsv_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topiclm",
        description="Topic-adapted language modeling and retrieval toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="clean and tokenize a raw record stream")
    p.add_argument("--input", required=True)
    p.add_argument("--stoplist")
    p.add_argument("--out", required=True)
    p.add_argument("--min-tokens", type=int, default=corpus_mod.MIN_TOKENS)
    p.add_argument("--max-ttr", type=float, default=corpus_mod.MAX_TTR)
    p.add_argument("--mode", choices=["unicode-words", "whitespace"],
                   default="unicode-words")
    p.add_argument("--keep-case", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p_index = sub.add_parser("index", help="build or query an inverted index")
    sub_index = p_index.add_subparsers(dest="index_command", required=True)
    p = sub_index.add_parser("build")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index_build)
    p = sub_index.add_parser("query")
    p.add_argument("--idx", required=True)
    p.add_argument("--query-file", required=True)
    p.add_argument("--top", type=int, default=5000)
    p.add_argument("--k", type=float, default=2.0)
    p.add_argument("--b", type=float, default=0.8)
    p.add_argument("--clamp-idf", action="store_true")
    p.add_argument("--stoplist")
    p.add_argument("--mode", choices=["unicode-words", "whitespace"],
                   default="unicode-words")
    p.add_argument("--keep-case", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_index_query)
    p = sub_index.add_parser("dump")
    p.add_argument("--idx", required=True)
    p.set_defaults(func=cmd_index_dump)

    p_lm = sub.add_parser("lm", help="train n-gram language models")
    sub_lm = p_lm.add_subparsers(dest="lm_command", required=True)
    p = sub_lm.add_parser("train")
    p.add_argument("--docs", required=True)
    p.add_argument("--vocab-cap", type=int, default=20000)
    p.add_argument("--order", type=int, choices=[2, 3], default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lm_train)

    p_eval = sub.add_parser("eval", help="OOV rate, perplexity, word error rate")
    sub_eval = p_eval.add_subparsers(dest="eval_command", required=True)
    p = sub_eval.add_parser("oov")
    p.add_argument("--model", required=True)
    p.add_argument("--transcript", required=True)
    p.set_defaults(func=cmd_eval_oov)
    p = sub_eval.add_parser("pp")
    p.add_argument("--model", required=True)
    p.add_argument("--transcript", required=True)
    p.add_argument("--skip-oov", action="store_true")
    p.set_defaults(func=cmd_eval_pp)
    p = sub_eval.add_parser("wer")
    p.add_argument("--reference", required=True)
    p.add_argument("--hypothesis", required=True)
    p.add_argument("--global", dest="global_align", action="store_true")
    p.add_argument("--strip-fillers")
    p.set_defaults(func=cmd_eval_wer)

    p_sim = sub.add_parser("sim", help="noisy-channel retrieval simulation")
    sub_sim = p_sim.add_subparsers(dest="sim_command", required=True)
    p = sub_sim.add_parser("corrupt")
    p.add_argument("--input", required=True)
    p.add_argument("--wer", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sim_corrupt)
    p = sub_sim.add_parser("bench")
    p.add_argument("--modes", default="keyword,sentence,paragraph")
    p.add_argument("--wer", default="0,20,40")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the synthetic segment corpus")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sim_bench)

    p_pipe = sub.add_parser("pipeline", help="run the full adaptation experiment")
    sub_pipe = p_pipe.add_subparsers(dest="pipeline_command", required=True)
    p = sub_pipe.add_parser("run")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_pipeline_run)
    p = sub_pipe.add_parser("validate")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_pipeline_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
