"""``nestweak`` command line: one subcommand per pipeline stage.

Every output carries a provenance block (tool version, command, seed,
parameters and the sha256 of every input) so that a chain of runs can be
checked end to end. Outputs contain no timestamps: identical inputs, flags
and seeds give byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .conllu import attach_dependencies, read_conllu
from .corpus import Corpus, container_counts, corpus_stats, flatten, is_flat
from .corruption import (
    POSITIONS,
    STRATEGIES,
    SYMBOL_KINDS,
    CorruptionConfig,
    build_pseudo_nested,
    emit_fold_datasets,
    make_folds,
    read_records,
    remap_predictions,
    write_records,
)
from .errors import DocMismatch, InvalidFlag, NestweakError, NotFlat
from .evaluation import evaluate
from .formats import dumps_corpus, read_brat_dir, read_jsonl, write_brat_dir
from .inclusions import build_surface_index, extract_inclusions, score_inclusions
from .lemmas import EMPTY, LemmaDictionary
from .neutralization import FlipStats, format_span_labels, neutralize_corpus, weight_summary, with_inclusion_positives

log = logging.getLogger("nestweak")

COMMANDS = ("convert", "flatten", "stats", "inclusions", "corrupt", "remap", "pseudo-merge", "neutralize", "eval", "llm")
# parameters that never influence output content
_NON_PARAMS = {"func", "config", "log_level", "workers", "command", "llm_command"}


class _Parser(argparse.ArgumentParser):
    """Reports usage errors as a structured line on stderr before exiting with status 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        kind = "UnknownCommand" if "invalid choice" in message and "command" in message else "InvalidFlag"
        _report_error(kind, message)
        raise SystemExit(2)


def _report_error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}, ensure_ascii=False), file=sys.stderr)


# ---------------------------------------------------------------- provenance

def file_sha256(path) -> str:
    p = Path(path)
    if p.is_dir():
        h = hashlib.sha256()
        for f in sorted(q for q in p.rglob("*") if q.is_file()):
            h.update(f.relative_to(p).as_posix().encode("utf-8") + b"\0")
            h.update(file_sha256(f).encode("ascii"))
        return h.hexdigest()
    h = hashlib.sha256()
    with open(p, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def provenance(args, inputs: dict) -> dict:
    """``inputs`` maps a flag name to a path or a list of paths (``None`` entries are skipped)."""
    hashes = {}
    for name, value in inputs.items():
        if value is None:
            continue
        if isinstance(value, (list, tuple)):
            hashes[name] = [file_sha256(v) for v in value]
        else:
            hashes[name] = file_sha256(value)
    params = {k: v for k, v in sorted(vars(args).items()) if k not in _NON_PARAMS}
    command = args.command if not getattr(args, "llm_command", None) else f"llm {args.llm_command}"
    return {
        "tool": "nestweak",
        "version": __version__,
        "command": command,
        "seed": args.seed,
        "params": json.loads(json.dumps(params, default=str)),
        "inputs": hashes,
    }


def _emit(text: str, output: Optional[str]) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    Path(output).parent.mkdir(parents=True, exist_ok=True)
    with open(output, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _emit_corpus(corpus: Corpus, output: Optional[str], prov: dict) -> None:
    _emit(dumps_corpus(corpus, extra_meta={"provenance": prov}), output)


def _emit_json(obj: dict, output: Optional[str]) -> None:
    _emit(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n", output)


def _text_with_provenance(text: str, prov: dict) -> str:
    return f"# provenance: {json.dumps(prov, ensure_ascii=False, sort_keys=True)}\n{text.rstrip()}\n"


def _lemmas(path: Optional[str]) -> LemmaDictionary:
    return LemmaDictionary.load(path) if path else EMPTY


# ---------------------------------------------------------------- commands

def cmd_convert(args) -> int:
    if args.from_ == "brat":
        corpus = read_brat_dir(args.input, args.split, args.offsets, args.boundaries)
    else:
        corpus = read_jsonl(args.input, args.split)
    if args.conllu:
        corpus = attach_dependencies(corpus, read_conllu(args.conllu))
    prov = provenance(args, {"input": args.input, "conllu": args.conllu})
    if args.to == "brat":
        if args.output in (None, "-"):
            raise InvalidFlag("--to brat needs --output DIR")
        write_brat_dir(corpus, args.output)
        _emit_json({"provenance": prov}, str(Path(args.output) / "provenance.json"))
    else:
        _emit_corpus(corpus, args.output, prov)
    log.info("converted %d documents, %d mentions", len(corpus.documents), corpus.mention_count)
    return 0


def cmd_flatten(args) -> int:
    corpus = read_jsonl(args.input)
    flat = flatten(corpus, allow_crossing=args.allow_crossing)
    log.info("kept %d of %d mentions", flat.mention_count, corpus.mention_count)
    _emit_corpus(flat, args.output, provenance(args, {"input": args.input}))
    return 0


def cmd_stats(args) -> int:
    stats = corpus_stats(read_jsonl(args.input))
    prov = provenance(args, {"input": args.input})
    if args.format == "json":
        _emit_json({"provenance": prov, **stats.to_dict()}, args.output)
    else:
        _emit(_text_with_provenance(stats.format_text(), prov), args.output)
    return 0


def cmd_inclusions(args) -> int:
    corpus = read_jsonl(args.input)
    lemmas = _lemmas(args.dict)
    mode = "lemmatized" if args.mode == "lemma" else "exact"
    if mode == "lemmatized" and args.dict is None:
        log.warning("lemma mode without --dict: tokens are only case-folded")
    index_source = read_jsonl(args.index) if args.index else corpus
    index = build_surface_index(index_source, lemmas)
    augmented = extract_inclusions(corpus, index, mode)
    prov = provenance(args, {"input": args.input, "index": args.index, "dict": args.dict, "score_against": args.score_against})
    _emit_corpus(augmented, args.output, prov)
    if args.score_against:
        report = score_inclusions(augmented, read_jsonl(args.score_against))
        if args.report:
            _emit_json({"provenance": prov, **report.to_dict()}, args.report)
        target = sys.stderr if args.output in (None, "-") else sys.stdout
        print(report.format_text(), file=target)
    elif args.report:
        raise InvalidFlag("--report needs --score-against")
    return 0


def cmd_corrupt(args) -> int:
    corpus = read_jsonl(args.input)
    if args.conllu:
        corpus = attach_dependencies(corpus, read_conllu(args.conllu))
    config = CorruptionConfig(
        symbol_kind=args.symbol,
        position=args.position,
        strategy=args.strategy,
        folds=args.folds,
        min_words=args.min_words,
        seed=args.seed,
        symbol_length=args.symbol_length,
        script=args.script,
    )
    plan = make_folds(corpus, config.folds, config.seed)
    prov = provenance(args, {"input": args.input, "conllu": args.conllu})
    out = Path(args.output_dir)
    for fold in emit_fold_datasets(corpus, config, plan):
        d = out / f"fold{fold.fold}"
        d.mkdir(parents=True, exist_ok=True)
        _emit_corpus(fold.train, str(d / "train.jsonl"), prov)
        _emit_corpus(fold.predict, str(d / "predict.jsonl"), prov)
        records = fold.train_records or fold.predict_records
        write_records(records, d / "records.jsonl", {"provenance": prov, "side": "train" if fold.train_records else "predict"})
    _emit_json({
        "provenance": prov,
        "folds": plan.folds,
        "sizes": plan.sizes(),
        "assignments": dict(sorted(plan.assignments.items())),
    }, str(out / "plan.json"))
    return 0


def cmd_remap(args) -> int:
    preds = read_jsonl(args.pred)
    records = {}
    for path in args.records:
        records.update(read_records(path))
    remapped = remap_predictions(preds, records, args.passthrough_missing)
    log.info("dropped %d predictions overlapping edits", remapped.metadata["remap"]["dropped"])
    _emit_corpus(remapped, args.output, provenance(args, {"pred": args.pred, "records": args.records}))
    return 0


def _union(corpora: Sequence[Corpus]) -> Corpus:
    docs = {}
    for c in corpora:
        for d in c:
            if d.doc_id in docs:
                if docs[d.doc_id].text != d.text:
                    raise DocMismatch(f"{d.doc_id}: prediction files disagree on the text")
                d = docs[d.doc_id].with_mentions(docs[d.doc_id].mentions + d.mentions)
            docs[d.doc_id] = d
    return Corpus("predictions", list(docs.values()))


def cmd_pseudo_merge(args) -> int:
    flat = read_jsonl(args.flat)
    merged = build_pseudo_nested(flat, _union([read_jsonl(p) for p in args.pred]))
    log.info("added %d pseudo-nested mentions", merged.metadata["pseudo_nested"]["kept"])
    _emit_corpus(merged, args.output, provenance(args, {"flat": args.flat, "pred": args.pred}))
    return 0


def _inclusion_pairs(path: str, flat: Corpus):
    """Mentions nested inside another mention of the same document, as ``(doc_id, mention)``."""
    flat_docs = flat.by_id()
    for doc in read_jsonl(path):
        base = flat_docs.get(doc.doc_id)
        if base is None or base.text != doc.text:
            raise DocMismatch(f"{doc.doc_id}: inclusion file does not match the input corpus")
        depth = container_counts(doc.mentions)
        for m in doc.mentions:
            if depth[m.span]:
                yield doc.doc_id, m


def cmd_neutralize(args) -> int:
    corpus = read_jsonl(args.input)
    for doc in corpus:
        if not is_flat(doc):
            raise NotFlat(f"document {doc.doc_id!r} is not flat; run 'nestweak flatten' first")
    mode = "content_aware" if args.mode == "content" else "geometric"
    match = "lemmatized" if args.match == "lemma" else "exact"
    index = build_surface_index(read_jsonl(args.index) if args.index else corpus, _lemmas(args.dict))
    labels = neutralize_corpus(corpus, index, mode, match, args.max_len, args.sentences == "heuristic")
    if args.with_inclusions:
        stats = FlipStats()
        labels = with_inclusion_positives(labels, _inclusion_pairs(args.with_inclusions, corpus), stats)
        log.info("inclusion flips: %s", stats)
    log.info("labels: %s", weight_summary(labels))
    prov = provenance(args, {"input": args.input, "index": args.index, "dict": args.dict, "with_inclusions": args.with_inclusions})
    header = "provenance: " + json.dumps(prov, ensure_ascii=False, sort_keys=True)
    header += "\ndoc_id\tstart\tend\tlabel\ttype\treason"
    _emit(format_span_labels(labels, header), args.output)
    return 0


def cmd_eval(args) -> int:
    report = evaluate(read_jsonl(args.gold), read_jsonl(args.pred), args.strict, args.empty_score)
    prov = provenance(args, {"gold": args.gold, "pred": args.pred})
    if args.report:
        _emit_json({"provenance": prov, **report.to_dict()}, args.report)
    if args.format == "json":
        _emit_json({"provenance": prov, **report.to_dict()}, args.output)
    else:
        _emit(_text_with_provenance(report.format_text(), prov), args.output)
    return 0


def _endpoint(args):
    from .llm.client import MockEndpoint, OpenAIEndpoint, ReplayEndpoint

    chosen = [x for x in (args.endpoint, args.mock, args.replay) if x]
    if len(chosen) != 1:
        raise InvalidFlag("exactly one of --endpoint, --mock, --replay is required")
    if args.endpoint:
        return OpenAIEndpoint(args.endpoint, args.api_key_env, args.timeout)
    if args.mock:
        return MockEndpoint.from_file(args.mock)
    return ReplayEndpoint(args.replay)


def _prompt_spec(args, need_patterns: bool):
    from .llm.prompts import PromptSpec, load_definitions, load_nesting_patterns, load_template

    patterns = None
    if need_patterns or args.nesting_patterns or args.patterns_file:
        patterns = load_nesting_patterns(args.patterns_file)
    definitions = None
    if args.definitions or args.definitions_file:
        definitions = load_definitions(args.definitions_file)
    return PromptSpec(
        template=load_template(args.template),
        shots=args.shots,
        selection=args.select,
        definitions=definitions,
        nesting_patterns=patterns,
        seed=args.seed,
        entwise_top=args.entwise_top,
    )


def _run_options(args):
    from .llm.client import RetryPolicy, TranscriptStore
    from .llm.pipeline import RunOptions

    return RunOptions(
        model=args.model,
        unit=getattr(args, "unit", "sentence"),
        occurrence=args.occurrence,
        workers=args.workers,
        temperature=args.temperature,
        repetition_penalty=args.repetition_penalty,
        top_p=args.top_p,
        max_tokens=args.max_tokens,
        retry=RetryPolicy(args.retries, args.backoff),
        transcript=TranscriptStore(args.transcript) if args.transcript else None,
    )


def _llm_inputs(args) -> dict:
    return {
        "input": args.input, "train": getattr(args, "train", None), "dict": args.dict,
        "template": args.template, "definitions_file": args.definitions_file,
        "patterns_file": args.patterns_file, "mock": args.mock, "replay": args.replay,
    }


def cmd_llm_pure(args) -> int:
    from .llm.pipeline import run_pure
    from .llm.prompts import select_examples

    test = read_jsonl(args.input)
    spec = _prompt_spec(args, need_patterns=False)
    examples = None
    if spec.shots:
        if not args.train:
            raise InvalidFlag("--shots > 0 needs --train")
        examples = select_examples(read_jsonl(args.train), spec, _lemmas(args.dict))
    preds = run_pure(test, spec, _endpoint(args), examples, _run_options(args))
    _emit_corpus(preds, args.output, provenance(args, _llm_inputs(args)))
    return 0


def cmd_llm_hybrid(args) -> int:
    from .llm.pipeline import run_hybrid

    outer = read_jsonl(args.input)
    spec = _prompt_spec(args, need_patterns=True)
    merged = run_hybrid(
        outer, spec, _endpoint(args), _run_options(args),
        patterns=args.patterns, lemma_match=args.lemma_match, lemmas=_lemmas(args.dict),
    )
    _emit_corpus(merged, args.output, provenance(args, _llm_inputs(args)))
    return 0


# ---------------------------------------------------------------- parser

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("shared options")
    g.add_argument("--config", metavar="FILE", help="key=value file; flags given on the command line win")
    g.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    g.add_argument("--workers", type=int, default=1, help="worker pool size for parallel requests (default: 1)")
    g.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                   help="stderr log level (default: WARNING)")
    return p


def _llm_common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--input", required=True, help="JSONL corpus (test texts, or outer predictions for hybrid)")
    p.add_argument("--output", default="-", help="predicted JSONL corpus (default: stdout)")
    src = p.add_argument_group("endpoint (exactly one)")
    src.add_argument("--endpoint", help="base URL of an OpenAI-compatible API")
    src.add_argument("--mock", help="JSON fixture file for the deterministic mock endpoint")
    src.add_argument("--replay", help="transcript JSONL to replay instead of calling a model")
    p.add_argument("--api-key-env", default="OPENAI_API_KEY", help="environment variable holding the API key")
    p.add_argument("--timeout", type=float, default=600.0, help="HTTP timeout in seconds")
    p.add_argument("--model", default="default", help="model name sent with each request")
    p.add_argument("--transcript", help="append every request/response to this JSONL file")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--repetition-penalty", type=float, default=1.05)
    p.add_argument("--top-p", type=float, default=1.0)
    p.add_argument("--max-tokens", type=int, default=5000)
    p.add_argument("--retries", type=int, default=3, help="attempts per request (default: 3)")
    p.add_argument("--backoff", type=float, default=1.0, help="initial retry delay in seconds, doubled per attempt")
    p.add_argument("--occurrence", choices=["first", "all"], default="first",
                   help="locate the first or every occurrence of an answer string")
    p.add_argument("--template", help="replacement for the shipped base prompt")
    p.add_argument("--definitions", action="store_true", help="add the shipped entity type definitions")
    p.add_argument("--definitions-file", help="TSV of TYPE<TAB>definition to add instead of the shipped one")
    p.add_argument("--nesting-patterns", action="store_true", help="add the shipped nesting patterns")
    p.add_argument("--patterns-file", help="nesting pattern text to use instead of the shipped one")
    p.add_argument("--dict", help="lemma dictionary TSV (surface<TAB>lemma)")
    p.add_argument("--shots", type=int, choices=[0, 1, 5], default=0, help="few-shot examples (default: 0)")
    p.add_argument("--select", choices=["random", "mfe", "mfe_entwise", "mfe_entwise_sent"], default="mfe",
                   help="example selection strategy (default: mfe)")
    p.add_argument("--entwise-top", type=int, default=3, help="entities listed per type for entwise selection")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="nestweak", description="Weak supervision, LLM prompting and evaluation for nested NER.")
    parser.add_argument("--version", action="version", version=f"nestweak {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("convert", parents=[common], help="BRAT <-> JSONL conversion")
    p.add_argument("--from", dest="from_", choices=["brat", "jsonl"], default="brat", help="input format")
    p.add_argument("--to", choices=["jsonl", "brat"], default="jsonl", help="output format")
    p.add_argument("--input", required=True, help="BRAT directory or JSONL file")
    p.add_argument("--output", default="-", help="JSONL file or BRAT directory (default: stdout)")
    p.add_argument("--offsets", choices=["char", "byte"], default="char", help="BRAT offset unit (default: char)")
    p.add_argument("--boundaries", choices=["strict", "lenient"], default="strict",
                   help="reject (strict) or accept (lenient) BRAT spans that cut through a word")
    p.add_argument("--split", help="split name stored in the output (default: input name)")
    p.add_argument("--conllu", help="CoNLL-U file whose dependency heads are attached to mentions")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("flatten", parents=[common], help="keep only outermost mentions")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-")
    p.add_argument("--allow-crossing", action="store_true", help="keep going when mentions cross")
    p.set_defaults(func=cmd_flatten)

    p = sub.add_parser("stats", parents=[common], help="mention counts, depth and type histograms")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("inclusions", parents=[common], help="add pseudo-nested inclusion mentions")
    p.add_argument("--input", required=True, help="flat JSONL corpus")
    p.add_argument("--output", default="-", help="augmented JSONL corpus (default: stdout)")
    p.add_argument("--mode", choices=["exact", "lemma"], default="exact")
    p.add_argument("--dict", help="lemma dictionary TSV (surface<TAB>lemma)")
    p.add_argument("--index", help="corpus the surface index is built from (default: --input)")
    p.add_argument("--score-against", help="gold nested JSONL corpus to score the inclusions against")
    p.add_argument("--report", help="machine-readable score report (JSON)")
    p.set_defaults(func=cmd_inclusions)

    p = sub.add_parser("corrupt", parents=[common], help="corrupted fold datasets for pseudo-nesting")
    p.add_argument("--input", required=True, help="flat JSONL corpus")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--symbol", choices=SYMBOL_KINDS, default="letters")
    p.add_argument("--position", choices=POSITIONS, default="end")
    p.add_argument("--strategy", choices=STRATEGIES, default="early")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--min-words", type=int, default=3, help="shortest mention (in tokens) that is corrupted")
    p.add_argument("--symbol-length", type=int, default=3)
    p.add_argument("--script", choices=["auto", "latin", "cyrillic"], default="auto",
                   help="consonant alphabet for letter symbols")
    p.add_argument("--conllu", help="dependency layer, required by --position syntax")
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("remap", parents=[common], help="map predictions on corrupted text back to the original")
    p.add_argument("--pred", required=True, help="predictions JSONL on corrupted text")
    p.add_argument("--records", required=True, nargs="+", help="records.jsonl file(s) written by 'corrupt'")
    p.add_argument("--output", default="-")
    p.add_argument("--passthrough-missing", action="store_true",
                   help="copy documents without a record unchanged instead of failing")
    p.set_defaults(func=cmd_remap)

    p = sub.add_parser("pseudo-merge", parents=[common], help="merge remapped predictions into the flat corpus")
    p.add_argument("--flat", required=True)
    p.add_argument("--pred", required=True, nargs="+", help="remapped prediction JSONL file(s)")
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_pseudo_merge)

    p = sub.add_parser("neutralize", parents=[common], help="Positive/Negative/Neutral span labels")
    p.add_argument("--input", required=True, help="flat JSONL corpus")
    p.add_argument("--output", default="-", help="span label TSV (default: stdout)")
    p.add_argument("--mode", choices=["content", "geometric"], default="content")
    p.add_argument("--match", choices=["exact", "lemma"], default="exact", help="content-aware key matching")
    p.add_argument("--dict", help="lemma dictionary TSV (surface<TAB>lemma)")
    p.add_argument("--index", help="corpus the surface index is built from (default: --input)")
    p.add_argument("--with-inclusions", help="JSONL corpus whose nested mentions become Positive spans")
    p.add_argument("--max-len", type=int, default=30, help="longest candidate span in tokens (default: 30)")
    p.add_argument("--sentences", choices=["heuristic", "none"], default="heuristic",
                   help="enumerate spans within heuristic sentences or whole documents")
    p.set_defaults(func=cmd_neutralize)

    p = sub.add_parser("eval", parents=[common], help="overall/inner/outer precision, recall and F1")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--strict", action="store_true", help="equal spans do not contain each other")
    p.add_argument("--empty-score", type=float, default=1.0,
                   help="score of a category with neither gold nor predicted entities (default: 1.0)")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--output", default="-")
    p.add_argument("--report", help="also write the JSON report here")
    p.set_defaults(func=cmd_eval)

    llm = sub.add_parser("llm", help="LLM extraction (pure or hybrid)")
    llm_sub = llm.add_subparsers(dest="llm_command", metavar="mode", parser_class=_Parser)
    llm_sub.required = True
    p = llm_sub.add_parser("pure", parents=[common, _llm_common()], help="LLM extracts all entities")
    p.add_argument("--train", help="training JSONL corpus for few-shot examples")
    p.add_argument("--unit", choices=["sentence", "document"], default="sentence", help="text sent per request")
    p.set_defaults(func=cmd_llm_pure)
    p = llm_sub.add_parser("hybrid", parents=[common, _llm_common()], help="LLM finds entities nested in outer predictions")
    p.add_argument("--patterns", choices=["type_specific", "full"], default="type_specific")
    p.add_argument("--lemma-match", action="store_true", help="match answers missing from the span by canonical form")
    p.set_defaults(func=cmd_llm_hybrid)

    parser._leaf_parsers = {**{k: v for k, v in sub.choices.items() if k != "llm"},
                            "llm pure": llm_sub.choices["pure"], "llm hybrid": llm_sub.choices["hybrid"]}
    return parser


# ---------------------------------------------------------------- config

def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` comments; dashes in keys are read as underscores."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidFlag(f"{path}: line {lineno}: expected key=value")
            key, value = (x.strip() for x in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _config_defaults(leaf: argparse.ArgumentParser, config: dict[str, str]) -> dict:
    actions = {a.dest: a for a in leaf._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, raw in config.items():
        action = actions.get(key)
        if action is None:
            raise InvalidFlag(f"unknown configuration key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise InvalidFlag(f"{key}: expected a boolean, got {raw!r}")
            defaults[key] = raw.lower() in ("true", "1", "yes")
            continue
        items = raw.split() if action.nargs in ("+", "*") else [raw]
        try:
            values = [action.type(v) if action.type else v for v in items]
        except (TypeError, ValueError) as exc:
            raise InvalidFlag(f"{key}: {exc}") from exc
        if action.choices is not None and any(v not in action.choices for v in values):
            raise InvalidFlag(f"{key}: {raw!r} is not one of {list(action.choices)}")
        defaults[key] = values if action.nargs in ("+", "*") else values[0]
        action.required = False
    return defaults


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        words = [a for a in argv if not a.startswith("-")]
        name = words[0] if words else ""
        if name == "llm" and len(words) > 1:
            name = f"llm {words[1]}"
        leaf = parser._leaf_parsers.get(name)
        if leaf is not None:
            leaf.set_defaults(**_config_defaults(leaf, read_config(known.config)))
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except (InvalidFlag, OSError) as exc:
        _report_error(type(exc).__name__, str(exc))
        return 2
    logging.basicConfig(level=args.log_level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(args.log_level)
    try:
        return args.func(args) or 0
    except InvalidFlag as exc:
        _report_error("InvalidFlag", str(exc))
        return 2
    except (NestweakError, OSError, ValueError) as exc:
        _report_error(type(exc).__name__, str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
