"""Command-line entry point: ``sciextract <subcommand> ...``.

Failures print one line ``error: stage=<stage> cause=<message>`` to
stderr and exit with status 1.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

from .corpus import AnnotatedDocument, read_annotations, read_text_dir, write_annotations
from .dictionary import (
    dictionary_from_ranked,
    load_dictionary,
    mine_ngrams,
    rank_by_tfidf,
    save_dictionary,
    write_ranked,
)
from .evaluation import (
    linking_inputs,
    linking_metrics,
    relation_metrics,
    term_metrics_exact,
    term_metrics_partial,
)
from .kb import load_embeddings, load_kb
from .linker import MODES, LinkerConfig, link
from .relations import candidate_pairs, extract_all, load_patterns
from .term_tagger import (
    MERGE_POLICIES,
    CommandTagger,
    DictionaryTagger,
    WeakSupervisionConfig,
    dump_bio,
    load_ws_config,
    run_weak_supervision,
)

logger = logging.getLogger("sciextract")

STAGES = ("tag", "relate", "link", "evaluate")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage={stage} cause={cause}")


# --- shared helpers --------------------------------------------------------


def load_corpus(path, split_hyphens: bool = True) -> list[AnnotatedDocument]:
    """A directory of ``*.txt`` files or a JSONL annotation file."""
    path = Path(path)
    if path.is_dir():
        return [AnnotatedDocument(d) for d in read_text_dir(path, split_hyphens=split_hyphens)]
    return read_annotations(path)


def commit(tmp: Path, final: Path) -> None:
    os.replace(tmp, final)


def write_stage(docs, path: Path) -> None:
    """Write to ``PATH.partial`` first; rename only when complete."""
    tmp = path.with_name(path.name + ".partial")
    write_annotations(docs, tmp)
    commit(tmp, path)


def parse_distance(value) -> float:
    if isinstance(value, str) and value.lower() in ("inf", "infinity", "none"):
        return math.inf
    return float(value)


def tag_corpus(docs, dictionary, ws: WeakSupervisionConfig, tagger_cmd: Optional[str] = None):
    tagger = CommandTagger(tagger_cmd) if tagger_cmd else DictionaryTagger(dictionary)
    result = run_weak_supervision([d.document for d in docs], dictionary, tagger, ws)
    tagged = {ad.id: ad.terms for ad in result.documents}
    return [AnnotatedDocument(d.document, tagged[d.id], d.relations, d.links) for d in docs], result.stats


def relate_corpus(docs, patterns, sample_rate=1.0, max_distance=math.inf, seed=0, emit_negatives=False):
    """Yield each document with its extracted relations.

    The sampling RNG is seeded per document so results do not depend on
    corpus order.
    """
    for ad in docs:
        pairs = candidate_pairs(ad, max_distance, sample_rate, f"{seed}:{ad.id}")
        rels = extract_all(ad, patterns, pairs, keep_negative=emit_negatives)
        yield AnnotatedDocument(ad.document, ad.terms, tuple(rels), ad.links)


def link_corpus(docs, kb, emb, config: LinkerConfig):
    for ad in docs:
        yield AnnotatedDocument(ad.document, ad.terms, ad.relations, tuple(link(ad, kb, emb, config)))


def run_stage(results, path: Path) -> list[AnnotatedDocument]:
    """Drain ``results`` into ``path``.

    If a document fails, the ones already finished are left in
    ``PATH.partial`` and the error propagates.
    """
    done = []
    try:
        for ad in results:
            done.append(ad)
    except Exception:
        write_annotations(done, path.with_name(path.name + ".partial"))
        raise
    write_stage(done, path)
    return done


def evaluate_corpus(kind: str, gold, pred, average="macro", labels=None, all_pairs=False) -> dict:
    if kind == "terms":
        exact, partial = term_metrics_exact(gold, pred), term_metrics_partial(gold, pred)
        report = {f"exact_{k}": v for k, v in exact.to_dict().items()}
        report.update({f"partial_{k}": v for k, v in partial.to_dict().items()})
        return report
    if kind == "relations":
        kwargs = {"average": average, "all_pairs": all_pairs}
        if labels:
            kwargs["labels"] = labels
        return relation_metrics(gold, pred, **kwargs).to_dict()
    if kind == "links":
        return linking_metrics(*linking_inputs(gold, pred)).to_dict()
    raise ValueError(f"unknown evaluation kind {kind!r}")


def dump_json(obj, path=None) -> None:
    text = json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --- pipeline config -------------------------------------------------------


@dataclass
class PipelineConfig:
    corpus_in: Optional[str] = None
    out_dir: str = "out"
    dict: Optional[str] = None
    kb: Optional[str] = None
    embeddings: Optional[str] = None
    patterns: Optional[str] = None
    gold: Optional[str] = None
    stages: tuple = STAGES
    repair: bool = True
    split_hyphens: bool = True
    merge_policy: str = "union_prefer_longer"
    iterations: int = 1
    tagger_cmd: Optional[str] = None
    mode: str = "weighted_cosine"
    threshold: float = 0.0
    context: int = 5
    max_ngram: int = 3
    sample_rate: float = 1.0
    max_distance: float = math.inf
    seed: int = 0
    emit_negatives: bool = False
    average: str = "macro"

    PATH_KEYS = ("corpus_in", "out_dir", "dict", "kb", "embeddings", "patterns", "gold")

    @classmethod
    def from_mapping(cls, values: dict, base: Optional[Path] = None) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values = dict(values)
        if base is not None:
            for key in cls.PATH_KEYS:
                if values.get(key) and not os.path.isabs(values[key]):
                    values[key] = str(base / values[key])
        if isinstance(values.get("stages"), str):
            values["stages"] = tuple(s.strip() for s in values["stages"].split(",") if s.strip())
        elif "stages" in values:
            values["stages"] = tuple(values["stages"])
        if "max_distance" in values:
            values["max_distance"] = parse_distance(values["max_distance"])
        return cls(**values)

    def validate(self) -> None:
        bad = [s for s in self.stages if s not in STAGES]
        if bad:
            raise ValueError(f"unknown stages: {', '.join(bad)}")
        if self.merge_policy not in MERGE_POLICIES:
            raise ValueError(f"unknown merge_policy {self.merge_policy!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 <= self.sample_rate <= 1.0:
            raise ValueError("sample_rate must lie in [0, 1]")
        if self.max_distance < 0:
            raise ValueError("max_distance must be >= 0")
        if not -1.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [-1, 1]")
        if self.context < 0 or self.max_ngram < 1:
            raise ValueError("context must be >= 0 and max_ngram >= 1")
        required = [("corpus_in", True)]
        required.append(("dict", "tag" in self.stages))
        required.append(("kb", "link" in self.stages))
        required.append(("embeddings", "link" in self.stages and self.mode == "weighted_cosine"))
        for key, needed in required:
            value = getattr(self, key)
            if needed and not value:
                raise ValueError(f"config key {key!r} is required for stages {','.join(self.stages)}")
            if value and not os.path.exists(value):
                raise ValueError(f"{key} path does not exist: {value}")
        for key in ("patterns", "gold"):
            value = getattr(self, key)
            if value and not os.path.exists(value):
                raise ValueError(f"{key} path does not exist: {value}")


def run_pipeline(config: PipelineConfig) -> dict:
    """Run the enabled stages in order, persisting each stage's output.

    Returns a dict mapping artifact names to written paths.
    """
    stage = "config"
    try:
        config.validate()
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = {}

        stage = "load"
        docs = load_corpus(config.corpus_in, config.split_hyphens)

        if "tag" in config.stages:
            stage = "tag"
            dictionary = load_dictionary(config.dict, split_hyphens=config.split_hyphens)
            ws = WeakSupervisionConfig(config.iterations, config.merge_policy, config.repair)
            docs, stats = tag_corpus(docs, dictionary, ws, config.tagger_cmd)
            for s in stats:
                logger.info("tag iteration %d: %d terms", s.iteration, s.terms)
            written["terms"] = out_dir / "terms.jsonl"
            write_stage(docs, written["terms"])

        if "relate" in config.stages:
            stage = "relate"
            patterns = load_patterns(config.patterns)
            written["relations"] = out_dir / "relations.jsonl"
            docs = run_stage(
                relate_corpus(
                    docs, patterns, config.sample_rate, config.max_distance, config.seed, config.emit_negatives
                ),
                written["relations"],
            )

        if "link" in config.stages:
            stage = "link"
            kb = load_kb(config.kb)
            emb = load_embeddings(config.embeddings) if config.mode == "weighted_cosine" else None
            lcfg = LinkerConfig(config.mode, config.threshold, config.context, config.max_ngram)
            written["links"] = out_dir / "links.jsonl"
            docs = run_stage(link_corpus(docs, kb, emb, lcfg), written["links"])

        stage = "merge"
        written["annotations"] = out_dir / "annotations.jsonl"
        write_stage(docs, written["annotations"])

        if "evaluate" in config.stages and config.gold:
            stage = "evaluate"
            gold = read_annotations(config.gold)
            gold_by_id = {g.id: g for g in gold}
            missing = [d.id for d in docs if d.id not in gold_by_id]
            if missing:
                raise ValueError(f"documents without gold annotations: {', '.join(missing)}")
            gold = [gold_by_id[d.id] for d in docs]
            report = {"terms": evaluate_corpus("terms", gold, docs)}
            if "relate" in config.stages:
                report["relations"] = evaluate_corpus("relations", gold, docs, config.average)
            if "link" in config.stages:
                report["links"] = evaluate_corpus("links", gold, docs)
            written["metrics"] = out_dir / "metrics.json"
            tmp = written["metrics"].with_name("metrics.json.partial")
            dump_json(report, tmp)
            commit(tmp, written["metrics"])
        return written
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc


# --- argument parsing ------------------------------------------------------


def _add_corpus_opts(p):
    p.add_argument("--in", dest="inp", required=True, help="directory of .txt files or a JSONL annotation file")
    p.add_argument("--out", required=True, help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sciextract", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine-dict", help="rank corpus n-grams by TF-IDF")
    _add_corpus_opts(p)
    p.add_argument("--n", default="2,3,4", help="comma-separated n-gram sizes (default 2,3,4)")
    p.add_argument("--surface", action="store_true", help="count surface forms instead of norms")
    p.add_argument("--top", type=int, default=None, help="keep only the top K n-grams")
    p.add_argument("--dict-out", default=None, help="also write the kept n-grams as a dictionary file")
    p.add_argument("--no-split-hyphens", action="store_true", help="keep hyphenated words as one token")

    p = sub.add_parser("tag", help="dictionary/weak-supervision term tagging")
    p.add_argument("--dict", required=True, help="term dictionary, one term per line")
    _add_corpus_opts(p)
    p.add_argument("--no-repair", action="store_true", help="disable boundary repair heuristics")
    p.add_argument("--config", default=None, help="TOML file with iterations, merge_policy, tagger_cmd")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--merge-policy", choices=MERGE_POLICIES, default=None)
    p.add_argument("--tagger-cmd", default=None, help="external tagger command (see CommandTagger)")
    p.add_argument("--no-split-hyphens", action="store_true", help="keep hyphenated words as one token")
    p.add_argument("--bio", action="store_true", help="write CoNLL-style token/label lines instead of JSONL")

    p = sub.add_parser("relate", help="pattern-based relation extraction")
    p.add_argument("--patterns", default=None, help="pattern file (default: bundled starter patterns)")
    _add_corpus_opts(p)
    p.add_argument("--sample-rate", type=float, default=1.0, help="keep rate for unrelated pairs (default 1.0)")
    p.add_argument("--max-distance", type=parse_distance, default=math.inf,
                   help="max token gap for unrelated pairs (default inf)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit-negatives", action="store_true", help="also write NO-RELATION instances")

    p = sub.add_parser("link", help="link terms to knowledge-base entities")
    p.add_argument("--kb", required=True, help="KB dump (JSONL)")
    p.add_argument("--emb", default=None, help="word vectors (text format); required for weighted_cosine")
    _add_corpus_opts(p)
    p.add_argument("--mode", choices=MODES, default="weighted_cosine")
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--context", type=int, default=5, help="context tokens on each side (default 5)")
    p.add_argument("--max-ngram", type=int, default=3)

    p = sub.add_parser("evaluate", help="score predictions against gold annotations")
    p.add_argument("kind", choices=("terms", "relations", "links"))
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--report", default=None, help="write the JSON report here instead of stdout")
    p.add_argument("--average", choices=("macro", "micro"), default="macro")
    p.add_argument("--labels", default=None, help="comma-separated relation labels to evaluate")
    p.add_argument("--all-pairs", action="store_true",
                   help="treat unannotated same-sentence term pairs as NO-RELATION")

    p = sub.add_parser("pipeline", help="tag -> relate -> link -> evaluate")
    p.add_argument("--config", default=None, help="flat TOML config; flags override its keys")
    p.add_argument("--stages", default=None, help="comma-separated subset of " + ",".join(STAGES))
    p.add_argument("--in", dest="corpus_in", default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--dict", default=None)
    p.add_argument("--kb", default=None)
    p.add_argument("--emb", dest="embeddings", default=None)
    p.add_argument("--patterns", default=None)
    p.add_argument("--gold", default=None)
    p.add_argument("--no-repair", dest="repair", action="store_const", const=False, default=None)
    p.add_argument("--no-split-hyphens", dest="split_hyphens", action="store_const", const=False, default=None)
    p.add_argument("--merge-policy", choices=MERGE_POLICIES, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--tagger-cmd", default=None)
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--context", type=int, default=None)
    p.add_argument("--max-ngram", type=int, default=None)
    p.add_argument("--sample-rate", type=float, default=None)
    p.add_argument("--max-distance", type=parse_distance, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--emit-negatives", action="store_const", const=True, default=None)
    p.add_argument("--average", choices=("macro", "micro"), default=None)

    p = sub.add_parser("kb", help="inspect a KB dump")
    p.add_argument("action", choices=("validate", "stats"))
    p.add_argument("file")
    return parser


# --- subcommands -----------------------------------------------------------


def cmd_mine_dict(args) -> None:
    docs = [ad.document for ad in load_corpus(args.inp, not args.no_split_hyphens)]
    n_values = {int(x) for x in args.n.split(",") if x.strip()}
    ranked = rank_by_tfidf(mine_ngrams(docs, n_values, use_norms=not args.surface), len(docs))
    if args.top is not None:
        ranked = ranked[: args.top]
    write_ranked(ranked, args.out)
    if args.dict_out:
        save_dictionary(dictionary_from_ranked(ranked, max_ngram=max(n_values)), args.dict_out)


def cmd_tag(args) -> None:
    settings = load_ws_config(args.config) if args.config else {}
    unknown = set(settings) - {"iterations", "merge_policy", "tagger_cmd", "repair"}
    if unknown:
        raise ValueError(f"unknown tag config keys: {', '.join(sorted(unknown))}")
    for key in ("iterations", "merge_policy", "tagger_cmd"):
        value = getattr(args, key)
        if value is not None:
            settings[key] = value
    repair = settings.get("repair", True) and not args.no_repair
    ws = WeakSupervisionConfig(settings.get("iterations", 1), settings.get("merge_policy", "union_prefer_longer"), repair)
    split = not args.no_split_hyphens
    docs = load_corpus(args.inp, split)
    dictionary = load_dictionary(args.dict, split_hyphens=split)
    docs, _ = tag_corpus(docs, dictionary, ws, settings.get("tagger_cmd"))
    if args.bio:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            for ad in docs:
                fh.write(f"# {ad.id}\n{dump_bio(ad.document, ad.terms)}\n")
    else:
        write_annotations(docs, args.out)


def cmd_relate(args) -> None:
    patterns = load_patterns(args.patterns)
    docs = relate_corpus(
        load_corpus(args.inp), patterns, args.sample_rate, args.max_distance, args.seed, args.emit_negatives
    )
    write_annotations(list(docs), args.out)


def cmd_link(args) -> None:
    config = LinkerConfig(args.mode, args.threshold, args.context, args.max_ngram)
    if config.mode == "weighted_cosine" and not args.emb:
        raise ValueError("--emb is required for weighted_cosine mode")
    kb = load_kb(args.kb)
    emb = load_embeddings(args.emb) if args.emb else None
    write_annotations(list(link_corpus(load_corpus(args.inp), kb, emb, config)), args.out)


def cmd_evaluate(args) -> None:
    gold, pred = read_annotations(args.gold), read_annotations(args.pred)
    labels = [x.strip() for x in args.labels.split(",")] if args.labels else None
    dump_json(evaluate_corpus(args.kind, gold, pred, args.average, labels, args.all_pairs), args.report)


def cmd_pipeline(args) -> None:
    values = {}
    base = None
    if args.config:
        values = load_ws_config(args.config)
        base = Path(args.config).resolve().parent
    config = PipelineConfig.from_mapping(values, base)
    for f in fields(PipelineConfig):
        override = getattr(args, f.name, None)
        if override is not None:
            if f.name == "stages":
                override = tuple(s.strip() for s in override.split(",") if s.strip())
            setattr(config, f.name, override)
    written = run_pipeline(config)
    for name, path in written.items():
        print(f"{name}\t{path}")


def cmd_kb(args) -> None:
    store = load_kb(args.file)
    if args.action == "validate":
        print(f"ok\t{len(store)} entities")
    else:
        dump_json(store.stats())


COMMANDS = {
    "mine-dict": cmd_mine_dict,
    "tag": cmd_tag,
    "relate": cmd_relate,
    "link": cmd_link,
    "evaluate": cmd_evaluate,
    "pipeline": cmd_pipeline,
    "kb": cmd_kb,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        COMMANDS[args.command](args)
    except StageError as exc:
        print(f"error: stage={exc.stage} cause={_oneline(exc.cause)}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: stage={args.command} cause={_oneline(exc)}", file=sys.stderr)
        return 1
    return 0


def _oneline(exc) -> str:
    return " ".join(str(exc).split())


if __name__ == "__main__":
    sys.exit(main())
