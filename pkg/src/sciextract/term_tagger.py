"""Dictionary BIO tagging, boundary repair, annotation merging and the
weak-supervision loop.

The neural tagger of the original system is replaced by the
:class:`Tagger` protocol.  :class:`DictionaryTagger` is the default
plug; :class:`CommandTagger` delegates to an external program.
"""
from __future__ import annotations

import logging
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Protocol, Sequence

from .corpus import (
    AnnotatedDocument,
    Document,
    TermAnnotation,
    read_annotations,
    write_annotations,
)
from .dictionary import TermDictionary

logger = logging.getLogger(__name__)

PREPOSITIONS = frozenset(
    "в на с по для из к о об от при у за под над без до через".split()
)
MERGE_POLICIES = ("union_prefer_longer", "dictionary_priority", "model_priority")


def dictionary_tag(doc: Document, dictionary: TermDictionary, source: str = "dictionary") -> list[TermAnnotation]:
    """Greedy longest match, left to right, within each sentence."""
    norms = doc.norms
    out = []
    longest = dictionary.longest
    if not longest:
        return out
    for first, last in doc.sentences:
        i = first
        while i <= last:
            for n in range(min(longest, last - i + 1), 0, -1):
                if tuple(norms[i : i + n]) in dictionary:
                    out.append(TermAnnotation(i, i + n - 1, source))
                    i += n
                    break
            else:
                i += 1
    return out


def _ends_with_latin(doc: Document, term: TermAnnotation) -> bool:
    toks = doc.tokens
    if toks[term.last].is_latin_script:
        return True
    return (
        toks[term.last].surface == ")"
        and term.last - 2 >= term.first
        and toks[term.last - 1].is_latin_script
        and toks[term.last - 2].surface == "("
    )


def repair_boundaries(
    doc: Document,
    anns: Sequence[TermAnnotation],
    prepositions: Iterable[str] = PREPOSITIONS,
    extend_latin: bool = True,
) -> list[TermAnnotation]:
    """Fix common term-boundary errors.

    (a) Leading prepositions are dropped (a term made only of
        prepositions disappears).
    (b) A term that does not already end in Latin script absorbs the next
        token if it is Latin-script, or a following ``( WORD )`` group.
        Tokens already covered by another term or in the next sentence
        are never absorbed.
    """
    preps = frozenset(p.lower() for p in prepositions)
    toks = doc.tokens
    trimmed = []
    for t in sorted(anns, key=lambda a: a.first):
        first = t.first
        while first <= t.last and toks[first].surface.lower() in preps:
            first += 1
        if first > t.last:
            continue
        trimmed.append(t if first == t.first else replace(t, first=first))
    if not extend_latin:
        return trimmed

    covered = set()
    for t in trimmed:
        covered.update(range(t.first, t.last + 1))
    out = []
    for t in trimmed:
        if not _ends_with_latin(doc, t):
            sent_last = doc.sentences[doc.sentence_of(t.last)][1]
            nxt = t.last + 1
            new_last = None
            if nxt <= sent_last and nxt not in covered and toks[nxt].is_latin_script:
                new_last = nxt
            elif (
                nxt + 2 <= sent_last
                and toks[nxt].surface == "("
                and toks[nxt + 1].is_latin_script
                and toks[nxt + 2].surface == ")"
                and not covered.intersection(range(nxt, nxt + 3))
            ):
                new_last = nxt + 2
            if new_last is not None:
                covered.update(range(nxt, new_last + 1))
                t = replace(t, last=new_last)
        out.append(t)
    return out


def _priority(policy: str, ann: TermAnnotation, from_a: bool):
    length_key = -len(ann)
    side = 0 if from_a else 1
    if policy == "union_prefer_longer":
        return (length_key, side, ann.first)
    favoured = "dictionary" if policy == "dictionary_priority" else "model"
    return (0 if ann.source == favoured else 1, length_key, side, ann.first)


def merge_annotations(
    a: Sequence[TermAnnotation],
    b: Sequence[TermAnnotation],
    policy: str = "union_prefer_longer",
) -> list[TermAnnotation]:
    """Union of two annotation lists with overlaps resolved by ``policy``.

    ``union_prefer_longer`` keeps the longer of two overlapping spans,
    preferring ``a`` on equal length.  The ``*_priority`` policies first
    prefer spans whose ``source`` is dictionary (resp. model), then fall
    back to the same rule.  A span present in both inputs with different
    sources is marked ``merged``.
    """
    if policy not in MERGE_POLICIES:
        raise ValueError(f"unknown merge policy {policy!r}")
    sources_a = {t.token_range: t.source for t in a}
    sources_b = {t.token_range: t.source for t in b}
    pool = [(t, True) for t in a] + [(t, False) for t in b]
    pool.sort(key=lambda item: _priority(policy, item[0], item[1]))
    kept: list[TermAnnotation] = []
    for ann, _ in pool:
        if any(ann.overlaps(k) for k in kept):
            continue
        rng = ann.token_range
        if rng in sources_a and rng in sources_b and sources_a[rng] != sources_b[rng]:
            ann = replace(ann, source="merged")
        kept.append(ann)
    return sorted(kept, key=lambda t: t.first)


class Tagger(Protocol):
    def tag(self, doc: Document) -> list[TermAnnotation]:
        ...

    def train(self, corpus: Sequence[AnnotatedDocument]) -> None:
        ...


class DictionaryTagger:
    """The dictionary matcher wearing the tagger interface; training is a no-op."""

    def __init__(self, dictionary: TermDictionary, source: str = "dictionary"):
        self.dictionary = dictionary
        self.source = source
        self.train_calls = 0

    def tag(self, doc: Document) -> list[TermAnnotation]:
        return dictionary_tag(doc, self.dictionary, self.source)

    def train(self, corpus: Sequence[AnnotatedDocument]) -> None:
        self.train_calls += 1


class CommandTagger:
    """Delegate training and tagging to an external program.

    The command is invoked as ``CMD train CORPUS.jsonl`` and
    ``CMD tag IN.jsonl OUT.jsonl``; OUT must hold the same documents with
    their ``terms`` filled in.
    """

    def __init__(self, command: str):
        self.argv = shlex.split(command)

    def _run(self, *args: str) -> None:
        proc = subprocess.run([*self.argv, *args], capture_output=True, text=True)
        if proc.returncode != 0:
            raise RuntimeError(
                f"tagger command {' '.join(self.argv)!r} failed ({proc.returncode}): {proc.stderr.strip()}"
            )

    def train(self, corpus: Sequence[AnnotatedDocument]) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "train.jsonl"
            write_annotations(corpus, path)
            self._run("train", str(path))

    def tag_many(self, docs: Sequence[Document]) -> list[list[TermAnnotation]]:
        with tempfile.TemporaryDirectory() as tmp:
            src, dst = Path(tmp) / "in.jsonl", Path(tmp) / "out.jsonl"
            write_annotations([AnnotatedDocument(d) for d in docs], src)
            self._run("tag", str(src), str(dst))
            tagged = read_annotations(dst)
        if [t.id for t in tagged] != [d.id for d in docs]:
            raise RuntimeError("tagger output does not match its input documents")
        return [[replace(t, source="model") for t in ad.terms] for ad in tagged]

    def tag(self, doc: Document) -> list[TermAnnotation]:
        return self.tag_many([doc])[0]


@dataclass
class WeakSupervisionConfig:
    iterations: int = 1
    merge_policy: str = "union_prefer_longer"
    repair: bool = True
    prepositions: frozenset = PREPOSITIONS

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.merge_policy not in MERGE_POLICIES:
            raise ValueError(f"unknown merge policy {self.merge_policy!r}")


@dataclass
class IterationStats:
    iteration: int
    documents: int
    terms: int
    changed_documents: int


@dataclass
class WeakSupervisionResult:
    documents: list[AnnotatedDocument]
    stats: list[IterationStats] = field(default_factory=list)


class WeakSupervisionError(RuntimeError):
    def __init__(self, iteration: int, cause: BaseException):
        self.iteration = iteration
        super().__init__(f"weak supervision failed at iteration {iteration}: {cause}")


def _tag_all(tagger, docs: Sequence[Document]) -> list[list[TermAnnotation]]:
    if hasattr(tagger, "tag_many"):
        return tagger.tag_many(docs)
    return [tagger.tag(d) for d in docs]


def run_weak_supervision(
    corpus: Sequence[Document],
    dictionary: TermDictionary,
    tagger: Optional[Tagger] = None,
    config: Optional[WeakSupervisionConfig] = None,
    new_corpus: Sequence[Document] = (),
) -> WeakSupervisionResult:
    """Dictionary-annotate, train, re-annotate with tagger + dictionary, retrain.

    Iteration 0 is the dictionary pass over ``corpus``.  Each further
    iteration tags ``corpus + new_corpus`` with the tagger, merges with
    the dictionary annotation, and calls the training hook on the result.
    """
    config = config or WeakSupervisionConfig()
    tagger = tagger or DictionaryTagger(dictionary)

    def fix(doc, anns):
        if config.repair:
            return repair_boundaries(doc, anns, config.prepositions)
        return list(anns)

    dict_anns = {}

    def dict_tag(doc):
        if doc.id not in dict_anns:
            dict_anns[doc.id] = fix(doc, dictionary_tag(doc, dictionary))
        return dict_anns[doc.id]

    current = [AnnotatedDocument(d, tuple(dict_tag(d))) for d in corpus]
    stats = [IterationStats(0, len(current), sum(len(a.terms) for a in current), len(current))]
    try:
        tagger.train(current)
    except Exception as exc:
        raise WeakSupervisionError(0, exc) from exc

    extended = list(corpus) + list(new_corpus)
    for it in range(1, config.iterations + 1):
        try:
            model_anns = _tag_all(tagger, extended)
            previous = {a.id: a.terms for a in current}
            current = []
            changed = 0
            for doc, anns in zip(extended, model_anns):
                merged = merge_annotations(fix(doc, anns), dict_tag(doc), config.merge_policy)
                terms = tuple(fix(doc, merged))
                if previous.get(doc.id) != terms:
                    changed += 1
                current.append(AnnotatedDocument(doc, terms))
            stats.append(IterationStats(it, len(current), sum(len(a.terms) for a in current), changed))
            logger.info("iteration %d: %d terms, %d documents changed", it, stats[-1].terms, changed)
            tagger.train(current)
        except WeakSupervisionError:
            raise
        except Exception as exc:
            raise WeakSupervisionError(it, exc) from exc
    return WeakSupervisionResult(current, stats)


def load_ws_config(path) -> dict:
    """Read a flat TOML key-value file (iterations, merge_policy, tagger_cmd, ...)."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def bio_sequence(doc: Document, anns: Sequence[TermAnnotation]) -> list[str]:
    labels = ["O"] * len(doc.tokens)
    for t in anns:
        labels[t.first : t.last + 1] = t.bio_labels
    return labels


def dump_bio(doc: Document, anns: Sequence[TermAnnotation]) -> str:
    """CoNLL-style ``token\\tlabel`` lines, blank line between sentences."""
    labels = bio_sequence(doc, anns)
    lines = []
    for first, last in doc.sentences:
        for i in range(first, last + 1):
            lines.append(f"{doc.tokens[i].surface}\t{labels[i]}")
        lines.append("")
    return "\n".join(lines)

