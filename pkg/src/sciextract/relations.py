"""Pattern-based relation classification between term pairs of one sentence.

Pattern file syntax, one pattern per line::

    LABEL [undirected] : ELEM ELEM ...

where ELEM is ``ARG1``, ``ARG2``, ``*k`` (skip 0..k arbitrary tokens) or a
literal word, normalized with the same normalizer as the text.  Blank
lines and ``#`` comments are ignored.  The first matching pattern in file
order decides the label.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from itertools import permutations
from typing import Iterable, Optional, Sequence

from .corpus import (
    AnnotatedDocument,
    Document,
    Normalizer,
    RelationInstance,
    default_normalizer,
)

Span = tuple[int, int]


class RelationLabel(str, Enum):
    COMPARE = "COMPARE"
    HYPONYM_OF = "HYPONYM-OF"
    NO_RELATION = "NO-RELATION"
    PART_OF = "PART-OF"
    USED_FOR = "USED-FOR"

    def __str__(self) -> str:
        return self.value


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class Pattern:
    label: RelationLabel
    elements: tuple  # ("ARG1",), ("ARG2",), ("LIT", norm) or ("GAP", k)
    directional: bool = True
    source: str = ""

    def __post_init__(self):
        if self.label == RelationLabel.NO_RELATION:
            raise PatternError("a pattern cannot produce NO-RELATION")
        kinds = [e[0] for e in self.elements]
        if kinds.count("ARG1") != 1 or kinds.count("ARG2") != 1:
            raise PatternError(f"pattern needs exactly one ARG1 and one ARG2: {self.source!r}")
        for e in self.elements:
            if e[0] == "GAP" and e[1] < 0:
                raise PatternError("gap width must be >= 0")

    def match(self, norms: Sequence[str], sentence: Span, arg1: Span, arg2: Span) -> bool:
        if self._match(norms, sentence, arg1, arg2):
            return True
        return not self.directional and self._match(norms, sentence, arg2, arg1)

    def _match(self, norms, sentence, arg1, arg2) -> bool:
        first, last = sentence
        elems = self.elements

        def step(k: int, pos: int) -> bool:
            if k == len(elems):
                return True
            kind = elems[k][0]
            if kind in ("ARG1", "ARG2"):
                span = arg1 if kind == "ARG1" else arg2
                return pos == span[0] and step(k + 1, span[1] + 1)
            if kind == "LIT":
                return pos <= last and norms[pos] == elems[k][1] and step(k + 1, pos + 1)
            return any(step(k + 1, pos + j) for j in range(elems[k][1] + 1) if pos + j <= last + 1)

        # An ARG slot pins the alignment, so only starts that can reach it are tried.
        lead = 0
        for e in elems:
            if e[0] in ("ARG1", "ARG2"):
                break
            lead += 1 if e[0] == "LIT" else e[1]
        anchor = arg1[0] if _first_arg(elems) == "ARG1" else arg2[0]
        starts = range(max(first, anchor - lead), anchor + 1)
        return any(step(0, s) for s in starts)


def _first_arg(elems) -> str:
    return next(e[0] for e in elems if e[0] in ("ARG1", "ARG2"))


def parse_pattern(line: str, normalizer: Optional[Normalizer] = None) -> Pattern:
    normalizer = normalizer or default_normalizer
    head, sep, body = line.partition(":")
    if not sep:
        raise PatternError(f"missing ':' in pattern {line!r}")
    head_parts = head.split()
    if not head_parts or len(head_parts) > 2:
        raise PatternError(f"bad pattern header {head!r}")
    try:
        label = RelationLabel(head_parts[0])
    except ValueError:
        raise PatternError(f"unknown relation label {head_parts[0]!r}") from None
    directional = True
    if len(head_parts) == 2:
        if head_parts[1] != "undirected":
            raise PatternError(f"unknown pattern flag {head_parts[1]!r}")
        directional = False
    elements = []
    for tok in body.split():
        if tok in ("ARG1", "ARG2"):
            elements.append((tok,))
        elif tok.startswith("*") and tok[1:].isdigit():
            elements.append(("GAP", int(tok[1:])))
        elif tok == "*":
            elements.append(("GAP", 1))
        else:
            norm = normalizer(tok) if any(c.isalnum() for c in tok) else tok
            elements.append(("LIT", norm))
    return Pattern(label, tuple(elements), directional, line.strip())


def load_patterns(path=None, normalizer: Optional[Normalizer] = None) -> list[Pattern]:
    """Read a pattern file; ``None`` loads the bundled Russian starter set."""
    if path is None:
        text = resources.files("sciextract").joinpath("data/patterns_ru.txt").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    patterns = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            patterns.append(parse_pattern(line, normalizer))
        except PatternError as exc:
            raise PatternError(f"line {lineno}: {exc}") from None
    return patterns


def token_gap(a: Span, b: Span) -> int:
    """Number of tokens strictly between two non-overlapping spans."""
    if a[0] > b[0]:
        a, b = b, a
    return max(0, b[0] - a[1] - 1)


def sentence_pairs(doc: AnnotatedDocument) -> list[tuple[Span, Span]]:
    """All ordered pairs of distinct terms lying in the same sentence."""
    spans = sorted(t.token_range for t in doc.terms)
    by_sentence: dict[int, list[Span]] = {}
    for s in spans:
        k = doc.document.sentence_of(s[0])
        if doc.document.sentence_of(s[1]) == k:
            by_sentence.setdefault(k, []).append(s)
    pairs = []
    for k in sorted(by_sentence):
        pairs.extend(permutations(by_sentence[k], 2))
    return pairs


def candidate_pairs(
    doc: AnnotatedDocument,
    max_distance: float = 10,
    sample_rate: float = 0.5,
    seed=0,
) -> list[tuple[Span, Span]]:
    """Ordered same-sentence term pairs for relation classification.

    Pairs carrying a gold relation are always kept.  Other pairs survive
    only if fewer than ``max_distance`` tokens separate them, and then
    with probability ``sample_rate`` (one draw per such pair, in pair
    order, from ``random.Random(seed)``).
    """
    if not 0.0 <= sample_rate <= 1.0:
        raise ValueError("sample_rate must lie in [0, 1]")
    if max_distance < 0:
        raise ValueError("max_distance must be >= 0")
    gold = {(r.arg1, r.arg2) for r in doc.relations}
    rng = random.Random(seed)
    out = []
    for a1, a2 in sentence_pairs(doc):
        if (a1, a2) in gold:
            out.append((a1, a2))
        elif token_gap(a1, a2) < max_distance and rng.random() < sample_rate:
            out.append((a1, a2))
    return out


def classify(doc: Document, arg1: Span, arg2: Span, patterns: Sequence[Pattern]) -> RelationLabel:
    k = doc.sentence_of(arg1[0])
    if doc.sentence_of(arg2[0]) != k:
        raise ValueError("arguments lie in different sentences")
    sentence = doc.sentences[k]
    norms = doc.norms
    for p in patterns:
        if p.match(norms, sentence, arg1, arg2):
            return p.label
    return RelationLabel.NO_RELATION


def extract_all(
    doc: AnnotatedDocument,
    patterns: Sequence[Pattern],
    pairs: Optional[Iterable[tuple[Span, Span]]] = None,
    keep_negative: bool = False,
) -> list[RelationInstance]:
    """Classify every candidate pair; NO-RELATION results are dropped by default.

    A pair whose reverse already received the same label (an undirected
    pattern firing both ways) is reported once, earlier argument first.
    """
    if pairs is None:
        pairs = sentence_pairs(doc)
    document = doc.document
    out = []
    seen = set()
    for a1, a2 in pairs:
        label = classify(document, a1, a2, patterns)
        if label == RelationLabel.NO_RELATION and not keep_negative:
            continue
        if label != RelationLabel.NO_RELATION and (a2, a1, label) in seen:
            continue
        seen.add((a1, a2, label))
        out.append(RelationInstance(a1, a2, label.value, document.sentence_of(a1[0])))
    return out

