"""Document model, tokenization, normalization and JSONL annotation I/O.

Every other module works on :class:`Document` objects: text plus tokens
carrying exact character offsets, a normalized form per token, and a
sentence partition of the token list.  Annotations (terms, relations,
links) reference tokens by inclusive ``[first, last]`` index ranges.
"""
from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

BIO_LABELS = ("B-TERM", "I-TERM", "O")
TERM_SOURCES = ("dictionary", "model", "gold", "merged")
RELATION_LABELS = ("COMPARE", "HYPONYM-OF", "NO-RELATION", "PART-OF", "USED-FOR")
QID_RE = re.compile(r"Q[0-9]+\Z")

_WORD = r"[^\W_]+"
_TOKEN_RE = re.compile(rf"{_WORD}|\S")
_TOKEN_HYPHEN_RE = re.compile(rf"{_WORD}(?:-{_WORD})*|\S")

SENTENCE_END = frozenset(".!?")
OPENERS = frozenset("«\"„“(['")
# Lowercased tokens that, followed by ".", do not end a sentence.
ABBREVIATIONS = frozenset(
    {
        "т", "е", "г", "гг", "др", "пр", "рис", "см", "табл", "стр", "им",
        "ст", "проф", "акад", "доц", "и.о", "e", "i", "g", "al", "etc",
        "fig", "eq", "vs", "cf", "no", "dr", "prof",
    }
)


class AnnotationError(ValueError):
    """Raised for malformed or inconsistent annotation data."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# --- normalization ---------------------------------------------------------

Normalizer = Callable[[str], str]

# Inflectional endings of Russian nouns and adjectives, longest first.
RUSSIAN_SUFFIXES = tuple(
    sorted(
        {
            "ыми", "ими", "ого", "его", "ому", "ему", "ами", "ями",
            "ая", "яя", "ое", "ее", "ые", "ие", "ый", "ий", "ой", "ых", "их",
            "ую", "юю", "ым", "им", "ей", "ах", "ях", "ов", "ев", "ом", "ем",
            "ам", "ям", "ию", "ия", "ии", "ью",
            "а", "я", "о", "е", "ы", "и", "у", "ю", "ь", "й",
        },
        key=lambda s: (-len(s), s),
    )
)
MIN_STEM = 3


def _is_cyrillic_word(s: str) -> bool:
    return all("а" <= ch <= "я" or ch == "ё" for ch in s)


class SuffixNormalizer:
    """Lowercase + iterated removal of Russian inflectional endings.

    A cheap stand-in for a real lemmatizer.  Stripping is repeated until
    no ending applies, which makes the result idempotent.  Non-Cyrillic
    words are only lowercased.
    """

    def __init__(self, suffixes: Sequence[str] = RUSSIAN_SUFFIXES, min_stem: int = MIN_STEM):
        self.suffixes = tuple(sorted(set(suffixes), key=lambda s: (-len(s), s)))
        self.min_stem = min_stem

    def __call__(self, surface: str) -> str:
        word = surface.lower().replace("ё", "е")
        if not _is_cyrillic_word(word):
            return word
        changed = True
        while changed:
            changed = False
            for suf in self.suffixes:
                if word.endswith(suf) and len(word) - len(suf) >= self.min_stem:
                    word = word[: -len(suf)]
                    changed = True
                    break
        return word


def lowercase_normalizer(surface: str) -> str:
    return surface.lower()


default_normalizer: Normalizer = SuffixNormalizer()


def normalize(surface: str, normalizer: Optional[Normalizer] = None) -> str:
    return (normalizer or default_normalizer)(surface)


# --- data types ------------------------------------------------------------


def has_alnum(s: str) -> bool:
    return any(ch.isalnum() for ch in s)


def is_latin_script(s: str) -> bool:
    """True when ``s`` has letters and all of them are Latin."""
    letters = [ch for ch in s if ch.isalpha()]
    if not letters:
        return False
    return all(unicodedata.name(ch, "").startswith("LATIN") for ch in letters)


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int
    norm: str
    is_latin_script: bool = False

    @property
    def is_punct(self) -> bool:
        return not has_alnum(self.surface)


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    tokens: tuple[Token, ...] = ()
    sentences: tuple[tuple[int, int], ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def norms(self) -> list[str]:
        return [t.norm for t in self.tokens]

    def sentence_of(self, index: int) -> int:
        for k, (first, last) in enumerate(self.sentences):
            if first <= index <= last:
                return k
        raise IndexError(f"token {index} outside document {self.id!r}")

    def span_text(self, first: int, last: int) -> str:
        return self.text[self.tokens[first].start : self.tokens[last].end]

    def validate(self) -> None:
        prev_end = 0
        for i, tok in enumerate(self.tokens):
            if not 0 <= tok.start < tok.end <= len(self.text):
                raise AnnotationError(f"token {i} has invalid offsets [{tok.start}, {tok.end})")
            if tok.start < prev_end:
                raise AnnotationError(f"token {i} overlaps or precedes token {i - 1}")
            if self.text[tok.start : tok.end] != tok.surface:
                raise AnnotationError(f"token {i} surface does not match text slice")
            if has_alnum(tok.surface) and not tok.norm:
                raise AnnotationError(f"token {i} has an empty norm")
            prev_end = tok.end
        expected = 0
        for k, (first, last) in enumerate(self.sentences):
            if first != expected or last < first:
                raise AnnotationError(f"sentence {k} does not continue the token partition")
            expected = last + 1
        if expected != len(self.tokens):
            raise AnnotationError("sentences do not cover all tokens")


@dataclass(frozen=True)
class TermAnnotation:
    first: int
    last: int
    source: str = "gold"

    def __post_init__(self):
        if self.last < self.first or self.first < 0:
            raise AnnotationError(f"invalid term range [{self.first}, {self.last}]")
        if self.source not in TERM_SOURCES:
            raise AnnotationError(f"unknown term source {self.source!r}")

    @property
    def token_range(self) -> tuple[int, int]:
        return (self.first, self.last)

    def __len__(self) -> int:
        return self.last - self.first + 1

    @property
    def bio_labels(self) -> list[str]:
        return ["B-TERM"] + ["I-TERM"] * (self.last - self.first)

    def overlaps(self, other: "TermAnnotation") -> bool:
        return self.first <= other.last and other.first <= self.last


@dataclass(frozen=True)
class RelationInstance:
    arg1: tuple[int, int]
    arg2: tuple[int, int]
    label: str
    sentence_index: int = 0

    def __post_init__(self):
        if self.label not in RELATION_LABELS:
            raise AnnotationError(f"unknown relation label {self.label!r}")
        if self.arg1 == self.arg2:
            raise AnnotationError("relation arguments must differ")
        if self.arg1[0] <= self.arg2[1] and self.arg2[0] <= self.arg1[1]:
            raise AnnotationError("relation arguments overlap")


@dataclass(frozen=True)
class LinkAnnotation:
    """A term range linked to a KB identifier (``qid=None`` means unlinked).

    ``candidates`` optionally records the generated candidate qids in rank
    order; the linking metrics need them.
    """

    first: int
    last: int
    qid: Optional[str] = None
    candidates: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.qid is not None and not QID_RE.match(self.qid):
            raise AnnotationError(f"invalid qid {self.qid!r}")

    @property
    def token_range(self) -> tuple[int, int]:
        return (self.first, self.last)


@dataclass(frozen=True)
class AnnotatedDocument:
    document: Document
    terms: tuple[TermAnnotation, ...] = ()
    relations: tuple[RelationInstance, ...] = ()
    links: tuple[LinkAnnotation, ...] = ()

    @property
    def id(self) -> str:
        return self.document.id

    def validate(self) -> None:
        doc = self.document
        doc.validate()
        n = len(doc.tokens)
        terms = sorted(self.terms, key=lambda t: t.first)
        for t in terms:
            if t.last >= n:
                raise AnnotationError(f"term [{t.first}, {t.last}] out of range")
        for a, b in zip(terms, terms[1:]):
            if a.overlaps(b):
                raise AnnotationError(f"overlapping terms [{a.first}, {a.last}] and [{b.first}, {b.last}]")
        for r in self.relations:
            for arg in (r.arg1, r.arg2):
                if not 0 <= arg[0] <= arg[1] < n:
                    raise AnnotationError(f"relation argument {list(arg)} out of range")
            s1, s2 = doc.sentence_of(r.arg1[0]), doc.sentence_of(r.arg2[1])
            if s1 != s2 or doc.sentence_of(r.arg1[1]) != s1 or doc.sentence_of(r.arg2[0]) != s1:
                raise AnnotationError("relation crosses a sentence boundary")
        for link in self.links:
            if not 0 <= link.first <= link.last < n:
                raise AnnotationError(f"link [{link.first}, {link.last}] out of range")


# --- tokenization ----------------------------------------------------------


def _make_token(m: re.Match, normalizer: Normalizer) -> Token:
    surface = m.group()
    norm = normalizer(surface) if has_alnum(surface) else surface
    return Token(surface, m.start(), m.end(), norm or surface.lower(), is_latin_script(surface))


def _sentence_break(text: str, tokens: Sequence[Token], i: int) -> bool:
    """Whether a sentence ends after token ``i``."""
    tok = tokens[i]
    if tok.surface not in SENTENCE_END or i + 1 >= len(tokens):
        return False
    nxt = tokens[i + 1]
    if nxt.start == tok.end or not text[tok.end : nxt.start].isspace():
        return False
    j = i + 1
    while j < len(tokens) - 1 and tokens[j].surface in OPENERS:
        j += 1
    if not tokens[j].surface[0].isupper():
        return False
    if tok.surface == "." and i > 0:
        prev = tokens[i - 1]
        if prev.end == tok.start and prev.surface.lower() in ABBREVIATIONS:
            return False
    return True


def tokenize(
    text: str,
    doc_id: str = "",
    normalizer: Optional[Normalizer] = None,
    split_hyphens: bool = True,
) -> Document:
    """Split ``text`` into word, number and single-punctuation tokens.

    Sentences end at ``.``, ``!`` or ``?`` followed by whitespace and an
    uppercase token (opening quotes/brackets are skipped), unless the
    period closes a known abbreviation.
    """
    normalizer = normalizer or default_normalizer
    pattern = _TOKEN_RE if split_hyphens else _TOKEN_HYPHEN_RE
    tokens = tuple(_make_token(m, normalizer) for m in pattern.finditer(text))
    sentences = []
    start = 0
    for i in range(len(tokens)):
        if i == len(tokens) - 1 or _sentence_break(text, tokens, i):
            sentences.append((start, i))
            start = i + 1
    return Document(doc_id, text, tokens, tuple(sentences))


def normalize_phrase(
    text: str, normalizer: Optional[Normalizer] = None, split_hyphens: bool = True
) -> str:
    """Space-joined token norms of ``text``; the key used by dictionaries and the KB."""
    doc = tokenize(text, normalizer=normalizer, split_hyphens=split_hyphens)
    return " ".join(doc.norms)


# --- JSONL persistence -----------------------------------------------------


def document_to_dict(ad: AnnotatedDocument) -> dict:
    doc = ad.document
    links = []
    for link in ad.links:
        item = {"range": [link.first, link.last], "qid": link.qid}
        if link.candidates is not None:
            item["candidates"] = list(link.candidates)
        links.append(item)
    return {
        "id": doc.id,
        "text": doc.text,
        "tokens": [{"s": t.start, "e": t.end, "norm": t.norm} for t in doc.tokens],
        "sentences": [list(s) for s in doc.sentences],
        "terms": [{"range": [t.first, t.last], "source": t.source} for t in ad.terms],
        "relations": [
            {"arg1": list(r.arg1), "arg2": list(r.arg2), "label": r.label} for r in ad.relations
        ],
        "links": links,
    }


def _range(value, what: str) -> tuple[int, int]:
    if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) for v in value)):
        raise AnnotationError(f"{what} must be a pair of integers, got {value!r}")
    return (value[0], value[1])


def document_from_dict(obj: dict, normalizer: Optional[Normalizer] = None) -> AnnotatedDocument:
    """Build and validate an :class:`AnnotatedDocument` from its JSON form.

    ``tokens`` and ``sentences`` may be omitted, in which case the text is
    tokenized; a token without ``norm`` gets one from ``normalizer``.
    """
    normalizer = normalizer or default_normalizer
    text = obj["text"]
    if "tokens" not in obj:
        doc = tokenize(text, str(obj.get("id", "")), normalizer)
        if "sentences" in obj:
            doc = Document(doc.id, text, doc.tokens, tuple(_range(s, "sentence") for s in obj["sentences"]))
    else:
        tokens = []
        for i, t in enumerate(obj["tokens"]):
            s, e = t["s"], t["e"]
            if not (isinstance(s, int) and isinstance(e, int) and 0 <= s < e <= len(text)):
                raise AnnotationError(f"token {i} has invalid offsets [{s}, {e})")
            surface = text[s:e]
            norm = t.get("norm")
            if norm is None:
                norm = normalizer(surface) if has_alnum(surface) else surface
            tokens.append(Token(surface, s, e, norm, is_latin_script(surface)))
        sentences = obj.get("sentences")
        if sentences is None:
            sentences = [[0, len(tokens) - 1]] if tokens else []
        doc = Document(str(obj.get("id", "")), text, tuple(tokens), tuple(_range(s, "sentence") for s in sentences))
    doc.validate()
    terms = tuple(
        TermAnnotation(*_range(t["range"], "term range"), t.get("source", "gold"))
        for t in obj.get("terms", [])
    )
    relations = []
    for r in obj.get("relations", []):
        a1, a2 = _range(r["arg1"], "arg1"), _range(r["arg2"], "arg2")
        try:
            sent = doc.sentence_of(a1[0])
        except IndexError as exc:
            raise AnnotationError(str(exc)) from None
        relations.append(RelationInstance(a1, a2, r["label"], sent))
    links = []
    for link in obj.get("links", []):
        cands = link.get("candidates")
        links.append(
            LinkAnnotation(
                *_range(link["range"], "link range"),
                link.get("qid"),
                tuple(cands) if cands is not None else None,
            )
        )
    ad = AnnotatedDocument(doc, terms, tuple(relations), tuple(links))
    ad.validate()
    return ad


def dumps(ad: AnnotatedDocument) -> str:
    return json.dumps(document_to_dict(ad), ensure_ascii=False)


def write_annotations(docs: Iterable[AnnotatedDocument], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ad in docs:
            fh.write(dumps(ad))
            fh.write("\n")


def read_annotations(path, normalizer: Optional[Normalizer] = None) -> list[AnnotatedDocument]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                docs.append(document_from_dict(obj, normalizer))
            except AnnotationError as exc:
                raise AnnotationError(str(exc), lineno) from None
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise AnnotationError(f"malformed record ({exc})", lineno) from None
    return docs


def read_text_dir(
    directory, normalizer: Optional[Normalizer] = None, split_hyphens: bool = True
) -> list[Document]:
    """Tokenize every ``*.txt`` file in ``directory`` (sorted by name, id = stem)."""
    paths = sorted(Path(directory).glob("*.txt"))
    return [
        tokenize(p.read_text(encoding="utf-8"), p.stem, normalizer, split_hyphens) for p in paths
    ]
