"""TF-IDF n-gram mining and the term dictionary used for weak supervision."""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .corpus import Document, Normalizer, has_alnum, normalize_phrase

logger = logging.getLogger(__name__)

DEFAULT_MAX_NGRAM = 4


@dataclass(frozen=True)
class NGramStat:
    ngram: tuple[str, ...]
    tf: int
    df: int
    tfidf: Optional[float] = None

    @property
    def text(self) -> str:
        return " ".join(self.ngram)


class TermDictionary:
    """Immutable set of normalized, space-joined term entries."""

    def __init__(self, entries: Iterable[str] = (), max_ngram: int = DEFAULT_MAX_NGRAM):
        self.max_ngram = max_ngram
        keep = set()
        for entry in entries:
            entry = " ".join(entry.split())
            if not entry:
                continue
            n = entry.count(" ") + 1
            if n > max_ngram:
                raise ValueError(f"entry {entry!r} has {n} tokens, more than max_ngram={max_ngram}")
            keep.add(entry)
        self._entries = frozenset(keep)
        self._tuples = frozenset(tuple(e.split(" ")) for e in keep)
        self.longest = max((len(t) for t in self._tuples), default=0)

    @property
    def entries(self) -> frozenset[str]:
        return self._entries

    def token_count(self, entry: str) -> int:
        return entry.count(" ") + 1

    def __contains__(self, item) -> bool:
        if isinstance(item, str):
            return item in self._entries
        return tuple(item) in self._tuples

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(sorted(self._entries))

    def __eq__(self, other) -> bool:
        return isinstance(other, TermDictionary) and self._entries == other._entries

    def __repr__(self) -> str:
        return f"TermDictionary({len(self)} entries)"


def merge(dict_a: TermDictionary, dict_b: TermDictionary) -> TermDictionary:
    return TermDictionary(
        dict_a.entries | dict_b.entries, max(dict_a.max_ngram, dict_b.max_ngram)
    )


def load_dictionary(
    path,
    normalizer: Optional[Normalizer] = None,
    max_ngram: int = DEFAULT_MAX_NGRAM,
    split_hyphens: bool = True,
) -> TermDictionary:
    """Read a one-term-per-line UTF-8 file and normalize every line.

    Lines longer than ``max_ngram`` tokens after tokenization are skipped
    with a logged count; raise ``max_ngram`` to keep them.
    """
    entries = set()
    n_raw = n_long = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            n_raw += 1
            entry = normalize_phrase(line, normalizer, split_hyphens)
            if not entry:
                continue
            if entry.count(" ") + 1 > max_ngram:
                n_long += 1
                continue
            entries.add(entry)
    if n_long:
        logger.warning("%s: skipped %d of %d terms longer than %d tokens", path, n_long, n_raw, max_ngram)
    logger.info("%s: %d raw terms, %d normalized entries", path, n_raw, len(entries))
    return TermDictionary(entries, max_ngram)


def save_dictionary(dictionary: TermDictionary, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for entry in dictionary:
            fh.write(entry + "\n")


def _units(doc: Document, use_norms: bool) -> list[str]:
    if use_norms:
        return doc.norms
    return [t.surface for t in doc.tokens]


def mine_ngrams(
    corpus: Sequence[Document], n_values: Iterable[int] = (2, 3, 4), use_norms: bool = True
) -> list[NGramStat]:
    """Count every n-gram inside a sentence that has no punctuation-only token.

    Returns one stat per distinct n-gram in order of first occurrence;
    ``tf`` is the corpus-total count, ``df`` the number of documents
    containing it.
    """
    if not corpus:
        raise ValueError("cannot mine n-grams from an empty corpus")
    n_values = sorted(set(n_values))
    if not n_values or n_values[0] < 1 or n_values[-1] > 6:
        raise ValueError(f"n_values must be a non-empty subset of 1..6, got {n_values}")
    tf: Counter = Counter()
    df: Counter = Counter()
    for doc in corpus:
        units = _units(doc, use_norms)
        content = [not t.is_punct for t in doc.tokens]
        seen = set()
        for first, last in doc.sentences:
            for n in n_values:
                for i in range(first, last - n + 2):
                    if not all(content[i : i + n]):
                        continue
                    gram = tuple(units[i : i + n])
                    tf[gram] += 1
                    seen.add(gram)
        for gram in seen:
            df[gram] += 1
    return [NGramStat(gram, count, df[gram]) for gram, count in tf.items()]


def tfidf(tf: int, df: int, corpus_size: int) -> float:
    if df <= 0:
        raise ValueError("document frequency must be positive")
    if df > corpus_size:
        raise ValueError(f"df={df} exceeds corpus size {corpus_size}")
    return tf * math.log(corpus_size / df)


def rank_by_tfidf(stats: Sequence[NGramStat], corpus_size: int) -> list[NGramStat]:
    """Score with ``tf * ln(N / df)`` and sort descending, ties by n-gram text."""
    if corpus_size < 1:
        raise ValueError("corpus_size must be >= 1")
    scored = [
        NGramStat(s.ngram, s.tf, s.df, tfidf(s.tf, s.df, corpus_size)) for s in stats
    ]
    return sorted(scored, key=lambda s: (-s.tfidf, s.text))


def write_ranked(stats: Iterable[NGramStat], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in stats:
            fh.write(f"{s.text}\t{s.tf}\t{s.df}\t{s.tfidf:.6f}\n")


def read_ranked(path) -> list[NGramStat]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected 4 tab-separated fields")
            out.append(NGramStat(tuple(parts[0].split(" ")), int(parts[1]), int(parts[2]), float(parts[3])))
    return out


def dictionary_from_ranked(stats: Iterable[NGramStat], top: Optional[int] = None,
                           max_ngram: int = DEFAULT_MAX_NGRAM) -> TermDictionary:
    stats = list(stats)
    if top is not None:
        stats = stats[:top]
    return TermDictionary((s.text for s in stats if has_alnum(s.text)), max_ngram)
