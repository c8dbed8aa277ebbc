"""Two-stage entity linking: alias candidate generation, then ranking.

Two rankers are available.  ``weighted_cosine`` scores each candidate by
the cosine similarity between the averaged vectors of the mention (with
context) and of the entity text, multiplied by the share of mention
tokens the matching alias covers.  ``baseline`` matches only the full
mention and prefers the entity with the most cross-KB links and
statements.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .corpus import AnnotatedDocument, Document, LinkAnnotation, has_alnum
from .kb import EmbeddingStore, EntityRecord, KBStore, embed_phrase, qid_number

MODES = ("weighted_cosine", "baseline")


@dataclass(frozen=True)
class Mention:
    document: Document
    first: int
    last: int
    context_window: int = 5

    def __post_init__(self):
        if self.context_window < 0:
            raise ValueError("context_window must be >= 0")
        if not 0 <= self.first <= self.last < len(self.document.tokens):
            raise ValueError(f"mention range [{self.first}, {self.last}] out of bounds")

    @property
    def norms(self) -> list[str]:
        return self.document.norms[self.first : self.last + 1]

    @property
    def context_norms(self) -> list[str]:
        lo = max(0, self.first - self.context_window)
        hi = min(len(self.document.tokens) - 1, self.last + self.context_window)
        return self.document.norms[lo : hi + 1]

    @property
    def text(self) -> str:
        return self.document.span_text(self.first, self.last)


@dataclass(frozen=True)
class Candidate:
    entity: EntityRecord
    matched_via: str
    n_matching: int
    n_all: int
    raw_similarity: Optional[float] = None
    score: Optional[float] = None
    below_threshold: bool = False

    @property
    def qid(self) -> str:
        return self.entity.qid

    @property
    def weight(self) -> float:
        return self.n_matching / self.n_all


@dataclass(frozen=True)
class CandidateSet:
    mention: Mention
    candidates: tuple[Candidate, ...] = ()

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    @property
    def qids(self) -> list[str]:
        return [c.qid for c in self.candidates]

    @property
    def top(self) -> Optional[Candidate]:
        return self.candidates[0] if self.candidates else None


def mention_ngrams(norms: Sequence[str], max_ngram: int = 3, subgrams: bool = True):
    """Yield ``(phrase, n)`` for the full mention, then sub-n-grams longest first."""
    L = len(norms)
    yield " ".join(norms), L
    if not subgrams:
        return
    for n in range(min(max_ngram, L - 1), 0, -1):
        for i in range(L - n + 1):
            gram = norms[i : i + n]
            if any(has_alnum(g) for g in gram):
                yield " ".join(gram), n


def generate_candidates(
    mention: Mention, kb: KBStore, max_ngram: int = 3, subgrams: bool = True
) -> CandidateSet:
    """Collect KB entities whose name or synonym equals the mention or a sub-n-gram.

    Each entity keeps its longest matching n-gram.  Disambiguation pages
    are discarded.  The result is ordered by qid.
    """
    n_all = mention.last - mention.first + 1
    best: dict[str, Candidate] = {}
    for phrase, n in mention_ngrams(mention.norms, max_ngram, subgrams):
        for entity in kb.lookup_exact(phrase):
            if entity.is_disambiguation:
                continue
            prev = best.get(entity.qid)
            if prev is None or n > prev.n_matching:
                best[entity.qid] = Candidate(entity, phrase, n, n_all)
    cands = sorted(best.values(), key=lambda c: qid_number(c.qid))
    return CandidateSet(mention, tuple(cands))


def cosine(u: Optional[np.ndarray], v: Optional[np.ndarray]) -> Optional[float]:
    if u is None or v is None:
        return None
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return None
    return max(-1.0, min(1.0, float(np.dot(u, v)) / (nu * nv)))


def rank_weighted_cosine(
    cands: CandidateSet,
    emb: EmbeddingStore,
    threshold: float = 0.0,
    entity_emb: Optional[EmbeddingStore] = None,
) -> CandidateSet:
    """Score = cosine(mention+context vector, entity text vector) * weight.

    Candidates without a usable vector on either side get score 0 and are
    placed after every scored candidate.  Ties go to the smaller qid.
    Candidates scoring below ``threshold`` are flagged, not removed.
    """
    if not -1.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [-1, 1]")
    entity_emb = entity_emb or emb
    if entity_emb.dimension != emb.dimension:
        raise ValueError(
            f"embedding dimensions differ: {emb.dimension} vs {entity_emb.dimension}"
        )
    mention_vec = embed_phrase(emb, cands.mention.context_norms)
    scored = []
    for c in cands.candidates:
        sim = cosine(mention_vec, embed_phrase(entity_emb, c.entity.text_norms))
        score = sim * c.weight if sim is not None else 0.0
        scored.append(replace(c, raw_similarity=sim, score=score, below_threshold=score < threshold))
    scored.sort(key=lambda c: (c.raw_similarity is None, -c.score, qid_number(c.qid)))
    return CandidateSet(cands.mention, tuple(scored))


def rank_baseline(cands: CandidateSet) -> CandidateSet:
    """Order by number of cross-KB links plus number of relations, descending."""
    scored = [replace(c, score=float(c.entity.richness)) for c in cands.candidates]
    scored.sort(key=lambda c: (-c.score, qid_number(c.qid)))
    return CandidateSet(cands.mention, tuple(scored))


@dataclass
class LinkerConfig:
    mode: str = "weighted_cosine"
    threshold: float = 0.0
    context_window: int = 5
    max_ngram: int = 3

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown linking mode {self.mode!r}")
        if not -1.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [-1, 1]")
        if self.context_window < 0 or self.max_ngram < 1:
            raise ValueError("context_window must be >= 0 and max_ngram >= 1")


def rank_mention(
    mention: Mention, kb: KBStore, emb: Optional[EmbeddingStore], config: LinkerConfig
) -> CandidateSet:
    if config.mode == "baseline":
        return rank_baseline(generate_candidates(mention, kb, subgrams=False))
    if emb is None:
        raise ValueError("weighted_cosine linking needs an embedding store")
    return rank_weighted_cosine(
        generate_candidates(mention, kb, config.max_ngram), emb, config.threshold
    )


def choose(ranked: CandidateSet, config: LinkerConfig) -> Optional[str]:
    top = ranked.top
    if top is None:
        return None
    if config.mode == "weighted_cosine" and top.score < config.threshold:
        return None
    return top.qid


def link(
    doc: AnnotatedDocument,
    kb: KBStore,
    emb: Optional[EmbeddingStore] = None,
    config: Optional[LinkerConfig] = None,
) -> list[LinkAnnotation]:
    """Link every term of ``doc``; each link records its ranked candidate qids."""
    config = config or LinkerConfig()
    out = []
    for term in sorted(doc.terms, key=lambda t: t.first):
        mention = Mention(doc.document, term.first, term.last, config.context_window)
        ranked = rank_mention(mention, kb, emb, config)
        out.append(LinkAnnotation(term.first, term.last, choose(ranked, config), tuple(ranked.qids)))
    return out

