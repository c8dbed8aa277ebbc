"""Knowledge-base dump ingestion, exact alias lookup and word vectors."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .corpus import QID_RE, Normalizer, default_normalizer, tokenize

logger = logging.getLogger(__name__)

DISAMBIGUATION_MARKERS = ("disambiguation page", "страница значений")


class KBError(ValueError):
    pass


def qid_number(qid: str) -> int:
    return int(qid[1:])


@dataclass(frozen=True)
class EntityRecord:
    qid: str
    name: str
    synonyms: tuple[str, ...] = ()
    description: str = ""
    is_disambiguation: bool = False
    num_links: int = 0
    num_relations: int = 0
    # Normalized tokens of name + description + synonyms, filled by the store.
    text_norms: tuple[str, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not QID_RE.match(self.qid):
            raise KBError(f"invalid qid {self.qid!r}")
        if self.num_links < 0 or self.num_relations < 0:
            raise KBError(f"{self.qid}: link/relation counts must be non-negative")

    @property
    def richness(self) -> int:
        """Cross-KB links plus statements about other entities."""
        return self.num_links + self.num_relations

    def to_dict(self) -> dict:
        return {
            "qid": self.qid,
            "name": self.name,
            "synonyms": list(self.synonyms),
            "description": self.description,
            "is_disambiguation": self.is_disambiguation,
            "num_links": self.num_links,
            "num_relations": self.num_relations,
        }


def _content_norms(text: str, normalizer: Normalizer) -> list[str]:
    return [t.norm for t in tokenize(text, normalizer=normalizer).tokens if not t.is_punct]


class KBStore:
    """Entities indexed by the normalized form of their name and synonyms."""

    def __init__(
        self,
        entities: Iterable[EntityRecord] = (),
        normalizer: Optional[Normalizer] = None,
    ):
        self.normalizer = normalizer or default_normalizer
        self.entities: dict[str, EntityRecord] = {}
        self._index = None
        for e in entities:
            self.add(e)

    def _key(self, text: str) -> str:
        return " ".join(t.norm for t in tokenize(text, normalizer=self.normalizer).tokens)

    def add(self, entity: EntityRecord) -> None:
        if entity.qid in self.entities:
            logger.warning("duplicate qid %s: keeping the last record", entity.qid)
        norms = []
        for text in (entity.name, entity.description, *entity.synonyms):
            norms.extend(_content_norms(text, self.normalizer))
        entity = replace(entity, text_norms=tuple(norms))
        self.entities[entity.qid] = entity
        self._index = None

    @property
    def index(self) -> dict[str, list[str]]:
        if self._index is None:
            index: dict[str, set] = {}
            for e in self.entities.values():
                for alias in (e.name, *e.synonyms):
                    key = self._key(alias)
                    if key:
                        index.setdefault(key, set()).add(e.qid)
            self._index = {k: sorted(v, key=qid_number) for k, v in index.items()}
        return self._index

    def lookup_exact(self, normalized_phrase: str) -> list[EntityRecord]:
        return [self.entities[q] for q in self.index.get(normalized_phrase, ())]

    def __len__(self) -> int:
        return len(self.entities)

    def __contains__(self, qid: str) -> bool:
        return qid in self.entities

    def __getitem__(self, qid: str) -> EntityRecord:
        return self.entities[qid]

    def stats(self) -> dict:
        ents = list(self.entities.values())
        return {
            "entities": len(ents),
            "disambiguation_pages": sum(e.is_disambiguation for e in ents),
            "aliases": sum(1 + len(e.synonyms) for e in ents),
            "index_keys": len(self.index),
            "mean_richness": (sum(e.richness for e in ents) / len(ents)) if ents else 0.0,
        }


def lookup_exact(store: KBStore, normalized_phrase: str) -> list[EntityRecord]:
    return store.lookup_exact(normalized_phrase)


def _entity_from_json(obj: dict, markers: Sequence[str]) -> EntityRecord:
    if not isinstance(obj, dict):
        raise KBError("record is not a JSON object")
    for key in ("qid", "name"):
        if not isinstance(obj.get(key), str):
            raise KBError(f"missing or non-string field {key!r}")
    description = obj.get("description") or ""
    synonyms = obj.get("synonyms") or []
    if not isinstance(synonyms, list) or not all(isinstance(s, str) for s in synonyms):
        raise KBError("synonyms must be a list of strings")
    flag = bool(obj.get("is_disambiguation", False))
    lowered = description.lower()
    if not flag and any(m in lowered for m in markers):
        flag = True
    counts = []
    for key in ("num_links", "num_relations"):
        value = obj.get(key, 0)
        if not isinstance(value, int) or isinstance(value, bool):
            raise KBError(f"{key} must be an integer")
        counts.append(value)
    return EntityRecord(obj["qid"], obj["name"], tuple(synonyms), description, flag, *counts)


def load_kb(
    path,
    normalizer: Optional[Normalizer] = None,
    disambiguation_markers: Sequence[str] = DISAMBIGUATION_MARKERS,
) -> KBStore:
    """Load a JSONL dump: one entity object per line.

    An entity is a disambiguation page when its ``is_disambiguation`` flag
    is set or its description contains one of ``disambiguation_markers``
    (case-insensitive).
    """
    markers = tuple(m.lower() for m in disambiguation_markers)
    store = KBStore(normalizer=normalizer)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                store.add(_entity_from_json(json.loads(line), markers))
            except (json.JSONDecodeError, KBError) as exc:
                raise KBError(f"line {lineno}: {exc}") from None
    return store


def dump_kb(store: KBStore, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for qid in sorted(store.entities, key=qid_number):
            fh.write(json.dumps(store.entities[qid].to_dict(), ensure_ascii=False) + "\n")


# --- embeddings ------------------------------------------------------------


class EmbeddingStore:
    def __init__(self, dimension: int, vectors: Optional[dict] = None):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension
        self.vectors: dict[str, np.ndarray] = {}
        for word, vec in (vectors or {}).items():
            vec = np.asarray(vec, dtype=np.float64)
            if vec.shape != (dimension,):
                raise ValueError(f"vector for {word!r} has shape {vec.shape}, expected ({dimension},)")
            self.vectors[word] = vec

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def scaled(self, factor: float) -> "EmbeddingStore":
        return EmbeddingStore(self.dimension, {w: v * factor for w, v in self.vectors.items()})


def load_embeddings(path, normalizer: Optional[Normalizer] = None) -> EmbeddingStore:
    """Read a word2vec/fastText text file (``vocab dim`` header, then rows).

    Words are normalized on load; when two words collapse to the same
    norm the first row wins.
    """
    normalizer = normalizer or default_normalizer
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("line 1: expected header 'vocab_size dimension'")
        vocab_size, dim = int(header[0]), int(header[1])
        store = EmbeddingStore(dim)
        n_rows = dup = 0
        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip().split(" ")
            if not parts or parts == [""]:
                continue
            n_rows += 1
            if len(parts) != dim + 1:
                raise ValueError(f"line {lineno}: expected {dim} values, got {len(parts) - 1}")
            word = normalizer(parts[0])
            if word in store.vectors:
                dup += 1
                continue
            try:
                store.vectors[word] = np.array(parts[1:], dtype=np.float64)
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric vector value") from None
    if dup:
        logger.warning("%s: %d duplicate words after normalization, first kept", path, dup)
    if n_rows != vocab_size:
        logger.warning("%s: header declares %d rows, found %d", path, vocab_size, n_rows)
    return store


def embed_phrase(store: EmbeddingStore, tokens: Sequence[str]) -> Optional[np.ndarray]:
    """Mean vector of the in-vocabulary tokens, or ``None`` if there are none."""
    # sorted so the floating-point sum does not depend on token order
    vecs = [store.vectors[t] for t in sorted(tokens) if t in store.vectors]
    if not vecs:
        return None
    return np.mean(vecs, axis=0)
