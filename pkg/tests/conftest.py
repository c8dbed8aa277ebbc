import random
from importlib import resources
from pathlib import Path

import pytest

from sciextract.corpus import AnnotatedDocument, Document, TermAnnotation, Token

SAMPLE = Path(str(resources.files("sciextract").joinpath("data/sample")))
DATA = Path(__file__).parent / "data"


def make_doc(sentences, doc_id="d"):
    """Document from lists of already-normalized words, one list per sentence."""
    tokens, spans, pos, parts = [], [], 0, []
    for words in sentences:
        first = len(tokens)
        for w in words:
            tokens.append(Token(w, pos, pos + len(w), w.lower(), w.isascii() and w.isalpha()))
            parts.append(w)
            pos += len(w) + 1
        spans.append((first, len(tokens) - 1))
    return Document(doc_id, " ".join(parts), tuple(tokens), tuple(spans))


def random_doc(rng: random.Random, vocab, max_tokens=20, doc_id="d"):
    n = rng.randint(1, max_tokens)
    words = [rng.choice(vocab) for _ in range(n)]
    cuts = sorted(rng.sample(range(1, n), k=min(n - 1, rng.randint(0, 3)))) if n > 1 else []
    sentences, prev = [], 0
    for c in cuts + [n]:
        sentences.append(words[prev:c])
        prev = c
    return make_doc(sentences, doc_id)


def random_spans(rng: random.Random, n_tokens, max_spans, overlapping=False):
    spans = set()
    for _ in range(rng.randint(0, max_spans)):
        a = rng.randrange(n_tokens)
        b = min(n_tokens - 1, a + rng.randint(0, 3))
        spans.add((a, b))
    spans = sorted(spans)
    if overlapping:
        return spans
    out, end = [], -1
    for a, b in spans:
        if a > end:
            out.append((a, b))
            end = b
    return out


def annotate(doc, spans, source="gold", **kw):
    return AnnotatedDocument(doc, tuple(TermAnnotation(a, b, source) for a, b in spans), **kw)


@pytest.fixture
def sample_dir():
    return SAMPLE


# Toy linking fixture: lowercase latin words, hand-built 2-d vectors.
TOY_VECTORS = {
    "neural": (1.0, 0.0),
    "network": (0.0, 1.0),
    "deep": (1.0, 1.0),
    "learning": (2.0, 1.0),
    "vector": (1.0, -1.0),
    "support": (-1.0, 1.0),
    "machine": (3.0, 1.0),
    "model": (0.0, 2.0),
    "graph": (-1.0, -1.0),
    "tree": (2.0, -1.0),
    "forest": (1.0, 2.0),
    "random": (-2.0, 1.0),
}

# (qid, name, synonyms, description, num_links, num_relations)
TOY_ENTITIES = [
    ("Q1", "neural network", ("neural net",), "network model", 5, 3),
    ("Q2", "network", (), "graph", 10, 2),
    ("Q3", "deep learning", ("deep neural network",), "learning neural", 4, 4),
    ("Q4", "learning", (), "machine", 9, 1),
    ("Q5", "support vector machine", ("svm",), "vector model", 3, 5),
    ("Q6", "vector", (), "vector", 2, 5),
    ("Q7", "random forest", (), "tree model", 2, 5),
    ("Q8", "forest", (), "tree", 7, 0),
    ("Q9", "network", (), "disambiguation page", 50, 50),
    ("Q10", "machine learning", (), "learning model", 8, 8),
    ("Q11", "pooling", (), "pooling", 1, 1),
    ("Q12", "model", ("neural model",), "model", 0, 0),
    ("Q13", "tree", (), "graph", 1, 2),
    ("Q14", "network model", (), "network", 0, 8),
]

TOY_SENTENCES = [
    ["deep", "neural", "network", "model", "for", "random", "forest"],
    ["support", "vector", "machine", "and", "pooling", "graph", "learning"],
    ["machine", "learning", "tree", "network", "model"],
]

# Every contiguous span of up to four tokens in each sentence.
TOY_MENTIONS = [
    (a, b)
    for first, words in zip((0, 7, 14), TOY_SENTENCES)
    for a in range(first, first + len(words))
    for b in range(a, min(a + 4, first + len(words)))
]


def toy_kb():
    from sciextract.corpus import lowercase_normalizer
    from sciextract.kb import DISAMBIGUATION_MARKERS, EntityRecord, KBStore

    records = [
        EntityRecord(q, n, s, d, any(m in d for m in DISAMBIGUATION_MARKERS), nl, nr)
        for q, n, s, d, nl, nr in TOY_ENTITIES
    ]
    return KBStore(records, normalizer=lowercase_normalizer)


def toy_embeddings():
    from sciextract.kb import EmbeddingStore

    return EmbeddingStore(2, TOY_VECTORS)


def toy_doc():
    return make_doc(TOY_SENTENCES, "toy")


# Random gold/prediction fixtures for the metric oracles.
def random_term_pair(rng: random.Random, n_docs=3, max_annotations=20):
    """Aligned (gold, pred) corpora with at most ``max_annotations`` terms per side."""
    gold, pred = [], []
    for k in range(n_docs):
        doc = random_doc(rng, ["a", "b", "c"], 40, f"d{k}")
        n = len(doc.tokens)
        g = random_spans(rng, n, max_annotations // n_docs)
        p = random_spans(rng, n, max_annotations // n_docs)
        if g and rng.random() < 0.5:
            p = sorted(set(p) | set(rng.sample(g, rng.randint(1, len(g)))))
            p = random_spans_clean(p)
        gold.append(annotate(doc, g))
        pred.append(annotate(doc, p, source="model"))
    return gold, pred


def random_spans_clean(spans):
    out, end = [], -1
    for a, b in sorted(spans):
        if a > end:
            out.append((a, b))
            end = b
    return out


def random_relation_pair(rng: random.Random, labels, max_annotations=20):
    from sciextract.corpus import RelationInstance

    gold, pred = [], []
    for k in range(2):
        doc = random_doc(rng, ["a", "b"], 30, f"d{k}")
        spans = [s for s in random_spans(rng, len(doc.tokens), 8) if doc.sentence_of(s[0]) == doc.sentence_of(s[1])]
        pairs = [
            (x, y) for x in spans for y in spans if x != y and doc.sentence_of(x[0]) == doc.sentence_of(y[0])
        ]
        sides = []
        for _ in range(2):
            chosen = rng.sample(pairs, min(len(pairs), rng.randint(0, max_annotations // 2)))
            sides.append(
                tuple(RelationInstance(x, y, rng.choice(labels), doc.sentence_of(x[0])) for x, y in chosen)
            )
        # make predictions agree with gold part of the time
        if sides[0] and rng.random() < 0.6:
            keep = rng.sample(sides[0], rng.randint(1, len(sides[0])))
            taken = {(r.arg1, r.arg2) for r in keep}
            sides[1] = tuple(keep) + tuple(r for r in sides[1] if (r.arg1, r.arg2) not in taken)
        gold.append(annotate(doc, spans, relations=sides[0]))
        pred.append(annotate(doc, spans, source="model", relations=sides[1]))
    return gold, pred


def random_linking_lists(rng: random.Random, max_terms=20):
    """(gold, candidate sets, predictions) with every prediction drawn from its set."""
    qids = [f"Q{k}" for k in range(1, 9)]
    gold, cands, pred = [], [], []
    for _ in range(rng.randint(0, max_terms)):
        cs = rng.sample(qids, rng.randint(0, 4))
        g = rng.choice(qids + [None, None])
        p = rng.choice(cs + [None]) if cs else None
        gold.append(g)
        cands.append(cs)
        pred.append(p)
    return gold, cands, pred


# Acceptance criteria register their outcome here; the summary hook prints one line each.
ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[key])
