"""
Linking terms to a knowledge base
=================================

Rank knowledge-base candidates for each gold term of the sample, once by
weighted context cosine and once by the popularity baseline.
"""
from importlib import resources
from pathlib import Path

from sciextract import LinkerConfig, Mention, load_embeddings, load_kb, read_annotations
from sciextract.linker import rank_mention

sample = Path(str(resources.files("sciextract").joinpath("data/sample")))
kb = load_kb(sample / "kb.jsonl")
emb = load_embeddings(sample / "embeddings.vec")
ad = read_annotations(sample / "gold.jsonl")[0]
print(f"{len(kb)} entities, {len(emb)} word vectors of dimension {emb.dimension}")

cosine = LinkerConfig(mode="weighted_cosine", context_window=5)
baseline = LinkerConfig(mode="baseline")

for term in ad.terms:
    mention = Mention(ad.document, term.first, term.last, cosine.context_window)
    print(f"\n{mention.text}")
    # score is cosine(context, entity text) times the share of mention tokens matched
    for c in rank_mention(mention, kb, emb, cosine):
        sim = "n/a" if c.raw_similarity is None else f"{c.raw_similarity:.3f}"
        print(f"    cos  {c.qid:>4}  {c.score:6.3f}  sim={sim}  w={c.n_matching}/{c.n_all}  {c.entity.name}")
    # baseline ranks full-string matches by link and relation counts
    for c in rank_mention(mention, kb, None, baseline):
        print(f"    base {c.qid:>4}  {c.score:6.0f}  {c.entity.name}")
