"""
Mining a term dictionary with TF-IDF
====================================

Count the 2-, 3- and 4-grams of the bundled sample corpus, rank them by
TF-IDF and keep the best ones as a starter term dictionary.
"""
from importlib import resources
from pathlib import Path

from sciextract import dictionary_from_ranked, load_dictionary, mine_ngrams, rank_by_tfidf, read_text_dir

sample = Path(str(resources.files("sciextract").joinpath("data/sample")))
corpus = read_text_dir(sample / "docs")
print(f"{len(corpus)} documents, {sum(len(d.tokens) for d in corpus)} tokens")

# n-grams are built from normalized tokens and never cross a sentence
stats = mine_ngrams(corpus, {2, 3, 4})
ranked = rank_by_tfidf(stats, len(corpus))

for s in ranked[:10]:
    print(f"{s.tfidf:7.3f}  tf={s.tf} df={s.df}  {s.text}")

# an n-gram seen in every document would score ln(1) = 0
print("zero-scored:", sum(s.tfidf == 0 for s in ranked))

# keep the top 15 and see how many a human curator also chose
mined = dictionary_from_ranked(ranked, top=15)
curated = load_dictionary(sample / "dictionary.txt")
print(f"mined {len(mined)} entries, {len(mined.entries & curated.entries)} also in the curated list")
