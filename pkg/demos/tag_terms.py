"""
Tagging terms with a dictionary and weak supervision
====================================================

Match the curated sample dictionary against the sample corpus, repair the
term boundaries, then run two rounds of weak supervision and print the
result as BIO labels.
"""
from importlib import resources
from pathlib import Path

from sciextract import (
    DictionaryTagger,
    WeakSupervisionConfig,
    dictionary_tag,
    load_dictionary,
    read_text_dir,
    repair_boundaries,
    run_weak_supervision,
)
from sciextract.term_tagger import dump_bio

sample = Path(str(resources.files("sciextract").joinpath("data/sample")))
corpus = read_text_dir(sample / "docs")
dictionary = load_dictionary(sample / "dictionary.txt")
doc = corpus[0]

# longest match wins and matches never overlap
raw = dictionary_tag(doc, dictionary)
for t in raw:
    print(f"[{t.first:2d}, {t.last:2d}]  {doc.span_text(t.first, t.last)}")

# repair drops leading prepositions and pulls in a trailing Latin token
fixed = repair_boundaries(doc, raw)
changed = [(a, b) for a, b in zip(raw, fixed) if a != b]
print(f"repair changed {len(changed)} of {len(raw)} spans")

# the dictionary tagger stands in for a trained sequence model here;
# CommandTagger plugs in any external program with the same interface
tagger = DictionaryTagger(dictionary)
result = run_weak_supervision(corpus, dictionary, tagger, WeakSupervisionConfig(iterations=2))
for s in result.stats:
    print(f"iteration {s.iteration}: {s.terms} terms, {s.changed_documents} documents changed")
print(f"training hook called {tagger.train_calls} times")

print()
print(dump_bio(doc, result.documents[0].terms))
