"""
Extracting relations with lexical patterns
==========================================

Sample candidate term pairs from the gold sample annotations and label
them with the bundled patterns.  A pattern is a token sequence with the
``ARG1`` and ``ARG2`` slots marking where the two terms sit.
"""
from importlib import resources
from pathlib import Path

from sciextract import candidate_pairs, extract_all, load_patterns, parse_pattern, read_annotations

sample = Path(str(resources.files("sciextract").joinpath("data/sample")))
gold = read_annotations(sample / "gold.jsonl")
patterns = load_patterns()
print(f"{len(patterns)} bundled patterns")

# a pattern line is LABEL, a colon, then words, ARG slots and *k gaps of up to k tokens
custom = parse_pattern("USED-FOR : ARG1 применяется *1 для ARG2")
print(custom.label.value, custom.elements)

for ad in gold:
    # gold pairs always survive; the rest are thinned by distance and a seeded draw
    pairs = candidate_pairs(ad, max_distance=10, sample_rate=0.5, seed=f"0:{ad.id}")
    found = extract_all(ad, patterns + [custom], pairs)
    print(f"{ad.id}: {len(pairs)} candidate pairs, {len(found)} relations")
    doc = ad.document
    for r in found:
        print(f"    {doc.span_text(*r.arg1)!r} {r.label} {doc.span_text(*r.arg2)!r}")
