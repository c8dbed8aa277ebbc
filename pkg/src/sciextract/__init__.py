"""Term extraction, relation classification and entity linking for
scientific text.

Typical use::

    from sciextract import tokenize, load_dictionary, dictionary_tag
    doc = tokenize("Метод опорных векторов (SVM) используется ...")
    terms = dictionary_tag(doc, load_dictionary("terms.txt"))
"""
from .corpus import (
    AnnotatedDocument,
    AnnotationError,
    Document,
    LinkAnnotation,
    RelationInstance,
    SuffixNormalizer,
    TermAnnotation,
    Token,
    normalize,
    normalize_phrase,
    read_annotations,
    read_text_dir,
    tokenize,
    write_annotations,
)
from .dictionary import (
    NGramStat,
    TermDictionary,
    dictionary_from_ranked,
    load_dictionary,
    merge,
    mine_ngrams,
    rank_by_tfidf,
    save_dictionary,
)
from .evaluation import (
    LinkingReport,
    MetricsReport,
    linking_inputs,
    linking_metrics,
    relation_metrics,
    term_metrics_exact,
    term_metrics_partial,
)
from .kb import EmbeddingStore, EntityRecord, KBStore, embed_phrase, load_embeddings, load_kb, lookup_exact
from .linker import (
    Candidate,
    CandidateSet,
    LinkerConfig,
    Mention,
    generate_candidates,
    link,
    rank_baseline,
    rank_weighted_cosine,
)
from .relations import Pattern, parse_pattern, RelationLabel, candidate_pairs, classify, extract_all, load_patterns
from .term_tagger import (
    CommandTagger,
    DictionaryTagger,
    WeakSupervisionConfig,
    dictionary_tag,
    merge_annotations,
    repair_boundaries,
    run_weak_supervision,
)

__version__ = "0.1.0"
