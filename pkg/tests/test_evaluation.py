import random

import pytest

import oracles
from conftest import annotate, make_doc, random_linking_lists, random_relation_pair, random_term_pair
from sciextract.corpus import RELATION_LABELS, LinkAnnotation, RelationInstance
from sciextract.evaluation import (
    MetricsReport,
    f1_score,
    linking_inputs,
    linking_metrics,
    relation_metrics,
    term_metrics_exact,
    term_metrics_partial,
)


def spans_of(corpus):
    return [[t.token_range for t in ad.terms] for ad in corpus]


def doc10():
    return make_doc([[f"t{k}" for k in range(10)]])


def test_exact_identity_and_off_by_one():
    g = [annotate(doc10(), [(0, 1), (4, 6)])]
    assert term_metrics_exact(g, g).prf == (1.0, 1.0, 1.0)
    p = [annotate(doc10(), [(0, 2), (4, 5)])]
    assert term_metrics_exact(g, p).prf == (0.0, 0.0, 0.0)


def test_exact_hand_example():
    g = [annotate(doc10(), [(0, 1), (4, 6)])]
    p = [annotate(doc10(), [(0, 1), (3, 3), (8, 9)])]
    r = term_metrics_exact(g, p)
    assert r.precision == pytest.approx(1 / 3, abs=1e-15)
    assert r.recall == 0.5
    assert r.f1 == pytest.approx(0.4, abs=1e-15)


def test_partial_hand_example():
    # gold tokens {2,3,4,7}; pred tokens {3,4,5,6,7}; overlap {3,4,7}
    g = [annotate(doc10(), [(2, 4), (7, 7)])]
    p = [annotate(doc10(), [(3, 6), (7, 7)])]
    r = term_metrics_partial(g, p)
    assert (r.precision, r.recall) == (0.6, 0.75)
    assert r.f1 == pytest.approx(2 * 0.6 * 0.75 / 1.35, abs=1e-15)


def test_partial_subset():
    g = [annotate(doc10(), [(2, 6)])]
    r = term_metrics_partial(g, [annotate(doc10(), [(3, 4)])])
    assert r.precision == 1.0 and r.recall < 1.0
    assert term_metrics_partial(g, g).prf == (1.0, 1.0, 1.0)


def test_empty_predictions_are_zero():
    g = [annotate(doc10(), [(2, 6)])]
    empty = [annotate(doc10(), [])]
    assert term_metrics_exact(g, empty).prf == (0.0, 0.0, 0.0)
    assert term_metrics_partial(empty, empty).prf == (0.0, 0.0, 0.0)


def test_document_mismatch():
    g = [annotate(doc10(), [])]
    with pytest.raises(ValueError):
        term_metrics_exact(g, [])
    with pytest.raises(ValueError):
        term_metrics_partial(g, [annotate(make_doc([["a"]]), [])])


def test_term_metrics_match_oracle():
    rng = random.Random(21)
    for _ in range(100):
        gold, pred = random_term_pair(rng)
        ex = term_metrics_exact(gold, pred)
        assert ex.prf == pytest.approx(oracles.exact_prf(spans_of(gold), spans_of(pred)), abs=1e-12)
        lengths = [len(ad.document.tokens) for ad in gold]
        pa = term_metrics_partial(gold, pred)
        assert pa.prf == pytest.approx(oracles.partial_prf(lengths, spans_of(gold), spans_of(pred)), abs=1e-12)
        for v in ex.prf + pa.prf:
            assert 0.0 <= v <= 1.0


def test_boundary_errors_cost_more_in_exact_match():
    rng = random.Random(8)
    for _ in range(200):
        doc = make_doc([["w"] * 40])
        gold = [s for s in [(k * 5, k * 5 + rng.randint(0, 2)) for k in range(8)]]
        pred = []
        for a, b in gold:
            move = rng.choice(["keep", "grow", "shrink"])
            if move == "grow":
                b += 1
            elif move == "shrink" and b > a:
                b -= 1
            pred.append((a, b))
        g, p = [annotate(doc, gold)], [annotate(doc, pred)]
        assert term_metrics_exact(g, p).f1 <= term_metrics_partial(g, p).f1 + 1e-15


def rel(a1, a2, label):
    return RelationInstance(a1, a2, label, 0)


def test_relation_label_swap_table():
    doc = doc10()
    spans = [(0, 0), (3, 3), (6, 6)]
    A, B, C = spans
    gold = [annotate(doc, spans, relations=(rel(A, B, "PART-OF"), rel(B, C, "USED-FOR"), rel(A, C, "HYPONYM-OF")))]
    pred = [annotate(doc, spans, relations=(rel(A, B, "PART-OF"), rel(B, C, "USED-FOR"), rel(A, C, "PART-OF")))]
    r = relation_metrics(gold, pred)
    table = {k: v.prf for k, v in r.per_label.items()}
    assert table["PART-OF"] == pytest.approx((0.5, 1.0, 2 / 3), abs=1e-15)
    assert table["USED-FOR"] == (1.0, 1.0, 1.0)
    assert table["HYPONYM-OF"] == (0.0, 0.0, 0.0)
    assert table["COMPARE"] == table["NO-RELATION"] == (0.0, 0.0, 0.0)
    assert r.prf == pytest.approx((0.3, 0.4, 1 / 3), abs=1e-15)
    restricted = relation_metrics(gold, pred, labels=["HYPONYM-OF", "PART-OF", "USED-FOR"])
    assert restricted.prf == pytest.approx((0.5, 2 / 3, 5 / 9), abs=1e-15)
    micro = relation_metrics(gold, pred, average="micro")
    assert micro.prf == pytest.approx((2 / 3, 2 / 3, 2 / 3), abs=1e-15)


def test_relation_identity():
    doc = doc10()
    spans = [(0, 0), (3, 3)]
    g = [annotate(doc, spans, relations=(rel((0, 0), (3, 3), "COMPARE"), rel((3, 3), (0, 0), "USED-FOR")))]
    assert relation_metrics(g, g, labels=["COMPARE", "USED-FOR"]).prf == (1.0, 1.0, 1.0)


def test_all_pairs_counts_unlabelled_pairs_as_negative():
    doc = doc10()
    spans = [(0, 0), (3, 3)]
    gold = [annotate(doc, spans, relations=(rel((0, 0), (3, 3), "PART-OF"),))]
    pred = [annotate(doc, spans, relations=(rel((0, 0), (3, 3), "PART-OF"),))]
    plain = relation_metrics(gold, pred, labels=["NO-RELATION"])
    assert plain.prf == (0.0, 0.0, 0.0)
    full = relation_metrics(gold, pred, labels=["NO-RELATION"], all_pairs=True)
    assert full.prf == (1.0, 1.0, 1.0)
    assert full.per_label["NO-RELATION"].support["gold"] == 1


def test_relation_errors():
    g = [annotate(doc10(), [])]
    with pytest.raises(ValueError):
        relation_metrics(g, g, labels=["SYNONYM"])
    with pytest.raises(ValueError):
        relation_metrics(g, g, average="weighted")


def test_macro_mean_of_rounded_rows():
    # per-label rows rounded to two decimals, and the overall row reported alongside them
    rows = {
        "COMPARE": (0.0, 0.0, 0.0),
        "HYPONYM-OF": (0.14, 0.42, 0.21),
        "NO-RELATION": (0.97, 0.63, 0.76),
        "PART-OF": (0.15, 0.15, 0.15),
        "USED-FOR": (0.09, 0.69, 0.17),
    }
    overall = (0.27, 0.37, 0.25)
    report = MetricsReport(0, 0, 0, {k: MetricsReport(*v) for k, v in rows.items()})
    means = [sum(r.prf[i] for r in report.per_label.values()) / len(rows) for i in range(3)]
    # rounding of the inputs and of the overall row each shift the mean by at most 0.005
    for m, o in zip(means, overall):
        assert abs(m - o) <= 0.0101


def test_relation_metrics_match_oracle():
    rng = random.Random(13)
    for _ in range(100):
        labels = rng.sample(RELATION_LABELS, rng.randint(1, 5))
        gold, pred = random_relation_pair(rng, list(RELATION_LABELS))
        gr = [[(r.arg1, r.arg2, r.label) for r in ad.relations] for ad in gold]
        pr = [[(r.arg1, r.arg2, r.label) for r in ad.relations] for ad in pred]
        for average in ("macro", "micro"):
            got = relation_metrics(gold, pred, labels, average)
            overall, rows = oracles.relation_prf(gr, pr, labels, average)
            assert got.prf == pytest.approx(overall, abs=1e-12)
            for label in labels:
                assert got.per_label[label].prf == pytest.approx(rows[label], abs=1e-12)


def test_linking_four_term_example():
    gold = ["Q1", None, "Q5", None]
    cands = [["Q2", "Q1", "Q3"], [], ["Q5", "Q6"], ["Q7"]]
    pred = ["Q2", None, "Q5", "Q7"]
    r = linking_metrics(gold, cands, pred)
    assert r.accuracy == 0.5
    assert r.linked_accuracy == 0.5
    assert r.averaged_candidates == 1.5
    assert r.linked_averaged_candidates == 2.5
    assert r.top_k_accuracy == 1.0
    assert (r.n_all_entities, r.n_all_linked_entities) == (4, 2)


def test_linking_perfect():
    r = linking_metrics(["Q1", "Q2"], [["Q1"], ["Q2", "Q3"]], ["Q1", "Q2"])
    assert (r.accuracy, r.linked_accuracy, r.top_k_accuracy) == (1.0, 1.0, 1.0)


def test_linking_second_ranked_gold():
    r = linking_metrics(["Q1"], [["Q2", "Q1"]], ["Q2"])
    assert r.top_k_accuracy == 1.0 and r.linked_accuracy == 0.0


def test_linking_errors_and_empty():
    with pytest.raises(ValueError):
        linking_metrics(["Q1"], [], ["Q1"])
    with pytest.raises(ValueError):
        linking_metrics(["Q1"], [["Q2"]], ["Q1"])
    r = linking_metrics([], [], [])
    assert r.accuracy == r.top_k_accuracy == r.averaged_candidates == 0.0


def test_linking_matches_oracle_and_ordering():
    rng = random.Random(17)
    for _ in range(300):
        gold, cands, pred = random_linking_lists(rng)
        r = linking_metrics(gold, cands, pred)
        expected = oracles.linking_numbers(gold, cands, pred)
        got = (r.accuracy, r.linked_accuracy, r.averaged_candidates, r.linked_averaged_candidates, r.top_k_accuracy)
        assert got == pytest.approx(expected, abs=1e-12)
        assert r.linked_accuracy <= r.top_k_accuracy
        assert all(0.0 <= v <= 1.0 for v in (r.accuracy, r.linked_accuracy, r.top_k_accuracy))


def test_linking_inputs_alignment():
    doc = doc10()
    gold = [annotate(doc, [], links=(LinkAnnotation(0, 1, "Q1"), LinkAnnotation(3, 3, None), LinkAnnotation(5, 5, "Q2")))]
    pred = [annotate(doc, [], links=(LinkAnnotation(0, 1, "Q1", ("Q1", "Q4")), LinkAnnotation(3, 3, "Q9")))]
    g, c, p = linking_inputs(gold, pred)
    assert g == ["Q1", None, "Q2"]
    assert c == [("Q1", "Q4"), ("Q9",), ()]
    assert p == ["Q1", "Q9", None]


def test_f1_invariant():
    assert f1_score(0.0, 0.0) == 0.0
    assert f1_score(0.5, 1.0) == pytest.approx(2 / 3)
    assert MetricsReport.from_counts(0, 0, 0).prf == (0.0, 0.0, 0.0)
