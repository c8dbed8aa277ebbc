"""Precision/recall/F1 for terms and relations, and entity-linking metrics.

Zero denominators give 0 everywhere.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .corpus import RELATION_LABELS, AnnotatedDocument
from .relations import sentence_pairs


def safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass
class MetricsReport:
    precision: float
    recall: float
    f1: float
    per_label: dict = field(default_factory=dict)
    support: dict = field(default_factory=dict)

    @classmethod
    def from_counts(cls, tp: int, n_pred: int, n_gold: int) -> "MetricsReport":
        p, r = safe_div(tp, n_pred), safe_div(tp, n_gold)
        return cls(p, r, f1_score(p, r), support={"tp": tp, "pred": n_pred, "gold": n_gold})

    @property
    def prf(self) -> tuple[float, float, float]:
        return (self.precision, self.recall, self.f1)

    def to_dict(self) -> dict:
        out = {"precision": self.precision, "recall": self.recall, "f1": self.f1}
        out.update({f"support_{k}": v for k, v in self.support.items()})
        for label, rep in self.per_label.items():
            out[f"{label}_precision"] = rep.precision
            out[f"{label}_recall"] = rep.recall
            out[f"{label}_f1"] = rep.f1
            out[f"{label}_support"] = rep.support.get("gold", 0)
        return out


@dataclass
class LinkingReport:
    accuracy: float
    linked_accuracy: float
    averaged_candidates: float
    linked_averaged_candidates: float
    top_k_accuracy: float
    n_all_entities: int
    n_all_linked_entities: int

    def to_dict(self) -> dict:
        return asdict(self)


def _check_aligned(gold: Sequence[AnnotatedDocument], pred: Sequence[AnnotatedDocument]) -> None:
    if len(gold) != len(pred):
        raise ValueError(f"gold has {len(gold)} documents, prediction has {len(pred)}")
    for g, p in zip(gold, pred):
        if g.id != p.id or len(g.document.tokens) != len(p.document.tokens):
            raise ValueError(f"document mismatch: gold {g.id!r} vs pred {p.id!r}")


def term_metrics_exact(gold: Sequence[AnnotatedDocument], pred: Sequence[AnnotatedDocument]) -> MetricsReport:
    """A predicted term counts only if its token range equals a gold range."""
    _check_aligned(gold, pred)
    tp = n_pred = n_gold = 0
    for g, p in zip(gold, pred):
        gs = {t.token_range for t in g.terms}
        ps = {t.token_range for t in p.terms}
        tp += len(gs & ps)
        n_pred += len(ps)
        n_gold += len(gs)
    return MetricsReport.from_counts(tp, n_pred, n_gold)


def _in_term_mask(ad: AnnotatedDocument) -> list[bool]:
    mask = [False] * len(ad.document.tokens)
    for t in ad.terms:
        for i in range(t.first, t.last + 1):
            mask[i] = True
    return mask


def term_metrics_partial(gold: Sequence[AnnotatedDocument], pred: Sequence[AnnotatedDocument]) -> MetricsReport:
    """Token-level scores: a token is positive when tagged B-TERM or I-TERM."""
    _check_aligned(gold, pred)
    tp = n_pred = n_gold = 0
    for g, p in zip(gold, pred):
        gm, pm = _in_term_mask(g), _in_term_mask(p)
        tp += sum(a and b for a, b in zip(gm, pm))
        n_pred += sum(pm)
        n_gold += sum(gm)
    return MetricsReport.from_counts(tp, n_pred, n_gold)


def _relation_items(docs, labels, universe=None):
    items = set()
    for k, ad in enumerate(docs):
        labelled = {}
        for r in ad.relations:
            if r.label not in RELATION_LABELS:
                raise ValueError(f"unknown relation label {r.label!r}")
            labelled[(r.arg1, r.arg2)] = r.label
        if universe is not None:
            for pair in universe[k]:
                labelled.setdefault(pair, "NO-RELATION")
        for (a1, a2), label in labelled.items():
            if label in labels:
                items.add((k, a1, a2, label))
    return items


def relation_metrics(
    gold: Sequence[AnnotatedDocument],
    pred: Sequence[AnnotatedDocument],
    labels: Sequence[str] = RELATION_LABELS,
    average: str = "macro",
    all_pairs: bool = False,
) -> MetricsReport:
    """Per-label and overall P/R/F1 for relation instances.

    An instance matches when both argument ranges and the label agree.
    Only ``labels`` are evaluated.  ``average="macro"`` takes the plain
    mean of the per-label precision, recall and F1; ``"micro"`` pools the
    counts.  With ``all_pairs`` every same-sentence ordered pair of gold
    terms not carrying a relation on a side counts as NO-RELATION there.
    """
    for label in labels:
        if label not in RELATION_LABELS:
            raise ValueError(f"unknown relation label {label!r}")
    if average not in ("macro", "micro"):
        raise ValueError("average must be 'macro' or 'micro'")
    _check_aligned(gold, pred)
    universe = [sentence_pairs(g) for g in gold] if all_pairs else None
    g_items = _relation_items(gold, set(labels), universe)
    p_items = _relation_items(pred, set(labels), universe)
    per_label = {}
    tp_all = np_all = ng_all = 0
    for label in labels:
        g = {x for x in g_items if x[3] == label}
        p = {x for x in p_items if x[3] == label}
        tp = len(g & p)
        per_label[label] = MetricsReport.from_counts(tp, len(p), len(g))
        tp_all, np_all, ng_all = tp_all + tp, np_all + len(p), ng_all + len(g)
    if average == "micro":
        report = MetricsReport.from_counts(tp_all, np_all, ng_all)
        report.per_label = per_label
        return report
    n = len(labels)
    precision = safe_div(sum(r.precision for r in per_label.values()), n)
    recall = safe_div(sum(r.recall for r in per_label.values()), n)
    f1 = safe_div(sum(r.f1 for r in per_label.values()), n)
    return MetricsReport(precision, recall, f1, per_label, {"tp": tp_all, "pred": np_all, "gold": ng_all})


def linking_metrics(
    gold_links: Sequence[Optional[str]],
    candidate_sets: Sequence[Sequence[str]],
    pred_links: Sequence[Optional[str]],
) -> LinkingReport:
    """The five linking metrics over aligned per-term lists.

    ``gold_links[i]`` is the gold qid of term i (``None`` if the term has no
    KB entity), ``candidate_sets[i]`` the generated candidate qids and
    ``pred_links[i]`` the predicted qid or ``None``.
    """
    n = len(gold_links)
    if len(candidate_sets) != n or len(pred_links) != n:
        raise ValueError(
            f"length mismatch: {n} gold, {len(candidate_sets)} candidate sets, {len(pred_links)} predictions"
        )
    correct = linked = correct_linked = in_set = 0
    total_cands = linked_cands = 0
    for gold, cands, pred in zip(gold_links, candidate_sets, pred_links):
        if pred is not None and pred not in cands:
            raise ValueError(f"prediction {pred} is not among its candidates")
        total_cands += len(cands)
        if pred == gold:
            correct += 1
        if gold is not None:
            linked += 1
            linked_cands += len(cands)
            correct_linked += pred == gold
            in_set += gold in cands
    return LinkingReport(
        accuracy=safe_div(correct, n),
        linked_accuracy=safe_div(correct_linked, linked),
        averaged_candidates=safe_div(total_cands, n),
        linked_averaged_candidates=safe_div(linked_cands, linked),
        top_k_accuracy=safe_div(in_set, linked),
        n_all_entities=n,
        n_all_linked_entities=linked,
    )


def linking_inputs(gold: Sequence[AnnotatedDocument], pred: Sequence[AnnotatedDocument]):
    """Align gold and predicted links by token range.

    Every gold link (including ``qid: null`` ones) is one evaluated term.
    A gold term without a predicted link counts as unlinked with no
    candidates.
    """
    _check_aligned(gold, pred)
    gold_links, cand_sets, pred_links = [], [], []
    for g, p in zip(gold, pred):
        by_range = {link.token_range: link for link in p.links}
        for link in g.links:
            hit = by_range.get(link.token_range)
            gold_links.append(link.qid)
            if hit is None:
                cand_sets.append(())
                pred_links.append(None)
            else:
                cands = hit.candidates if hit.candidates is not None else ((hit.qid,) if hit.qid else ())
                cand_sets.append(tuple(cands))
                pred_links.append(hit.qid)
    return gold_links, cand_sets, pred_links
