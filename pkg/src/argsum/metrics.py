"""Automatic metrics and two-annotator agreement aggregation.

All string metrics share one tokenization rule (lowercase, split on
non-alphanumeric; see ``argsum.text.tokenize``). Absolute scores depend on
that rule, so it is documented prominently and never varied per metric.

Novelty is computed over word *types*: a conclusion word duplicated twice
counts once, whether or not it appears in the text.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyConclusionError,
    EmptyTokenListError,
    LengthMismatchError,
    SchemaError,
)
from .text import normalize_ws, tokenize, word_count

ERROR_TYPES = ("WT", "WS", "NA")


@dataclass(frozen=True)
class MetricReport:
    """Scores for one candidate/reference pair."""

    rouge1_f: float
    rouge2_f: float
    rougeL_f: float
    novelty_pct: float
    candidate_len_words: int
    reference_len_words: int
    bertscore_f: float | None = None

    def to_json_dict(self) -> dict:
        out = {
            "rouge1_f": self.rouge1_f,
            "rouge2_f": self.rouge2_f,
            "rougeL_f": self.rougeL_f,
            "novelty_pct": self.novelty_pct,
            "candidate_len_words": self.candidate_len_words,
            "reference_len_words": self.reference_len_words,
        }
        if self.bertscore_f is not None:
            out["bertscore_f"] = self.bertscore_f
        return out


@dataclass(frozen=True)
class AnnotationLabel:
    """One annotator's judgment of one candidate conclusion.

    ``fluent`` and ``too_generic`` are present iff the candidate was judged
    a conclusion; ``error_type`` (WT | WS | NA) iff it was not.
    """

    is_conclusion: bool
    fluent: bool | None = None
    too_generic: bool | None = None
    error_type: str | None = None

    def __post_init__(self):
        if self.is_conclusion:
            if self.fluent is None or self.too_generic is None:
                raise ValueError("conclusion labels need fluent and too_generic")
            if self.error_type is not None:
                raise ValueError("conclusion labels carry no error_type")
        else:
            if self.error_type not in ERROR_TYPES:
                raise ValueError(f"error_type must be one of {ERROR_TYPES}")
            if self.fluent is not None or self.too_generic is not None:
                raise ValueError("non-conclusion labels carry no fluent/too_generic")


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _prf(overlap: float, candidate_total: float, reference_total: float):
    p = overlap / candidate_total if candidate_total else 0.0
    r = overlap / reference_total if reference_total else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def rouge_n(candidate: str, reference: str, n: int) -> tuple[float, float, float]:
    """N-gram multiset overlap; returns (precision, recall, f1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cand = _ngrams(tokenize(candidate), n)
    ref = _ngrams(tokenize(reference), n)
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    return _prf(overlap, sum(cand.values()), sum(ref.values()))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # single-row dynamic program
    if not a or not b:
        return 0
    row = [0] * (len(b) + 1)
    for x in a:
        prev = 0
        for j, y in enumerate(b, start=1):
            cur = row[j]
            row[j] = prev + 1 if x == y else max(row[j], row[j - 1])
            prev = cur
    return row[-1]


def rouge_l(candidate: str, reference: str) -> tuple[float, float, float]:
    """LCS-based overlap; returns (precision, recall, f1)."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    lcs = _lcs_length(cand, ref)
    return _prf(lcs, len(cand), len(ref))


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return matrix / norms


def bertscore_f1(
    candidate_vectors: np.ndarray,
    reference_vectors: np.ndarray,
    baseline: float | None = None,
) -> float:
    """Greedy token-matching F1 over cosine similarities.

    Recall averages, over reference tokens, the best cosine against any
    candidate token; precision is the symmetric quantity. With ``baseline``
    b the score is rescaled as (x - b) / (1 - b).
    """
    cand = np.asarray(candidate_vectors, dtype=float)
    ref = np.asarray(reference_vectors, dtype=float)
    if cand.ndim != 2 or ref.ndim != 2 or cand.shape[0] == 0 or ref.shape[0] == 0:
        raise EmptyTokenListError("both token lists must be non-empty 2-D arrays")
    if cand.shape[1] != ref.shape[1]:
        raise DimensionMismatchError(
            f"token vectors disagree on dim: {cand.shape[1]} vs {ref.shape[1]}"
        )
    sim = _unit_rows(cand) @ _unit_rows(ref).T
    precision = float(sim.max(axis=1).mean())
    recall = float(sim.max(axis=0).mean())
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    if baseline is not None:
        f1 = (f1 - baseline) / (1.0 - baseline)
    return f1


def one_hot_vectors(
    candidate_tokens: Sequence[str], reference_tokens: Sequence[str]
) -> tuple[np.ndarray, np.ndarray]:
    """Exact-match token embedder: identical tokens map to identical one-hot rows."""
    vocab = {t: i for i, t in enumerate(dict.fromkeys([*candidate_tokens, *reference_tokens]))}
    dim = max(len(vocab), 1)

    def rows(tokens: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(tokens), dim))
        for i, tok in enumerate(tokens):
            out[i, vocab[tok]] = 1.0
        return out

    return rows(candidate_tokens), rows(reference_tokens)


def lexical_bertscore(candidate: str, reference: str, baseline: float | None = None) -> float:
    """Degenerate BERTScore with the one-hot exact-match embedder."""
    cand_tokens = tokenize(candidate)
    ref_tokens = tokenize(reference)
    if not cand_tokens or not ref_tokens:
        raise EmptyTokenListError("both texts must tokenize to at least one token")
    cand, ref = one_hot_vectors(cand_tokens, ref_tokens)
    return bertscore_f1(cand, ref, baseline=baseline)


def novelty(conclusion: str, text: str) -> float:
    """Percentage of conclusion word types that do not occur in the text."""
    conclusion_types = set(tokenize(conclusion))
    if not normalize_ws(conclusion) or not conclusion_types:
        raise EmptyConclusionError("conclusion is empty")
    text_types = set(tokenize(text))
    novel = conclusion_types - text_types
    return 100.0 * len(novel) / len(conclusion_types)


def jaccard(a: str, b: str) -> float:
    """Word-type set overlap |A∩B| / |A∪B|; 1.0 when both sets are empty."""
    set_a, set_b = set(tokenize(a)), set(tokenize(b))
    union = set_a | set_b
    if not union:
        return 1.0
    return len(set_a & set_b) / len(union)


def score_pair(
    candidate: str,
    reference: str,
    novelty_source: str | None = None,
    bertscore: float | None = None,
) -> MetricReport:
    """Build a MetricReport for one pair.

    Novelty is measured against ``novelty_source`` (the argumentative text)
    when given, otherwise against the reference conclusion.
    """
    against = novelty_source if novelty_source is not None else reference
    return MetricReport(
        rouge1_f=rouge_n(candidate, reference, 1)[2],
        rouge2_f=rouge_n(candidate, reference, 2)[2],
        rougeL_f=rouge_l(candidate, reference)[2],
        novelty_pct=novelty(candidate, against),
        candidate_len_words=word_count(candidate),
        reference_len_words=word_count(reference),
        bertscore_f=bertscore,
    )


def aggregate_reports(reports: Sequence[MetricReport]) -> dict:
    """Corpus-level means over per-pair reports."""
    if not reports:
        return {}

    def mean(values: list[float]) -> float:
        return sum(values) / len(values)

    out = {
        "n": len(reports),
        "rouge1_f": mean([r.rouge1_f for r in reports]),
        "rouge2_f": mean([r.rouge2_f for r in reports]),
        "rougeL_f": mean([r.rougeL_f for r in reports]),
        "novelty_pct": mean([r.novelty_pct for r in reports]),
        "candidate_len_words": mean([float(r.candidate_len_words) for r in reports]),
        "reference_len_words": mean([float(r.reference_len_words) for r in reports]),
    }
    berts = [r.bertscore_f for r in reports if r.bertscore_f is not None]
    if berts:
        out["bertscore_f"] = mean(berts)
    return out


@dataclass(frozen=True)
class GroupAgreement:
    n: int
    conclusion_pct: float
    informative_pct: float
    error_distribution: dict[str, float]

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "conclusion_pct": self.conclusion_pct,
            "informative_pct": self.informative_pct,
            "error_distribution": dict(self.error_distribution),
        }


def aggregate_agreement(
    labels_a: Sequence[AnnotationLabel],
    labels_b: Sequence[AnnotationLabel],
    groups: Sequence[str],
) -> dict[str, GroupAgreement]:
    """Full-agreement percentages of two annotators, per group.

    conclusion %: both annotators judged the candidate a conclusion.
    informative %: both judged it a conclusion and neither found it too generic.
    error distribution: over items where both gave the same error type,
    normalized to percentages (empty when there is no such item).
    """
    if not (len(labels_a) == len(labels_b) == len(groups)):
        raise LengthMismatchError(
            f"got {len(labels_a)} / {len(labels_b)} labels for {len(groups)} groups"
        )
    by_group: dict[str, list[tuple[AnnotationLabel, AnnotationLabel]]] = {}
    for a, b, group in zip(labels_a, labels_b, groups):
        by_group.setdefault(group, []).append((a, b))

    out: dict[str, GroupAgreement] = {}
    for group, pairs in by_group.items():
        n = len(pairs)
        both_conclusion = [
            (a, b) for a, b in pairs if a.is_conclusion and b.is_conclusion
        ]
        informative = [
            (a, b)
            for a, b in both_conclusion
            if not a.too_generic and not b.too_generic
        ]
        agreed_errors = Counter(
            a.error_type
            for a, b in pairs
            if not a.is_conclusion and not b.is_conclusion and a.error_type == b.error_type
        )
        total_errors = sum(agreed_errors.values())
        distribution = (
            {etype: 100.0 * agreed_errors[etype] / total_errors for etype in ERROR_TYPES if agreed_errors[etype]}
            if total_errors
            else {}
        )
        out[group] = GroupAgreement(
            n=n,
            conclusion_pct=100.0 * len(both_conclusion) / n,
            informative_pct=100.0 * len(informative) / n,
            error_distribution=distribution,
        )
    return out


def read_annotations(path: str | Path) -> tuple[list[AnnotationLabel], list[AnnotationLabel], list[str]]:
    """Load a two-annotator annotation JSONL file.

    Rows carry {"id","annotator","is_conclusion","fluent","too_generic",
    "error_type","group"}; every id must appear exactly once per annotator.
    Returns aligned (labels_a, labels_b, groups), annotators ordered by name.
    """
    rows: list[dict] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=line_no) from exc

    annotators = sorted({str(row.get("annotator")) for row in rows})
    if len(annotators) != 2:
        raise SchemaError(f"expected exactly 2 annotators, found {annotators}")

    def label_of(row: dict) -> AnnotationLabel:
        try:
            return AnnotationLabel(
                is_conclusion=bool(row["is_conclusion"]),
                fluent=row.get("fluent"),
                too_generic=row.get("too_generic"),
                error_type=row.get("error_type"),
            )
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"bad annotation row for id {row.get('id')!r}: {exc}") from exc

    by_item: dict[str, dict[str, dict]] = {}
    order: list[str] = []
    for row in rows:
        item_id = str(row.get("id"))
        if item_id not in by_item:
            by_item[item_id] = {}
            order.append(item_id)
        annotator = str(row.get("annotator"))
        if annotator in by_item[item_id]:
            raise SchemaError(f"duplicate annotation for id {item_id!r} by {annotator!r}")
        by_item[item_id][annotator] = row

    labels_a, labels_b, groups = [], [], []
    for item_id in order:
        per_annotator = by_item[item_id]
        if set(per_annotator) != set(annotators):
            raise LengthMismatchError(f"id {item_id!r} is not labeled by both annotators")
        row_a, row_b = per_annotator[annotators[0]], per_annotator[annotators[1]]
        group_a, group_b = row_a.get("group", ""), row_b.get("group", "")
        if group_a != group_b:
            raise SchemaError(f"id {item_id!r} has conflicting groups: {group_a!r} vs {group_b!r}")
        labels_a.append(label_of(row_a))
        labels_b.append(label_of(row_b))
        groups.append(str(group_a))
    return labels_a, labels_b, groups
