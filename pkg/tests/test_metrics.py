from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from argsum.errors import (
    DimensionMismatchError,
    EmptyConclusionError,
    EmptyTokenListError,
    LengthMismatchError,
)
from argsum.metrics import (
    AnnotationLabel,
    aggregate_agreement,
    aggregate_reports,
    bertscore_f1,
    jaccard,
    lexical_bertscore,
    novelty,
    one_hot_vectors,
    rouge_l,
    rouge_n,
    score_pair,
)

CAFFEINE_TEXT = (
    "Caffeine stimulates the nervous system, signaling fat cells to break down "
    "body fat. It also increases epinephrine (adrenaline) levels, a "
    "fight-or-flight hormone preparing the body for physical exertion. With "
    "free body fat acids as fuel, on average, 12% higher performance is attainable."
)


# --- rouge ----------------------------------------------------------------


def test_rouge_n_identity():
    for n in (1, 2, 3):
        assert rouge_n("the same string twice", "the same string twice", n) == (1.0, 1.0, 1.0)


def test_rouge_n_hand_case():
    p, r, f1 = rouge_n("caffeine is good", "caffeine improves physical performance", 1)
    assert (p, r) == (1 / 3, 1 / 4)
    assert f1 == pytest.approx(2 / 7, abs=1e-12)


def test_rouge_n_disjoint():
    assert rouge_n("x y", "a b", 1) == (0.0, 0.0, 0.0)


def test_rouge_l_hand_case():
    p, r, f1 = rouge_l("a b c d", "a c d")
    assert (p, r) == (3 / 4, 1.0)
    assert f1 == pytest.approx(6 / 7, abs=1e-12)


def test_rouge_l_identity_and_disjoint():
    assert rouge_l("alpha beta", "alpha beta") == (1.0, 1.0, 1.0)
    assert rouge_l("x y", "a b") == (0.0, 0.0, 0.0)


def test_rouge_shared_tokenization_ignores_punctuation():
    assert rouge_n("Hello, world!", "hello world", 1) == (1.0, 1.0, 1.0)


def test_rouge_n_clips_duplicates():
    p, r, f1 = rouge_n("a a b", "a b b", 1)
    assert (p, r, f1) == (2 / 3, 2 / 3, pytest.approx(2 / 3))


@given(st.text(max_size=40), st.text(max_size=40))
def test_rouge_precision_recall_swap(a, b):
    assert rouge_n(a, b, 1)[0] == rouge_n(b, a, 1)[1]
    assert rouge_l(a, b)[0] == rouge_l(b, a)[1]


@given(st.text(min_size=1, max_size=40).filter(lambda s: s.strip() and any(c.isalnum() for c in s)))
def test_rouge_l_self_is_perfect(text):
    assert rouge_l(text, text) == (1.0, 1.0, 1.0)


# --- bertscore ------------------------------------------------------------


def test_bertscore_identical_sequences():
    cand, ref = one_hot_vectors(["a", "b", "c"], ["a", "b", "c"])
    assert bertscore_f1(cand, ref) == pytest.approx(1.0, abs=1e-12)


def test_bertscore_orthogonal_tokens():
    cand, ref = one_hot_vectors(["a", "b"], ["c", "d"])
    assert bertscore_f1(cand, ref) == 0.0


def test_bertscore_hand_set_vectors():
    # cosines by hand: c1.r1=0, c1.r2=1, c2.r1=0.8, c2.r2=0.6
    cand = np.array([[1.0, 0.0], [0.6, 0.8]])
    ref = np.array([[0.0, 1.0], [1.0, 0.0]])
    # precision = mean(1, 0.8) = 0.9 ; recall = mean(0.8, 1) = 0.9 ; f1 = 0.9
    assert bertscore_f1(cand, ref) == pytest.approx(0.9, abs=1e-12)


def test_bertscore_rescaled_by_baseline():
    cand, ref = one_hot_vectors(["a"], ["a"])
    assert bertscore_f1(cand, ref, baseline=0.5) == pytest.approx(1.0, abs=1e-12)
    cand, ref = one_hot_vectors(["a"], ["b"])
    assert bertscore_f1(cand, ref, baseline=0.5) == pytest.approx(-1.0, abs=1e-12)


def test_bertscore_errors():
    with pytest.raises(EmptyTokenListError):
        bertscore_f1(np.zeros((0, 2)), np.ones((1, 2)))
    with pytest.raises(DimensionMismatchError):
        bertscore_f1(np.ones((1, 2)), np.ones((1, 3)))


def membership_f1(candidate_tokens, reference_tokens):
    """Oracle: per-token set-membership precision/recall."""
    ref_set, cand_set = set(reference_tokens), set(candidate_tokens)
    p = sum(1 for t in candidate_tokens if t in ref_set) / len(candidate_tokens)
    r = sum(1 for t in reference_tokens if t in cand_set) / len(reference_tokens)
    return 2 * p * r / (p + r) if p + r else 0.0


def test_one_hot_bertscore_degenerates_to_membership_f1_with_duplicates():
    rng = np.random.default_rng(11)
    vocab = [f"t{i}" for i in range(12)]
    for _ in range(50):
        cand = list(rng.choice(vocab, size=rng.integers(1, 9)))
        ref = list(rng.choice(vocab, size=rng.integers(1, 9)))
        vectors = one_hot_vectors(cand, ref)
        assert bertscore_f1(*vectors) == pytest.approx(membership_f1(cand, ref), abs=1e-9)


def test_lexical_bertscore_uses_shared_tokenizer():
    assert lexical_bertscore("Hello, world!", "hello world") == pytest.approx(1.0, abs=1e-12)


# --- novelty and jaccard ----------------------------------------------------


def test_novelty_fully_contained():
    assert novelty("body fat", "free body fat acids") == 0.0


def test_novelty_fully_disjoint():
    assert novelty("alpha beta", "gamma delta") == 100.0


def test_novelty_caffeine_case():
    assert novelty("caffeine improves physical performance", CAFFEINE_TEXT) == 25.0


def test_novelty_counts_types_not_tokens():
    # "new" appears twice in the conclusion but counts once
    assert novelty("new new old", "the old stuff") == pytest.approx(100.0 / 2)


def test_novelty_case_insensitive():
    assert novelty("Caffeine", "caffeine is fine") == 0.0


def test_novelty_empty_conclusion():
    with pytest.raises(EmptyConclusionError):
        novelty("   ", "some text")


def test_jaccard_hand_case():
    assert jaccard("a b", "b c") == pytest.approx(1 / 3)


def test_jaccard_identity_and_disjoint():
    assert jaccard("x y z", "x y z") == 1.0
    assert jaccard("x", "y") == 0.0


def test_jaccard_both_empty():
    assert jaccard("", "") == 1.0


@given(st.text(max_size=30), st.text(max_size=30))
def test_jaccard_symmetric(a, b):
    assert jaccard(a, b) == jaccard(b, a)


# --- reports ----------------------------------------------------------------


def test_score_pair_report_fields():
    report = score_pair("caffeine is good", "caffeine improves physical performance")
    assert report.rouge1_f == pytest.approx(2 / 7)
    assert report.candidate_len_words == 3
    assert report.reference_len_words == 4
    assert report.bertscore_f is None


def test_score_pair_novelty_against_source_text():
    report = score_pair(
        "caffeine improves physical performance",
        "caffeine is good",
        novelty_source=CAFFEINE_TEXT,
    )
    assert report.novelty_pct == 25.0


def test_aggregate_reports_means():
    reports = [
        score_pair("a b", "a b"),
        score_pair("x y", "a b"),
    ]
    aggregate = aggregate_reports(reports)
    assert aggregate["n"] == 2
    assert aggregate["rouge1_f"] == pytest.approx(0.5)


# --- annotation labels and agreement ----------------------------------------


def conclusion_label(fluent=True, too_generic=False):
    return AnnotationLabel(is_conclusion=True, fluent=fluent, too_generic=too_generic)


def error_label(error_type="NA"):
    return AnnotationLabel(is_conclusion=False, error_type=error_type)


def test_annotation_label_invariants():
    with pytest.raises(ValueError):
        AnnotationLabel(is_conclusion=True)  # missing fluent/too_generic
    with pytest.raises(ValueError):
        AnnotationLabel(is_conclusion=False)  # missing error_type
    with pytest.raises(ValueError):
        AnnotationLabel(is_conclusion=False, error_type="XX")
    with pytest.raises(ValueError):
        AnnotationLabel(is_conclusion=True, fluent=True, too_generic=False, error_type="NA")


def test_agreement_all_conclusions():
    labels = [conclusion_label() for _ in range(10)]
    table = aggregate_agreement(labels, labels, ["g"] * 10)
    assert table["g"].conclusion_pct == 100.0
    assert table["g"].informative_pct == 100.0
    assert table["g"].error_distribution == {}


def test_agreement_full_disagreement():
    labels_a = [conclusion_label() for _ in range(6)]
    labels_b = [error_label("NA") for _ in range(6)]
    table = aggregate_agreement(labels_a, labels_b, ["g"] * 6)
    assert table["g"].conclusion_pct == 0.0
    assert table["g"].error_distribution == {}


def test_agreement_informative_requires_not_generic_for_both():
    labels_a = [conclusion_label(too_generic=False), conclusion_label(too_generic=False)]
    labels_b = [conclusion_label(too_generic=True), conclusion_label(too_generic=False)]
    table = aggregate_agreement(labels_a, labels_b, ["g", "g"])
    assert table["g"].conclusion_pct == 100.0
    assert table["g"].informative_pct == 50.0


def test_agreement_error_distribution_normalized():
    labels_a = [error_label("WT"), error_label("WT"), error_label("WS"), error_label("NA")]
    labels_b = [error_label("WT"), error_label("WS"), error_label("WS"), error_label("WT")]
    # agreement on errors: item0 WT, item2 WS -> 50/50
    table = aggregate_agreement(labels_a, labels_b, ["g"] * 4)
    assert table["g"].error_distribution == {"WT": 50.0, "WS": 50.0}


def test_agreement_groups_split():
    labels_a = [conclusion_label(), error_label()]
    labels_b = [conclusion_label(), error_label()]
    table = aggregate_agreement(labels_a, labels_b, ["cmv", "debates"])
    assert table["cmv"].conclusion_pct == 100.0
    assert table["debates"].conclusion_pct == 0.0


def test_agreement_length_mismatch():
    with pytest.raises(LengthMismatchError):
        aggregate_agreement([conclusion_label()], [], ["g"])
