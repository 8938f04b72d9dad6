from __future__ import annotations

import numpy as np
import pytest

from argsum.embedding import LexicalSentenceEmbedder, LexicalVocabulary, cosine, embed_lexical
from argsum.errors import (
    EmbeddingFailureError,
    IndexNotBuiltError,
    ProviderUnreachableError,
)
from argsum.extraction import (
    ContextIndex,
    ExtractionParams,
    ParaphraseResult,
    Sentence,
    SentenceGraph,
    extract_conclusion,
    pagerank,
    paraphrase,
    rank_sentences,
    retrieve_context,
    segment_sentences,
)
from argsum.records import ArgConclusionRecord, SourceKind


def record(text, rid="r1", conclusion="a conclusion here"):
    return ArgConclusionRecord(
        id=rid, source=SourceKind.CMV_POST, text=text, conclusion=conclusion
    )


# --- segmentation ---------------------------------------------------------

SEGMENTATION_FIXTURES = [
    ("A. B? C!", ["A.", "B?", "C!"]),
    ("I drank 2.5 liters. Then slept.", ["I drank 2.5 liters.", "Then slept."]),
    ("single sentence without terminal punctuation", ["single sentence without terminal punctuation"]),
    ("Dr. Smith agrees. That settles it.", ["Dr. Smith agrees.", "That settles it."]),
    ("We met at 5 p.m. yesterday.", ["We met at 5 p.m. yesterday."]),
    ('He said "stop." Then left.', ['He said "stop."', "Then left."]),
    ("e.g. apples are good. Oranges too.", ["e.g. apples are good.", "Oranges too."]),
    ("First line\nsecond line", ["First line", "second line"]),
    ("Wait... what? Nothing.", ["Wait... what?", "Nothing."]),
    ("Is this it? Yes! Fine.", ["Is this it?", "Yes!", "Fine."]),
    ("Numbers like 3.14 stay. 2.71 does too.", ["Numbers like 3.14 stay.", "2.71 does too."]),
]


@pytest.mark.parametrize("text,expected", SEGMENTATION_FIXTURES)
def test_segmentation_fixture_suite(text, expected):
    assert segment_sentences(text) == expected


@pytest.mark.parametrize("text,_", SEGMENTATION_FIXTURES)
def test_segmentation_preserves_content(text, _):
    segments = segment_sentences(text)
    assert all(segments)
    assert " ".join(" ".join(segments).split()) == " ".join(text.split())


def test_segmentation_rejects_empty():
    with pytest.raises(ValueError):
        segment_sentences("   ")


# --- retrieval ------------------------------------------------------------


def toy_corpus():
    return [
        record("the cat sat on the mat", "a"),
        record("dogs chase cats in the park", "b"),
        record("quantum entanglement defies locality", "c"),
        record("the cat chased a mouse on the mat", "d"),
    ]


def brute_force_bm25(query_text, records, exclude_id, k1=1.5, b=0.75):
    import math

    docs = [r.text.lower().split() for r in records]
    n = len(docs)
    avg_len = sum(len(d) for d in docs) / n
    df = {}
    for doc in docs:
        for term in set(doc):
            df[term] = df.get(term, 0) + 1
    scores = []
    for i, doc in enumerate(docs):
        if records[i].id == exclude_id:
            continue
        score = 0.0
        for term in query_text.lower().split():
            count = doc.count(term)
            if not count:
                continue
            idf = math.log(1.0 + (n - df[term] + 0.5) / (df[term] + 0.5))
            score += idf * count * (k1 + 1) / (count + k1 * (1 - b + b * len(doc) / avg_len))
        scores.append((-score, i))
    scores.sort()
    return [records[i] for _, i in scores]


def test_retrieval_matches_brute_force():
    corpus = toy_corpus()
    index = ContextIndex().build(corpus)
    got = retrieve_context(corpus[0], index, 3)
    expected = brute_force_bm25(corpus[0].text, corpus, corpus[0].id)[:3]
    assert [r.id for r in got] == [r.id for r in expected]
    assert got[0].id == "d"  # shares the query terms


def test_retrieval_k_zero():
    corpus = toy_corpus()
    index = ContextIndex().build(corpus)
    assert retrieve_context(corpus[0], index, 0) == []


def test_retrieval_excludes_self():
    only = record("just one argument in the corpus", "solo")
    index = ContextIndex().build([only])
    assert retrieve_context(only, index, 5) == []


def test_retrieval_requires_built_index():
    with pytest.raises(IndexNotBuiltError):
        ContextIndex().query(record("x"), 3)


# --- pagerank -------------------------------------------------------------


def graph_of(weights, tolerance=1e-12, max_iterations=1000, damping=0.85):
    weights = np.asarray(weights, dtype=float)
    sentences = [Sentence(f"s{i}", "target_argument", i) for i in range(weights.shape[0])]
    return SentenceGraph(
        sentences=sentences,
        weights=weights,
        damping=damping,
        tolerance=tolerance,
        max_iterations=max_iterations,
    )


def solve_stationary(weights, damping):
    """Independent oracle: solve (I - d T) s = (1-d)/n 1 directly."""
    weights = np.asarray(weights, dtype=float)
    n = weights.shape[0]
    transition = np.empty((n, n))
    for j in range(n):
        total = weights[:, j].sum()
        transition[:, j] = weights[:, j] / total if total > 0 else 1.0 / n
    return np.linalg.solve(np.eye(n) - damping * transition, np.full(n, (1 - damping) / n))


def test_complete_graph_uniform_scores():
    result = pagerank(graph_of(np.ones((4, 4)) - np.eye(4)))
    np.testing.assert_allclose(result.scores, 0.25, atol=1e-9)
    assert result.converged


def test_single_node_scores_one():
    result = pagerank(graph_of(np.zeros((1, 1))))
    assert result.scores[0] == pytest.approx(1.0, abs=1e-12)


def test_three_node_chain_matches_direct_solution():
    weights = np.array([[0, 0.8, 0], [0.8, 0, 0.3], [0, 0.3, 0]])
    result = pagerank(graph_of(weights))
    np.testing.assert_allclose(result.scores, solve_stationary(weights, 0.85), atol=1e-8)


def test_dangling_node_handled():
    weights = np.zeros((3, 3))
    weights[0, 1] = weights[1, 0] = 1.0  # node 2 isolated
    result = pagerank(graph_of(weights))
    assert result.scores.sum() == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(result.scores, solve_stationary(weights, 0.85), atol=1e-8)
    assert result.scores[2] < result.scores[0]


def test_zero_matrix_uniform():
    result = pagerank(graph_of(np.zeros((3, 3))))
    np.testing.assert_allclose(result.scores, 1 / 3, atol=1e-9)


def test_max_iterations_flags_no_convergence():
    weights = np.array([[0, 0.8, 0], [0.8, 0, 0.3], [0, 0.3, 0]])
    result = pagerank(graph_of(weights, tolerance=1e-30, max_iterations=3))
    assert not result.converged
    assert result.iterations == 3
    assert result.scores.sum() == pytest.approx(1.0, abs=1e-9)


def test_graph_invariants_enforced():
    sentences = [Sentence("s", "target_argument", 0), Sentence("t", "context", 1)]
    with pytest.raises(ValueError, match="symmetric"):
        SentenceGraph(sentences=sentences, weights=np.array([[0, 1.0], [0.5, 0]]))
    with pytest.raises(ValueError, match="diagonal"):
        SentenceGraph(sentences=sentences, weights=np.array([[0.5, 1.0], [1.0, 0]]))
    with pytest.raises(ValueError, match="target-argument"):
        SentenceGraph(
            sentences=[Sentence("s", "context", 0)], weights=np.zeros((1, 1))
        )


def test_rank_sentences_tie_breaks_by_index():
    assert rank_sentences(np.array([0.2, 0.5, 0.2, 0.1])) == [
        (1, 0.5),
        (0, 0.2),
        (2, 0.2),
        (3, 0.1),
    ]


# --- extraction -----------------------------------------------------------


def test_single_sentence_argument_returns_it():
    result = extract_conclusion(record("Only one sentence here."), [])
    assert result.conclusion_sentence == "Only one sentence here."
    assert result.ranked[0][0] == 0


def test_duplicated_sentence_wins():
    argument = record(
        "Cats are aloof pets. Coffee improves morning focus. Rain falls in spring.",
        "arg",
    )
    context = [
        record("Coffee improves morning focus. Noise words here.", f"ctx{i}")
        for i in range(4)
    ]
    result = extract_conclusion(argument, context)
    assert result.conclusion_sentence == "Coffee improves morning focus."

    # oracle: explicit similarity matrix + direct linear solve
    sentences = segment_sentences(argument.text)
    origins = ["target"] * len(sentences)
    for doc in context:
        for s in segment_sentences(doc.text):
            sentences.append(s)
            origins.append("context")
    vocab = LexicalVocabulary.fit(sentences)
    vectors = embed_lexical(sentences, vocab)
    n = len(sentences)
    weights = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if vectors[i].values.any() and vectors[j].values.any():
                weights[i, j] = weights[j, i] = max(0.0, cosine(vectors[i], vectors[j]))
    scores = solve_stationary(weights, 0.85)
    best_target = max(
        (i for i in range(n) if origins[i] == "target"), key=lambda i: (scores[i], -i)
    )
    assert result.conclusion_sentence == sentences[best_target]


def test_scores_sum_to_one_and_ranked_sorted():
    result = extract_conclusion(
        record("One thing. Another thing. A third thing."),
        [record("Unrelated noise text entirely.", "c1")],
    )
    total = sum(score for _, score in result.ranked)
    assert total == pytest.approx(1.0, abs=1e-6)
    scores = [score for _, score in result.ranked]
    assert scores == sorted(scores, reverse=True)


def test_context_sentence_never_returned():
    argument = record("Olives taste bitter. Winters feel long.", "arg")
    # context forms a dominant clique that must still not be returned
    context = [record("Zebras gallop fast. Zebras gallop fast.", f"c{i}") for i in range(5)]
    result = extract_conclusion(argument, context)
    assert result.conclusion_sentence in {"Olives taste bitter.", "Winters feel long."}


class FailingEmbedder:
    def embed_batch(self, texts):
        raise RuntimeError("boom")


def test_embedding_failure_propagates():
    with pytest.raises(EmbeddingFailureError):
        extract_conclusion(record("A sentence."), [], embedder=FailingEmbedder())


# --- paraphrase -----------------------------------------------------------


def test_paraphrase_identity_fallback_when_unconfigured():
    outcome = paraphrase("Leave me unchanged.", None)
    assert outcome == ParaphraseResult(text="Leave me unchanged.", used_fallback=True)


def test_paraphrase_empty_sentence_rejected():
    with pytest.raises(ValueError):
        paraphrase("   ", None)


class DeadProvider:
    def paraphrase(self, text):
        raise ProviderUnreachableError("down")


def test_paraphrase_dead_provider_falls_back():
    outcome = paraphrase("Some sentence.", DeadProvider())
    assert outcome.used_fallback and outcome.text == "Some sentence."


def test_paraphrase_dead_provider_strict_raises():
    with pytest.raises(ProviderUnreachableError):
        paraphrase("Some sentence.", DeadProvider(), allow_fallback=False)


class EchoProvider:
    def paraphrase(self, text):
        return ParaphraseResult(text=text[::-1], used_fallback=False, model_id="echo/1")

    # providers may return plain strings or result objects


def test_paraphrase_provider_output_used():
    outcome = paraphrase("abc def.", EchoProvider())
    assert outcome.text == ".fed cba" and not outcome.used_fallback


def test_extract_with_paraphrase_flag():
    result = extract_conclusion(
        record("Only one sentence here."), [], apply_paraphrase=True
    )
    assert result.paraphrased == "Only one sentence here."
    assert result.paraphrase_fallback
