from dataclasses import replace

import pytest
import numpy as np
from numpy.testing import assert_allclose

from core.config import SummaryConfig
from core.corpus import LabelSpace, SummarySet
from core.inference_engine import predict_corpus
from core.scoring_engine import Configuration, Weights
from core.summary_engine import (
    SYSTEMS,
    baseline_avg_word_score,
    baseline_centroid_da,
    baseline_longest_da,
    centroid_scores,
    cosine_matrix,
    evaluate_summaries,
    reference_texts,
    summarize,
    system_summaries,
    term_matrix,
)


class TestModelSummary:
    """Concatenated phrase summaries."""

    def test_discussion_order(self, toy_prepared):
        text = summarize(toy_prepared[0], Configuration((1, 1, 0, 1), (-1, 0, 0)))
        assert text == "need a battery, the battery, use solar power"

    def test_length_is_total_phrase_length(self, toy_prepared):
        prepared = toy_prepared[0]
        c = (1, 1, 1, 1)
        text = summarize(prepared, Configuration(c, (-1, 0, 0)))
        assert len(text.split()) == sum(candidate.word_count for candidate in prepared.candidates)

    def test_nothing_selected(self, toy_prepared):
        assert summarize(toy_prepared[1], Configuration((0, 0), (-1, 0))) == ""


class TestBaselines:

    def test_longest_unit_earliest_on_ties(self, toy_discussions):
        assert baseline_longest_da(toy_discussions[0]) == "we need a battery"
        assert baseline_longest_da(toy_discussions[1]) == "solar panels help"

    def test_centroid(self, toy_discussions, toy_stats):
        assert_allclose(centroid_scores(toy_discussions[0], toy_stats), [1.5, 1.5, 1.0])
        assert baseline_centroid_da(toy_discussions[0], toy_stats) == "we need a battery"

    def test_term_matrix_skips_stopwords(self, toy_discussions, toy_stats):
        matrix, lemmas = term_matrix(toy_discussions[0], toy_stats)
        assert lemmas == ["battery", "expensive", "need", "power", "solar", "use"]
        assert matrix.shape == (3, 6)
        assert matrix[1, lemmas.index("battery")] == pytest.approx(toy_stats.idf_of("battery"))

    def test_cosine_of_empty_rows_is_zero(self):
        similarities = cosine_matrix(np.array([[3.0, 4.0], [0.0, 0.0], [6.0, 8.0]]))
        assert_allclose(similarities, [[1.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 1.0]])

    def test_avg_word_score(self, toy_prepared, toy_stats):
        prepared = toy_prepared[0]
        assert baseline_avg_word_score(prepared, toy_stats, 0) == ""
        assert baseline_avg_word_score(prepared, toy_stats, 1) == "the battery"
        assert baseline_avg_word_score(prepared, toy_stats, 2) == "need a battery, the battery"

    def test_system_summaries(self, toy_prepared, toy_stats):
        summaries = system_summaries(toy_prepared[0], Configuration((0, 1, 0, 0), (-1, 0, 0)), toy_stats)
        assert tuple(summaries) == SYSTEMS
        assert summaries["model"] == summaries["avg_word_score"] == "the battery"


class TestReferences:

    def test_reference_types(self, toy_discussions):
        assert reference_texts(toy_discussions[0]) == ["They discussed the battery."]
        assert reference_texts(toy_discussions[0], "extractive") == ["we need a battery"]

    def test_unknown_reference(self, toy_discussions):
        with pytest.raises(ValueError):
            reference_texts(toy_discussions[0], "participant")


class TestEvaluation:

    @pytest.fixture
    def decoded(self, toy_prepared, toy_stats):
        weights = Weights(values={"c:type=NP": 1.0}, labels=LabelSpace.tas(), stats_fingerprint=toy_stats.fingerprint())
        return predict_corpus(toy_prepared, weights, toy_stats)

    def test_metric_names(self, decoded, toy_stats):
        metrics = evaluate_summaries(decoded, toy_stats)
        assert len(metrics) == len(SYSTEMS) * 7
        assert "model_rougesu4_f1" in metrics
        assert "centroid_da_length" in metrics

    def test_longest_da_scores(self, decoded, toy_stats):
        metrics = evaluate_summaries(decoded, toy_stats)

        # "we need a battery" vs the d1 abstract, "solar panels help" vs "solar panels"
        assert_allclose(metrics["longest_da_rouge1_precision"], (1 / 4 + 2 / 3) / 2)
        assert_allclose(metrics["longest_da_rouge1_recall"], (1 / 4 + 1.0) / 2)
        assert_allclose(metrics["longest_da_length"], 3.5)

    def test_discussions_without_references_are_skipped(self, decoded, toy_stats):
        cache, config = decoded[1]
        bare = replace(cache.prepared, discussion=replace(cache.prepared.discussion, summaries=SummarySet()))
        cache.prepared = bare

        metrics = evaluate_summaries([(cache, config)], toy_stats, SummaryConfig())
        assert metrics == {}
