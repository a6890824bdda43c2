# core/summary_engine.py

import logging
from collections import Counter

import numpy as np

from core.config import SummaryConfig
from core.rouge_engine import rouge_1, rouge_su4, rouge_tokens
from utils.text_helpers import is_stop_token


logger = logging.getLogger(__name__)


MAJOR_POS_PREFIXES = ("NN", "VB", "JJ")

SYSTEMS = ("model", "longest_da", "centroid_da", "avg_word_score")


# =====================================================
# MODEL SUMMARIES
# =====================================================

def selected_phrases(prepared, c) -> list:
    """Selected candidates ordered by (unit position, token start)."""

    positions = {unit.id: index for index, unit in enumerate(prepared.discussion.units)}
    chosen = [candidate for k, candidate in enumerate(prepared.candidates) if c[k]]

    return sorted(chosen, key=lambda candidate: (positions[candidate.unit_id], candidate.start))


def join_phrases(phrases: list) -> str:
    return ", ".join(phrase.surface for phrase in phrases)


def summarize(prepared, config) -> str:
    """Selected phrases concatenated in discussion order; duplicates are kept."""

    return join_phrases(selected_phrases(prepared, config.c))


# =====================================================
# BASELINES
# =====================================================

def baseline_longest_da(discussion) -> str:
    """Token-longest unit; the earliest one wins ties."""

    longest = max(discussion.units, key=lambda unit: (len(unit.tokens), -unit.id))
    return longest.text


def term_matrix(discussion, stats) -> tuple:
    """
    Unit-by-lemma TF-IDF matrix over non-stopword lemmas (TF = count within
    the unit) and the lemma order of its columns.
    """

    lemmas = sorted({
        token.lemma for unit in discussion.units for token in unit.tokens if not is_stop_token(token)
    })
    column = {lemma: index for index, lemma in enumerate(lemmas)}

    counts = np.zeros((len(discussion.units), len(lemmas)))

    for row, unit in enumerate(discussion.units):
        for token in unit.tokens:
            if token.lemma in column and not is_stop_token(token):
                counts[row, column[token.lemma]] += 1.0

    idf = np.array([stats.idf_of(lemma) for lemma in lemmas])

    return counts * idf, lemmas


def cosine_matrix(matrix: np.ndarray) -> np.ndarray:
    """Pairwise row cosine similarities; rows of zeros are similar to nothing."""

    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit_rows = matrix / safe[:, None]

    return unit_rows @ unit_rows.T


def centroid_scores(discussion, stats) -> list:
    """Sum of cosine similarities between each unit and every unit of the discussion."""

    matrix, _ = term_matrix(discussion, stats)
    return cosine_matrix(matrix).sum(axis=1).tolist()


def baseline_centroid_da(discussion, stats) -> str:

    scores = centroid_scores(discussion, stats)
    best = max(range(len(scores)), key=lambda index: (scores[index], -index))

    return discussion.units[best].text


def word_scores(prepared, stats, cfg: SummaryConfig | None = None) -> dict:
    """
    (unit id, token index) -> TF-IDF x POS weight x unit salience, where
    salience is the unit's centroid score scaled into [0, 1].
    """

    cfg = cfg or SummaryConfig()
    discussion = prepared.discussion

    term_counts = Counter()
    for unit in discussion.units:
        term_counts.update(unit.lemmas)

    salience = centroid_scores(discussion, stats)
    top = max(salience) if salience else 0.0

    scores = {}

    for position, unit in enumerate(discussion.units):
        unit_salience = salience[position] / top if top > 0 else 0.0
        for index, token in enumerate(unit.tokens):
            pos_weight = cfg.major_pos_weight if token.pos.startswith(MAJOR_POS_PREFIXES) else cfg.other_pos_weight
            tfidf = term_counts[token.lemma] * stats.idf_of(token.lemma)
            scores[(unit.id, index)] = tfidf * pos_weight * unit_salience

    return scores


def phrase_score(candidate, scores: dict) -> float:

    values = [
        scores[(candidate.unit_id, position)]
        for start, end in candidate.token_ranges
        for position in range(start, end)
    ]

    return sum(values) / len(values) if values else 0.0


def baseline_avg_word_score(prepared, stats, k: int, cfg: SummaryConfig | None = None) -> str:
    """Top-k candidates by mean word score, concatenated in discussion order."""

    if k <= 0:
        return ""

    scores = word_scores(prepared, stats, cfg)
    ranked = sorted(
        range(len(prepared.candidates)),
        key=lambda k_index: (-phrase_score(prepared.candidates[k_index], scores), k_index),
    )

    chosen = set(ranked[:k])
    c = [1 if index in chosen else 0 for index in range(len(prepared.candidates))]

    return join_phrases(selected_phrases(prepared, c))


# =====================================================
# EVALUATION
# =====================================================

def reference_texts(discussion, reference: str = "abstractive") -> list:

    if reference == "abstractive":
        return list(discussion.summaries.abstractive) + list(discussion.summaries.participant)

    if reference == "extractive":
        wanted = set(discussion.summaries.extractive_unit_ids)
        return [unit.text for unit in discussion.units if unit.id in wanted]

    raise ValueError(f"unknown reference type '{reference}'")


def system_summaries(prepared, config, stats, cfg: SummaryConfig | None = None) -> dict:
    """Model summary and the three baselines for one decoded discussion."""

    discussion = prepared.discussion
    k = sum(config.c)

    return {
        "model": summarize(prepared, config),
        "longest_da": baseline_longest_da(discussion),
        "centroid_da": baseline_centroid_da(discussion, stats),
        "avg_word_score": baseline_avg_word_score(prepared, stats, k, cfg),
    }


def evaluate_summaries(decoded: list, stats, cfg: SummaryConfig | None = None) -> dict:
    """
    ROUGE-1 and ROUGE-SU4 precision/recall/F1 plus mean length in words, per
    system, averaged over the discussions that have references.

    decoded: (cache, configuration) pairs as returned by inference.
    """

    cfg = cfg or SummaryConfig()
    totals = {system: Counter() for system in SYSTEMS}
    count = 0

    for cache, config in decoded:
        prepared = cache.prepared
        references = reference_texts(prepared.discussion, cfg.reference)

        if not any(rouge_tokens(text) for text in references):
            continue

        count += 1

        for system, text in system_summaries(prepared, config, stats, cfg).items():
            r1 = rouge_1(text, references)
            su4 = rouge_su4(text, references)
            totals[system].update({
                "rouge1_precision": r1.precision,
                "rouge1_recall": r1.recall,
                "rouge1_f1": r1.f1,
                "rougesu4_precision": su4.precision,
                "rougesu4_recall": su4.recall,
                "rougesu4_f1": su4.f1,
                "length": float(len(text.split())),
            })

    if not count:
        logger.warning("no discussion has %s references; summaries were not scored", cfg.reference)
        return {}

    metrics = {}
    for system in SYSTEMS:
        for name, total in sorted(totals[system].items()):
            metrics[f"{system}_{name}"] = total / count

    return metrics
