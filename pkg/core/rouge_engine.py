# core/rouge_engine.py

from collections import Counter
from typing import NamedTuple

from utils.text_helpers import tokenize_text


MAX_SKIP = 4


class RougeScore(NamedTuple):
    precision: float
    recall: float
    f1: float


def rouge_tokens(text) -> list:
    """Lowercased, punctuation-stripped tokens; no stemming, no stopword removal."""

    if isinstance(text, (list, tuple)):
        tokens = []
        for item in text:
            tokens.extend(tokenize_text(str(item)))
        return tokens

    return tokenize_text(text)


def unigram_units(tokens: list) -> Counter:
    return Counter(tokens)


def skip_pair_units(tokens: list, max_skip: int = MAX_SKIP) -> Counter:
    """Ordered pairs (i < j) with at most `max_skip` tokens in between."""

    pairs = Counter()

    for i, first in enumerate(tokens):
        for j in range(i + 1, min(len(tokens), i + max_skip + 2)):
            pairs[(first, tokens[j])] += 1

    return pairs


def su4_units(tokens: list, max_skip: int = MAX_SKIP) -> Counter:
    units = skip_pair_units(tokens, max_skip)
    units.update(unigram_units(tokens))
    return units


def clipped_overlap(system: Counter, reference: Counter) -> RougeScore:
    """Clipped multiset overlap; P = match/|sys|, R = match/|ref|."""

    matched = sum((system & reference).values())
    system_total = sum(system.values())
    reference_total = sum(reference.values())

    precision = matched / system_total if system_total else 0.0
    recall = matched / reference_total if reference_total else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0

    return RougeScore(precision, recall, f1)


def _reference_pool(references, units_of) -> Counter:

    if isinstance(references, str):
        references = [references]

    pool = Counter()
    for reference in references:
        pool.update(units_of(rouge_tokens(reference)))

    return pool


def rouge_1(system, references) -> RougeScore:
    return clipped_overlap(unigram_units(rouge_tokens(system)), _reference_pool(references, unigram_units))


def rouge_su4(system, references) -> RougeScore:
    return clipped_overlap(su4_units(rouge_tokens(system)), _reference_pool(references, su4_units))


ROUGE_VARIANTS = {
    "1": rouge_1,
    "su4": rouge_su4,
}
