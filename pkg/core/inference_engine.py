# core/inference_engine.py

import itertools
import json
import logging
from pathlib import Path

import numpy as np

from core.errors import InstanceTooLargeError
from core.feature_engine import build_cache
from core.scoring_engine import Configuration, Weights, dot, neutral_relations, score_cached


logger = logging.getLogger(__name__)


DEFAULT_MAX_ITERS = 10
BRUTE_FORCE_LIMIT = 1_000_000


# =====================================================
# RELATIONS GIVEN PHRASES
# =====================================================

def _local_relation_scores(cache, c, weights: Weights, position: int) -> np.ndarray:

    w = weights.values
    scores = np.array([dot(w, items) for items in cache.discourse[position]], dtype=float)

    for k, unit in enumerate(cache.unit_of):
        if unit == position and c[k]:
            scores += np.array([dot(w, items) for items in cache.joint[k]], dtype=float)

    return scores


def _order2_matrix(cache, weights: Weights) -> np.ndarray:
    """pair[parent_label, child_label] = weight of the order-2 indicator."""

    w = weights.values
    return np.array([[w.get(fid, 0.0) for fid in row] for row in cache.order2], dtype=float)


def _check_tree(cache) -> None:
    for position, parent in enumerate(cache.parent_of):
        if parent >= position:
            raise ValueError(f"unit position {position} attaches to a later unit")


def infer_d_given_c(cache, c, weights: Weights) -> tuple:
    """
    Exact argmax over relations for fixed phrase labels: one upward
    max-product pass over the attachment tree, where a unit's relation
    couples to its parent's only through the order-2 template, then a
    downward backtrack. Ties resolve to the smallest label index.
    """

    _check_tree(cache)

    pair = _order2_matrix(cache, weights)
    attached = cache.attached

    incoming = {position: 0.0 for position in attached}
    back = {}
    best_at_top = {}

    for position in reversed(attached):
        belief = _local_relation_scores(cache, c, weights, position) + incoming[position]
        parent = cache.parent_of[position]

        if cache.parent_of[parent] >= 0:
            # candidates[parent_label, child_label]
            candidates = pair + belief[np.newaxis, :]
            back[position] = np.argmax(candidates, axis=1)
            incoming[parent] = incoming[parent] + candidates.max(axis=1)
        else:
            best_at_top[position] = int(np.argmax(belief))

    d = [-1] * cache.n

    for position in attached:
        if position in best_at_top:
            d[position] = best_at_top[position]
        else:
            d[position] = int(back[position][d[cache.parent_of[position]]])

    return tuple(d)


# =====================================================
# PHRASES GIVEN RELATIONS
# =====================================================

def candidate_gains(cache, d, weights: Weights) -> list:
    """Score change of selecting each candidate alone under relations d."""

    w = weights.values
    gains = []

    for k, items in enumerate(cache.content):
        gain = dot(w, items)
        label = d[cache.unit_of[k]]
        if label >= 0:
            gain += dot(w, cache.joint[k][label])
        gains.append(gain)

    return gains


def _check_partition(cache) -> None:
    seen = sorted(k for members in cache.members for k in members)
    if seen != list(range(cache.n_candidates)):
        raise ValueError("clusters do not partition the candidates")


def infer_c_given_d(cache, d, weights: Weights) -> tuple:
    """
    Exact constrained maximizer over phrase labels for fixed relations.
    The objective is linear in c and constraints only tie cluster members,
    so a cluster is selected iff its summed member gain is positive.
    """

    _check_partition(cache)

    gains = candidate_gains(cache, d, weights)
    c = [0] * cache.n_candidates

    for members in cache.members:
        if sum(gains[k] for k in members) > 0:
            for k in members:
                c[k] = 1

    return tuple(c)


# =====================================================
# ALTERNATING JOINT INFERENCE
# =====================================================

def joint_infer(cache, weights: Weights, max_iters: int = DEFAULT_MAX_ITERS, score_trace: list | None = None) -> Configuration:
    """
    Coordinate ascent: phrases from a neutral relation assignment, then
    alternate relations-given-phrases and phrases-given-relations until
    nothing changes or max_iters is reached.
    """

    d = neutral_relations(cache)
    c = infer_c_given_d(cache, d, weights)

    if score_trace is not None:
        score_trace.append(score_cached(cache, Configuration(c, d), weights))

    for iteration in range(1, max_iters + 1):
        new_d = infer_d_given_c(cache, c, weights)
        if score_trace is not None:
            score_trace.append(score_cached(cache, Configuration(c, new_d), weights))

        new_c = infer_c_given_d(cache, new_d, weights)
        if score_trace is not None:
            score_trace.append(score_cached(cache, Configuration(new_c, new_d), weights))

        changed = new_d != d or new_c != c
        c, d = new_c, new_d

        if not changed:
            logger.debug("alternation converged after %d iterations", iteration)
            break

    config = Configuration(c, d)

    return config.with_score(score_cached(cache, config, weights))


def separate_infer(cache, weights: Weights) -> Configuration:
    """
    Ablation: phrases from content weights alone and relations from
    discourse weights alone; joint features are ignored in both steps.
    """

    no_relations = tuple(-1 for _ in range(cache.n))
    c = infer_c_given_d(cache, no_relations, weights)
    d = infer_d_given_c(cache, tuple(0 for _ in range(cache.n_candidates)), weights)

    config = Configuration(c, d)

    return config.with_score(score_cached(cache, config, weights))


# =====================================================
# EXHAUSTIVE ORACLE
# =====================================================

def _cluster_assignments(cache, fixed_c=None) -> np.ndarray:
    """Rows of 0/1 per candidate for every cluster-consistent assignment (or just fixed_c)."""

    if fixed_c is not None:
        return np.array([fixed_c], dtype=float)

    rows = []

    for values in itertools.product((0, 1), repeat=len(cache.members)):
        row = [0] * cache.n_candidates
        for cluster_index, members in enumerate(cache.members):
            for k in members:
                row[k] = values[cluster_index]
        rows.append(row)

    return np.array(rows, dtype=float).reshape(len(rows), cache.n_candidates)


def _relation_assignments(cache, fixed_d=None):

    if fixed_d is not None:
        yield tuple(fixed_d)
        return

    attached = cache.attached

    for labels in itertools.product(range(cache.labels.size), repeat=len(attached)):
        d = [-1] * cache.n
        for position, label in zip(attached, labels):
            d[position] = label
        yield tuple(d)


def brute_force_infer(cache, weights: Weights, fixed_c=None, fixed_d=None, limit: int = BRUTE_FORCE_LIMIT) -> Configuration:
    """
    Exhaustive argmax over every relation assignment and every
    cluster-consistent phrase assignment (optionally holding one side fixed).
    The first maximum in enumeration order wins.
    """

    d_count = 1 if fixed_d is not None else cache.labels.size ** len(cache.attached)
    c_count = 1 if fixed_c is not None else 2 ** len(cache.members)

    if d_count * c_count > limit:
        raise InstanceTooLargeError(
            f"{d_count} relation x {c_count} phrase assignments exceed the limit of {limit}"
        )

    phrase_rows = _cluster_assignments(cache, fixed_c)
    pair = _order2_matrix(cache, weights)
    w = weights.values

    best_score = None
    best = None

    for d in _relation_assignments(cache, fixed_d):
        base = 0.0
        for position in cache.attached:
            base += dot(w, cache.discourse[position][d[position]])
            parent = cache.parent_of[position]
            if cache.parent_of[parent] >= 0:
                base += pair[d[parent], d[position]]

        gains = np.array(candidate_gains(cache, d, weights), dtype=float)
        totals = base + (phrase_rows @ gains if cache.n_candidates else np.zeros(len(phrase_rows)))
        row = int(np.argmax(totals))

        if best_score is None or totals[row] > best_score:
            best_score = totals[row]
            best = (tuple(int(value) for value in phrase_rows[row]), d)

    config = Configuration(*best)

    return config.with_score(score_cached(cache, config, weights))


# =====================================================
# CORPUS DECODING AND DUMPS
# =====================================================

def decode(prepared, weights: Weights, stats, decode_mode: str = "joint", max_iters: int = DEFAULT_MAX_ITERS):
    """Cache features for one discussion and decode it; returns (cache, configuration)."""

    weights.check_stats(stats)
    cache = build_cache(prepared, stats, weights.labels, include_joint=weights.include_joint)

    if decode_mode == "joint":
        return cache, joint_infer(cache, weights, max_iters=max_iters)
    if decode_mode == "separate":
        return cache, separate_infer(cache, weights)

    raise ValueError(f"unknown decode mode '{decode_mode}'")


def prediction_to_dict(cache, config: Configuration) -> dict:

    prepared = cache.prepared
    phrases = []

    for k, candidate in enumerate(prepared.candidates):
        if config.c[k]:
            phrases.append({
                "unit": candidate.unit_id,
                "ranges": [list(span) for span in candidate.token_ranges],
                "surface": candidate.surface,
                "type": candidate.phrase_type,
                "head": candidate.head_lemma,
            })

    relations = {}
    for position, unit in enumerate(prepared.discussion.units):
        if config.d[position] >= 0:
            relations[str(unit.id)] = cache.labels.labels[config.d[position]]

    return {
        "discussion": prepared.id,
        "phrases": phrases,
        "relations": relations,
        "score": config.score,
    }


def predict_corpus(prepared_list: list, weights: Weights, stats, decode_mode: str = "joint",
                   max_iters: int = DEFAULT_MAX_ITERS) -> list:
    """Decode every discussion; returns (cache, configuration) pairs in input order."""

    return [decode(prepared, weights, stats, decode_mode, max_iters) for prepared in prepared_list]


def write_predictions(decoded: list, path) -> None:

    payload = [prediction_to_dict(cache, config) for cache, config in decoded]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    logger.info("wrote predictions for %d discussions to %s", len(payload), path)
