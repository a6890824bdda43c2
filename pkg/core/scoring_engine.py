# core/scoring_engine.py

import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

from core.corpus import LabelSpace
from core.errors import ModelMismatchError
from core.feature_engine import (
    CorpusStats,
    FeatureCache,
    FeatureRegistry,
    add_into,
    block_of,
    global_features,
)


logger = logging.getLogger(__name__)


MODEL_FORMAT = "joint-discourse-model"
MODEL_VERSION = 1

BLOCKS = ("c", "d", "cd")


# =====================================================
# WEIGHTS
# =====================================================

@dataclass
class Weights:
    """
    Parameter vector w = (w_c, w_d, w_cd) stored as one sparse map; the id
    prefix decides the block.
    """

    values: dict
    labels: LabelSpace
    stats_fingerprint: str
    include_joint: bool = True

    def get(self, feature_id: str) -> float:
        return self.values.get(feature_id, 0.0)

    def block(self, name: str) -> dict:
        return {fid: value for fid, value in self.values.items() if block_of(fid) == name}

    @property
    def w_c(self) -> dict:
        return self.block("c")

    @property
    def w_d(self) -> dict:
        return self.block("d")

    @property
    def w_cd(self) -> dict:
        return self.block("cd")

    def scaled(self, factor: float) -> "Weights":
        return replace(self, values={fid: factor * value for fid, value in self.values.items()})

    def copy(self) -> "Weights":
        return replace(self, values=dict(self.values))

    def check_finite(self) -> None:
        bad = [fid for fid, value in self.values.items() if not math.isfinite(value)]
        if bad:
            raise ValueError(f"non-finite weights: {bad[:5]}")

    def check_stats(self, stats: CorpusStats) -> None:
        if self.stats_fingerprint != stats.fingerprint():
            raise ModelMismatchError(
                "weights were trained with different corpus statistics "
                f"({self.stats_fingerprint[:12]} != {stats.fingerprint()[:12]})"
            )

    def check_compatible(self, other: "Weights") -> None:
        if self.labels != other.labels:
            raise ModelMismatchError("models use different relation label spaces")
        if self.stats_fingerprint != other.stats_fingerprint:
            raise ModelMismatchError("models were trained with different corpus statistics")
        if set(self.values) != set(other.values):
            raise ModelMismatchError("models use different feature registries")


def dot(weights: dict, vector) -> float:
    """w . v for a sparse vector given as a dict or as (id, value) pairs."""

    items = vector.items() if isinstance(vector, dict) else vector
    total = 0.0

    for fid, value in items:
        weight = weights.get(fid)
        if weight:
            total += weight * value

    return total


def average_weights(models: list) -> Weights:
    """Element-wise mean of models sharing labels and statistics."""

    if not models:
        raise ValueError("nothing to average")

    first = models[0]
    total = {}

    for model in models:
        if model.labels != first.labels or model.stats_fingerprint != first.stats_fingerprint:
            raise ModelMismatchError("cannot average models with different labels or statistics")
        for fid, value in model.values.items():
            total[fid] = total.get(fid, 0.0) + value

    count = float(len(models))

    return replace(first, values={fid: value / count for fid, value in sorted(total.items())})


# =====================================================
# CONFIGURATIONS
# =====================================================

@dataclass(frozen=True)
class Configuration:
    """
    sigma = (c, d): `c` holds 0/1 per candidate, `d` a label index per unit
    position with -1 at the root.
    """

    c: tuple
    d: tuple
    score: float | None = None

    def with_score(self, value: float) -> "Configuration":
        return replace(self, score=value)

    def same_assignment(self, other: "Configuration") -> bool:
        return self.c == other.c and self.d == other.d


@dataclass(frozen=True)
class Move:
    """Flip one cluster's label (`kind="cluster"`) or relabel one unit (`kind="relation"`)."""

    kind: str
    target: int
    label: int | None = None


def neutral_relations(cache: FeatureCache) -> tuple:
    return tuple(0 if parent >= 0 else -1 for parent in cache.parent_of)


def is_cluster_consistent(cache: FeatureCache, c) -> bool:
    return all(len({c[k] for k in members}) <= 1 for members in cache.members)


def check_configuration(cache: FeatureCache, config: Configuration) -> None:

    if len(config.c) != cache.n_candidates:
        raise ValueError("phrase assignment does not cover every candidate")
    if len(config.d) != cache.n:
        raise ValueError("relation assignment does not cover every unit")

    for position, parent in enumerate(cache.parent_of):
        label = config.d[position]
        if parent < 0 and label != -1:
            raise ValueError("the root unit cannot carry a relation")
        if parent >= 0 and not 0 <= label < cache.labels.size:
            raise ValueError(f"unit position {position} has no valid relation")


def apply_move(cache: FeatureCache, config: Configuration, move: Move) -> Configuration:

    if move.kind == "cluster":
        if not 0 <= move.target < len(cache.members):
            raise ValueError(f"unknown cluster {move.target}")
        members = cache.members[move.target]
        if not members:
            return config
        value = 1 - config.c[members[0]]
        c = list(config.c)
        for k in members:
            c[k] = value
        return Configuration(tuple(c), config.d)

    if move.kind == "relation":
        if not 0 <= move.target < cache.n or cache.parent_of[move.target] < 0:
            raise ValueError(f"unit position {move.target} carries no relation")
        if move.label is None or not 0 <= move.label < cache.labels.size:
            raise ValueError(f"invalid relation index {move.label}")
        d = list(config.d)
        d[move.target] = move.label
        return Configuration(config.c, tuple(d))

    raise ValueError(f"malformed move kind '{move.kind}'")


# =====================================================
# SCORING
# =====================================================

def score(prepared, config: Configuration, weights: Weights, stats: CorpusStats) -> float:
    """w . Phi(c, d, x), the unnormalized log-potential of a configuration."""

    weights.check_stats(stats)
    features = global_features(
        prepared, config.c, config.d, stats, weights.labels, include_joint=weights.include_joint
    )

    return dot(weights.values, features)


def score_cached(cache: FeatureCache, config: Configuration, weights: Weights) -> float:
    """Same value as score(), read from pre-normalized cached features."""

    w = weights.values
    c, d = config.c, config.d
    total = 0.0

    for k, selected in enumerate(c):
        if not selected:
            continue
        total += dot(w, cache.content[k])
        label = d[cache.unit_of[k]]
        if label >= 0:
            total += dot(w, cache.joint[k][label])

    for position in cache.attached:
        label = d[position]
        total += dot(w, cache.discourse[position][label])
        parent = cache.parent_of[position]
        if cache.parent_of[parent] >= 0:
            total += w.get(cache.order2[d[parent]][label], 0.0)

    return total


def _add_items(target: dict, items, sign: float) -> None:
    add_into(target, dict(items), sign)


def feature_delta(cache: FeatureCache, config: Configuration, move: Move) -> dict:
    """Phi(sigma + move) - Phi(sigma), touching only the affected terms."""

    delta = {}

    if move.kind == "cluster":
        after = apply_move(cache, config, move)
        for k in cache.members[move.target]:
            if after.c[k] == config.c[k]:
                continue
            sign = 1.0 if after.c[k] else -1.0
            _add_items(delta, cache.content[k], sign)
            label = config.d[cache.unit_of[k]]
            if label >= 0:
                _add_items(delta, cache.joint[k][label], sign)
        return delta

    if move.kind == "relation":
        apply_move(cache, config, move)
        position = move.target
        old, new = config.d[position], move.label
        if old == new:
            return delta

        _add_items(delta, cache.discourse[position][new], 1.0)
        _add_items(delta, cache.discourse[position][old], -1.0)

        parent = cache.parent_of[position]
        if cache.parent_of[parent] >= 0:
            parent_label = config.d[parent]
            add_into(delta, {cache.order2[parent_label][new]: 1.0})
            add_into(delta, {cache.order2[parent_label][old]: -1.0})

        for child in cache.children_of[position]:
            child_label = config.d[child]
            add_into(delta, {cache.order2[new][child_label]: 1.0})
            add_into(delta, {cache.order2[old][child_label]: -1.0})

        for k, unit in enumerate(cache.unit_of):
            if unit == position and config.c[k]:
                _add_items(delta, cache.joint[k][new], 1.0)
                _add_items(delta, cache.joint[k][old], -1.0)

        return delta

    raise ValueError(f"malformed move kind '{move.kind}'")


def delta_score(cache: FeatureCache, config: Configuration, move: Move, weights: Weights) -> float:
    """score(sigma + move) - score(sigma) computed from the affected terms only."""

    return dot(weights.values, feature_delta(cache, config, move))


def top_weights(weights: Weights, k: int = 20) -> dict:
    """Largest-magnitude weights per block."""

    ranked = {}

    for name in BLOCKS:
        block = weights.block(name)
        ranked[name] = sorted(block.items(), key=lambda item: (-abs(item[1]), item[0]))[:k]

    return ranked


# =====================================================
# MODEL FILES
# =====================================================

def model_to_dict(weights: Weights, stats: CorpusStats | None = None) -> dict:

    registry = FeatureRegistry(weights.values)

    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "label_space": weights.labels.to_dict(),
        "include_joint": weights.include_joint,
        "stats_fingerprint": weights.stats_fingerprint,
        "feature_ids": {fid: index for index, fid in enumerate(registry.ids)},
        "w_c": dict(sorted(weights.w_c.items())),
        "w_d": dict(sorted(weights.w_d.items())),
        "w_cd": dict(sorted(weights.w_cd.items())),
    }

    if stats is not None:
        payload["stats"] = stats.to_dict()

    return payload


def model_from_dict(payload: dict) -> tuple:

    if payload.get("format") != MODEL_FORMAT:
        raise ModelMismatchError("not a joint model file")
    if payload.get("version") != MODEL_VERSION:
        raise ModelMismatchError(f"unsupported model version {payload.get('version')}")

    values = {}
    for name in BLOCKS:
        for fid, value in payload[f"w_{name}"].items():
            if block_of(fid) != name:
                raise ModelMismatchError(f"feature '{fid}' stored in block w_{name}")
            values[fid] = float(value)

    if set(values) != set(payload["feature_ids"]):
        raise ModelMismatchError("feature id map does not match the weight blocks")

    weights = Weights(
        values=values,
        labels=LabelSpace.from_dict(payload["label_space"]),
        stats_fingerprint=payload["stats_fingerprint"],
        include_joint=bool(payload.get("include_joint", True)),
    )
    weights.check_finite()

    stats = None
    if "stats" in payload:
        stats = CorpusStats.from_dict(payload["stats"])
        weights.check_stats(stats)

    return weights, stats


def save_model(path, weights: Weights, stats: CorpusStats | None = None) -> None:

    payload = model_to_dict(weights, stats)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    logger.info("wrote model with %d weights to %s", len(weights.values), path)


def load_model(path) -> tuple:

    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")

    return model_from_dict(json.loads(path.read_text(encoding="utf-8")))
