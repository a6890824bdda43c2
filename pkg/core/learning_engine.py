# core/learning_engine.py

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from tqdm import tqdm

from core.config import TrainConfig
from core.corpus import LabelSpace
from core.errors import TrainingDataError
from core.feature_engine import FeatureRegistry, add_into, build_cache, fit_stats
from core.scoring_engine import (
    Configuration,
    Move,
    Weights,
    apply_move,
    average_weights,
    dot,
    feature_delta,
)


logger = logging.getLogger(__name__)


TRACE_COLUMNS = ("epoch", "sample", "round", "delta_omega", "margin", "updated", "accepted")


# =====================================================
# SCORER
# =====================================================

@dataclass(frozen=True)
class Scorer:
    """omega = alpha * F1_c + (1 - alpha) * F1_d, or F1_c alone in content mode."""

    mode: str = "joint"
    alpha: float = 0.1

    def __post_init__(self):
        if self.mode not in ("joint", "content"):
            raise ValueError(f"unknown scorer mode '{self.mode}'")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


@dataclass(frozen=True)
class GoldStandard:
    c: tuple
    d: tuple | None = None


def f1_phrase(pred, gold) -> float:
    """F1 of the positive class; 1.0 when neither side selects anything."""

    if len(pred) != len(gold):
        raise ValueError("phrase assignments cover different candidate sets")

    tp = fp = fn = 0

    for p, g in zip(pred, gold):
        if p and g:
            tp += 1
        elif p:
            fp += 1
        elif g:
            fn += 1

    if tp == 0:
        return 1.0 if fp == 0 and fn == 0 else 0.0

    return 2.0 * tp / (2.0 * tp + fp + fn)


def _as_relation_map(assignment) -> dict:

    if isinstance(assignment, dict):
        return dict(assignment)

    return {
        position: label
        for position, label in enumerate(assignment)
        if label is not None and label != -1
    }


def f1_discourse(pred, gold) -> float:
    """Macro-averaged F1 over the relation labels present in gold."""

    pred = _as_relation_map(pred)
    gold = _as_relation_map(gold)

    if set(pred) != set(gold):
        raise ValueError("relation assignments cover different units")

    if not gold:
        return 1.0

    scores = []

    for label in sorted(set(gold.values()), key=str):
        tp = fp = fn = 0
        for unit, gold_label in gold.items():
            predicted = pred[unit]
            if predicted == label and gold_label == label:
                tp += 1
            elif predicted == label:
                fp += 1
            elif gold_label == label:
                fn += 1
        scores.append(2.0 * tp / (2.0 * tp + fp + fn) if tp else 0.0)

    return sum(scores) / len(scores)


def omega(config: Configuration, gold: GoldStandard, scorer: Scorer) -> float:

    f1_c = f1_phrase(config.c, gold.c)

    if scorer.mode == "content":
        return f1_c

    if gold.d is None:
        raise TrainingDataError("joint scorer needs gold relations")

    return scorer.alpha * f1_c + (1.0 - scorer.alpha) * f1_discourse(config.d, gold.d)


# =====================================================
# PROPOSALS
# =====================================================

def sample_relation_move(cache, config: Configuration, rng) -> Move | None:

    attached = cache.attached
    size = cache.labels.size

    if not attached or size < 2:
        return None

    position = attached[int(rng.integers(len(attached)))]
    current = config.d[position]
    offset = int(rng.integers(size - 1))
    label = offset if offset < current else offset + 1

    return Move("relation", position, label)


def sample_cluster_move(cache, config: Configuration, rng) -> Move | None:

    if not cache.members:
        return None

    return Move("cluster", int(rng.integers(len(cache.members))))


def propose_d(config: Configuration, cache, rng) -> Configuration:
    """Relabel one attached unit with a label drawn uniformly from the other labels."""

    move = sample_relation_move(cache, config, rng)
    return config if move is None else apply_move(cache, config, move)


def propose_c(config: Configuration, cache, rng) -> Configuration:
    """Flip every member of one uniformly chosen cluster."""

    move = sample_cluster_move(cache, config, rng)
    return config if move is None else apply_move(cache, config, move)


def random_configuration(cache, rng) -> Configuration:

    cluster_values = rng.integers(0, 2, size=len(cache.members))
    c = [0] * cache.n_candidates

    for cluster_index, members in enumerate(cache.members):
        for k in members:
            c[k] = int(cluster_values[cluster_index])

    d = []
    for parent in cache.parent_of:
        d.append(int(rng.integers(cache.labels.size)) if parent >= 0 else -1)

    return Configuration(tuple(c), tuple(d))


# =====================================================
# WEIGHT AVERAGING
# =====================================================

class SnapshotAverager:
    """
    Running mean of every snapshot of w taken during training. Each feature
    accumulates value x (number of snapshots it held that value) lazily, so
    a snapshot costs nothing beyond the features that changed.
    """

    def __init__(self, values: dict, keep_snapshots: bool = False):
        self.values = values
        self.count = 1
        self.since = {}
        self.totals = {}
        self.snapshots = [dict(values)] if keep_snapshots else None

    def update(self, step: dict) -> None:

        for fid, change in step.items():
            current = self.values.get(fid, 0.0)
            self.totals[fid] = self.totals.get(fid, 0.0) + current * (self.count - self.since.get(fid, 0))
            self.since[fid] = self.count
            self.values[fid] = current + change

        self.count += 1

        if self.snapshots is not None:
            self.snapshots.append(dict(self.values))

    def mean(self) -> dict:

        averaged = {}

        for fid, current in self.values.items():
            total = self.totals.get(fid, 0.0) + current * (self.count - self.since.get(fid, 0))
            averaged[fid] = total / self.count

        return averaged


# =====================================================
# SAMPLERANK
# =====================================================

@dataclass
class TrainResult:
    weights: Weights
    updates: int = 0
    snapshot_count: int = 1
    snapshots: list | None = None
    trace: list = field(default_factory=list)


def gold_standard(prepared, labels: LabelSpace, scorer: Scorer) -> GoldStandard:

    if prepared.gold_c is None:
        raise TrainingDataError(f"discussion '{prepared.id}' has no gold phrase labels")

    if scorer.mode == "content":
        return GoldStandard(c=prepared.gold_c)

    if prepared.gold_d is None:
        raise TrainingDataError(f"discussion '{prepared.id}' has no gold relations for the joint scorer")

    d = []
    for unit in prepared.discussion.units:
        label = prepared.gold_d.get(unit.id)
        d.append(-1 if label is None else labels.index(label))

    return GoldStandard(c=prepared.gold_c, d=tuple(d))


def labeled_for_training(prepared_list: list, cfg: TrainConfig) -> list:
    """
    The discussions a model in `cfg.mode` can learn from: gold phrase
    labels always, gold relations too in joint mode. The rest stay usable
    for decoding and evaluation only.
    """

    kept, skipped = [], []

    for prepared in prepared_list:
        if prepared.gold_c is not None and (cfg.mode == "latent" or prepared.gold_d is not None):
            kept.append(prepared)
        else:
            skipped.append(prepared.id)

    if skipped:
        logger.info("training without %d unlabeled discussions: %s", len(skipped), skipped)

    if not kept:
        raise TrainingDataError(f"none of {len(prepared_list)} discussions carries gold labels for training")

    return kept


def label_space_for(cfg: TrainConfig) -> LabelSpace:
    return LabelSpace.latent(cfg.K) if cfg.mode == "latent" else LabelSpace.tas()


def samplerank_run(train: list, cfg: TrainConfig, scorer: Scorer, stats=None, labels=None,
                   keep_snapshots: bool = False, keep_trace: bool = False) -> TrainResult:
    """
    One SampleRank chain set over the training discussions.

    For every discussion and epoch a random configuration starts a chain of
    `cfg.rounds` local-search proposals (one relation move, then one cluster
    flip). The better of the current and proposed configuration under omega
    becomes sigma+, and w moves towards Phi(sigma+) - Phi(sigma-) whenever
    the model ranks the pair with less margin than their omega gap. The
    mean of every snapshot of w, the initial one included, is returned.
    """

    if not train:
        raise TrainingDataError("training set is empty")

    if stats is None:
        stats = fit_stats(train)

    if labels is None:
        labels = label_space_for(cfg)

    if labels.kind == "latent" and scorer.mode != "content":
        raise TrainingDataError("latent relations require the content-only scorer")

    golds = [gold_standard(prepared, labels, scorer) for prepared in train]
    caches = [build_cache(prepared, stats, labels, include_joint=cfg.use_joint_features) for prepared in train]

    rng = np.random.default_rng(cfg.seed)
    registry = FeatureRegistry.from_caches(caches)
    initial = rng.uniform(-1.0, 1.0, size=len(registry))
    values = {fid: float(value) for fid, value in zip(registry.ids, initial)}

    averager = SnapshotAverager(values, keep_snapshots=keep_snapshots)
    trace = []
    updates = 0

    for epoch in range(1, cfg.epochs + 1):
        for cache, gold in zip(caches, golds):
            sigma = random_configuration(cache, rng)
            sigma_omega = omega(sigma, gold, scorer)

            for round_index in range(1, cfg.rounds + 1):
                gradient = {}

                relation_move = sample_relation_move(cache, sigma, rng)
                middle = sigma
                if relation_move is not None:
                    add_into(gradient, feature_delta(cache, sigma, relation_move))
                    middle = apply_move(cache, sigma, relation_move)

                cluster_move = sample_cluster_move(cache, middle, rng)
                proposal = middle
                if cluster_move is not None:
                    add_into(gradient, feature_delta(cache, middle, cluster_move))
                    proposal = apply_move(cache, middle, cluster_move)

                proposal_omega = omega(proposal, gold, scorer)

                # ties favour the proposal
                if proposal_omega >= sigma_omega:
                    accepted = True
                    delta_omega = proposal_omega - sigma_omega
                    nabla = gradient
                else:
                    accepted = False
                    delta_omega = sigma_omega - proposal_omega
                    nabla = {fid: -value for fid, value in gradient.items()}

                margin = dot(averager.values, nabla)
                updated = margin < delta_omega and delta_omega != 0

                if updated:
                    averager.update({fid: cfg.eta * value for fid, value in nabla.items()})
                    updates += 1

                if keep_trace:
                    trace.append({
                        "epoch": epoch,
                        "sample": cache.prepared.id,
                        "round": round_index,
                        "delta_omega": delta_omega,
                        "margin": margin,
                        "updated": updated,
                        "accepted": accepted,
                        "sigma": sigma,
                        "proposal": proposal,
                    })

                if accepted:
                    sigma, sigma_omega = proposal, proposal_omega

        logger.debug("epoch %d done, %d updates so far", epoch, updates)

    weights = Weights(
        values=dict(sorted(averager.mean().items())),
        labels=labels,
        stats_fingerprint=stats.fingerprint(),
        include_joint=cfg.use_joint_features,
    )

    return TrainResult(
        weights=weights,
        updates=updates,
        snapshot_count=averager.count,
        snapshots=averager.snapshots,
        trace=trace,
    )


def samplerank_train(train: list, cfg: TrainConfig, scorer: Scorer, stats=None, labels=None) -> Weights:
    return samplerank_run(train, cfg, scorer, stats=stats, labels=labels).weights


def train_latent(train: list, cfg: TrainConfig, stats=None) -> Weights:
    """SampleRank with K anonymous relations scored by phrase F1 only."""

    return samplerank_train(train, cfg, Scorer("content"), stats=stats, labels=LabelSpace.latent(cfg.K))


def _run_seed(args) -> Weights:
    train, cfg, scorer, stats, labels, seed = args
    run_cfg = replace(cfg, seed=seed)
    return samplerank_train(train, run_cfg, scorer, stats=stats, labels=labels)


def average_runs(train: list, cfg: TrainConfig, scorer: Scorer, stats=None, labels=None,
                 progress: bool = False) -> Weights:
    """Train cfg.runs chains with seeds seed, seed+1, ... and average their weights."""

    if stats is None:
        stats = fit_stats(train)
    if labels is None:
        labels = label_space_for(cfg)

    jobs = [(train, cfg, scorer, stats, labels, cfg.seed + r) for r in range(cfg.runs)]

    if cfg.jobs and cfg.jobs > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            models = list(tqdm(pool.map(_run_seed, jobs), total=cfg.runs, disable=not progress, desc="runs"))
    else:
        models = [_run_seed(job) for job in tqdm(jobs, disable=not progress, desc="runs")]

    logger.info("averaged %d SampleRank runs over %d discussions", len(models), len(train))

    return average_weights(models)


def scorer_for(cfg: TrainConfig) -> Scorer:
    return Scorer("content", cfg.alpha) if cfg.mode == "latent" else Scorer("joint", cfg.alpha)


def train_model(train: list, cfg: TrainConfig, stats=None, progress: bool = False) -> Weights:
    """Mode-aware entry point: joint or latent training with run averaging."""

    return average_runs(train, cfg, scorer_for(cfg), stats=stats, labels=label_space_for(cfg), progress=progress)


def write_trace(trace: list, path) -> None:
    """Tab-separated training trace, one row per sampling round."""

    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, delimiter="\t")
        writer.writerow(TRACE_COLUMNS)
        for record in trace:
            writer.writerow([
                record["epoch"],
                record["sample"],
                record["round"],
                repr(record["delta_omega"]),
                repr(record["margin"]),
                int(record["updated"]),
                int(record["accepted"]),
            ])
