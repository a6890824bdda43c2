# core/eval_engine.py

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from tqdm import tqdm

from core.candidate_engine import prepare_discussion
from core.config import SummaryConfig, TrainConfig
from core.errors import TrainingDataError
from core.feature_engine import fit_stats
from core.inference_engine import predict_corpus, prediction_to_dict
from core.learning_engine import f1_discourse, label_space_for, labeled_for_training, train_model
from core.scoring_engine import top_weights
from core.summary_engine import evaluate_summaries


logger = logging.getLogger(__name__)


TASKS = ("phrase", "discourse", "summarization", "cou")


# =====================================================
# REPORT
# =====================================================

@dataclass
class EvalReport:
    """
    Per-fold metric rows plus their unweighted mean. `predictions` and
    `weights` carry the artefacts the Excel and ZIP exports need.
    """

    task: str
    folds: list = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)
    predictions: list = field(default_factory=list)
    weights: list = field(default_factory=list)
    settings: dict = field(default_factory=dict)

    def finalize(self) -> "EvalReport":

        names = sorted({name for fold in self.folds for name in fold if name != "fold"})
        self.aggregate = {}

        for name in names:
            values = [fold[name] for fold in self.folds if fold.get(name) is not None]
            if values:
                self.aggregate[name] = float(np.mean(values))

        return self

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "settings": self.settings,
            "folds": self.folds,
            "aggregate": self.aggregate,
            "predictions": self.predictions,
            "weights": self.weights,
        }

    def to_frame(self) -> pd.DataFrame:

        frame = pd.DataFrame(self.folds)

        if self.aggregate:
            mean_row = {"fold": "mean", **self.aggregate}
            frame = pd.concat([frame, pd.DataFrame([mean_row])], ignore_index=True)

        return frame


# =====================================================
# METRICS
# =====================================================

def phrase_metrics(pred: list, gold: list) -> dict:
    """Accuracy and positive-class F1 pooled over every candidate."""

    if len(pred) != len(gold):
        raise ValueError("phrase predictions and gold labels differ in length")

    if not gold:
        return {"phrase_accuracy": None, "phrase_f1": None}

    tp = sum(1 for p, g in zip(pred, gold) if p and g)
    fp = sum(1 for p, g in zip(pred, gold) if p and not g)
    fn = sum(1 for p, g in zip(pred, gold) if g and not p)
    correct = sum(1 for p, g in zip(pred, gold) if bool(p) == bool(g))

    f1 = 2.0 * tp / (2.0 * tp + fp + fn) if tp else 0.0

    return {"phrase_accuracy": correct / len(gold), "phrase_f1": f1}


def discourse_metrics(pred: dict, gold: dict) -> dict:
    """Accuracy and macro-F1 over the gold relation labels of every attached unit."""

    if not gold:
        return {"discourse_accuracy": None, "discourse_f1": None}

    correct = sum(1 for key, label in gold.items() if pred.get(key) == label)

    return {
        "discourse_accuracy": correct / len(gold),
        "discourse_f1": f1_discourse(pred, gold),
    }


def _gold_relations(prepared) -> dict:
    return {(prepared.id, unit_id): label for unit_id, label in (prepared.gold_d or {}).items()}


def _predicted_relations(cache, config) -> dict:

    relations = {}
    for position, unit in enumerate(cache.prepared.discussion.units):
        if config.d[position] >= 0:
            relations[(cache.prepared.id, unit.id)] = cache.labels.labels[config.d[position]]

    return relations


def score_predictions(decoded: list, relations: bool = True) -> dict:

    pred_c, gold_c = [], []
    pred_d, gold_d = {}, {}

    for cache, config in decoded:
        prepared = cache.prepared
        if prepared.gold_c is not None:
            pred_c.extend(config.c)
            gold_c.extend(prepared.gold_c)
        if relations and prepared.gold_d:
            gold_d.update(_gold_relations(prepared))
            pred_d.update(_predicted_relations(cache, config))

    metrics = phrase_metrics(pred_c, gold_c)

    if relations:
        metrics.update(discourse_metrics(pred_d, gold_d))

    return metrics


# =====================================================
# FOLDS
# =====================================================

def fold_split(n: int, folds: int = 5, seed: int = 0) -> list:
    """Seeded shuffle of positions cut into `folds` disjoint, exhaustive test sets."""

    if folds < 2:
        raise ValueError("cross-validation needs at least 2 folds")
    if n < folds:
        raise ValueError(f"corpus of {n} discussions is too small for {folds} folds")

    order = np.random.default_rng(seed).permutation(n)

    return [sorted(int(i) for i in part) for part in np.array_split(order, folds)]


def _majority(values: list):
    counts = Counter(values)
    return min(counts, key=lambda value: (-counts[value], str(value)))


def majority_labels(train: list) -> tuple:
    """Most frequent phrase label and relation label over the training discussions."""

    phrase_labels = [label for prepared in train if prepared.gold_c is not None for label in prepared.gold_c]
    relation_labels = [label for prepared in train for label in (prepared.gold_d or {}).values()]

    if not phrase_labels:
        raise TrainingDataError("majority baseline needs gold phrase labels")

    relation = _majority(relation_labels) if relation_labels else None

    return _majority(phrase_labels), relation


def majority_metrics(train: list, test: list) -> dict:

    phrase_label, relation_label = majority_labels(train)

    pred_c, gold_c = [], []
    pred_d, gold_d = {}, {}

    for prepared in test:
        if prepared.gold_c is not None:
            gold_c.extend(prepared.gold_c)
            pred_c.extend([phrase_label] * len(prepared.gold_c))
        if prepared.gold_d:
            gold = _gold_relations(prepared)
            gold_d.update(gold)
            pred_d.update({key: relation_label for key in gold})

    metrics = phrase_metrics(pred_c, gold_c)
    metrics.update(discourse_metrics(pred_d, gold_d))

    return metrics


def majority_baseline(train: list, test: list) -> EvalReport:
    """Predict the training-majority phrase and relation label everywhere."""

    report = EvalReport(task="phrase", folds=[{"fold": 1, **majority_metrics(train, test)}])
    return report.finalize()


# =====================================================
# CROSS-VALIDATION
# =====================================================

def cross_validate(discussions: list, cfg: TrainConfig | None = None, folds: int = 5,
                   decode_mode: str = "joint", task: str = "phrase",
                   summary_cfg: SummaryConfig | None = None, progress: bool = False) -> EvalReport:
    """
    Per fold: fit statistics on the training part, train with run averaging,
    decode the held-out part and score it. Majority-baseline numbers for the
    same split are reported alongside with a `majority_` prefix.
    """

    cfg = cfg or TrainConfig()

    if task not in TASKS[:3]:
        raise ValueError(f"unknown evaluation task '{task}'")

    prepared = [prepare_discussion(discussion) for discussion in discussions]
    splits = fold_split(len(prepared), folds, cfg.seed)
    relations = label_space_for(cfg).kind == "tas"

    report = EvalReport(
        task=task,
        settings={
            "folds": folds,
            "decode": decode_mode,
            "mode": cfg.mode,
            "epochs": cfg.epochs,
            "rounds": cfg.rounds,
            "runs": cfg.runs,
            "eta": cfg.eta,
            "alpha": cfg.alpha,
            "K": cfg.K,
            "seed": cfg.seed,
            "use_joint_features": cfg.use_joint_features,
        },
    )

    for fold_index, test_positions in enumerate(tqdm(splits, disable=not progress, desc="folds"), start=1):
        held_out = set(test_positions)
        train = [p for i, p in enumerate(prepared) if i not in held_out]
        test = [prepared[i] for i in test_positions]

        stats = fit_stats(train)
        weights = train_model(labeled_for_training(train, cfg), cfg, stats=stats)
        decoded = predict_corpus(test, weights, stats, decode_mode=decode_mode)

        row = {"fold": fold_index}
        row.update(score_predictions(decoded, relations=relations))

        for name, value in majority_metrics(train, test).items():
            if relations or name.startswith("phrase"):
                row[f"majority_{name}"] = value

        if task == "summarization":
            row.update(evaluate_summaries(decoded, stats, summary_cfg))

        report.folds.append(row)
        report.predictions.extend(prediction_to_dict(cache, config) for cache, config in decoded)
        report.weights.append({
            "fold": fold_index,
            "top": {block: [[fid, value] for fid, value in ranked] for block, ranked in top_weights(weights).items()},
        })

        logger.info("fold %d/%d: %s", fold_index, folds, {k: v for k, v in row.items() if k != "fold"})

    return report.finalize()
