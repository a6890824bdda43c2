# core/cou_engine.py

"""
Consistency-of-understanding prediction.

Each discussion becomes a small dense vector built from the joint model:
the length-normalized MAP score gap between a model trained on consistent
discussions and one trained on inconsistent ones, normalized relation
unigram/bigram counts over the discourse tree, and word entrainment between
the main speaker and everyone else over the salient phrases' content words.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd
from tqdm import tqdm

from core.candidate_engine import prepare_discussion
from core.classifier_engine import train_classifier
from core.config import CouConfig, TrainConfig
from core.corpus import COU_LABELS
from core.errors import ModelMismatchError, TrainingDataError
from core.eval_engine import EvalReport
from core.feature_engine import build_cache, fit_stats, is_content_word, main_speaker
from core.inference_engine import joint_infer
from core.learning_engine import label_space_for, train_model
from core.summary_engine import selected_phrases


logger = logging.getLogger(__name__)


CONSISTENT, INCONSISTENT = COU_LABELS

FEATURE_SETS = {
    "prob": ("prob",),
    "disc": ("uni", "bi"),
    "ent": ("ent",),
    "all": ("prob", "uni", "bi", "ent"),
}


# =====================================================
# FEATURES
# =====================================================

@dataclass
class CouFeatures:
    prob_diff: float = 0.0
    unigrams: dict = field(default_factory=dict)
    bigrams: dict = field(default_factory=dict)
    entrainment: float = 0.0


def feature_names(labels, feature_set: str = "all") -> list:

    names = []
    groups = FEATURE_SETS[feature_set]

    if "prob" in groups:
        names.append("prob_diff")
    if "uni" in groups:
        names.extend(f"uni={label}" for label in labels.labels)
    if "bi" in groups:
        names.extend(f"bi={parent}>{child}" for parent in labels.labels for child in labels.labels)
    if "ent" in groups:
        names.append("entrainment")

    return names


def feature_vector(features: CouFeatures, labels, feature_set: str = "all") -> list:

    values = []

    for name in feature_names(labels, feature_set):
        if name == "prob_diff":
            values.append(features.prob_diff)
        elif name == "entrainment":
            values.append(features.entrainment)
        elif name.startswith("uni="):
            values.append(features.unigrams.get(name[4:], 0.0))
        else:
            parent, child = name[3:].split(">", 1)
            values.append(features.bigrams.get((parent, child), 0.0))

    return values


def _normalized(counts: Counter) -> dict:
    total = sum(counts.values())
    return {key: count / total for key, count in sorted(counts.items())} if total else {}


def relation_ngram_features(relations: dict, tree) -> tuple:
    """
    Label counts over attached units and (parent relation, child relation)
    counts over tree edges whose parent is itself attached, each block
    normalized to sum to 1.
    """

    unigrams = Counter(relations[child] for child in tree.attachments)
    bigrams = Counter()

    for child, parent in tree.attachments.items():
        if parent in tree.attachments:
            bigrams[(relations[parent], relations[child])] += 1

    return _normalized(unigrams), _normalized(bigrams)


def word_entrainment(discussion, phrases: list) -> float:
    """
    Mean over non-main speakers of -sum_{w in V} |f_main(w) - f_s(w)|, with
    V the content-word lemmas of `phrases` and f a speaker's relative
    frequency. 0 for single-speaker discussions or an empty V.
    """

    vocabulary = {token.lemma for phrase in phrases for token in phrase.tokens if is_content_word(token)}

    speaker_counts = {}
    for unit in discussion.units:
        speaker_counts.setdefault(unit.speaker, Counter()).update(unit.lemmas)

    main = main_speaker(discussion)
    others = sorted(speaker for speaker in speaker_counts if speaker != main)

    if not vocabulary or not others:
        return 0.0

    def frequencies(speaker):
        counts = speaker_counts[speaker]
        total = sum(counts.values())
        return {word: counts[word] / total if total else 0.0 for word in vocabulary}

    reference = frequencies(main)
    scores = []

    for speaker in others:
        theirs = frequencies(speaker)
        scores.append(-sum(abs(reference[word] - theirs[word]) for word in vocabulary))

    return sum(scores) / len(scores)


def _check_pair(w_con, w_incon) -> None:

    w_con.check_compatible(w_incon)

    if w_con.include_joint != w_incon.include_joint:
        raise ModelMismatchError("models disagree on joint features")


def prob_diff(prepared, w_con, w_incon, stats, max_iters: int = 10) -> float:
    """(MAP score under w_con - MAP score under w_incon) / n."""

    _check_pair(w_con, w_incon)
    w_con.check_stats(stats)

    cache = build_cache(prepared, stats, w_con.labels, include_joint=w_con.include_joint)

    con = joint_infer(cache, w_con, max_iters=max_iters).score
    incon = joint_infer(cache, w_incon, max_iters=max_iters).score

    return (con - incon) / prepared.discussion.n


def discussion_features(prepared, c, relations: dict, w_con, w_incon, stats) -> CouFeatures:
    """Features of one discussion given phrase labels `c` and relations by unit id."""

    unigrams, bigrams = relation_ngram_features(relations, prepared.tree)

    return CouFeatures(
        prob_diff=prob_diff(prepared, w_con, w_incon, stats),
        unigrams=unigrams,
        bigrams=bigrams,
        entrainment=word_entrainment(prepared.discussion, selected_phrases(prepared, c)),
    )


def gold_features(prepared, w_con, w_incon, stats) -> CouFeatures:

    if prepared.gold_c is None or not prepared.gold_d:
        raise TrainingDataError(f"discussion '{prepared.id}' lacks gold phrase or relation labels")

    return discussion_features(prepared, prepared.gold_c, prepared.gold_d, w_con, w_incon, stats)


def predicted_features(prepared, model, w_con, w_incon, stats) -> CouFeatures:

    cache = build_cache(prepared, stats, model.labels, include_joint=model.include_joint)
    config = joint_infer(cache, model)

    relations = {
        unit.id: model.labels.labels[config.d[position]]
        for position, unit in enumerate(prepared.discussion.units)
        if config.d[position] >= 0
    }

    return discussion_features(prepared, config.c, relations, w_con, w_incon, stats)


# =====================================================
# DUAL MODELS
# =====================================================

def _share_registry(first, second) -> tuple:
    """Pad both weight maps with zeros so they cover the same feature ids."""

    ids = set(first.values) | set(second.values)

    def padded(weights):
        return replace(weights, values={fid: weights.values.get(fid, 0.0) for fid in sorted(ids)})

    return padded(first), padded(second)


def train_dual_models(train: list, cfg: TrainConfig, stats=None) -> tuple:
    """One joint model per COU class, sharing statistics and feature ids."""

    consistent = [p for p in train if p.discussion.cou_label == CONSISTENT]
    inconsistent = [p for p in train if p.discussion.cou_label == INCONSISTENT]

    if not consistent or not inconsistent:
        raise TrainingDataError(
            f"both COU classes are needed, got {len(consistent)} consistent and {len(inconsistent)} inconsistent"
        )

    if stats is None:
        stats = fit_stats(train)

    w_con = train_model(consistent, cfg, stats=stats)
    w_incon = train_model(inconsistent, cfg, stats=stats)

    return _share_registry(w_con, w_incon)


# =====================================================
# LEAVE-ONE-OUT
# =====================================================

def _check_labeled(prepared_list: list) -> None:
    unlabeled = [p.id for p in prepared_list if p.discussion.cou_label is None]
    if unlabeled:
        raise TrainingDataError(f"discussions without a COU label: {unlabeled}")


def class_f1(pred: list, gold: list, label: str) -> float:

    tp = sum(1 for p, g in zip(pred, gold) if p == label and g == label)
    fp = sum(1 for p, g in zip(pred, gold) if p == label and g != label)
    fn = sum(1 for p, g in zip(pred, gold) if p != label and g == label)

    return 2.0 * tp / (2.0 * tp + fp + fn) if tp else 0.0


def cou_metrics(pred: list, gold: list) -> dict:
    """
    Accuracy, macro-F1 over both COU classes (`f1`) and the F1 of the
    inconsistent class alone (`f1_inconsistent`).
    """

    if len(pred) != len(gold):
        raise ValueError("COU predictions and gold labels differ in length")

    if not gold:
        return {"accuracy": None, "f1": None, "f1_inconsistent": None}

    per_class = {label: class_f1(pred, gold, label) for label in (CONSISTENT, INCONSISTENT)}

    return {
        "accuracy": sum(1 for p, g in zip(pred, gold) if p == g) / len(gold),
        "f1": float(np.mean(list(per_class.values()))),
        "f1_inconsistent": per_class[INCONSISTENT],
    }


def majority_label(labels: list) -> str:
    counts = Counter(labels)
    return min(counts, key=lambda label: (-counts[label], label))


def _report(task: str, rows: list, settings: dict) -> EvalReport:

    metrics = cou_metrics([row["predicted"] for row in rows], [row["gold"] for row in rows])
    report = EvalReport(task=task, folds=rows, settings=settings)
    report.aggregate = metrics

    return report


def majority_cou(discussions: list) -> EvalReport:
    """Leave-one-out majority-class baseline."""

    labels = [discussion.cou_label for discussion in discussions]
    if any(label is None for label in labels):
        raise TrainingDataError("every discussion needs a COU label")

    rows = []
    for index, discussion in enumerate(discussions):
        rest = labels[:index] + labels[index + 1:]
        rows.append({"discussion": discussion.id, "gold": labels[index], "predicted": majority_label(rest)})

    return _report("cou", rows, {"system": "majority"})


def leave_one_out(discussions: list, train_cfg: TrainConfig | None = None, cou_cfg: CouConfig | None = None,
                  progress: bool = False) -> EvalReport:
    """
    For each held-out discussion: train a prediction model and the two
    class models on the rest, build training features from gold labels,
    test features from the prediction model's output (gold labels in
    oracle mode), and classify with the hinge classifier.
    """

    train_cfg = train_cfg or TrainConfig()
    cou_cfg = cou_cfg or CouConfig()

    prepared = [prepare_discussion(discussion) for discussion in discussions]
    _check_labeled(prepared)

    labels = label_space_for(train_cfg)
    if labels.kind != "tas":
        raise ValueError("COU features need the TAS relation labels; train in joint mode")

    names = feature_names(labels, cou_cfg.feature_set)
    rows = []
    exported = []

    for index in tqdm(range(len(prepared)), disable=not progress, desc="leave-one-out"):
        held_out = prepared[index]
        train = prepared[:index] + prepared[index + 1:]

        stats = fit_stats(train)
        w_con, w_incon = train_dual_models(train, train_cfg, stats=stats)

        X = [feature_vector(gold_features(p, w_con, w_incon, stats), labels, cou_cfg.feature_set) for p in train]
        y = [p.discussion.cou_label for p in train]

        if cou_cfg.oracle:
            test = gold_features(held_out, w_con, w_incon, stats)
        else:
            model = train_model(train, train_cfg, stats=stats)
            test = predicted_features(held_out, model, w_con, w_incon, stats)

        classifier = train_classifier(
            X, y, C=cou_cfg.C, epochs=cou_cfg.epochs, seed=cou_cfg.seed,
            feature_names=names, positive=INCONSISTENT,
        )
        vector = feature_vector(test, labels, cou_cfg.feature_set)
        predicted = classifier.predict([vector])[0]

        rows.append({"discussion": held_out.id, "gold": held_out.discussion.cou_label, "predicted": predicted})
        exported.append({"discussion": held_out.id, "label": held_out.discussion.cou_label,
                         **dict(zip(names, vector))})

    report = _report("cou", rows, {
        "system": "oracle" if cou_cfg.oracle else "model",
        "feature_set": cou_cfg.feature_set,
        "C": cou_cfg.C,
    })
    report.predictions = exported

    logger.info("leave-one-out COU over %d discussions: %s", len(rows), report.aggregate)

    return report


# =====================================================
# WORD N-GRAM BASELINE
# =====================================================

def word_ngrams(discussion) -> Counter:
    """Unigram and within-unit bigram counts of lemmas."""

    counts = Counter()

    for unit in discussion.units:
        lemmas = unit.lemmas
        counts.update(lemmas)
        counts.update(f"{first} {second}" for first, second in zip(lemmas, lemmas[1:]))

    return counts


def ngram_baseline(discussions: list, cou_cfg: CouConfig | None = None) -> EvalReport:
    """Leave-one-out hinge classifier over word n-gram counts of the training vocabulary."""

    cou_cfg = cou_cfg or CouConfig()

    if any(discussion.cou_label is None for discussion in discussions):
        raise TrainingDataError("every discussion needs a COU label")

    counts = [word_ngrams(discussion) for discussion in discussions]
    rows = []

    for index, discussion in enumerate(discussions):
        train_positions = [i for i in range(len(discussions)) if i != index]
        vocabulary = sorted({gram for i in train_positions for gram in counts[i]})

        X = [[counts[i][gram] for gram in vocabulary] for i in train_positions]
        y = [discussions[i].cou_label for i in train_positions]

        classifier = train_classifier(X, y, C=cou_cfg.C, epochs=cou_cfg.epochs, seed=cou_cfg.seed,
                                      positive=INCONSISTENT)
        predicted = classifier.predict([[counts[index][gram] for gram in vocabulary]])[0]

        rows.append({"discussion": discussion.id, "gold": discussion.cou_label, "predicted": predicted})

    return _report("cou", rows, {"system": "ngram", "C": cou_cfg.C})


# =====================================================
# EXPORT
# =====================================================

def features_frame(rows: list) -> pd.DataFrame:
    return pd.DataFrame(rows)


def export_csv(rows: list, path) -> None:
    """Feature matrix with a header of feature names, one row per discussion."""

    features_frame(rows).to_csv(Path(path), index=False)
    logger.info("wrote %d COU feature rows to %s", len(rows), path)
