# core/synth_engine.py

import logging
from dataclasses import dataclass, replace

import numpy as np

from core.candidate_engine import prepare_discussion
from core.config import SynthSpec
from core.corpus import (
    COU_LABELS,
    AdjacencyPair,
    ConstituentSpan,
    DiscourseTree,
    DiscourseUnit,
    Discussion,
    LabelSpace,
    SummarySet,
    Token,
    validate_discussion,
)
from core.feature_engine import FeatureRegistry, build_cache, fit_stats
from core.inference_engine import brute_force_infer, candidate_gains, joint_infer
from core.scoring_engine import Weights, neutral_relations


logger = logging.getLogger(__name__)


DIALOGUE_ACTS = ("inform", "suggest", "assess", "elicit", "backchannel")

PHRASE_TYPES = ("NP", "VP", "ADJP")

BLOCK_SCALES = {"c": 1.0, "d": 2.0, "cd": 0.5}

UNUSED_LABEL_BIAS = -50.0


@dataclass
class SynthCorpus:
    """Generated discussions with the planted model that labeled them."""

    discussions: list
    weights: Weights
    stats: object


# =====================================================
# SURFACE GENERATION
# =====================================================

def _vocabularies(spec: SynthSpec) -> dict:
    return {
        "NP": [f"gadget{i}" for i in range(spec.noun_vocabulary)],
        "VP": [f"assemble{i}" for i in range(spec.verb_vocabulary)],
        "ADJP": [f"bright{i}" for i in range(spec.adjective_vocabulary)],
    }


def _phrase_tokens(phrase_type: str, head: str) -> tuple:
    """(tokens, head offset) of one phrase; the non-head word is a stopword."""

    if phrase_type == "NP":
        return [Token("the", "the", "DT", True), Token(head, head, "NN", False)], 1
    if phrase_type == "VP":
        return [Token(head, head, "VB", False), Token("it", "it", "PRP", True)], 0

    return [Token("very", "very", "RB", True), Token(head, head, "JJ", False)], 1


def _unit(unit_id: int, speaker: str, start_time: float, rng, spec: SynthSpec, vocabularies: dict) -> DiscourseUnit:

    tokens = []
    spans = []

    for index in range(int(rng.integers(1, spec.max_candidates + 1))):
        if index:
            tokens.append(Token("and", "and", "CC", True))

        phrase_type = PHRASE_TYPES[int(rng.integers(len(PHRASE_TYPES)))]
        words = vocabularies[phrase_type]
        phrase, head_offset = _phrase_tokens(phrase_type, words[int(rng.integers(len(words)))])

        start = len(tokens)
        tokens.extend(phrase)
        spans.append(ConstituentSpan(start, start + len(phrase), phrase_type, start + head_offset))

    duration = round(float(rng.uniform(0.5, 5.0)), 2)

    return DiscourseUnit(
        id=unit_id,
        speaker=speaker,
        tokens=tuple(tokens),
        spans=tuple(spans),
        dialogue_act=DIALOGUE_ACTS[int(rng.integers(len(DIALOGUE_ACTS)))],
        start_time=start_time,
        end_time=round(start_time + duration, 2),
    )


def _skeleton(index: int, rng, spec: SynthSpec, vocabularies: dict) -> Discussion:
    """A discussion with units, tree and adjacency pairs but no labels."""

    n = int(rng.integers(spec.min_units, spec.max_units + 1))
    speakers = [chr(ord("A") + s) for s in range(spec.n_speakers)]

    units = []
    clock = 0.0
    spoken = {}

    for unit_id in range(1, n + 1):
        unit = _unit(unit_id, speakers[int(rng.integers(len(speakers)))], clock, rng, spec, vocabularies)

        offset = spoken.get(unit.speaker, 0)
        tokens = tuple(replace(token, speaker_word_index=offset + i) for i, token in enumerate(unit.tokens))
        spoken[unit.speaker] = offset + len(tokens)

        units.append(replace(unit, tokens=tokens))
        clock = unit.end_time

    attachments = {}
    pairs = []

    for unit_id in range(2, n + 1):
        if rng.random() < 0.5:
            parent = unit_id - 1
        else:
            parent = int(rng.integers(1, unit_id))
        attachments[unit_id] = parent
        if rng.random() < 0.5:
            pairs.append(AdjacencyPair(parent, unit_id, "AP"))

    return Discussion(
        id=f"synth-{index:04d}",
        units=tuple(units),
        adjacency_pairs=tuple(pairs),
        gold_tree=DiscourseTree(root=1, attachments=attachments),
    )


# =====================================================
# PLANTED MODEL
# =====================================================

def _plant_weights(caches: list, labels: LabelSpace, used: int, stats, rng) -> Weights:

    registry = FeatureRegistry.from_caches(caches)
    unused = set(labels.labels[used:])
    values = {}

    for fid in registry.ids:
        tag = fid.split("|rel=", 1)[1] if "|rel=" in fid else None
        order2 = fid[len("d:order2="):].split(">") if fid.startswith("d:order2=") else []

        if tag in unused or unused.intersection(order2):
            values[fid] = 0.0
        else:
            values[fid] = float(rng.normal(0.0, BLOCK_SCALES[fid.split(":", 1)[0]]))

    for label in unused:
        values[f"d:bias|rel={label}"] = UNUSED_LABEL_BIAS

    weights = Weights(values=values, labels=labels, stats_fingerprint=stats.fingerprint())

    # centre the content gains of every phrase type so both classes occur
    gains = {}
    for cache in caches:
        for k, gain in enumerate(candidate_gains(cache, neutral_relations(cache), weights)):
            gains.setdefault(cache.prepared.candidates[k].phrase_type, []).append(gain)

    for phrase_type, values_of_type in gains.items():
        fid = f"c:type={phrase_type}"
        if fid in values:
            values[fid] -= float(np.median(values_of_type))

    return weights


def _gold_configuration(cache, weights: Weights, oracle_limit: int):

    size = weights.labels.size ** len(cache.attached) * 2 ** len(cache.members)

    if size <= oracle_limit:
        return brute_force_infer(cache, weights, limit=oracle_limit)

    return joint_infer(cache, weights)


def cou_label(relations: dict, tree, patterns: set) -> str:
    """Inconsistent iff some tree edge with an attached parent matches a planted relation bigram."""

    for child, parent in tree.attachments.items():
        if parent in tree.attachments and (relations[parent], relations[child]) in patterns:
            return COU_LABELS[1]

    return COU_LABELS[0]


# =====================================================
# GENERATION
# =====================================================

def generate_corpus(spec: SynthSpec) -> SynthCorpus:
    """
    Sample skeleton discussions, plant a weight vector over their features,
    and label every discussion with its MAP configuration under it. Gold
    summaries hold exactly the head words of the selected phrases.
    """

    rng = np.random.default_rng(spec.seed)
    vocabularies = _vocabularies(spec)
    labels = LabelSpace.tas()

    skeletons = [_skeleton(index, rng, spec, vocabularies) for index in range(spec.n_discussions)]
    prepared = [prepare_discussion(discussion) for discussion in skeletons]

    stats = fit_stats(prepared)
    caches = [build_cache(p, stats, labels) for p in prepared]
    weights = _plant_weights(caches, labels, spec.n_labels, stats, rng)

    used = labels.labels[:spec.n_labels]
    patterns = {(used[0], used[-1]), (used[-1], used[0])}

    discussions = []

    for cache in caches:
        config = _gold_configuration(cache, weights, spec.oracle_limit)
        skeleton = cache.prepared.discussion

        relations = {
            unit.id: labels.labels[config.d[position]]
            for position, unit in enumerate(skeleton.units)
            if config.d[position] >= 0
        }

        chosen = [candidate for k, candidate in enumerate(cache.prepared.candidates) if config.c[k]]
        heads = sorted({candidate.head_lemma for candidate in chosen})

        tree = replace(skeleton.gold_tree, relations=relations)
        discussion = replace(
            skeleton,
            gold_tree=tree,
            summaries=SummarySet(
                abstractive=(" ".join(heads),),
                extractive_unit_ids=tuple(sorted({candidate.unit_id for candidate in chosen})),
            ),
            cou_label=cou_label(relations, tree, patterns) if spec.cou else None,
        )

        validate_discussion(discussion)
        discussions.append(discussion)

    logger.info("generated %d synthetic discussions (seed %d)", len(discussions), spec.seed)

    return SynthCorpus(discussions=discussions, weights=weights, stats=stats)


def generate(spec: SynthSpec) -> list:
    return generate_corpus(spec).discussions
