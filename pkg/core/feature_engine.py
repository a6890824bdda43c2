# core/feature_engine.py

"""
Feature templates of the joint model.

Feature vectors are sparse ``dict[str, float]`` maps. Ids carry their block
as a prefix (``c:`` content, ``d:`` discourse, ``cd:`` joint), so the three
weight blocks never share an id. Relation-dependent ids end in ``|rel=<label>``.
"""

import hashlib
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field

from core.candidate_engine import CandidatePhrase, PreparedDiscussion
from core.errors import ModelMismatchError
from utils.text_helpers import is_stop_token


logger = logging.getLogger(__name__)


CONTENT_POS_PREFIXES = ("NN", "VB", "JJ", "RB")

REAL_VALUED = frozenset({
    "c:tfidf_min",
    "c:tfidf_max",
    "c:tfidf_avg",
    "c:content_words",
    "c:cluster_size",
    "c:abs_position",
    "c:rel_position",
    "d:jaccard",
    "d:n_candidates",
    "d:duration",
    "d:n_words",
    "d:depth",
    "d:siblings",
})

REAL_VALUED_PREFIXES = ("c:pos=",)


def base_id(feature_id: str) -> str:
    """Template id without its relation tag; joint ids map to their content id."""

    base = feature_id.split("|", 1)[0]

    if base.startswith("cd:"):
        return "c:" + base[3:]

    return base


def is_real_valued(feature_id: str) -> bool:
    base = base_id(feature_id)
    return base in REAL_VALUED or base.startswith(REAL_VALUED_PREFIXES)


def block_of(feature_id: str) -> str:
    return feature_id.split(":", 1)[0]


def rel_tag(label: str) -> str:
    return f"|rel={label}"


def order2_id(parent_label: str, child_label: str) -> str:
    return f"d:order2={parent_label}>{child_label}"


def is_content_word(token) -> bool:
    if is_stop_token(token):
        return False
    return token.pos.startswith(CONTENT_POS_PREFIXES)


# =====================================================
# CORPUS STATISTICS
# =====================================================

@dataclass(frozen=True)
class CorpusStats:
    idf: dict
    feature_ranges: dict
    document_count: int

    def idf_of(self, lemma: str) -> float:
        if lemma in self.idf:
            return self.idf[lemma]
        return math.log(self.document_count / 1.0) + 1.0

    def to_dict(self) -> dict:
        return {
            "document_count": self.document_count,
            "idf": dict(sorted(self.idf.items())),
            "feature_ranges": {
                fid: [low, high] for fid, (low, high) in sorted(self.feature_ranges.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CorpusStats":
        return cls(
            idf={lemma: float(value) for lemma, value in data["idf"].items()},
            feature_ranges={
                fid: (float(low), float(high)) for fid, (low, high) in data["feature_ranges"].items()
            },
            document_count=int(data["document_count"]),
        )

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class DiscussionContext:
    """Per-discussion quantities shared by every feature of that discussion."""

    term_counts: Counter
    main_speaker: str
    cluster_sizes: dict
    positions: dict
    unit_lemmas: dict
    n: int


def main_speaker(discussion) -> str:
    """Speaker with the most words; ties go to the smallest speaker id."""

    words = Counter()

    for unit in discussion.units:
        words[unit.speaker] += len(unit.tokens)

    return min(words, key=lambda speaker: (-words[speaker], speaker))


def discussion_context(prepared: PreparedDiscussion) -> DiscussionContext:

    discussion = prepared.discussion

    term_counts = Counter()
    unit_lemmas = {}

    for unit in discussion.units:
        term_counts.update(unit.lemmas)
        unit_lemmas[unit.id] = {token.lemma for token in unit.tokens if not is_stop_token(token)}

    return DiscussionContext(
        term_counts=term_counts,
        main_speaker=main_speaker(discussion),
        cluster_sizes={cluster.key: cluster.size for cluster in prepared.clusters},
        positions={unit.id: index + 1 for index, unit in enumerate(discussion.units)},
        unit_lemmas=unit_lemmas,
        n=discussion.n,
    )


# =====================================================
# CONTENT FEATURES
# =====================================================

def content_features(candidate: CandidatePhrase, prepared: PreparedDiscussion, stats: CorpusStats, context=None) -> dict:
    """Raw (unnormalized) content features of one candidate phrase."""

    if context is None:
        context = discussion_context(prepared)

    discussion = prepared.discussion
    features = {}

    scores = [
        context.term_counts[token.lemma] * stats.idf_of(token.lemma)
        for token in candidate.tokens
        if not is_stop_token(token)
    ]

    if scores:
        features["c:tfidf_min"] = min(scores)
        features["c:tfidf_max"] = max(scores)
        features["c:tfidf_avg"] = sum(scores) / len(scores)

    features["c:content_words"] = float(sum(1 for token in candidate.tokens if is_content_word(token)))

    position = context.positions[candidate.unit_id]

    if position > 1:
        previous = discussion.units[position - 2]
        if candidate.head_lemma in {token.lemma for token in previous.tokens}:
            features["c:head_in_prev"] = 1.0

    features["c:cluster_size"] = float(context.cluster_sizes.get(candidate.cluster_key, 1))

    for tag, count in Counter(token.pos for token in candidate.tokens).items():
        features[f"c:pos={tag}"] = float(count)

    features[f"c:type={candidate.phrase_type}"] = 1.0
    features["c:abs_position"] = float(position)
    features["c:rel_position"] = position / context.n

    if discussion.unit(candidate.unit_id).speaker == context.main_speaker:
        features["c:main_speaker"] = 1.0

    return {fid: value for fid, value in features.items() if value != 0}


# =====================================================
# DISCOURSE FEATURES
# =====================================================

def discourse_features(unit_id: int, prepared: PreparedDiscussion, context=None) -> dict:
    """
    Raw relation-independent observations of an attached unit. They are
    conjoined with the unit's relation by relation_features.
    """

    tree = prepared.tree
    parent_id = tree.parent(unit_id)

    if parent_id is None:
        raise ValueError(f"unit {unit_id} is the root and carries no relation")

    if context is None:
        context = discussion_context(prepared)

    discussion = prepared.discussion
    unit = discussion.unit(unit_id)
    parent = discussion.unit(parent_id)

    features = {
        "d:bias": 1.0,
        f"d:da={unit.dialogue_act}": 1.0,
        f"d:parent_da={parent.dialogue_act}": 1.0,
    }

    if discussion.has_pair(unit_id, parent_id):
        features["d:adj_pair"] = 1.0

    mine = context.unit_lemmas[unit_id]
    theirs = context.unit_lemmas[parent_id]
    union = mine | theirs
    features["d:jaccard"] = len(mine & theirs) / len(union) if union else 0.0

    if unit.speaker == parent.speaker:
        features["d:same_speaker"] = 1.0

    features["d:n_candidates"] = float(len(prepared.unit_candidates.get(unit_id, [])))
    features["d:duration"] = unit.duration
    features["d:n_words"] = float(len(unit.tokens))
    features["d:depth"] = float(tree.depth(unit_id))
    features["d:siblings"] = float(len(tree.children(parent_id)) - 1)

    return {fid: value for fid, value in features.items() if value != 0}


def relation_features(base: dict, label: str, parent_label: str | None = None) -> dict:
    """
    Discourse features for relation `label`: every observation conjoined
    with the relation, plus the order-2 indicator when the parent is attached.
    """

    tag = rel_tag(label)
    features = {fid + tag: value for fid, value in base.items()}

    if parent_label is not None:
        features[order2_id(parent_label, label)] = 1.0

    return features


# =====================================================
# JOINT FEATURES
# =====================================================

def conjoin_content(content: dict, label: str) -> dict:
    tag = rel_tag(label)
    return {"cd:" + fid[2:] + tag: value for fid, value in content.items()}


def joint_features(candidate: CandidatePhrase, label: str, prepared: PreparedDiscussion, stats: CorpusStats, context=None) -> dict:
    """Content features re-keyed with the relation of the candidate's unit."""

    return conjoin_content(content_features(candidate, prepared, stats, context), label)


# =====================================================
# STATISTICS FITTING AND NORMALIZATION
# =====================================================

def _ranges(vectors: list) -> dict:

    ids = set()
    for vector in vectors:
        ids.update(fid for fid in vector if is_real_valued(fid))

    ranges = {}

    for fid in sorted(ids):
        values = [vector.get(fid, 0.0) for vector in vectors]
        ranges[fid] = (min(values), max(values))

    return ranges


def fit_stats(train: list) -> CorpusStats:
    """
    IDF over training discussions and min/max ranges of every real-valued
    template over training candidates and attached units.
    """

    if not train:
        raise ValueError("cannot fit statistics on an empty corpus")

    document_count = len(train)
    document_frequency = Counter()

    for prepared in train:
        document_frequency.update({lemma for unit in prepared.discussion.units for lemma in unit.lemmas})

    idf = {
        lemma: math.log(document_count / (1.0 + df)) + 1.0
        for lemma, df in document_frequency.items()
    }

    stats = CorpusStats(idf=idf, feature_ranges={}, document_count=document_count)

    content_vectors = []
    discourse_vectors = []

    for prepared in train:
        context = discussion_context(prepared)
        for candidate in prepared.candidates:
            content_vectors.append(content_features(candidate, prepared, stats, context))
        for child in sorted(prepared.tree.attachments):
            discourse_vectors.append(discourse_features(child, prepared, context))

    ranges = _ranges(content_vectors)
    ranges.update(_ranges(discourse_vectors))

    logger.debug("fitted stats over %d discussions, %d ranges", document_count, len(ranges))

    return CorpusStats(idf=idf, feature_ranges=ranges, document_count=document_count)


def normalize(vector: dict, stats: CorpusStats) -> dict:
    """
    Min-max scale real-valued entries into [0, 1] using training ranges,
    clamping unseen values; indicators pass through. Zero results are dropped.
    """

    normalized = {}

    for fid, value in vector.items():
        if is_real_valued(fid):
            low, high = stats.feature_ranges.get(base_id(fid), (0.0, 0.0))
            if high <= low:
                value = 0.0
            else:
                value = min(1.0, max(0.0, (value - low) / (high - low)))

        if value != 0:
            normalized[fid] = value

    return normalized


# =====================================================
# GLOBAL FEATURE VECTOR
# =====================================================

def add_into(target: dict, vector: dict, scale: float = 1.0) -> dict:

    for fid, value in vector.items():
        updated = target.get(fid, 0.0) + scale * value
        if updated == 0:
            target.pop(fid, None)
        else:
            target[fid] = updated

    return target


def global_features(prepared: PreparedDiscussion, c, d, stats: CorpusStats, labels, include_joint: bool = True) -> dict:
    """
    Phi(c, d, x): selected candidates contribute content (and, outside the
    root, joint) features; every attached unit contributes its discourse
    features. `d` holds label indices per unit position, -1 at the root.
    """

    discussion = prepared.discussion

    if len(c) != len(prepared.candidates):
        raise ValueError("phrase assignment does not cover every candidate")
    if len(d) != discussion.n:
        raise ValueError("relation assignment does not cover every unit")

    context = discussion_context(prepared)
    positions = {unit.id: index for index, unit in enumerate(discussion.units)}
    total = {}

    for k, candidate in enumerate(prepared.candidates):
        if not c[k]:
            continue

        content = normalize(content_features(candidate, prepared, stats, context), stats)
        add_into(total, content)

        label_index = d[positions[candidate.unit_id]]
        if include_joint and label_index >= 0:
            add_into(total, conjoin_content(content, labels.labels[label_index]))

    for child, parent in sorted(prepared.tree.attachments.items()):
        label_index = d[positions[child]]
        if label_index < 0:
            raise ValueError(f"attached unit {child} has no relation")

        parent_index = d[positions[parent]]
        parent_label = labels.labels[parent_index] if parent_index >= 0 else None

        base = normalize(discourse_features(child, prepared, context), stats)
        add_into(total, relation_features(base, labels.labels[label_index], parent_label))

    return total


# =====================================================
# CACHED FEATURES
# =====================================================

@dataclass
class FeatureCache:
    """
    Normalized features of one prepared discussion, pre-conjoined with every
    relation label, so scoring never rebuilds feature dictionaries.
    """

    prepared: PreparedDiscussion
    labels: object
    content: list
    joint: list
    discourse: list
    unit_of: list
    parent_of: list
    children_of: list
    members: list
    include_joint: bool = True
    order2: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.parent_of)

    @property
    def n_candidates(self) -> int:
        return len(self.content)

    @property
    def attached(self) -> list:
        return [position for position, parent in enumerate(self.parent_of) if parent >= 0]


def build_cache(prepared: PreparedDiscussion, stats: CorpusStats, labels, include_joint: bool = True) -> FeatureCache:

    discussion = prepared.discussion
    context = discussion_context(prepared)
    positions = {unit.id: index for index, unit in enumerate(discussion.units)}
    label_names = labels.labels

    content = []
    joint = []
    unit_of = []

    for candidate in prepared.candidates:
        vector = normalize(content_features(candidate, prepared, stats, context), stats)
        content.append(tuple(sorted(vector.items())))
        unit_of.append(positions[candidate.unit_id])
        if include_joint:
            joint.append([tuple(sorted(conjoin_content(vector, name).items())) for name in label_names])
        else:
            joint.append([() for _ in label_names])

    parent_of = [-1] * discussion.n
    children_of = [[] for _ in range(discussion.n)]
    discourse = [None] * discussion.n

    for child, parent in sorted(prepared.tree.attachments.items()):
        child_position = positions[child]
        parent_position = positions[parent]
        parent_of[child_position] = parent_position
        children_of[parent_position].append(child_position)

        base = normalize(discourse_features(child, prepared, context), stats)
        discourse[child_position] = [tuple(sorted(relation_features(base, name).items())) for name in label_names]

    members = [[] for _ in prepared.clusters]
    for k, cluster_index in enumerate(prepared.cluster_of):
        members[cluster_index].append(k)

    order2 = [[order2_id(parent, child) for child in label_names] for parent in label_names]

    return FeatureCache(
        prepared=prepared,
        labels=labels,
        content=content,
        joint=joint,
        discourse=discourse,
        unit_of=unit_of,
        parent_of=parent_of,
        children_of=children_of,
        members=members,
        include_joint=include_joint,
        order2=order2,
    )


# =====================================================
# REGISTRY
# =====================================================

class FeatureRegistry:
    """Interned feature ids in sorted order; dumpable for debugging."""

    def __init__(self, feature_ids=()):
        self.ids = sorted(set(feature_ids))
        self.index = {fid: position for position, fid in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, feature_id) -> bool:
        return feature_id in self.index

    @classmethod
    def from_caches(cls, caches: list) -> "FeatureRegistry":
        """Every feature id reachable by any configuration of the given discussions."""

        ids = set()

        for cache in caches:
            for items in cache.content:
                ids.update(fid for fid, _ in items)
            for per_label in cache.joint:
                for items in per_label:
                    ids.update(fid for fid, _ in items)
            for position in cache.attached:
                for items in cache.discourse[position]:
                    ids.update(fid for fid, _ in items)
            if any(cache.parent_of[cache.parent_of[position]] >= 0 for position in cache.attached):
                for row in cache.order2:
                    ids.update(row)

        return cls(ids)

    def check_compatible(self, other: "FeatureRegistry") -> None:
        if self.ids != other.ids:
            raise ModelMismatchError("feature registries differ")

    def dump_text(self) -> str:
        lines = []
        for position, fid in enumerate(self.ids):
            lines.append(f"{position}\t{fid}\t{describe_feature(fid)}")
        return "\n".join(lines) + ("\n" if lines else "")


TEMPLATE_DESCRIPTIONS = {
    "c:tfidf_min": "minimum TF-IDF of phrase words",
    "c:tfidf_max": "maximum TF-IDF of phrase words",
    "c:tfidf_avg": "average TF-IDF of phrase words",
    "c:content_words": "number of content words",
    "c:head_in_prev": "head word mentioned in preceding turn",
    "c:cluster_size": "size of the phrase cluster",
    "c:abs_position": "absolute turn position",
    "c:rel_position": "relative turn position",
    "c:main_speaker": "uttered by the main speaker",
    "d:bias": "relation prior",
    "d:adj_pair": "adjacency pair with parent",
    "d:jaccard": "Jaccard similarity with parent",
    "d:same_speaker": "same speaker as parent",
    "d:n_candidates": "number of candidate phrases",
    "d:duration": "time span",
    "d:n_words": "number of words",
    "d:depth": "depth in the discourse tree",
    "d:siblings": "number of siblings",
}


def describe_feature(feature_id: str) -> str:

    base = base_id(feature_id)
    relation = feature_id.split("|rel=", 1)[1] if "|rel=" in feature_id else None

    if base.startswith("d:order2="):
        parent, child = base[len("d:order2="):].split(">", 1)
        return f"order-2 relation {parent} -> {child}"

    if base.startswith("c:pos="):
        text = f"count of POS tag {base[6:]}"
    elif base.startswith("c:type="):
        text = f"phrase type {base[7:]}"
    elif base.startswith("d:da="):
        text = f"dialogue act {base[5:]}"
    elif base.startswith("d:parent_da="):
        text = f"parent dialogue act {base[12:]}"
    else:
        text = TEMPLATE_DESCRIPTIONS.get(base, base)

    if feature_id.startswith("cd:"):
        text = "joint: " + text

    if relation is not None:
        text += f" [{relation}]"

    return text
