# core/candidate_engine.py

import logging
from dataclasses import dataclass, field, replace

from core.corpus import Discussion, DiscourseTree, DiscourseUnit, PHRASE_LABELS
from core.errors import TrainingDataError
from core.tree_builder import build_tree
from utils.text_helpers import is_stop_token, normalize_token, tokenize_text


logger = logging.getLogger(__name__)


MAX_PHRASE_WORDS = 5

MERGE_RELATIONS = frozenset({"dobj", "obj", "nsubj", "nsubjpass", "nsubj:pass", "subj"})


@dataclass(frozen=True)
class CandidatePhrase:
    unit_id: int
    index: int
    token_ranges: tuple
    phrase_type: str
    head_lemma: str
    head_surface: str
    tokens: tuple = ()
    label: int | None = None

    @property
    def start(self) -> int:
        return self.token_ranges[0][0]

    @property
    def surface(self) -> str:
        return " ".join(token.surface for token in self.tokens)

    @property
    def word_count(self) -> int:
        return len(self.tokens)

    @property
    def cluster_key(self) -> tuple:
        return (self.phrase_type, self.head_lemma)


@dataclass(frozen=True)
class PhraseCluster:
    key: tuple
    members: tuple

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass
class PreparedDiscussion:
    """A discussion with its tree, candidates and clusters resolved once."""

    discussion: Discussion
    tree: DiscourseTree
    candidates: list
    clusters: list
    cluster_of: list
    unit_candidates: dict = field(default_factory=dict)
    gold_c: tuple | None = None
    gold_d: dict | None = None

    @property
    def id(self) -> str:
        return self.discussion.id


# =====================================================
# CANDIDATE EXTRACTION
# =====================================================

def _eligible_spans(unit: DiscourseUnit) -> list:

    eligible = []
    seen_offsets = set()

    for span in unit.spans:
        if span.label not in PHRASE_LABELS:
            continue
        if span.length > MAX_PHRASE_WORDS:
            continue
        if is_stop_token(unit.tokens[span.head_index]):
            continue
        if (span.start, span.end) in seen_offsets:
            continue

        seen_offsets.add((span.start, span.end))
        eligible.append(span)

    return eligible


def _keep_outermost(spans: list) -> list:
    """Drop every span that lies inside another surviving span."""

    kept = []

    for span in spans:
        inside = any(
            other is not span and other.contains(span) and other.length > span.length
            for other in spans
        )
        if not inside:
            kept.append(span)

    return kept


def _merge_verbs(unit: DiscourseUnit, spans: list) -> dict:
    """
    Map NP span -> verb token index for NPs that are the direct object or
    subject of a verb. Each verb merges once, objects before subjects.
    """

    covered = set()
    for span in spans:
        covered.update(range(span.start, span.end))

    noun_phrases = {span.head_index: span for span in spans if span.label == "NP"}

    by_verb = {}

    for link in unit.dependency_links:
        if link.rel not in MERGE_RELATIONS:
            continue
        if link.dep not in noun_phrases:
            continue
        if not unit.tokens[link.head].pos.startswith("VB"):
            continue
        if link.head in covered:
            continue

        rank = 1 if "subj" in link.rel else 0
        best = by_verb.get(link.head)
        if best is None or rank < best[0]:
            by_verb[link.head] = (rank, noun_phrases[link.dep])

    merges = {}

    for verb, (_, span) in sorted(by_verb.items()):
        if id(span) not in merges:
            merges[id(span)] = verb

    return merges


def _token_ranges(span, verb: int | None) -> tuple:

    if verb is None:
        return ((span.start, span.end),)

    if verb == span.start - 1:
        return ((verb, span.end),)

    if verb == span.end:
        return ((span.start, verb + 1),)

    return tuple(sorted([(verb, verb + 1), (span.start, span.end)]))


def extract_candidates(unit: DiscourseUnit) -> list:
    """
    Candidate phrases of one unit: NP/VP/PP/ADJP spans of at most five words
    whose head is not a stopword, keeping only outermost spans, with verbs
    merged into their object or subject NP.
    """

    spans = _keep_outermost(_eligible_spans(unit))
    merges = _merge_verbs(unit, spans)

    candidates = []

    for span in spans:
        verb = merges.get(id(span))
        ranges = _token_ranges(span, verb)
        head = unit.tokens[span.head_index]

        tokens = tuple(
            unit.tokens[position]
            for start, end in ranges
            for position in range(start, end)
        )

        candidates.append(CandidatePhrase(
            unit_id=unit.id,
            index=0,
            token_ranges=ranges,
            phrase_type="merged" if verb is not None else span.label,
            head_lemma=head.lemma.lower(),
            head_surface=head.surface,
            tokens=tokens,
        ))

    candidates.sort(key=lambda candidate: candidate.token_ranges)

    return [replace(candidate, index=j) for j, candidate in enumerate(candidates, start=1)]


def extract_all_candidates(discussion: Discussion) -> list:

    candidates = []

    for unit in discussion.units:
        candidates.extend(extract_candidates(unit))

    return candidates


# =====================================================
# CLUSTERING
# =====================================================

def cluster_candidates(discussion: Discussion, candidates: list | None = None) -> list:
    """
    Group the discussion's candidates sharing phrase type and head lemma.
    Clusters are ordered by first member; together they partition the candidates.
    """

    if candidates is None:
        candidates = extract_all_candidates(discussion)

    groups = {}

    for candidate in candidates:
        groups.setdefault(candidate.cluster_key, []).append(candidate)

    return [PhraseCluster(key=key, members=tuple(members)) for key, members in groups.items()]


# =====================================================
# GOLD LABELS
# =====================================================

def summary_vocabulary(discussion: Discussion) -> set:

    vocabulary = set()

    for text in discussion.summaries.abstractive + discussion.summaries.participant:
        vocabulary.update(tokenize_text(text))

    return vocabulary


def induce_gold_labels(discussion: Discussion, candidates: list | None = None) -> list:
    """
    Label a candidate positive iff its head word occurs in an abstractive or
    participant summary (lemma or lowercased surface match).
    """

    if not discussion.summaries.has_abstracts:
        raise TrainingDataError(
            f"discussion '{discussion.id}' has no abstractive or participant summaries; "
            "it can only be used for testing"
        )

    if candidates is None:
        candidates = extract_all_candidates(discussion)

    vocabulary = summary_vocabulary(discussion)

    labeled = []

    for candidate in candidates:
        positive = (
            normalize_token(candidate.head_lemma) in vocabulary
            or normalize_token(candidate.head_surface) in vocabulary
        )
        labeled.append(replace(candidate, label=int(positive)))

    return labeled


# =====================================================
# PREPARATION
# =====================================================

def prepare_discussion(discussion: Discussion) -> PreparedDiscussion:
    """Resolve tree, candidates, clusters and any gold labels for one discussion."""

    tree = build_tree(discussion)
    candidates = extract_all_candidates(discussion)

    gold_c = None
    if discussion.summaries.has_abstracts:
        candidates = induce_gold_labels(discussion, candidates)
        gold_c = tuple(candidate.label for candidate in candidates)

    clusters = cluster_candidates(discussion, candidates)

    index_of = {id(candidate): k for k, candidate in enumerate(candidates)}
    cluster_of = [0] * len(candidates)

    for cluster_index, cluster in enumerate(clusters):
        for member in cluster.members:
            cluster_of[index_of[id(member)]] = cluster_index

    unit_candidates = {unit.id: [] for unit in discussion.units}
    for k, candidate in enumerate(candidates):
        unit_candidates[candidate.unit_id].append(k)

    gold_d = None
    if discussion.gold_tree is not None and discussion.gold_tree.has_relations:
        gold_d = dict(discussion.gold_tree.relations)

    return PreparedDiscussion(
        discussion=discussion,
        tree=tree,
        candidates=candidates,
        clusters=clusters,
        cluster_of=cluster_of,
        unit_candidates=unit_candidates,
        gold_c=gold_c,
        gold_d=gold_d,
    )


def cluster_members(prepared: PreparedDiscussion) -> list:
    """Candidate indices per cluster, in cluster order."""

    members = [[] for _ in prepared.clusters]

    for k, cluster_index in enumerate(prepared.cluster_of):
        members[cluster_index].append(k)

    return members
