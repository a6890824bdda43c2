# core/corpus.py

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from core.errors import CorpusValidationError
from utils.schema_checker import check_fields
from utils.text_helpers import normalize_token


logger = logging.getLogger(__name__)


TAS_RELATIONS = (
    "positive",
    "negative",
    "uncertain",
    "request",
    "specialization",
    "elaboration",
    "option",
    "option exclusion",
    "subject-to",
)

PHRASE_LABELS = ("NP", "VP", "PP", "ADJP")

COU_LABELS = ("consistent", "inconsistent")

# Penn Treebank tagset plus the punctuation tags parsers emit.
POS_TAGS = frozenset({
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD",
    "NN", "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR",
    "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ",
    "WDT", "WP", "WP$", "WRB",
    ".", ",", ":", "``", "''", "-LRB-", "-RRB-", "#", "$", "HYPH", "NFP",
})


# =====================================================
# DATA MODEL
# =====================================================

@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    pos: str
    is_stopword: bool
    speaker_word_index: int = 0


@dataclass(frozen=True)
class ConstituentSpan:
    start: int
    end: int
    label: str
    head_index: int
    parent: int | None = None

    @property
    def length(self) -> int:
        return self.end - self.start

    def contains(self, other: "ConstituentSpan") -> bool:
        return self.start <= other.start and other.end <= self.end


@dataclass(frozen=True)
class DependencyLink:
    head: int
    dep: int
    rel: str


@dataclass(frozen=True)
class DiscourseUnit:
    id: int
    speaker: str
    tokens: tuple
    spans: tuple
    dialogue_act: str
    start_time: float
    end_time: float
    dependency_links: tuple = ()

    @property
    def lemmas(self) -> list:
        return [token.lemma for token in self.tokens]

    @property
    def text(self) -> str:
        return " ".join(token.surface for token in self.tokens)

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time


@dataclass(frozen=True)
class AdjacencyPair:
    source_unit: int
    target_unit: int
    pair_type: str


@dataclass(frozen=True)
class SummarySet:
    abstractive: tuple = ()
    participant: tuple = ()
    extractive_unit_ids: tuple = ()

    @property
    def has_abstracts(self) -> bool:
        return bool(self.abstractive) or bool(self.participant)


@dataclass(frozen=True)
class DiscourseTree:
    """Attachment links child -> parent (parent id < child id) and link relations."""

    root: int
    attachments: dict = field(default_factory=dict)
    relations: dict = field(default_factory=dict)

    def parent(self, unit_id: int) -> int | None:
        return self.attachments.get(unit_id)

    def children(self, unit_id: int) -> list:
        return sorted(child for child, parent in self.attachments.items() if parent == unit_id)

    def depth(self, unit_id: int) -> int:
        depth = 0
        while unit_id in self.attachments:
            unit_id = self.attachments[unit_id]
            depth += 1
        return depth

    @property
    def has_relations(self) -> bool:
        return bool(self.relations)


@dataclass(frozen=True)
class Discussion:
    id: str
    units: tuple
    adjacency_pairs: tuple = ()
    gold_tree: DiscourseTree | None = None
    summaries: SummarySet = field(default_factory=SummarySet)
    cou_label: str | None = None
    topic: str | None = None

    @property
    def n(self) -> int:
        return len(self.units)

    @property
    def unit_ids(self) -> list:
        return [unit.id for unit in self.units]

    def unit(self, unit_id: int) -> DiscourseUnit:
        for unit in self.units:
            if unit.id == unit_id:
                return unit
        raise KeyError(unit_id)

    def position(self, unit_id: int) -> int:
        """Zero-based position of a unit in the discussion."""
        for index, unit in enumerate(self.units):
            if unit.id == unit_id:
                return index
        raise KeyError(unit_id)

    def has_pair(self, first: int, second: int) -> bool:
        return any(
            {pair.source_unit, pair.target_unit} == {first, second}
            for pair in self.adjacency_pairs
        )


@dataclass(frozen=True)
class LabelSpace:
    """Relation label space: the nine TAS relations or K anonymous latent labels."""

    kind: str
    labels: tuple

    @classmethod
    def tas(cls) -> "LabelSpace":
        return cls("tas", TAS_RELATIONS)

    @classmethod
    def latent(cls, k: int) -> "LabelSpace":
        if k < 1:
            raise ValueError("latent label space needs K >= 1")
        return cls("latent", tuple(str(i) for i in range(1, k + 1)))

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"relation '{label}' not in the {self.kind} label space")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "labels": list(self.labels)}

    @classmethod
    def from_dict(cls, data: dict) -> "LabelSpace":
        return cls(data["kind"], tuple(data["labels"]))


def normalize_relation(label) -> str:
    return " ".join(str(label).strip().lower().replace("_", " ").split())


# =====================================================
# VALIDATION
# =====================================================

def validate_tree(tree: DiscourseTree, unit_ids, discussion_id=None) -> None:
    """
    Exactly one root, every other unit has one parent with a smaller id,
    relations (when given) cover exactly the attached units.
    """

    ids = list(unit_ids)
    known = set(ids)

    if tree.root not in known:
        raise CorpusValidationError(f"root {tree.root} is not a unit", discussion_id, "gold_tree")

    if tree.root in tree.attachments:
        raise CorpusValidationError("root unit has a parent", discussion_id, "gold_tree")

    for child, parent in tree.attachments.items():
        if child not in known or parent not in known:
            raise CorpusValidationError(
                f"link {child}->{parent} references an unknown unit", discussion_id, "gold_tree"
            )
        if parent >= child:
            raise CorpusValidationError(
                f"parent {parent} does not precede child {child}", discussion_id, "gold_tree"
            )

    unattached = [unit_id for unit_id in ids if unit_id != tree.root and unit_id not in tree.attachments]
    if unattached:
        raise CorpusValidationError(
            f"units {unattached} have no parent (exactly one root allowed)", discussion_id, "gold_tree"
        )

    if tree.relations:
        if set(tree.relations) != set(tree.attachments):
            raise CorpusValidationError(
                "relations must label exactly the attached units", discussion_id, "gold_tree"
            )


def _validate_unit(unit: DiscourseUnit, discussion_id) -> None:

    where = f"units[{unit.id}]"

    if unit.end_time < unit.start_time:
        raise CorpusValidationError("t_end precedes t_start", discussion_id, where)

    for token in unit.tokens:
        if not token.surface:
            raise CorpusValidationError("empty token surface", discussion_id, where + ".tokens")
        if token.pos not in POS_TAGS:
            raise CorpusValidationError(
                f"part-of-speech '{token.pos}' not in the tagset", discussion_id, where + ".tokens"
            )

    length = len(unit.tokens)

    for index, span in enumerate(unit.spans):
        if not 0 <= span.start < span.end <= length:
            raise CorpusValidationError(
                f"span {index} [{span.start},{span.end}) out of bounds", discussion_id, where + ".spans"
            )
        if not span.start <= span.head_index < span.end:
            raise CorpusValidationError(
                f"span {index} head outside the span", discussion_id, where + ".spans"
            )
        if span.parent is not None:
            if not 0 <= span.parent < len(unit.spans):
                raise CorpusValidationError(
                    f"span {index} parent index {span.parent} unknown", discussion_id, where + ".spans"
                )
            parent = unit.spans[span.parent]
            if not parent.contains(span) or parent.length == span.length:
                raise CorpusValidationError(
                    f"span {index} is not strictly inside its parent", discussion_id, where + ".spans"
                )

    for link in unit.dependency_links:
        if not (0 <= link.head < length and 0 <= link.dep < length):
            raise CorpusValidationError("dependency link out of bounds", discussion_id, where + ".deps")


def validate_discussion(discussion: Discussion) -> None:

    did = discussion.id

    if discussion.n < 1:
        raise CorpusValidationError("a discussion needs at least one unit", did, "units")

    ids = discussion.unit_ids

    for previous, current in zip(ids, ids[1:]):
        if current <= previous:
            raise CorpusValidationError(
                f"unit ids must be strictly increasing, got {ids}", did, "units"
            )

    for unit in discussion.units:
        _validate_unit(unit, did)

    known = set(ids)

    for pair in discussion.adjacency_pairs:
        if pair.source_unit == pair.target_unit:
            raise CorpusValidationError(
                f"adjacency pair links unit {pair.source_unit} to itself", did, "adjacency_pairs"
            )
        if pair.source_unit not in known or pair.target_unit not in known:
            raise CorpusValidationError(
                f"adjacency pair ({pair.source_unit},{pair.target_unit}) references an unknown unit",
                did,
                "adjacency_pairs",
            )

    missing = [uid for uid in discussion.summaries.extractive_unit_ids if uid not in known]
    if missing:
        raise CorpusValidationError(f"extractive ids {missing} are not units", did, "summaries")

    if discussion.gold_tree is not None:
        validate_tree(discussion.gold_tree, ids, did)
        for label in discussion.gold_tree.relations.values():
            if label not in TAS_RELATIONS:
                raise CorpusValidationError(f"unknown relation '{label}'", did, "gold_tree")

    if discussion.cou_label is not None and discussion.cou_label not in COU_LABELS:
        raise CorpusValidationError(f"unknown COU label '{discussion.cou_label}'", did, "cou")


# =====================================================
# JSON -> DATA MODEL
# =====================================================

def _int_field(value, discussion_id, where):
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise CorpusValidationError(f"expected an integer, got {value!r}", discussion_id, where)
    try:
        return int(value)
    except ValueError:
        raise CorpusValidationError(f"expected an integer, got {value!r}", discussion_id, where)


def _parse_unit(raw: dict, discussion_id, speaker_counts: dict) -> DiscourseUnit:

    check_fields(raw, "unit", discussion_id)
    unit_id = _int_field(raw["id"], discussion_id, "units.id")
    where = f"units[{unit_id}]"

    speaker = str(raw["speaker"])
    tokens = []

    for token in raw["tokens"]:
        check_fields(token, "token", discussion_id, where + ".tokens")
        index = speaker_counts.get(speaker, 0)
        speaker_counts[speaker] = index + 1
        tokens.append(Token(
            surface=str(token["surface"]),
            lemma=str(token["lemma"]).lower(),
            pos=str(token["pos"]),
            is_stopword=bool(token["stop"]),
            speaker_word_index=index,
        ))

    spans = []

    for span in raw["spans"]:
        check_fields(span, "span", discussion_id, where + ".spans")
        label = str(span["label"]).upper()
        spans.append(ConstituentSpan(
            start=_int_field(span["start"], discussion_id, where + ".spans"),
            end=_int_field(span["end"], discussion_id, where + ".spans"),
            label=label if label in PHRASE_LABELS else "other",
            head_index=_int_field(span["head"], discussion_id, where + ".spans"),
            parent=None if span["parent"] is None else _int_field(span["parent"], discussion_id, where + ".spans"),
        ))

    links = []

    for dep in raw["deps"] or []:
        check_fields(dep, "dep", discussion_id, where + ".deps")
        links.append(DependencyLink(
            head=_int_field(dep["head"], discussion_id, where + ".deps"),
            dep=_int_field(dep["dep"], discussion_id, where + ".deps"),
            rel=str(dep["rel"]).lower(),
        ))

    try:
        start_time = float(raw["t_start"])
        end_time = float(raw["t_end"])
    except (TypeError, ValueError):
        raise CorpusValidationError("t_start/t_end must be numbers", discussion_id, where)

    return DiscourseUnit(
        id=unit_id,
        speaker=speaker,
        tokens=tuple(tokens),
        spans=tuple(spans),
        dialogue_act=str(raw["da"]),
        start_time=start_time,
        end_time=end_time,
        dependency_links=tuple(links),
    )


def parse_discussion(raw: dict) -> Discussion:
    """Build and validate one Discussion from its JSON object."""

    discussion_id = raw.get("id") if isinstance(raw, dict) else None
    check_fields(raw, "discussion", discussion_id)
    discussion_id = str(raw["id"])

    if not isinstance(raw["units"], list) or not raw["units"]:
        raise CorpusValidationError("units must be a non-empty list", discussion_id, "units")

    speaker_counts = {}
    units = tuple(_parse_unit(unit, discussion_id, speaker_counts) for unit in raw["units"])

    pairs = []
    for pair in raw["adjacency_pairs"] or []:
        check_fields(pair, "adjacency_pair", discussion_id)
        pairs.append(AdjacencyPair(
            source_unit=_int_field(pair["src"], discussion_id, "adjacency_pairs"),
            target_unit=_int_field(pair["tgt"], discussion_id, "adjacency_pairs"),
            pair_type=str(pair["type"]),
        ))

    gold_tree = None
    if raw["gold_tree"] is not None:
        tree = check_fields(raw["gold_tree"], "gold_tree", discussion_id)
        attachments = {
            _int_field(child, discussion_id, "gold_tree.attach"): _int_field(parent, discussion_id, "gold_tree.attach")
            for child, parent in (tree["attach"] or {}).items()
        }
        relations = {
            _int_field(child, discussion_id, "gold_tree.rel"): normalize_relation(label)
            for child, label in (tree["rel"] or {}).items()
        }
        gold_tree = DiscourseTree(root=units[0].id, attachments=attachments, relations=relations)

    summaries_raw = check_fields(raw["summaries"], "summaries", discussion_id)
    summaries = SummarySet(
        abstractive=tuple(str(text) for text in summaries_raw["abstractive"] or []),
        participant=tuple(str(text) for text in summaries_raw["participant"] or []),
        extractive_unit_ids=tuple(
            _int_field(uid, discussion_id, "summaries.extractive_ids")
            for uid in summaries_raw["extractive_ids"] or []
        ),
    )

    cou = raw["cou"]
    discussion = Discussion(
        id=discussion_id,
        units=units,
        adjacency_pairs=tuple(pairs),
        gold_tree=gold_tree,
        summaries=summaries,
        cou_label=None if cou is None else normalize_token(cou) or str(cou),
        topic=None if raw.get("topic") is None else str(raw["topic"]),
    )

    validate_discussion(discussion)

    return discussion


def parse_corpus(data) -> list:

    if not isinstance(data, list):
        raise CorpusValidationError("top level of a corpus must be a list of discussions")

    discussions = []
    seen = set()

    for raw in data:
        discussion = parse_discussion(raw)
        if discussion.id in seen:
            raise CorpusValidationError("duplicate discussion id", discussion.id, "id")
        seen.add(discussion.id)
        discussions.append(discussion)

    return discussions


def load_discussions(path) -> list:
    """Read a corpus JSON file; every discussion is validated or the whole load fails."""

    path = Path(path)

    if not path.exists():
        raise CorpusValidationError(f"corpus file not found: {path}")

    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusValidationError(f"corpus file is not valid JSON: {exc}") from exc

    discussions = parse_corpus(data)
    logger.info("loaded %d discussions from %s", len(discussions), path)

    return discussions


# =====================================================
# DATA MODEL -> JSON
# =====================================================

def discussion_to_dict(discussion: Discussion) -> dict:

    units = []

    for unit in discussion.units:
        units.append({
            "id": unit.id,
            "speaker": unit.speaker,
            "tokens": [
                {"surface": t.surface, "lemma": t.lemma, "pos": t.pos, "stop": t.is_stopword}
                for t in unit.tokens
            ],
            "spans": [
                {"start": s.start, "end": s.end, "label": s.label, "head": s.head_index, "parent": s.parent}
                for s in unit.spans
            ],
            "da": unit.dialogue_act,
            "t_start": unit.start_time,
            "t_end": unit.end_time,
            "deps": [{"head": d.head, "dep": d.dep, "rel": d.rel} for d in unit.dependency_links],
        })

    gold_tree = None
    if discussion.gold_tree is not None:
        gold_tree = {
            "attach": {str(child): parent for child, parent in sorted(discussion.gold_tree.attachments.items())},
            "rel": {str(child): label for child, label in sorted(discussion.gold_tree.relations.items())},
        }

    record = {
        "id": discussion.id,
        "units": units,
        "adjacency_pairs": [
            {"src": p.source_unit, "tgt": p.target_unit, "type": p.pair_type}
            for p in discussion.adjacency_pairs
        ],
        "gold_tree": gold_tree,
        "summaries": {
            "abstractive": list(discussion.summaries.abstractive),
            "participant": list(discussion.summaries.participant),
            "extractive_ids": list(discussion.summaries.extractive_unit_ids),
        },
        "cou": discussion.cou_label,
    }

    if discussion.topic is not None:
        record["topic"] = discussion.topic

    return record


def dump_discussions(discussions, path) -> None:

    payload = [discussion_to_dict(discussion) for discussion in discussions]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def filter_discussions(discussions, min_units: int = 1, exclude_topics=()) -> list:
    """Drop discussions shorter than `min_units` units or whose topic label is excluded."""

    excluded = {normalize_token(topic) for topic in exclude_topics or ()}

    kept = []
    for discussion in discussions:
        if discussion.n < min_units:
            logger.debug("dropping %s: %d units", discussion.id, discussion.n)
        elif discussion.topic is not None and normalize_token(discussion.topic) in excluded:
            logger.debug("dropping %s: topic '%s'", discussion.id, discussion.topic)
        else:
            kept.append(discussion)

    dropped = len(discussions) - len(kept)
    if dropped:
        logger.info("dropped %d of %d discussions (min units %d, excluded topics %s)",
                    dropped, len(discussions), min_units, sorted(excluded))

    return kept
