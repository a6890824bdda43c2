# utils/schema_checker.py

from core.errors import CorpusValidationError


def get_expected_fields(record_type: str) -> tuple:
    """
    Field names every record of the corpus JSON must carry.

    record_type: "discussion", "unit", "token", "span", "dep",
    "adjacency_pair", "summaries" or "gold_tree"
    """

    if record_type == "discussion":
        return ("id", "units", "adjacency_pairs", "gold_tree", "summaries", "cou")

    elif record_type == "unit":
        return ("id", "speaker", "tokens", "spans", "da", "t_start", "t_end", "deps")

    elif record_type == "token":
        return ("surface", "lemma", "pos", "stop")

    elif record_type == "span":
        return ("start", "end", "label", "head", "parent")

    elif record_type == "dep":
        return ("head", "dep", "rel")

    elif record_type == "adjacency_pair":
        return ("src", "tgt", "type")

    elif record_type == "summaries":
        return ("abstractive", "participant", "extractive_ids")

    elif record_type == "gold_tree":
        return ("attach", "rel")

    else:
        raise ValueError(f"Invalid record type for field checking: {record_type}")


OPTIONAL_FIELDS = {
    "discussion": ("topic",),
}


def check_fields(record, record_type: str, discussion_id=None, where: str = "") -> dict:
    """
    Validate that `record` is a JSON object holding exactly the expected
    fields plus any optional ones. Missing and unexpected fields are both
    reported.
    """

    label = where or record_type

    if not isinstance(record, dict):
        raise CorpusValidationError(
            f"expected an object, got {type(record).__name__}",
            discussion_id=discussion_id,
            field=label,
        )

    expected = get_expected_fields(record_type)
    allowed = expected + OPTIONAL_FIELDS.get(record_type, ())

    missing = [name for name in expected if name not in record]
    unexpected = sorted(name for name in record if name not in allowed)

    if missing:
        raise CorpusValidationError(
            f"missing required fields {missing}",
            discussion_id=discussion_id,
            field=label,
        )

    if unexpected:
        raise CorpusValidationError(
            f"unexpected fields {unexpected}",
            discussion_id=discussion_id,
            field=label,
        )

    return record
