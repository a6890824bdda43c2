# core/tree_builder.py

from core.corpus import Discussion, DiscourseTree, validate_tree


def build_tree(discussion: Discussion) -> DiscourseTree:
    """
    Attachment tree for a discussion.

    A gold tree is returned untouched. Otherwise every unit attaches to the
    closest earlier unit it shares an adjacency pair with, falling back to
    the preceding unit; the first unit is the root.
    """

    if discussion.gold_tree is not None:
        return discussion.gold_tree

    ids = discussion.unit_ids

    linked = {unit_id: set() for unit_id in ids}
    for pair in discussion.adjacency_pairs:
        linked[pair.source_unit].add(pair.target_unit)
        linked[pair.target_unit].add(pair.source_unit)

    attachments = {}

    for position, unit_id in enumerate(ids[1:], start=1):
        earlier = [other for other in linked[unit_id] if other < unit_id]

        if earlier:
            attachments[unit_id] = max(earlier)
        else:
            attachments[unit_id] = ids[position - 1]

    tree = DiscourseTree(root=ids[0], attachments=attachments)
    validate_tree(tree, ids, discussion.id)

    return tree


def with_relations(tree: DiscourseTree, relations: dict) -> DiscourseTree:
    """Same attachment structure, new relation labels."""

    return DiscourseTree(root=tree.root, attachments=dict(tree.attachments), relations=dict(relations))
