import json

import pytest

from core.corpus import (
    LabelSpace,
    TAS_RELATIONS,
    dump_discussions,
    filter_discussions,
    load_discussions,
    normalize_relation,
    parse_corpus,
    parse_discussion,
)
from core.errors import CorpusValidationError
from core.tree_builder import build_tree, with_relations


class TestParsing:
    """JSON corpus -> validated discussions."""

    def test_toy_corpus_parses(self, toy_discussions):
        first, second = toy_discussions
        assert first.id == "d1"
        assert first.n == 3
        assert first.unit(2).speaker == "B"
        assert first.gold_tree.relations == {2: "elaboration", 3: "positive"}
        assert first.cou_label == "consistent"
        assert second.cou_label == "inconsistent"

    def test_speaker_word_index_counts_per_speaker(self, toy_discussions):
        d1 = toy_discussions[0]
        assert [t.speaker_word_index for t in d1.unit(3).tokens] == [4, 5, 6]
        assert [t.speaker_word_index for t in d1.unit(2).tokens] == [0, 1, 2, 3]

    def test_missing_field_names_discussion_and_field(self, toy_data):
        del toy_data[0]["units"][1]["da"]
        with pytest.raises(CorpusValidationError) as info:
            parse_corpus(toy_data)
        assert "d1" in str(info.value)
        assert "da" in str(info.value)

    def test_unexpected_field_rejected(self, toy_data):
        toy_data[1]["meeting"] = "remote control"
        with pytest.raises(CorpusValidationError, match="unexpected"):
            parse_corpus(toy_data)

    def test_parent_must_precede_child(self, toy_data):
        toy_data[0]["gold_tree"]["attach"] = {"2": 3, "3": 1}
        with pytest.raises(CorpusValidationError, match="precede"):
            parse_corpus(toy_data)

    def test_every_non_root_unit_needs_a_parent(self, toy_data):
        toy_data[0]["gold_tree"] = {"attach": {"2": 1}, "rel": {"2": "positive"}}
        with pytest.raises(CorpusValidationError, match="no parent"):
            parse_corpus(toy_data)

    def test_relations_must_cover_attachments(self, toy_data):
        toy_data[0]["gold_tree"]["rel"] = {"2": "positive"}
        with pytest.raises(CorpusValidationError, match="relations"):
            parse_corpus(toy_data)

    def test_unknown_relation_rejected(self, toy_data):
        toy_data[1]["gold_tree"]["rel"] = {"2": "agreement"}
        with pytest.raises(CorpusValidationError, match="agreement"):
            parse_corpus(toy_data)

    def test_relation_spelling_is_normalized(self, toy_data):
        toy_data[1]["gold_tree"]["rel"] = {"2": "Option_Exclusion"}
        discussion = parse_corpus(toy_data)[1]
        assert discussion.gold_tree.relations[2] == "option exclusion"

    def test_unit_ids_strictly_increasing(self, toy_data):
        toy_data[1]["units"][1]["id"] = 1
        toy_data[1]["gold_tree"] = None
        with pytest.raises(CorpusValidationError, match="strictly increasing"):
            parse_corpus(toy_data)

    def test_span_out_of_bounds(self, toy_data):
        toy_data[1]["units"][0]["spans"][0]["end"] = 7
        with pytest.raises(CorpusValidationError, match="out of bounds"):
            parse_corpus(toy_data)

    def test_unknown_pos_tag(self, toy_data):
        toy_data[1]["units"][0]["tokens"][0]["pos"] = "NOUN"
        with pytest.raises(CorpusValidationError, match="NOUN"):
            parse_corpus(toy_data)

    def test_time_order(self, toy_data):
        toy_data[1]["units"][0]["t_end"] = -1.0
        with pytest.raises(CorpusValidationError, match="t_end"):
            parse_corpus(toy_data)

    def test_adjacency_pair_unknown_unit(self, toy_data):
        toy_data[0]["adjacency_pairs"].append({"src": 1, "tgt": 9, "type": "AP"})
        with pytest.raises(CorpusValidationError, match="unknown unit"):
            parse_corpus(toy_data)

    def test_duplicate_discussion_ids(self, toy_data):
        toy_data[1]["id"] = "d1"
        with pytest.raises(CorpusValidationError, match="duplicate"):
            parse_corpus(toy_data)

    def test_top_level_must_be_list(self, toy_data):
        with pytest.raises(CorpusValidationError):
            parse_corpus(toy_data[0])

    def test_unknown_cou_label(self, toy_data):
        toy_data[0]["cou"] = "maybe"
        with pytest.raises(CorpusValidationError, match="COU"):
            parse_discussion(toy_data[0])


class TestFiles:

    def test_dump_then_load_preserves_discussions(self, toy_discussions, tmp_path):
        path = tmp_path / "corpus.json"
        dump_discussions(toy_discussions, path)
        assert load_discussions(path) == toy_discussions

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorpusValidationError, match="not found"):
            load_discussions(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("[{", encoding="utf-8")
        with pytest.raises(CorpusValidationError, match="JSON"):
            load_discussions(path)

    def test_dump_is_sorted_and_indented(self, toy_discussions, tmp_path):
        path = tmp_path / "corpus.json"
        dump_discussions(toy_discussions, path)
        text = path.read_text(encoding="utf-8")
        assert text == json.dumps(json.loads(text), indent=2, sort_keys=True)


class TestFiltering:

    def test_min_units(self, toy_discussions):
        assert [d.id for d in filter_discussions(toy_discussions, min_units=3)] == ["d1"]
        assert len(filter_discussions(toy_discussions)) == 2

    def test_excluded_topics(self, toy_data):
        toy_data[0]["topic"] = "Opening"
        toy_data[1]["topic"] = "remote design"
        discussions = parse_corpus(toy_data)

        kept = filter_discussions(discussions, exclude_topics=["opening", "chitchat"])

        assert [d.id for d in kept] == ["d2"]
        assert len(filter_discussions(discussions)) == 2

    def test_discussions_without_topic_are_kept(self, toy_discussions):
        assert toy_discussions[0].topic is None
        assert len(filter_discussions(toy_discussions, exclude_topics=["opening"])) == 2

    def test_topic_survives_a_dump(self, toy_data, tmp_path):
        toy_data[0]["topic"] = "chitchat"
        path = tmp_path / "corpus.json"

        dump_discussions(parse_corpus(toy_data), path)
        raw = json.loads(path.read_text(encoding="utf-8"))

        assert raw[0]["topic"] == "chitchat"
        assert "topic" not in raw[1]
        assert [d.topic for d in load_discussions(path)] == ["chitchat", None]


class TestLabelSpace:

    def test_tas_has_nine_relations(self):
        assert LabelSpace.tas().size == 9
        assert LabelSpace.tas().labels == TAS_RELATIONS

    def test_latent_labels(self):
        space = LabelSpace.latent(4)
        assert space.labels == ("1", "2", "3", "4")
        assert space.index("3") == 2

    def test_round_trip(self):
        space = LabelSpace.latent(2)
        assert LabelSpace.from_dict(space.to_dict()) == space

    def test_unknown_label(self):
        with pytest.raises(ValueError):
            LabelSpace.tas().index("agreement")

    def test_normalize_relation(self):
        assert normalize_relation("  Subject-To ") == "subject-to"


class TestTreeBuilder:

    def test_gold_tree_returned(self, toy_discussions):
        d1 = toy_discussions[0]
        assert build_tree(d1) is d1.gold_tree

    def test_fallback_uses_adjacency_then_previous_unit(self, toy_data):
        toy_data[0]["gold_tree"] = None
        toy_data[0]["adjacency_pairs"] = [{"src": 1, "tgt": 3, "type": "AP"}]
        discussion = parse_corpus(toy_data)[0]

        tree = build_tree(discussion)

        assert tree.root == 1
        assert tree.attachments == {2: 1, 3: 1}
        assert tree.depth(3) == 1
        assert tree.children(1) == [2, 3]

    def test_with_relations(self, toy_discussions):
        tree = with_relations(toy_discussions[1].gold_tree, {2: "negative"})
        assert tree.relations == {2: "negative"}
        assert tree.attachments == {2: 1}
