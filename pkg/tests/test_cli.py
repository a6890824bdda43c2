import copy
import json

import pytest

from cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_VALIDATION, build_parser, main


TRAIN_FLAGS = ["--epochs", "1", "--rounds", "3", "--runs", "2"]


@pytest.fixture
def toy_file(toy_data, tmp_path):
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(toy_data), encoding="utf-8")
    return path


def _pipeline(directory):
    corpus = directory / "synth.json"
    model = directory / "model.json"
    predictions = directory / "predictions.json"
    report = directory / "report.json"

    assert main(["--seed", "3", "synth", "--out", str(corpus), "--n-discussions", "6"]) == EXIT_OK
    assert main(["--jobs", "1", "train", "--corpus", str(corpus), "--out", str(model),
                 "--trace", str(directory / "trace.tsv"), *TRAIN_FLAGS]) == EXIT_OK
    assert main(["infer", "--model", str(model), "--corpus", str(corpus), "--out", str(predictions)]) == EXIT_OK
    assert main(["--jobs", "1", "eval", "--corpus", str(corpus), "--folds", "2", "--out", str(report),
                 "--bundle", str(directory / "bundle.zip"), *TRAIN_FLAGS]) == EXIT_OK

    return {path.name: path.read_bytes() for path in (corpus, model, predictions, report)}


class TestExitCodes:

    def test_valid_corpus(self, toy_file, capsys):
        assert main(["validate", str(toy_file)]) == EXIT_OK
        assert "2 discussions" in capsys.readouterr().out

    def test_invalid_corpus(self, toy_data, tmp_path):
        del toy_data[0]["units"][0]["speaker"]
        path = tmp_path / "broken.json"
        path.write_text(json.dumps(toy_data), encoding="utf-8")

        assert main(["validate", str(path)]) == EXIT_VALIDATION

    def test_usage_errors(self, toy_file):
        assert main([]) == EXIT_USAGE
        assert main(["validate", str(toy_file), "--bogus"]) == EXIT_USAGE
        assert main(["eval", "--corpus", str(toy_file), "--task", "ranking"]) == EXIT_USAGE

    def test_missing_model(self, toy_file, tmp_path):
        code = main(["infer", "--model", str(tmp_path / "absent.json"), "--corpus", str(toy_file),
                     "--out", str(tmp_path / "out.json")])
        assert code == EXIT_RUNTIME

    def test_bad_config(self, toy_file, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"train": {"eta": -1}}), encoding="utf-8")

        assert main(["--config", str(config), "validate", str(toy_file)]) == EXIT_RUNTIME


class TestPipeline:

    def test_outputs_are_reproducible(self, tmp_path):
        first = tmp_path / "first"
        second = tmp_path / "second"
        first.mkdir()
        second.mkdir()

        assert _pipeline(first) == _pipeline(second)

    def test_outputs(self, tmp_path):
        _pipeline(tmp_path)

        predictions = json.loads((tmp_path / "predictions.json").read_text(encoding="utf-8"))
        report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        trace = (tmp_path / "trace.tsv").read_text(encoding="utf-8").splitlines()

        assert len(predictions) == 6
        assert {"discussion", "phrases", "relations", "score"} <= set(predictions[0])
        assert report["task"] == "phrase"
        assert len(report["folds"]) == 2
        assert trace[0].startswith("epoch\tsample\tround")
        assert (tmp_path / "bundle.zip").exists()

    def test_summarize(self, tmp_path):
        _pipeline(tmp_path)
        out = tmp_path / "summaries.json"

        code = main(["summarize", "--model", str(tmp_path / "model.json"), "--corpus", str(tmp_path / "synth.json"),
                     "--rouge", "1", "--out", str(out)])

        payload = json.loads(out.read_text(encoding="utf-8"))
        assert code == EXIT_OK
        assert payload["rouge"] == "1"
        assert len(payload["summaries"]) == 6
        assert all("su4" not in name for name in payload["metrics"])


class TestCou:

    def test_majority(self, tmp_path):
        corpus = tmp_path / "cou.json"
        out = tmp_path / "cou_report.json"

        assert main(["synth", "--out", str(corpus), "--n-discussions", "5", "--cou"]) == EXIT_OK
        assert main(["cou", "--corpus", str(corpus), "--system", "majority", "--out", str(out)]) == EXIT_OK

        report = json.loads(out.read_text(encoding="utf-8"))
        assert set(report["aggregate"]) == {"accuracy", "f1", "f1_inconsistent"}
        assert len(report["folds"]) == 5

    def test_unlabeled_corpus(self, toy_data, tmp_path):
        for discussion in toy_data:
            discussion["cou"] = None
        corpus = tmp_path / "unlabeled.json"
        corpus.write_text(json.dumps(toy_data), encoding="utf-8")

        assert main(["cou", "--corpus", str(corpus), "--system", "majority"]) == EXIT_RUNTIME


class TestSharedOptions:
    """Global options are accepted after the command name as well."""

    def test_seed_after_command(self, tmp_path):
        before = tmp_path / "before.json"
        after = tmp_path / "after.json"

        assert main(["--seed", "3", "synth", "--out", str(before), "--n-discussions", "4"]) == EXIT_OK
        assert main(["synth", "--seed", "3", "--out", str(after), "--n-discussions", "4"]) == EXIT_OK

        assert before.read_bytes() == after.read_bytes()

    def test_synth_spec_with_seed(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"synth": {"n_discussions": 4, "seed": 0}}), encoding="utf-8")
        seeded = tmp_path / "seeded.json"
        default = tmp_path / "default.json"

        assert main(["synth", "--spec", str(spec), "--seed", "3", "--out", str(seeded)]) == EXIT_OK
        assert main(["synth", "--spec", str(spec), "--out", str(default)]) == EXIT_OK

        assert len(json.loads(seeded.read_text(encoding="utf-8"))) == 4
        assert seeded.read_bytes() != default.read_bytes()

    def test_train_with_trailing_seed_and_jobs(self, tmp_path):
        corpus = tmp_path / "synth.json"
        first = tmp_path / "first.json"
        second = tmp_path / "second.json"

        assert main(["synth", "--out", str(corpus), "--n-discussions", "4"]) == EXIT_OK
        assert main(["train", "--corpus", str(corpus), "--out", str(first), *TRAIN_FLAGS,
                     "--seed", "3", "--jobs", "1"]) == EXIT_OK
        assert main(["--seed", "3", "--jobs", "1", "train", "--corpus", str(corpus), "--out", str(second),
                     *TRAIN_FLAGS]) == EXIT_OK

        assert first.read_bytes() == second.read_bytes()

    def test_either_position_parses(self):
        parser = build_parser()

        before = parser.parse_args(["--seed", "3", "--min-units", "2", "validate", "corpus.json"])
        after = parser.parse_args(["validate", "corpus.json", "--seed", "3", "--min-units", "2"])
        neither = parser.parse_args(["validate", "corpus.json"])

        assert (before.seed, before.min_units) == (after.seed, after.min_units) == (3, 2)
        assert (neither.seed, neither.min_units, neither.exclude_topic) == (None, 1, [])


class TestTopicFilter:

    def test_excluded_topic_is_dropped(self, toy_data, tmp_path):
        extra = copy.deepcopy(toy_data[1])
        extra["id"] = "d3"
        toy_data.append(extra)
        toy_data[0]["topic"] = "opening"
        corpus = tmp_path / "topics.json"
        corpus.write_text(json.dumps(toy_data), encoding="utf-8")
        out = tmp_path / "report.json"

        code = main(["cou", "--corpus", str(corpus), "--system", "majority", "--out", str(out),
                     "--exclude-topic", "opening"])

        report = json.loads(out.read_text(encoding="utf-8"))
        assert code == EXIT_OK
        assert [row["discussion"] for row in report["folds"]] == ["d2", "d3"]
