import json

import pytest

from core.config import CouConfig, SummaryConfig, SynthSpec, TrainConfig, load_config


class TestDefaults:

    def test_training_defaults(self):
        cfg = TrainConfig()
        assert (cfg.eta, cfg.epochs, cfg.rounds, cfg.alpha, cfg.runs, cfg.K) == (0.01, 10, 50, 0.1, 20, 9)

    def test_summary_defaults(self):
        cfg = SummaryConfig()
        assert (cfg.major_pos_weight, cfg.other_pos_weight, cfg.reference) == (1.0, 0.5, "abstractive")

    def test_missing_file_gives_defaults(self):
        config = load_config()
        assert config["train"] == TrainConfig()
        assert config["cou"] == CouConfig()
        assert config["synth"] == SynthSpec()


class TestValidation:

    @pytest.mark.parametrize("overrides", [
        {"eta": 0.0},
        {"epochs": 0},
        {"alpha": 1.5},
        {"mode": "greedy"},
        {"jobs": 0},
    ])
    def test_bad_training_settings(self, overrides):
        with pytest.raises(ValueError):
            TrainConfig(**overrides)

    def test_bad_cou_settings(self):
        with pytest.raises(ValueError):
            CouConfig(feature_set="words")
        with pytest.raises(ValueError):
            CouConfig(C=0.0)

    def test_bad_reference(self):
        with pytest.raises(ValueError):
            SummaryConfig(reference="participant")


class TestFiles:

    def test_sections_override_defaults(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"train": {"epochs": 3, "mode": "latent"}, "synth": {"seed": 9}}), encoding="utf-8")

        config = load_config(path)

        assert config["train"].epochs == 3
        assert config["train"].mode == "latent"
        assert config["train"].rounds == 50
        assert config["synth"].seed == 9

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"train": {"epoch": 3}}), encoding="utf-8")
        with pytest.raises(ValueError, match="epoch"):
            load_config(path)

    def test_unknown_section(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"decoder": {}}), encoding="utf-8")
        with pytest.raises(ValueError, match="decoder"):
            load_config(path)

    def test_not_an_object(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("[]", encoding="utf-8")
        with pytest.raises(ValueError):
            load_config(path)
