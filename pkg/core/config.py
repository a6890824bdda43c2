# core/config.py

import json
from dataclasses import dataclass, fields
from pathlib import Path


# =====================================================
# TRAINING
# =====================================================

@dataclass
class TrainConfig:
    """SampleRank settings; defaults are the published experimental setup."""

    eta: float = 0.01
    epochs: int = 10
    rounds: int = 50
    alpha: float = 0.1
    runs: int = 20
    K: int = 9
    seed: int = 0
    mode: str = "joint"
    use_joint_features: bool = True
    jobs: int | None = None

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        for name in ("epochs", "rounds", "runs", "K"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.mode not in ("joint", "latent"):
            raise ValueError(f"unknown training mode '{self.mode}'")
        if self.jobs is not None and self.jobs < 1:
            raise ValueError("jobs must be at least 1")


# =====================================================
# SUMMARIZATION
# =====================================================

@dataclass
class SummaryConfig:
    major_pos_weight: float = 1.0
    other_pos_weight: float = 0.5
    reference: str = "abstractive"

    def __post_init__(self):
        if self.reference not in ("abstractive", "extractive"):
            raise ValueError(f"unknown reference type '{self.reference}'")


# =====================================================
# CONSISTENCY OF UNDERSTANDING
# =====================================================

@dataclass
class CouConfig:
    feature_set: str = "all"
    C: float = 1.0
    epochs: int = 200
    seed: int = 0
    oracle: bool = False

    def __post_init__(self):
        if self.feature_set not in ("prob", "disc", "ent", "all"):
            raise ValueError(f"unknown COU feature set '{self.feature_set}'")
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")


# =====================================================
# SYNTHETIC CORPORA
# =====================================================

@dataclass
class SynthSpec:
    n_discussions: int = 20
    min_units: int = 2
    max_units: int = 4
    max_candidates: int = 2
    n_labels: int = 3
    n_speakers: int = 3
    noun_vocabulary: int = 12
    verb_vocabulary: int = 6
    adjective_vocabulary: int = 6
    seed: int = 0
    oracle_limit: int = 1_000_000
    cou: bool = False

    def __post_init__(self):
        for name in ("n_discussions", "min_units", "max_units", "n_labels", "n_speakers",
                     "noun_vocabulary", "verb_vocabulary", "adjective_vocabulary"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be positive")
        if self.min_units > self.max_units:
            raise ValueError("min_units exceeds max_units")
        if self.n_labels > 9:
            raise ValueError("at most 9 relation labels are available")
        if self.n_speakers < 2 and self.cou:
            raise ValueError("COU corpora need at least two speakers")


SECTIONS = {
    "train": TrainConfig,
    "summary": SummaryConfig,
    "cou": CouConfig,
    "synth": SynthSpec,
}


def _build(section: str, values: dict):

    cls = SECTIONS[section]
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)

    if unknown:
        raise ValueError(f"unknown keys in config section '{section}': {unknown}")

    return cls(**values)


def load_config(path=None) -> dict:
    """
    Read an optional JSON config with sections train / summary / cou / synth.
    Missing sections fall back to defaults.
    """

    data = {}

    if path:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = sorted(set(data) - set(SECTIONS))
        if unknown:
            raise ValueError(f"unknown config sections: {unknown}")

    return {section: _build(section, data.get(section, {})) for section in SECTIONS}
