import copy

import numpy as np
import pytest

from core.candidate_engine import prepare_discussion
from core.config import SynthSpec
from core.corpus import LabelSpace, parse_corpus
from core.feature_engine import FeatureRegistry, build_cache, fit_stats
from core.scoring_engine import Weights
from core.synth_engine import generate


def _token(surface, pos, lemma=None, stop=False):
    return {"surface": surface, "lemma": lemma or surface.lower(), "pos": pos, "stop": stop}


TOY_CORPUS = [
    {
        "id": "d1",
        "units": [
            {
                "id": 1,
                "speaker": "A",
                "tokens": [
                    _token("we", "PRP", stop=True),
                    _token("need", "VBP"),
                    _token("a", "DT", stop=True),
                    _token("battery", "NN"),
                ],
                "spans": [{"start": 2, "end": 4, "label": "NP", "head": 3, "parent": None}],
                "da": "suggest",
                "t_start": 0.0,
                "t_end": 2.0,
                "deps": [{"head": 1, "dep": 3, "rel": "dobj"}],
            },
            {
                "id": 2,
                "speaker": "B",
                "tokens": [
                    _token("the", "DT", stop=True),
                    _token("battery", "NN"),
                    _token("is", "VBZ", lemma="be", stop=True),
                    _token("expensive", "JJ"),
                ],
                "spans": [
                    {"start": 0, "end": 2, "label": "NP", "head": 1, "parent": None},
                    {"start": 3, "end": 4, "label": "ADJP", "head": 3, "parent": None},
                ],
                "da": "assess",
                "t_start": 2.0,
                "t_end": 3.5,
                "deps": [],
            },
            {
                "id": 3,
                "speaker": "A",
                "tokens": [
                    _token("use", "VB"),
                    _token("solar", "JJ"),
                    _token("power", "NN"),
                ],
                "spans": [
                    {"start": 0, "end": 3, "label": "VP", "head": 0, "parent": None},
                    {"start": 1, "end": 3, "label": "NP", "head": 2, "parent": 0},
                ],
                "da": "suggest",
                "t_start": 3.5,
                "t_end": 5.0,
                "deps": [],
            },
        ],
        "adjacency_pairs": [{"src": 1, "tgt": 2, "type": "AP"}],
        "gold_tree": {"attach": {"2": 1, "3": 2}, "rel": {"2": "elaboration", "3": "positive"}},
        "summaries": {
            "abstractive": ["They discussed the battery."],
            "participant": [],
            "extractive_ids": [1],
        },
        "cou": "consistent",
    },
    {
        "id": "d2",
        "units": [
            {
                "id": 1,
                "speaker": "C",
                "tokens": [_token("power", "NN"), _token("matters", "VBZ", lemma="matter")],
                "spans": [{"start": 0, "end": 1, "label": "NP", "head": 0, "parent": None}],
                "da": "inform",
                "t_start": 0.0,
                "t_end": 1.0,
                "deps": [],
            },
            {
                "id": 2,
                "speaker": "D",
                "tokens": [_token("solar", "JJ"), _token("panels", "NNS", lemma="panel"), _token("help", "VBP")],
                "spans": [{"start": 0, "end": 2, "label": "NP", "head": 1, "parent": None}],
                "da": "inform",
                "t_start": 1.0,
                "t_end": 4.0,
                "deps": [],
            },
        ],
        "adjacency_pairs": [],
        "gold_tree": {"attach": {"2": 1}, "rel": {"2": "positive"}},
        "summaries": {"abstractive": ["solar panels"], "participant": [], "extractive_ids": [2]},
        "cou": "inconsistent",
    },
]


@pytest.fixture
def toy_data():
    return copy.deepcopy(TOY_CORPUS)


@pytest.fixture
def toy_discussions(toy_data):
    return parse_corpus(toy_data)


@pytest.fixture
def toy_prepared(toy_discussions):
    return [prepare_discussion(discussion) for discussion in toy_discussions]


@pytest.fixture
def toy_stats(toy_prepared):
    return fit_stats(toy_prepared)


@pytest.fixture
def toy_caches(toy_prepared, toy_stats):
    return [build_cache(p, toy_stats, LabelSpace.tas()) for p in toy_prepared]


def random_weights(caches, labels, stats, rng, scale=1.0):
    """Gaussian weights over every reachable feature id, order-2 ids included."""

    registry = FeatureRegistry.from_caches(caches)
    ids = set(registry.ids)
    for cache in caches:
        for row in cache.order2:
            ids.update(row)

    values = {fid: float(rng.normal(0.0, scale)) for fid in sorted(ids)}

    return Weights(values=values, labels=labels, stats_fingerprint=stats.fingerprint())


@pytest.fixture(scope="session")
def small_instances():
    """
    200 random small decoding instances: synthetic discussions of up to four
    units with up to two candidates per unit, three latent labels and
    Gaussian weights. Each item is (cache, weights).
    """

    discussions = generate(SynthSpec(
        n_discussions=200,
        min_units=1,
        max_units=4,
        max_candidates=2,
        seed=11,
        oracle_limit=0,
    ))

    prepared = [prepare_discussion(discussion) for discussion in discussions]
    stats = fit_stats(prepared)
    labels = LabelSpace.latent(3)
    rng = np.random.default_rng(5)

    instances = []
    for p in prepared:
        cache = build_cache(p, stats, labels)
        instances.append((cache, random_weights([cache], labels, stats, rng)))

    return instances


@pytest.fixture
def weights_factory():
    return random_weights
