import pathlib
import random

import pytest

import kspend
from kspend import fuzz
from kspend.trust import load_builtin_model

CORPUS_SEED = 20240817
CORPUS_SIZE = 1000  # floor demanded by the randomized upper-bound sweep
ATTACK_CORPUS_SIZE = 50


@pytest.fixture(scope="session")
def example1():
    return load_builtin_model("example1")


@pytest.fixture(scope="session")
def data_dir() -> pathlib.Path:
    return pathlib.Path(kspend.__file__).parent / "data"


@pytest.fixture(scope="session")
def fuzz_corpus():
    """Randomized scenarios with equivocating scripts, run once, shared.

    The HMAC scheme keeps a thousand runs in the low seconds; the scheme
    choice is irrelevant to what the sweeps measure (ordering attacks).
    """
    rng = random.Random(CORPUS_SEED)
    reports = []
    for i in range(CORPUS_SIZE):
        scenario = fuzz.random_scenario(rng)
        reports.append(kspend.run(scenario, seed=i))
    return reports


@pytest.fixture(scope="session")
def attack_corpus():
    """(expected bound, report) pairs for synthesized attacks on random models."""
    rng = random.Random(CORPUS_SEED + 1)
    out = []
    while len(out) < ATTACK_CORPUS_SIZE:
        model, k = fuzz.random_vulnerable_model(rng)
        scenario = kspend.synthesize_multispend_attack(model, sig_scheme="hmac")
        out.append((k, kspend.run(scenario)))
    return out
