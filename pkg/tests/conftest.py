import os

import hypothesis
import numpy as np
import pytest

from app.models.internal import Ensemble

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=100, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture
def ref() -> Ensemble:
    return Ensemble(n=1000, f=0.75)


@pytest.fixture
def offer_b() -> Ensemble:
    return Ensemble(n=10000, f=0.65)


@pytest.fixture
def offer_c() -> Ensemble:
    return Ensemble(n=100, f=0.90)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
