import os

import numpy as np
import pytest
from hypothesis import settings

from qsugawara.qcalc import Deformation

settings.register_profile("default", max_examples=40, deadline=None)
settings.register_profile("stress", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def d():
    return Deformation(0.15)


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)
