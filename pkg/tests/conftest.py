import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fdual.measures import JointMeasure, Priors, UniformPairSource

settings.register_profile(
    "fdual",
    derandomize=True,
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("fdual")


@pytest.fixture
def m_standard() -> JointMeasure:
    """The worked two-bin measure pair used across the examples."""
    return JointMeasure([0.3, 0.2], [0.1, 0.4], Priors(0.5, 0.5))


@pytest.fixture
def src_default() -> UniformPairSource:
    """Negatives on [0, 2], positives on [1, 4], balanced priors."""
    return UniformPairSource(1.0, 2.0, 4.0, Priors(0.5, 0.5))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
