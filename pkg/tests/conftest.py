from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from privmarket.model import ModelParams


@pytest.fixture
def default_params() -> ModelParams:
    """Equal priors, theta0 = 0.7, alpha = 0.25, eps = 0.1, N = 250."""
    return ModelParams(prior_w1=0.5, theta0=0.7, alpha=0.25, epsilon=0.1, population=250)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def make_params(**kwargs) -> ModelParams:
    base = dict(prior_w1=0.5, theta0=0.7, alpha=0.25, epsilon=0.1, population=250)
    base.update(kwargs)
    return ModelParams(**base)
