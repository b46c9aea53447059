from __future__ import annotations

import numpy as np
import pytest

from app.core.dist import PrimKind
from app.core.env import env_of


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def coin_env():
    return env_of(("p", [0.5]), ("y", [], PrimKind.BOOL))
