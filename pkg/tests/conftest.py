import os

import numpy as np
import pytest


@pytest.fixture
def rng():
    """Seeded generator for randomized property tests (override via ALTPROJ_SEED)."""
    seed = int(os.environ.get("ALTPROJ_SEED", "20250809"))
    return np.random.default_rng(seed)
