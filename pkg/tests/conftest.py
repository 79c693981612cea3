import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_edges(rng, a, b, n):
    """Strictly increasing edges with widths varying by up to a factor ~3."""
    w = rng.uniform(1.0, 3.0, n)
    return a + (b - a) * np.concatenate([[0.0], np.cumsum(w) / w.sum()])
