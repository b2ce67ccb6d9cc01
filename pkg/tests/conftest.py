import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from causalembed import Embedding, EmbeddingConfig


def make_embedding(t, x, config=None, converged=True, labels=None):
    """Embedding from explicit coordinates, for hand-built fixtures."""
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if config is None:
        config = EmbeddingConfig(spatial_dim=x.shape[1])
    if labels is None:
        labels = [f"e{i}" for i in range(len(t))]
    return Embedding(labels, t, x, config, converged=converged)


@pytest.fixture
def lmr_embedding():
    """Three timelike-stacked events: L above M above R."""
    return make_embedding(
        t=[1.3, 0.6, 0.0],
        x=[[1.0, 0.0], [0.5, 0.0], [0.0, 0.0]],
        labels=["L", "M", "R"],
    )


@pytest.fixture
def four_event_embedding():
    """Four events in one spatial dimension realizing two separate chains.

    D sits lightlike above C, timelike above both B and A; C and B are
    spacelike to each other; A is the common root. The two natural chains
    are D -> C -> A and B -> A, with B absent from D's chain even though
    B is inside D's past cone.
    """
    return make_embedding(
        t=[0.0, 2.2, 2.0, 3.0],
        x=[[0.0], [1.7], [1.0], [2.0]],
        labels=["A", "B", "C", "D"],
        config=EmbeddingConfig(spatial_dim=1),
    )
