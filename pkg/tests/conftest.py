import sys
from pathlib import Path

import numpy as np
import pytest

PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tiny_graph_dataset():
    from app.data_processor import Dataset, enumerate_graphs

    graphs = enumerate_graphs(4)
    # ids 1..8 mix connected and disconnected graphs
    return Dataset("tiny", "graph", train=graphs[1:9], test=graphs[9:13])
