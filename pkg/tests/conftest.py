import itertools

import numpy as np
import pytest
from hypothesis import settings

from entropy_bench.graph import Graph
from entropy_bench.planting import PRESETS, plant_graph

# first calls pay numba compilation time
settings.register_profile("default", deadline=None)
settings.load_profile("default")


def naive_kcut_values(g: Graph, k: int) -> np.ndarray:
    """Cut value of every ordered labelling in ``range(k) ** n``, computed without shortcuts."""
    labels = np.array(list(itertools.product(range(k), repeat=g.n)), dtype=np.int8)
    e = np.array(g.edges, dtype=np.int64).reshape(-1, 2)
    if e.size == 0:
        return np.zeros(len(labels), np.int64)
    return (labels[:, e[:, 0]] != labels[:, e[:, 1]]).sum(axis=1)


def naive_dos(g: Graph) -> dict[int, int]:
    """Exact 2-cut DOS by recounting each bipartition with vertex 0 on side 0."""
    counts: dict[int, int] = {}
    for rest in itertools.product((0, 1), repeat=g.n - 1):
        lab = (0,) + rest
        c = sum(lab[u] != lab[v] for u, v in g.edges)
        counts[c] = counts.get(c, 0) + 1
    return counts


@pytest.fixture(scope="session")
def paper30() -> Graph:
    return plant_graph(PRESETS["paper30"], seed=42)
