import numpy as np
import pytest
import torch

from glcc.graph import Graph, GraphDataset, make_graph


def random_graph(rng, n=None, p=0.3, d=3, label=None):
    n = n if n is not None else int(rng.integers(2, 12))
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return make_graph(n, np.stack([iu[keep], ju[keep]], 1), rng.standard_normal((n, d)), label)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_dataset(rng):
    graphs = [random_graph(rng, label=i % 2) for i in range(12)]
    return GraphDataset(graphs, num_classes=2, name="small")


@pytest.fixture(autouse=True)
def _torch_threads():
    torch.set_num_threads(1)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
