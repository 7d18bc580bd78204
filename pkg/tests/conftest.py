import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from graphaudit.graph import Graph, canonical_edges, generate_sbm, make_inductive_masks  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def make_graph(edges, n=None, features=None, labels=None):
    edges = canonical_edges(edges)
    if features is None:
        n = n if n is not None else int(edges.max()) + 1
        features = np.eye(n)
    labels = None if labels is None else np.asarray(labels, dtype=np.int64)
    return Graph(np.asarray(features, dtype=np.float64), edges, labels)


@pytest.fixture
def triangle():
    return make_graph([(0, 1), (1, 2), (0, 2)])


@pytest.fixture(scope="session")
def small_sbm():
    g = generate_sbm([60, 60], 0.15, 0.01, 16, 2.0, seed=3)
    return make_inductive_masks(g, 40, 0, 60, seed=4)


@pytest.fixture(scope="session")
def leaky_sbm():
    """Few training nodes and noisy features: the trained target overfits."""
    g = generate_sbm([200, 200], 0.05, 0.01, 200, 1.0, seed=11)
    return make_inductive_masks(g, 40, 0, 160, seed=12)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE = []


def record_criterion(number, title, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {title} | {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE, key=lambda x: x[0]):
            terminalreporter.write_line(line)
