import numpy as np
import pytest

from dirichlet_iso import DirichletForm, StateSpace


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


@pytest.fixture
def edge():
    """Two unit-weight states joined by a unit conductance."""
    return DirichletForm(StateSpace(("a", "b"), [1.0, 1.0]), [[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def chain3():
    space = StateSpace(("a", "b", "c"), [1.0, 1.0, 2.0])
    c = [[0, 1, 0], [1, 0, 2], [0, 2, 0]]
    return DirichletForm(space, c, [0.0, 0.0, 0.5])


@pytest.fixture
def two_triangles():
    space = StateSpace(tuple("abcdef"), np.ones(6))
    c = np.zeros((6, 6))
    for x, y, w in [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 0.5), (3, 4, 1.5), (4, 5, 1.0), (3, 5, 3.0)]:
        c[x, y] = c[y, x] = w
    return DirichletForm(space, c, [0.0, 0.2, 0.0, 0.0, 0.0, 0.7])
