import numpy as np
import pytest

from mfg_route import GameSpec, GridScenario, build_grid_game

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_game(rng, V_range=(1, 6), T_range=(1, 5), cost_high=10.0, alphas=(0.5, 1.0, 2.0),
                min_degree=1):
    V = int(rng.integers(V_range[0], V_range[1] + 1))
    T = int(rng.integers(T_range[0], T_range[1] + 1))
    nbrs = []
    for _ in range(V):
        d = int(rng.integers(min(min_degree, V), V + 1))
        nbrs.append(sorted(rng.choice(V, size=d, replace=False).tolist()))
    E = sum(len(n) for n in nbrs)
    C = rng.uniform(0, cost_high, size=(T, E))
    CT = rng.uniform(0, cost_high, size=V)
    raw = rng.uniform(0.05, 1.0, size=(T, E))
    indptr = np.concatenate([[0], np.cumsum([len(n) for n in nbrs])])
    src = np.repeat(np.arange(V), np.diff(indptr))
    sums = np.add.reduceat(raw, indptr[:-1], axis=1)
    R = raw / sums[:, src]
    P0 = rng.dirichlet(np.ones(V))
    alpha = float(rng.choice(alphas))
    return GameSpec.build(nbrs, T, C, CT, P0, alpha, reference_policy=R)


@pytest.fixture
def two_node():
    """0 -> {0 (cost 0), 1 (cost 1)}, 1 -> {1}; T = 1, alpha = 1, uniform R."""
    return GameSpec.build([[0, 1], [1]], 1, {(0, 1): 1.0}, [0.0, 0.0], [1.0, 0.0], 1.0)


@pytest.fixture
def single_node():
    return GameSpec.build([[0]], 1, {}, [0.0], [1.0], 1.0)


@pytest.fixture(scope="session")
def grid_scenario():
    return GridScenario()


@pytest.fixture(scope="session")
def grid_game(grid_scenario):
    return build_grid_game(grid_scenario)
