import numpy as np
import pytest

import statattract as sa


@pytest.fixture(scope="session")
def two_basin_traces():
    grid = sa.Grid(sa.CIRCLE, 1024)
    sys_map = sa.make_map("two_basin")
    x0s = sa.sample_lebesgue(grid, 200, 3)
    traces = sa.run_orbits(sys_map, x0s, 100_000, grid)
    return sys_map, grid, traces


@pytest.fixture(scope="session")
def contraction_traces():
    grid = sa.Grid(sa.INTERVAL, 1024)
    sys_map = sa.make_map("contraction")
    x0s = sa.sample_lebesgue(grid, 40, 5)
    traces = sa.run_orbits(sys_map, x0s, 30_000, grid)
    return sys_map, grid, traces


@pytest.fixture(scope="session")
def doubling_traces():
    grid = sa.Grid(sa.CIRCLE, 256)
    sys_map = sa.make_map("doubling")
    x0s = sa.sample_lebesgue(grid, 8, 7)
    traces = sa.run_orbits(sys_map, x0s, 200_000, grid)
    return sys_map, grid, traces


@pytest.fixture(scope="session")
def bowen_ledgers():
    ledgers = {}
    for tag, rule, cycles in (("A", sa.RULE_A, 1000), ("B", sa.RULE_B, 10_000),
                              ("C", sa.RULE_C, 10)):
        params = sa.default_saddle_params(rule, 2.0, 2.0 if tag != "B" else 4.0)
        ledgers[tag] = sa.run_cycles(params, rule, cycles)
    return ledgers


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
