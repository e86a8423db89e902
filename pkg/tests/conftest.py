import time

import numpy as np
import pytest

from spacelike_flow import FlowConfig, GridChart, evolve, from_graph, homogeneous_hyperbolic

ACCEPTANCE = {}


def graph_u(grid, amplitude=0.2):
    x, y = grid.coordinates()
    return amplitude * np.sin(x) * np.sin(y)


@pytest.fixture
def grid64():
    return GridChart(2, 64)


@pytest.fixture
def graph_state(grid64):
    return from_graph(grid64, graph_u(grid64))


@pytest.fixture(scope="session")
def graph_trajectory():
    """64^2 graph torus, u = 0.2 sin x sin y, evolved to t = 2."""
    grid = GridChart(2, 64)
    start = time.perf_counter()
    traj = evolve(from_graph(grid, graph_u(grid)), FlowConfig(t_end=2.0))
    traj.wall_time = time.perf_counter() - start
    return traj


@pytest.fixture(scope="session")
def hyperbolic_trajectory():
    start = time.perf_counter()
    traj = evolve(homogeneous_hyperbolic(2), FlowConfig(t_end=10.0))
    traj.wall_time = time.perf_counter() - start
    return traj


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, line = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {key}: {line}")
