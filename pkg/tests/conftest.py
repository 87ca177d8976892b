import numpy as np
import pytest

from vanetsig.topology import default_topology
from vanetsig.traffic import NetworkState


@pytest.fixture(scope="session")
def topo():
    return default_topology()


def make_state(topo, cells, road=0, vel=None, t=0):
    cells = np.atleast_1d(cells)
    n = len(cells)
    vel = np.zeros(n, dtype=np.int64) if vel is None else np.broadcast_to(vel, n)
    st = NetworkState(topo)
    st.t = t
    return st.add_vehicles(np.arange(n), np.broadcast_to(road, n), cells, vel)


def no_red(topo):
    return np.zeros((topo.n_roads, topo.n_cross), dtype=bool)


class FixedDraws:
    """Stand-in generator returning a constant uniform for every draw."""

    def __init__(self, u):
        self.u = u

    def random(self, n):
        return np.full(n, self.u)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
