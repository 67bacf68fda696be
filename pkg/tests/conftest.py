import math
import time

import numpy as np
import pytest

from graphfeyn.graph import ElectricPotential, MagneticPotential, WeightedGraph, cycle_graph

_ACCEPTANCE: dict[str, dict] = {}


def k2(v=(0.0, 0.0), theta=0.0, m=1.0):
    g = WeightedGraph(["a", "b"], {("a", "b"): 1.0}, m=m)
    return g, MagneticPotential({("a", "b"): theta}), ElectricPotential({"a": v[0], "b": v[1]})


def cycle5_random_theta(seed=7):
    rng = np.random.default_rng(seed)
    g, _, v = cycle_graph(5)
    theta = MagneticPotential(
        {(g.vertices[i], g.vertices[j]): float(rng.uniform(-math.pi, math.pi)) for i, j in g.edge_index.tolist()}
    )
    return g, theta, v


def random_instance(rng, n, p=0.25, b_range=(0.2, 0.6), m_range=(0.8, 1.25), v_range=(-1.0, 1.0)):
    """Connected random graph: a random spanning tree plus extra edges with probability ``p``."""
    ids = [f"v{k}" for k in range(n)]
    order = rng.permutation(n)
    pairs = set()
    for k in range(1, n):
        j = int(rng.integers(0, k))
        a, c = int(order[k]), int(order[j])
        pairs.add((min(a, c), max(a, c)))
    for a in range(n):
        for c in range(a + 1, n):
            if rng.random() < p:
                pairs.add((a, c))
    pairs = sorted(pairs)
    edges = {(ids[a], ids[c]): float(rng.uniform(*b_range)) for a, c in pairs}
    m = {x: float(rng.uniform(*m_range)) for x in ids}
    g = WeightedGraph(ids, edges, m=m)
    theta = MagneticPotential({key: float(rng.uniform(-math.pi, math.pi)) for key in edges})
    v = ElectricPotential({x: float(rng.uniform(*v_range)) for x in ids})
    return g, theta, v


@pytest.fixture
def k2_instance():
    return k2()


@pytest.fixture
def cycle5():
    return cycle5_random_theta()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): acceptance criterion with a one-line summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call":
        return
    entry = _ACCEPTANCE.setdefault(marker.args[0], {"passed": True, "seconds": 0.0})
    entry["passed"] &= report.passed
    entry["seconds"] += report.duration


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[0].lstrip("AC"))):
        e = _ACCEPTANCE[label]
        status = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"{status}  {label}  ({e['seconds']:.2f} s)")


class Stopwatch:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False
