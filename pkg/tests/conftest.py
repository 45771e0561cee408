from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import strategies as st

from walkdet import gen_cycle, gen_grid, gen_rgg, gen_watts_strogatz, uniform_walk_chain, validate_chain

TWO_STATE = np.array([[0.9, 0.1], [0.5, 0.5]])


def random_chain_matrix(rng: np.random.Generator, m: int, density: float = 0.5) -> np.ndarray:
    """Irreducible, aperiodic random stochastic matrix.

    A random cyclic permutation guarantees strong connectivity and a
    self-loop on state 0 guarantees aperiodicity; other entries appear with
    probability ``density``.
    """
    mask = rng.random((m, m)) < density
    order = rng.permutation(m)
    mask[order, np.roll(order, -1)] = True
    mask[0, 0] = True
    w = np.where(mask, rng.uniform(0.05, 1.0, (m, m)), 0.0)
    return w / w.sum(axis=1, keepdims=True)


def brute_force_extremes(c):
    """Min and max mean cycle weight over all simple cycles."""
    g = nx.DiGraph()
    src, dst = np.nonzero(c.support)
    g.add_edges_from(zip(src.tolist(), dst.tolist()))
    logw = c.log_weights
    means = []
    for cyc in nx.simple_cycles(g):
        total = sum((Fraction(float(logw[u, v])) for u, v in zip(cyc, cyc[1:] + cyc[:1])), Fraction(0))
        means.append(total / len(cyc))
    return float(min(means)), float(max(means))


@st.composite
def chains(draw, max_m: int = 6):
    m = draw(st.integers(1, max_m))
    seed = draw(st.integers(0, 2**32 - 1))
    density = draw(st.floats(0.1, 1.0))
    return validate_chain(random_chain_matrix(np.random.default_rng(seed), m, density))


@pytest.fixture(scope="session")
def two_state():
    return validate_chain(TWO_STATE)


@pytest.fixture(scope="session")
def cycle101():
    return uniform_walk_chain(gen_cycle(101))


@pytest.fixture(scope="session")
def benchmark_chains():
    """The four benchmark walks with their documented default parameters."""
    return {
        "cycle-101": uniform_walk_chain(gen_cycle(101)),
        "grid-32x32-lazy": uniform_walk_chain(gen_grid(32, 32), laziness=1e-6),
        "rgg-1000": uniform_walk_chain(gen_rgg(1000, seed=1)),
        "ws-1000": uniform_walk_chain(gen_watts_strogatz(1000, seed=1)),
    }


# ----------------------------------------------------------------------
# one pass/fail line per acceptance criterion

_criteria: dict[int, list[str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    num = int(name.split("_")[2])
    _criteria.setdefault(num, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        outcomes = _criteria[num]
        ok = all(o == "passed" for o in outcomes)
        detail = f"{outcomes.count('passed')}/{len(outcomes)} checks passed"
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} ({detail})")
