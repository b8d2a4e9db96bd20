import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lapnet.graph import Window, build_chain, build_cyclic, build_lattice, from_edges, integer_line

settings.register_profile(
    "lapnet",
    deadline=None,
    derandomize=True,
    max_examples=int(os.environ.get("LAPNET_HYPOTHESIS_EXAMPLES", "40")),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("lapnet")


def families():
    """(name, graph, window) for every built-in family, windows small enough for dense checks."""
    return [
        ("cyclic7", build_cyclic(7), None),
        ("cyclic16", build_cyclic(16), None),
        ("lattice2x5", build_lattice(2, 5), None),
        ("lattice3x3", build_lattice(3, 3), None),
        ("line", integer_line(), Window.interval(-12, 12)),
        ("line-geometric", build_chain("geometric", "full-line", lam=1.5), Window.interval(-6, 6)),
        ("chain-constant", build_chain("constant"), Window.interval(0, 20)),
        ("chain-linear", build_chain("linear"), Window.interval(0, 20)),
        ("chain-square", build_chain("square"), Window.interval(0, 20)),
        ("chain-geometric", build_chain("geometric", lam=2.0), Window.interval(0, 15)),
        ("finite", from_edges([(0, 1, 2.0), (1, 2, 0.5), (2, 3, 1.0), (3, 0, 3.0), (0, 2, 1.5), (3, 4, 0.25)]), None),
    ]


FAMILY_IDS = [f[0] for f in families()]


@pytest.fixture(params=families(), ids=FAMILY_IDS)
def family(request):
    name, g, w = request.param
    return name, g, (w if w is not None else g.default_window())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria register here so the summary prints even when output is captured
ACCEPTANCE: dict = {}


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
