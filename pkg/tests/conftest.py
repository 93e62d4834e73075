import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hdgmg.driver import RunConfig, run  # noqa: E402
from hdgmg.mesh import build_hierarchy  # noqa: E402
from hdgmg.multigrid import SmootherConfig, make_context  # noqa: E402
from hdgmg.skeleton import assemble  # noqa: E402
from hdgmg.transfer import build_transfer  # noqa: E402


def one(x, y):
    return np.ones_like(x)


@pytest.fixture(scope="session")
def hierarchy():
    return build_hierarchy(4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CTX = {}


def mg_context(p, L, tau="one_over_h", m=1, kind="gauss_seidel"):
    key = (p, L, tau, m, kind)
    if key not in _CTX:
        H = build_hierarchy(L)
        systems = [assemble(H[l], p, 1.0 / H[l].h if tau == "one_over_h" else tau, one) for l in range(L + 1)]
        transfers = [None] + [build_transfer(H, l, p, systems[l - 1].tau, systems[l - 1].operators) for l in range(1, L + 1)]
        _CTX[key] = make_context(systems, transfers, SmootherConfig(kind=kind, sweeps=m))
    return _CTX[key]


@pytest.fixture(scope="session")
def table1_runs():
    """Iteration-count sweep for f = 1, levels 0..6; also returns the wall time."""
    t0 = time.monotonic()
    out = {}
    for p in (1, 2, 3):
        for tau in ("one_over_h", 1.0):
            for m in (1, 2):
                out[(p, tau, m)] = run(RunConfig(p=p, tau=tau, levels=6, smooth=m, tol=1e-6, rhs="one"))
    return out, time.monotonic() - t0


@pytest.fixture(scope="session")
def table2_runs():
    """Manufactured-solution runs up to level 7."""
    out = {}
    for p in (1, 2, 3):
        for tau in ("one_over_h", 1.0):
            out[(p, tau)] = run(RunConfig(p=p, tau=tau, levels=7, smooth=1, tol=1e-10, rhs="manufactured"))
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
