import os
import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from delone import catalog
from delone.core import GramMatrix, PeriodicSet

settings.register_profile(
    "default", deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

F = Fraction

# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

# catalog entries cheap enough for exhaustive per-entry checks
SMALL = ["z1", "z2", "z3", "hexagonal", "d3_plus", "layered_3", "two_orbit_shift_2",
         "collinear_triple", "p1_orbit", "p2_orbit", "p4_orbit", "p4m_orbit", "p6_orbit"]
ALL = catalog.names()


def wallpaper_instances(count=50, seed=2024):
    """Seeded orbits of generic rational points under the catalog wallpaper groups."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        g = rng.choice(["p1", "p2", "p4", "p4m", "p6"])
        seed_pt = (F(rng.randrange(1, 12), 13), F(rng.randrange(1, 12), 17))
        out.append(catalog.wallpaper_orbit(g, seed_pt))
    return out


def lattice(gram, motif=None):
    d = len(gram)
    motif = motif or [(0,) * d]
    return PeriodicSet(GramMatrix(tuple(tuple(F(x) for x in row) for row in gram)),
                       tuple(tuple(F(x) for x in p) for p in motif))


@pytest.fixture(scope="session")
def z2():
    return catalog.make("z2")


@pytest.fixture(scope="session")
def z3():
    return catalog.make("z3")


@pytest.fixture(scope="session")
def hexagonal():
    return catalog.make("hexagonal")


@pytest.fixture(scope="session")
def d3_plus():
    return catalog.make("d3_plus")


@pytest.fixture(scope="session")
def d5_plus():
    return catalog.make("d5_plus")


@pytest.fixture(scope="session")
def shifted():
    return catalog.make("two_orbit_shift_2")


@pytest.fixture(scope="session")
def triple():
    return catalog.make("collinear_triple")
