import numpy as np
import pytest

from lmalab import get_potential, resolve_config, run_scenario, unit_box_grid
from lmalab.potentials import cofactor_field

# one outcome line per acceptance criterion, printed after the test summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def scenario_bundles(tmp_path_factory):
    """Lazy per-session scenario runner: each scenario executes once with
    its catalog defaults and is shared by every criterion that needs it."""
    base = tmp_path_factory.mktemp("acceptance")
    cache = {}

    def get(scenario):
        if scenario not in cache:
            cfg = resolve_config(scenario, out_dir=str(base / scenario))
            cache[scenario] = run_scenario(cfg, write=True)
        return cache[scenario]

    get.cache = cache
    get.base = base
    return get


@pytest.fixture(scope="session")
def grid2():
    return unit_box_grid(2, 65)


@pytest.fixture(scope="session")
def grid2_fine():
    return unit_box_grid(2, 129)


@pytest.fixture(scope="session")
def grid3():
    return unit_box_grid(3, 33)


@pytest.fixture(scope="session")
def iso2():
    return get_potential(2, "iso-quadratic-2d")


@pytest.fixture(scope="session")
def iso3():
    return get_potential(3, "iso-quadratic-3d")


@pytest.fixture(scope="session")
def U2(iso2, grid2):
    return cofactor_field(iso2, grid2)


@pytest.fixture(scope="session")
def U2_fine(iso2, grid2_fine):
    return cofactor_field(iso2, grid2_fine)


@pytest.fixture(scope="session")
def U3(iso3, grid3):
    return cofactor_field(iso3, grid3)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
