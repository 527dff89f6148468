import dataclasses

import pytest

from implosion.phase_portrait import ratio_index_for_regime
from implosion.pipeline import compute_profile
from implosion.profile import save_profile

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def run14():
    """gamma = 7/5 on the default ratio index."""
    return compute_profile(1.4, 5)


@pytest.fixture(scope="session")
def run14_visc():
    """gamma = 7/5 on the index whose exponent satisfies (P1) for delta = 0.1."""
    return compute_profile(1.4, ratio_index_for_regime(1.4, 0.1))


@pytest.fixture
def profile14(run14):
    prof = run14.profile
    return dataclasses.replace(prof, meta=dict(prof.meta))


@pytest.fixture(scope="session")
def profile14_path(run14, tmp_path_factory):
    path = tmp_path_factory.mktemp("profiles") / "p14.csv"
    save_profile(run14.profile, path)
    return path


@pytest.fixture(scope="session")
def profile14_visc_path(run14_visc, tmp_path_factory):
    path = tmp_path_factory.mktemp("profiles") / "p14_visc.csv"
    save_profile(run14_visc.profile, path)
    return path


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
