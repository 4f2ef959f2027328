from __future__ import annotations

import pytest

from momapos.kinematics import preset
from momapos.reachability import build_irm
from momapos.suites import kitchen_scene


@pytest.fixture(scope="session")
def kitchen():
    return kitchen_scene()


@pytest.fixture(scope="session")
def generic6():
    return preset("generic6")


@pytest.fixture(scope="session")
def planar2():
    return preset("planar2")


@pytest.fixture(scope="session")
def irm6(generic6):
    return build_irm(generic6, seed=0)


@pytest.fixture(scope="session")
def irm6_path(irm6, tmp_path_factory):
    from momapos.reachability import save_irm

    p = tmp_path_factory.mktemp("irm") / "generic6.irm"
    save_irm(irm6, p)
    return p


@pytest.fixture(scope="session")
def irm2(planar2):
    return build_irm(planar2, samples=400_000, voxel_size=0.02, seed=0)


# one PASS/FAIL line per acceptance criterion, printed after the run
ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    def record(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE[number] = (ok, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
