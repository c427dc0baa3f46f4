import functools

import pytest
from hypothesis import settings

from fermi_rpa.lattice import InteractionFourier, closed_shell_params
from fermi_rpa.occupation import OccupationEngine

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

R_DEFAULT = 2.5


@functools.lru_cache(maxsize=None)
def const_engine(kF: float, R: float = R_DEFAULT, v: float = 1.0, M: int | None = None) -> OccupationEngine:
    params = closed_shell_params(kF, M=M, R=R, vhat=InteractionFourier.constant(v, R))
    return OccupationEngine(params)


@pytest.fixture(scope="session")
def engine5():
    return const_engine(5)


@pytest.fixture(scope="session")
def engine8():
    return const_engine(8)


# -- acceptance report ---------------------------------------------------------------

ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """``record(n, ok, detail)`` stores the one-line verdict of criterion n."""

    def record(n: int, ok: bool, detail: str) -> bool:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
