import math

import pytest

from bosonpow.model import CutoffFunction, DispersionSpec, ModelSpec


def nelson(g=0.0, d=3, nu=1.0, width=math.sqrt(2.0)):
    return ModelSpec("nelson", CutoffFunction("gaussian", width, d=d), DispersionSpec("massive", nu), g)


def polaron(g=0.0, width=math.sqrt(2.0)):
    return ModelSpec("polaron", CutoffFunction("gaussian", width), DispersionSpec("polaron_unit"), g)


def zero_momentum(g=0.0, nu=1.0):
    return ModelSpec("zero_momentum", CutoffFunction("gaussian", math.sqrt(2.0)), DispersionSpec("massive", nu), g)


@pytest.fixture
def nelson_model():
    return nelson()


# criterion number -> (title, passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d} {title}: {detail}")
