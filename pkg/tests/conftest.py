import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from osa.shelf import Arrangement, ProblemInstance

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

GOLDEN = Path(__file__).parent / "golden"


def golden(name: str) -> Path:
    return GOLDEN / name


@st.composite
def instances(draw, max_x=3, max_y=3, max_n=4, min_n=1):
    m_x = draw(st.integers(1, max_x))
    m_y = draw(st.integers(1, max_y))
    n = draw(st.integers(min(min_n, m_x * m_y), min(max_n, m_x * m_y)))
    c_push = draw(st.lists(st.integers(1, 10), min_size=n, max_size=n))
    extra = draw(st.lists(st.integers(0, 10), min_size=n, max_size=n))
    p = draw(st.lists(st.integers(1, 20), min_size=n, max_size=n))
    c_r = draw(st.sampled_from([0.0, 10.0, 100.0]))
    return ProblemInstance.create(m_x, m_y, p, c_push, [a + b for a, b in zip(c_push, extra)], c_r)


@st.composite
def arrangements(draw, instance):
    cells = draw(st.permutations(instance.grid.cells()))
    return Arrangement(tuple(cells[: instance.n]))


@st.composite
def instance_and_arrangement(draw, **kw):
    inst = draw(instances(**kw))
    return inst, draw(arrangements(inst))


def pytest_addoption(parser):
    parser.addoption("--regen-golden", action="store_true", help="rewrite golden files")


@pytest.fixture
def regen(request):
    return request.config.getoption("--regen-golden")


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list = []


def record_criterion(label: str, passed: bool, detail: str) -> str:
    line = f"{label}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
