import pytest

from sandpile import _backend
from sandpile.graph import build_graph, complete_graph


@pytest.fixture
def g2():
    return complete_graph(2)


@pytest.fixture
def path3():
    return build_graph(3, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture(params=["python", "cython"])
def backend(request, monkeypatch):
    try:
        mod = _backend.get(request.param)
    except ImportError:
        pytest.skip("compiled kernels not built")
    monkeypatch.setattr(_backend, "kernels", mod)
    return request.param


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
