import numpy as np
import pytest

from gpinfluence import kernel, _kernels_py

try:
    from gpinfluence import _kernels_ext
except ImportError:  # extension not built
    _kernels_ext = None

BACKENDS = [_kernels_py] + ([_kernels_ext] if _kernels_ext is not None else [])

_ACCEPTANCE_LINES = []


@pytest.fixture(params=BACKENDS, ids=lambda b: b.NAME)
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    monkeypatch.setattr(kernel, "_core", request.param)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def report():
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert."""

    def _report(number, title, passed, detail=""):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}: {title} -- {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
