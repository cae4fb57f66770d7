import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from shorent import kernels


@pytest.fixture(params=kernels.available())
def backend(request, monkeypatch):
    """Run the test once per importable kernel backend."""
    monkeypatch.setattr(kernels, "active", kernels.load(request.param))
    return request.param


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
