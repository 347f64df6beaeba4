import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from cutplay.solvers import kernels  # noqa: E402


@pytest.fixture(params=["python", "cython"])
def backend(request):
    if request.param == "cython":
        pytest.importorskip("cutplay.solvers._ckernels")
    old = kernels.use(request.param)
    yield request.param
    kernels.use(old)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
