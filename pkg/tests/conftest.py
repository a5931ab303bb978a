import pytest

from optomech.config import PRESETS
from optomech.model import ModelParams

# Caption bundle shared by figs 2-6: kappa = 50, Delta = -1, eps/kappa = 5, Omega = 1.8.
FIG2 = dict(kappa=50.0, delta=-1.0, g1=0.15, g2=0.0, g3=0.0, eps=250.0, eps_m=0.20007 * 250.0, omega_drive=1.8)

_criteria = {}


def record_criterion(number: int, passed: bool, detail: str):
    _criteria[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        passed, detail = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def fig2_params():
    return ModelParams(**FIG2)


@pytest.fixture
def harmonic():
    return ModelParams(kappa=50.0, delta=-1.0)


@pytest.fixture(params=sorted(PRESETS))
def preset_name(request):
    return request.param
