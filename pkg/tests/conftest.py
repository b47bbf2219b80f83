import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# Effective tensors of the three tile configurations (kN/cm^2, Voigt 11,22,33,12,23,13)
def _tensor(c11, c22, c33, c12, c13, c23, c44, c55, c66):
    C = np.zeros((6, 6))
    C[0, 0], C[1, 1], C[2, 2] = c11, c22, c33
    C[0, 1] = C[1, 0] = c12
    C[0, 2] = C[2, 0] = c13
    C[1, 2] = C[2, 1] = c23
    C[3, 3], C[4, 4], C[5, 5] = c44, c55, c66
    return C


T1 = _tensor(7895.81, 7895.81, 7895.81, 432.89, 432.89, 432.89, 200.71, 200.71, 200.71)
T2 = _tensor(18246.81, 11066.80, 11066.80, 1026.56, 1026.56, 659.81, 769.49, 590.69, 769.49)
T3 = _tensor(33809.00, 14770.28, 14771.08, 2037.73, 2037.73, 997.14, 2022.10, 1375.86, 2022.17)


_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record a one-line PASS/FAIL verdict for an acceptance criterion, then assert it."""

    def _record(label: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else "")
        _VERDICTS.append(line)
        print(line)
        assert ok, line

    return _record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
