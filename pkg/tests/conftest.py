import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2


def random_unitary(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import CRITERIA, RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name in CRITERIA:
        result = RESULTS.get(number)
        if result is None:
            terminalreporter.write_line(f"criterion {number:2d} {name}: NOT RUN")
            continue
        worst = next((m for m in result.measurements if not m.passed), result.measurements[0])
        verdict = "PASS" if result.passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {name}: {verdict}  {worst.describe()}")
