import numpy as np
import pytest

from bellchsh import linalg as la


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def random_hermitian(rng, n):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / 2


def random_matrix(rng, n, m=None):
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


def close(a, b, tol=1e-12):
    return la.frobenius(np.asarray(a) - np.asarray(b)) <= tol


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: (int(k.rstrip("b")), k)):
        terminalreporter.write_line(RESULTS[key].line())
