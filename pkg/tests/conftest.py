import numpy as np
import pytest
import scipy.linalg

from renyi_qht.divergences import StatePair
from renyi_qht.exponents import ExponentContext
from renyi_qht.verify import canonical_pair


KET0 = np.array([[1, 0], [0, 0]], dtype=complex)
PLUS = np.full((2, 2), 0.5, dtype=complex)
HALF = np.eye(2) / 2


def commuting_qubit():
    return np.diag([0.5, 0.5]).astype(complex), np.diag([1 / 3, 2 / 3]).astype(complex)


def psd_power(a, p):
    """Independent oracle: scipy's eigh with an explicit support cut."""
    w, v = scipy.linalg.eigh(a)
    top = w.max()
    wp = np.where(w > 1e-12 * top, np.clip(w, 1e-300, None) ** p, 0.0)
    return (v * wp) @ v.conj().T


def sandwiched_oracle(rho, sigma, alpha):
    s = psd_power(sigma, (1 - alpha) / (2 * alpha))
    w = scipy.linalg.eigvalsh(s @ rho @ s)
    w = w[w > 1e-14 * w.max()]
    return float(np.log(np.sum(w ** alpha)) / (alpha - 1))


def petz_oracle(rho, sigma, alpha):
    t = np.trace(scipy.linalg.fractional_matrix_power(rho, alpha)
                 @ scipy.linalg.fractional_matrix_power(sigma, 1 - alpha)).real
    return float(np.log(t) / (alpha - 1))


def umegaki_oracle(rho, sigma):
    return float(np.trace(rho @ (scipy.linalg.logm(rho) - scipy.linalg.logm(sigma))).real)


@pytest.fixture(scope="session")
def canonical_ctx():
    return ExponentContext.from_states(*canonical_pair())


@pytest.fixture(scope="session")
def commuting_ctx():
    return ExponentContext.from_states(*commuting_qubit())


@pytest.fixture
def commuting_pair():
    return StatePair(*commuting_qubit())


ACCEPTANCE = {}


def record(number, title, passed, detail=""):
    """Store and print one acceptance line; the terminal summary repeats them in order."""
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
