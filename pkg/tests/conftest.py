import numpy as np
import pytest

from permsym import define_system, enumerate_basis
from permsym.basis import Mode

TWO_LEVEL_DIMS = ("n11", "n10", "n01")
THREE_LEVEL_DIMS = ("n22", "n21", "n20", "n12", "n11", "n10", "n02", "n01")


def two_level(n=2, fock=None, energy=1.0, level_energies=(0.0, 1.0)):
    modes = [Mode(fock, energy, "a")] if fock else []
    return define_system(n, 2, TWO_LEVEL_DIMS, level_energies=level_energies, modes=modes)


def three_level(n=2, fock=None, energy=1.0):
    modes = [Mode(fock, energy, "a")] if fock else []
    return define_system(n, 3, THREE_LEVEL_DIMS, level_energies=(0.0, 1.0, 0.3), modes=modes)


@pytest.fixture
def tls2():
    return enumerate_basis(two_level(2))


@pytest.fixture
def tls2_mode():
    return enumerate_basis(two_level(2, fock=3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hermitian_vector(basis, rng):
    """Coefficient vector with the conjugate-pair symmetry of a hermitian matrix."""
    out = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    for s, t in enumerate(basis.transpose_index):
        if t < 0:
            out[s] = 0.0
        elif t == s:
            out[s] = out[s].real
        elif t > s:
            out[t] = np.conj(out[s])
    return out


# -- acceptance reporting ----------------------------------------------------
_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        number, title = marker.args
        detail = getattr(item, "acceptance_detail", "")
        _ACCEPTANCE[number] = (title, rep.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[number]
        line = f"{'PASS' if ok else 'FAIL'}  {number}. {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
