import numpy as np
import pytest

from vblwaves import profile, spectrum
from vblwaves.model import builtin

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {text}")


@pytest.fixture(scope="session")
def record():
    def rec(number, ok, text):
        ACCEPTANCE[number] = (bool(ok), text)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {text}")
        return ok
    return rec


@pytest.fixture(scope="session")
def bf():
    return builtin("burgers-fisher")


@pytest.fixture(scope="session")
def bl():
    return builtin("logistic-buckley-leverett")


@pytest.fixture(scope="session")
def mbf():
    return builtin("modified-burgers-fisher")


@pytest.fixture(scope="session")
def bf_hopf(bf):
    eps = [0.02, 0.01, 0.005]
    return {w.epsilon: w for w in profile.continue_hopf_family(bf, eps)}


@pytest.fixture(scope="session")
def bf_cert(bf, bf_hopf):
    return spectrum.certify_instability(bf, bf_hopf[0.005])


@pytest.fixture(scope="session")
def bl_pulse(bl):
    return profile.compute_pulse(bl)


@pytest.fixture(scope="session")
def bl_pulse_spectrum(bl, bl_pulse):
    return spectrum.pulse_spectrum(bl, bl_pulse)


@pytest.fixture(scope="session")
def bl_large(bl, bl_pulse):
    waves = profile.continue_large_period_family(bl, [0.002, 0.001, 0.0005], bl_pulse)
    return {w.epsilon: w for w in waves}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
