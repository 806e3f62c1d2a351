import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from fvheat.model_domains import IntervalDomain, interval_basis
from fvheat.spectral_core import SpectralBasis, SpectralCoeffs

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

EPS = np.finfo(float).eps


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def pi_basis():
    """Interval of length pi: lambda_k = k^2."""
    return interval_basis(IntervalDomain(math.pi), 16)


def coeffs_from(lam, values) -> SpectralCoeffs:
    return SpectralCoeffs(SpectralBasis(np.asarray(lam, dtype=float)), np.asarray(values, dtype=complex))


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False, allow_subnormal=False)


@st.composite
def coeff_vectors(draw, min_size=1, max_size=24):
    """Random coefficients on a k^2 / (pi/L)^2-type basis."""
    n = draw(st.integers(min_size, max_size))
    L = draw(st.floats(0.5, 4.0))
    re = draw(st.lists(finite, min_size=n, max_size=n))
    im = draw(st.lists(finite, min_size=n, max_size=n))
    basis = interval_basis(IntervalDomain(L), n)
    return SpectralCoeffs(basis, np.array(re) + 1j * np.array(im))


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[float, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
