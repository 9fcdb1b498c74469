from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from fabry.chain import StructuralVector, Wavenumber
from fabry.figures import builtin

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# quarter-integer lengths hit resonances at k0 = pi often enough to be interesting
quarter = st.integers(min_value=1, max_value=12).map(lambda m: Fraction(m, 4))
wavenumbers = st.sampled_from([Fraction(1), Fraction(2), Fraction(1, 2), Fraction(4, 3)]).map(Wavenumber)


@st.composite
def structural_vectors(draw, n_min: int = 1, n_max: int = 8):
    N = draw(st.integers(min_value=n_min, max_value=n_max))
    vals = draw(st.lists(quarter, min_size=2 * N - 1, max_size=2 * N - 1))
    return StructuralVector(tuple(vals))


@pytest.fixture(scope="session")
def fig4_cfg():
    return builtin("fig4")


@pytest.fixture(scope="session")
def example_cfg():
    return builtin("example")


@pytest.fixture(scope="session")
def fig6_cfg():
    return builtin("fig6")


@pytest.fixture(scope="session")
def setting3_cfg():
    return builtin("setting3")


def scattering_system(chain, k: complex, delta: complex) -> np.ndarray:
    """Plane-wave matching matrix whose kernel is the outgoing scattering mode.

    Region j (0 = left exterior, 2N = right exterior) carries
    ``a_j exp(i k_j x) + b_j exp(-i k_j x)``; the exterior fields are purely
    outgoing.  At both ends of a resonator the inner derivative is ``delta``
    times the outer one.
    """
    xs = chain.boundaries()
    r = float(chain.params.r)
    n_reg = len(xs) + 1
    kk = [k * r if j % 2 == 1 else k for j in range(n_reg)]
    unknowns = [(j, s) for j in range(n_reg) for s in (1, -1)]
    unknowns.remove((0, 1))
    unknowns.remove((n_reg - 1, -1))
    col = {u: i for i, u in enumerate(unknowns)}
    A = np.zeros((len(unknowns), len(unknowns)), dtype=complex)
    for b, x in enumerate(xs):
        left, right = b, b + 1
        # derivative weights: resonators are the odd regions, the outer side carries delta
        wl = 1.0 if left % 2 == 1 else delta
        wr = 1.0 if right % 2 == 1 else delta
        for reg, sgn_val, w in ((left, 1, wl), (right, -1, wr)):
            for s in (1, -1):
                if (reg, s) not in col:
                    continue
                e = np.exp(1j * s * kk[reg] * x)
                A[2 * b, col[(reg, s)]] += sgn_val * e
                A[2 * b + 1, col[(reg, s)]] += sgn_val * w * 1j * s * kk[reg] * e
    return A


def scattering_singularity(chain, k: complex, delta: complex) -> float:
    sv = np.linalg.svd(scattering_system(chain, k, delta), compute_uv=False)
    return float(sv[-1] / sv[0])


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
