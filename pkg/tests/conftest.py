import math

import numpy as np
import pytest
from scipy.integrate import quad
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from finsec.symbol import PCSymbol

settings.register_profile(
    "finsec", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("finsec")

# coefficients are either exactly zero or well above the 1e-12 comparison tolerance
small = st.floats(-3, 3, allow_nan=False, allow_infinity=False).map(lambda x: 0.0 if abs(x) < 1e-6 else x)
cplx = st.builds(complex, small, small)


@st.composite
def matrices(draw, d):
    vals = draw(st.lists(cplx, min_size=d * d, max_size=d * d))
    return np.array(vals, dtype=complex).reshape(d, d)


@st.composite
def trig_symbols(draw, d=None, max_band=2):
    d = d or draw(st.sampled_from([1, 2]))
    ks = draw(st.lists(st.integers(-max_band, max_band), min_size=1, max_size=3, unique=True))
    return PCSymbol.trig({k: draw(matrices(d)) for k in ks}, d)


@st.composite
def pc_symbols(draw, d=None, max_pieces=3):
    """Piecewise trig symbols with breakpoints on a 1/16 grid of the circle."""
    d = d or draw(st.sampled_from([1, 2]))
    cuts = sorted(draw(st.lists(st.integers(0, 15), min_size=1, max_size=max_pieces, unique=True)))
    angles = [c * math.pi / 8 for c in cuts]
    arcs = []
    for i, a in enumerate(angles):
        b = angles[i + 1] if i + 1 < len(angles) else angles[0] + 2 * math.pi
        ks = draw(st.lists(st.integers(-1, 1), min_size=1, max_size=2, unique=True))
        arcs.append((a, b, {k: draw(matrices(d)) for k in ks}))
    return PCSymbol.from_arcs(arcs, d)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def cauchy_oracle(a, b, c, d):
    """PV int_a^b int_c^d dy dx / (y - x) by nested adaptive quadrature."""

    def inner(x):
        if c < x < d:
            return quad(lambda y: 1.0, c, d, weight="cauchy", wvar=x)[0]
        return math.log(abs(d - x) / abs(c - x))

    pts = [p for p in (c, d) if a < p < b] or None
    return quad(inner, a, b, points=pts, limit=200, epsabs=1e-13, epsrel=1e-13)[0]


def hankel_oracle(a, b, c, d):
    """int_a^b int_c^d dy dx / (x + y) for nonnegative intervals."""
    # the inner integral is log((x + d) / (x + c)); quad never evaluates the endpoint x = 0
    return quad(lambda x: math.log((x + d) / (x + c)), a, b, limit=200, epsabs=1e-13, epsrel=1e-13)[0]


# acceptance lines, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
