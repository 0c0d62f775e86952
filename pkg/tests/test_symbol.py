import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import pc_symbols, trig_symbols
from finsec.symbol import (
    PCSymbol,
    SymbolError,
    adjoint_sym,
    approx_identity,
    eval_symbol,
    fejer_mean,
    flip_symbol,
    fourier_coeff,
    mul,
    one_sided_limits,
)

TAU = 2 * math.pi


def test_constant_coefficients():
    c = PCSymbol.constant(2.5)
    assert fourier_coeff(c, 0)[0, 0] == 2.5
    assert fourier_coeff(c, 3)[0, 0] == 0


def test_chi_plus_coefficients_closed_form():
    # int_0^pi e^{-ik t} dt / 2pi = (1 - (-1)^k) / (2 pi i k)
    chi = PCSymbol.chi_plus()
    for k in range(-7, 8):
        want = 0.5 if k == 0 else (1 - (-1) ** k) / (2j * math.pi * k)
        assert abs(fourier_coeff(chi, k)[0, 0] - want) < 1e-15


@pytest.mark.parametrize("theta", [0.3, 1.0, 2.0, 4.0, 6.0])
def test_trig_eval_matches_series(theta):
    a = PCSymbol.trig({0: 2.0, 1: 1.0, -2: 0.5j})
    want = 2 + np.exp(1j * theta) + 0.5j * np.exp(-2j * theta)
    assert abs(eval_symbol(a, theta)[0, 0] - want) < 1e-14


def test_eval_at_jump_is_ambiguous():
    chi = PCSymbol.chi_plus()
    with pytest.raises(SymbolError):
        chi.eval(0.0)
    plus, minus = one_sided_limits(chi, 0.0)
    assert plus[0, 0] == 1 and minus[0, 0] == 0
    plus, minus = one_sided_limits(chi, math.pi)
    assert plus[0, 0] == 0 and minus[0, 0] == 1


def test_one_sided_limits_continuous_point():
    a = PCSymbol.trig({1: 1.0})
    p, m = one_sided_limits(a, 1.0)
    assert np.allclose(p, m)


def test_jump_set_and_merge():
    chi = PCSymbol.chi_plus()
    assert chi.jumps == pytest.approx([0.0, math.pi])
    # chi+ + chi- collapses to the constant 1 with no breakpoints
    one = chi + PCSymbol.chi_minus()
    assert one.is_constant() and one.jumps == []


def test_flip_examples():
    assert flip_symbol(PCSymbol.monomial(3)).allclose(PCSymbol.monomial(-3))
    ind = PCSymbol.indicator(0.5, 1.5)
    assert flip_symbol(ind).allclose(PCSymbol.indicator(TAU - 1.5, TAU - 0.5))
    even = PCSymbol.trig({1: 1.0, -1: 1.0})
    assert flip_symbol(even).allclose(even)


@given(pc_symbols())
def test_flip_involution(a):
    assert flip_symbol(flip_symbol(a)) == a


@given(pc_symbols(), st.integers(-6, 6))
def test_adjoint_fourier_relation(a, k):
    lhs = fourier_coeff(adjoint_sym(a), k)
    rhs = fourier_coeff(a, -k).conj().T
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-14)


@given(pc_symbols(d=2), pc_symbols(d=2), st.floats(0.01, TAU - 0.01))
def test_mul_pointwise(a, b, theta):
    if any(abs(theta - j) < 1e-6 for j in (a * b).breakpoints + a.breakpoints + b.breakpoints):
        return
    assert np.allclose(mul(a, b).eval(theta), a.eval(theta) @ b.eval(theta), atol=1e-12)


@given(trig_symbols(d=1))
def test_trig_roundtrip_literal(a):
    assert PCSymbol.from_literal(a.to_literal()) == a


@given(pc_symbols())
def test_literal_roundtrip(a):
    assert PCSymbol.from_literal(a.to_literal()) == a


def test_fejer_examples():
    assert fejer_mean(PCSymbol.constant(3.0), 5, 1.0)[0, 0] == pytest.approx(3.0)
    assert fejer_mean(PCSymbol.monomial(1), 1, 0.0)[0, 0] == pytest.approx(0.5)
    assert abs(fejer_mean(PCSymbol.chi_plus(), 200, 0.0)[0, 0] - 0.5) < 0.05


@pytest.mark.parametrize("theta", np.linspace(0.2, 6.0, 10))
def test_fejer_converges_off_jumps(theta):
    a = PCSymbol.from_arcs([(0, 2.0, {0: 1.0, 1: 0.5}), (2.0, TAU, {0: -1.0})])
    if min(abs(theta - 2.0), abs(theta), abs(theta - TAU)) < 0.1:
        pytest.skip("too close to a jump for n=500")
    assert abs(fejer_mean(a, 500, theta)[0, 0] - a.eval(theta)[0, 0]) <= 0.05


@pytest.mark.parametrize("alpha,beta", [(0.0, math.pi), (1.0, 2.5), (4.0, 5.5)])
def test_fejer_at_jump_is_midpoint(alpha, beta):
    ind = PCSymbol.indicator(alpha, beta)
    for tau in (alpha, beta):
        assert abs(fejer_mean(ind, 500, tau)[0, 0] - 0.5) <= 0.05


@pytest.mark.parametrize("lam", [1.0, 2.0, 7.5, 100.0])
def test_moving_average_at_jump(lam):
    assert approx_identity(PCSymbol.chi_plus(), "moving_average", lam, 0.0)[0, 0] == 0.5


def test_approx_identity_examples():
    c = PCSymbol.constant(4.0)
    assert approx_identity(c, "moving_average", 3.0, 1.0)[0, 0] == pytest.approx(4.0)
    assert approx_identity(c, "poisson", 0.7, 1.0)[0, 0] == pytest.approx(4.0)
    assert approx_identity(PCSymbol.monomial(1), "poisson", 0.3, 0.0)[0, 0] == pytest.approx(0.3)


def test_bad_literal():
    with pytest.raises(SymbolError):
        PCSymbol.from_literal([{"arc": [1.0, 0.5], "modes": {}}])


@pytest.mark.parametrize("lam", [1.0, 1.5, 3.0, 1e3])
@pytest.mark.parametrize("alpha,beta", [(0.0, math.pi), (1.0, 2.5), (4.0, 5.5)])
def test_moving_average_exact_at_every_jump(lam, alpha, beta):
    ind = PCSymbol.indicator(alpha, beta)
    for tau in (alpha, beta):
        if math.pi / lam >= min(beta - alpha, TAU - (beta - alpha)):
            continue  # window reaches the other jump
        assert approx_identity(ind, "moving_average", lam, tau)[0, 0] == 0.5
