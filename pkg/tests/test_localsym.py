import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import pc_symbols
from finsec.linemodels import ZERO_L, ChiPos, CompressUnit, ConstL, FlipL, IdentL, ProdL, ScaleL, SingR, SumL
from finsec.localsym import (
    MINUS_ONE,
    PLUS_ONE,
    LocalPoint,
    check_local_invertibility,
    fiber_points,
    local_symbol_boundary,
    local_symbol_interior,
    local_symbol_seq,
)
from finsec.opexpr import CoProj, FiniteRank, Flip, Ident, Laurent, Prod, Proj
from finsec.symbol import PCSymbol
from finsec.symbolmaps import JIdeal, Section, SeqAdjoint, SeqProd, SeqScale, SeqSum

TAU = 2 * math.pi / 3
INTERIOR = LocalPoint.at(TAU)
CHI = PCSymbol.chi_plus()


def jump_model(plus, minus):
    lower = ScaleL(0.5, SumL((IdentL(), ScaleL(-1.0, SingR()))))
    upper = ScaleL(0.5, SumL((IdentL(), SingR())))
    return SumL((ProdL((ConstL(np.array([[plus]])), lower)), ProdL((ConstL(np.array([[minus]])), upper))))


@pytest.mark.parametrize(
    "theta,kind,tau",
    [(0.0, "plus_one", 0.0), (2 * math.pi, "plus_one", 0.0), (math.pi, "minus_one", math.pi),
     (TAU, "interior", TAU), (2 * math.pi - TAU, "interior", TAU), (-TAU, "interior", TAU)],
)
def test_fold(theta, kind, tau):
    p = LocalPoint.at(theta)
    assert p.kind == kind and p.tau == pytest.approx(tau)


def test_sign():
    assert PLUS_ONE.sign == 1 and MINUS_ONE.sign == -1
    with pytest.raises(ValueError):
        INTERIOR.sign


def test_fiber_points_examples():
    assert fiber_points(Section(Laurent(CHI))) == [PLUS_ONE, MINUS_ONE]
    smooth = PCSymbol.trig({0: 2.0, 1: 1.0})
    assert fiber_points(Section(Laurent(smooth))) == []
    assert fiber_points(Section(Laurent(smooth) + Flip())) == [PLUS_ONE, MINUS_ONE]
    pts = fiber_points(Section(Laurent(PCSymbol.indicator(TAU, 4.0))))
    assert [p.kind for p in pts] == ["interior", "interior"]
    assert pts[0].tau == pytest.approx(TAU) and pts[1].tau == pytest.approx(2 * math.pi - 4.0)
    assert fiber_points(Section(Ident()), extra=[1.0]) == [LocalPoint.at(1.0)]


def test_interior_tables():
    def compressed(a, b, c, d):
        return ((CompressUnit(a), b), (c, CompressUnit(d)))

    ls = local_symbol_interior(Proj(), INTERIOR)
    want_p = ((CompressUnit(ChiPos()), ZERO_L), (ZERO_L, CompressUnit(SumL((IdentL(), ScaleL(-1.0, ChiPos()))))))
    assert ls.entries == want_p
    ls = local_symbol_interior(Flip(), INTERIOR)
    assert ls.entries == ((ZERO_L, CompressUnit(IdentL())), (CompressUnit(IdentL()), ZERO_L))
    ls = local_symbol_interior(Laurent(CHI), INTERIOR)
    assert ls.entries == compressed(ConstL(np.eye(1)), ZERO_L, ZERO_L, ConstL(np.zeros((1, 1))))


def test_interior_continuous_symbol():
    a = PCSymbol.trig({0: 2.0, 1: 1.0})
    ls = local_symbol_interior(Laurent(a), INTERIOR)
    t = np.exp(1j * TAU)
    assert ls.entries[0][0] == CompressUnit(ConstL(np.array([[2 + t]])))
    assert ls.entries[1][1] == CompressUnit(ConstL(np.array([[2 + 1 / t]])))


def test_boundary_tables():
    assert local_symbol_boundary(Proj(), PLUS_ONE).e == CompressUnit(ChiPos())
    assert local_symbol_boundary(Flip(), PLUS_ONE).e == CompressUnit(FlipL())
    assert local_symbol_boundary(Flip(), MINUS_ONE).e == CompressUnit(ScaleL(-1.0, FlipL()))
    assert local_symbol_boundary(Laurent(CHI), PLUS_ONE).e == CompressUnit(jump_model(1.0, 0.0))
    assert local_symbol_boundary(Laurent(CHI), MINUS_ONE).e == CompressUnit(jump_model(0.0, 1.0))
    assert local_symbol_boundary(Ident(), MINUS_ONE).e == CompressUnit(IdentL())


def test_boundary_continuous_is_evaluation():
    a = PCSymbol.trig({0: 2.0, 1: 1.0})
    assert local_symbol_boundary(Laurent(a), PLUS_ONE).e == CompressUnit(ConstL(np.array([[3.0]])))
    assert local_symbol_boundary(Laurent(a), MINUS_ONE).e == CompressUnit(ConstL(np.array([[1.0]])))


def test_wrong_point_kind():
    with pytest.raises(ValueError):
        local_symbol_interior(Proj(), PLUS_ONE)
    with pytest.raises(ValueError):
        local_symbol_boundary(Proj(), INTERIOR)


@pytest.mark.parametrize("p", [INTERIOR, PLUS_ONE, MINUS_ONE])
def test_unitality_and_ideal(p):
    one = local_symbol_seq(Section(Ident()), p).discretize(8)
    assert np.array_equal(one, np.eye(one.shape[0]))
    K = FiniteRank({(0, 0): 1.0}, 1)
    zero = local_symbol_seq(JIdeal(K, K), p).discretize(8)
    assert not np.any(zero)


@pytest.mark.parametrize("p", [INTERIOR, PLUS_ONE])
def test_projection_product_is_idempotent(p):
    m = local_symbol_seq(SeqProd((Section(Proj()), Section(Proj()))), p).discretize(8)
    single = local_symbol_seq(Section(Proj()), p).discretize(8)
    assert np.array_equal(m, single)


def ops():
    atom = st.one_of(
        st.sampled_from([Ident(), Proj(), CoProj(), Flip()]),
        st.builds(Laurent, pc_symbols(d=1, max_pieces=2)),
    )
    return st.lists(atom, min_size=1, max_size=2).map(lambda xs: Prod(tuple(xs)))


@given(ops(), ops(), st.sampled_from([INTERIOR, PLUS_ONE, MINUS_ONE]))
def test_homomorphy(A, B, p):
    prod = local_symbol_seq(SeqProd((Section(A), Section(B))), p).discretize(6)
    a = local_symbol_seq(Section(A), p).discretize(6)
    b = local_symbol_seq(Section(B), p).discretize(6)
    assert np.abs(prod - a @ b).max() <= 1e-12


@given(ops(), st.sampled_from([INTERIOR, PLUS_ONE, MINUS_ONE]))
def test_adjoint(A, p):
    s = SeqSum((Section(A), SeqScale(2j, Section(Proj()))))
    m = local_symbol_seq(s, p).discretize(6)
    ma = local_symbol_seq(SeqAdjoint(s), p).discretize(6)
    assert np.abs(ma - m.conj().T).max() <= 1e-10


def test_check_identity_invertible():
    chk = check_local_invertibility(local_symbol_seq(Section(Ident()), PLUS_ONE), [8, 16, 32])
    assert chk.verdict == "invertible" and all(s == 1 for _, s in chk.rows)


@pytest.mark.parametrize("alpha,want,verdict", [(1.0, 0.0, "singular"), (2.0, 1.0, "invertible")])
@pytest.mark.parametrize("p", [PLUS_ONE, MINUS_ONE])
def test_check_involution_cases(alpha, want, verdict, p):
    ls = local_symbol_seq(Section(alpha * Ident() + Flip()), p)
    chk = check_local_invertibility(ls, [16, 32, 64])
    assert chk.verdict == verdict
    assert abs(chk.rows[-1][1] - want) <= 1e-8


def test_check_grids_must_increase():
    with pytest.raises(ValueError):
        check_local_invertibility(local_symbol_seq(Section(Ident()), PLUS_ONE), [16, 8])


def test_chi_plus_boundary_not_invertible():
    # (I - S_R)/2 compressed to [-1, 1] is a compressed projection with a kernel
    chk = check_local_invertibility(local_symbol_seq(Section(Laurent(CHI)), PLUS_ONE), [16, 32, 64])
    assert chk.verdict in ("singular", "inconclusive")
