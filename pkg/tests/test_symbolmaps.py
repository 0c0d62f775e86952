import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import trig_symbols
from finsec.opexpr import (
    ZERO,
    Adjoint,
    CoProj,
    ExprError,
    FiniteRank,
    Flip,
    Ident,
    Laurent,
    Prod,
    Proj,
    adjoint,
    equivalent,
    finite_rank,
)
from finsec.symbol import PCSymbol
from finsec.symbolmaps import (
    JIdeal,
    SeqAdjoint,
    SeqProd,
    SeqScale,
    SeqSum,
    Section,
    assemble_seq,
    default_probes,
    map_P,
    map_U,
    map_W,
    parse_seq,
    seq_to_text,
    strong_limit_oracle,
)

GENS = [Ident(), Proj(), CoProj(), Flip()]


def op_atoms():
    return st.one_of(st.sampled_from(GENS), st.builds(Laurent, trig_symbols(d=1, max_band=1)))


def op_words():
    return st.lists(op_atoms(), min_size=1, max_size=3).map(lambda xs: Prod(tuple(xs)))


def seqs():
    base = st.one_of(
        st.builds(Section, op_words()),
        st.just(JIdeal(FiniteRank({(0, 1): 1.0}, 1), FiniteRank({(-1, 0): 2.0}, 1))),
    )
    return st.recursive(
        base,
        lambda inner: st.one_of(
            st.lists(inner, min_size=2, max_size=2).map(lambda xs: SeqSum(tuple(xs))),
            st.lists(inner, min_size=2, max_size=2).map(lambda xs: SeqProd(tuple(xs))),
            st.builds(SeqScale, st.sampled_from([2.0, 1j]), inner),
            st.builds(SeqAdjoint, inner),
        ),
        max_leaves=3,
    )


def test_map_P_examples():
    assert equivalent(map_P(Section(Proj())), Proj())
    assert equivalent(map_P(SeqProd((Section(Proj()), Section(Proj())))), Proj())
    K = FiniteRank({(0, 0): 3.0}, 1)
    assert equivalent(map_P(JIdeal(K, FiniteRank({}, 1))), finite_rank({(0, 0): 3.0}))


def test_map_U_table():
    (a, b), (c, d) = map_U(Proj())
    assert equivalent(a, Ident()) and equivalent(b, ZERO) and equivalent(c, ZERO) and equivalent(d, ZERO)
    (a, b), (c, d) = map_U(Flip())
    assert equivalent(a, ZERO) and equivalent(b, Flip()) and equivalent(c, Flip()) and equivalent(d, ZERO)
    m = map_U(finite_rank({(1, 2): 1.0}))
    assert all(equivalent(x, ZERO) for row in m for x in row)


def _w_oracle(a: PCSymbol):
    # (PJ, QJ) diag(L(a), L(a)) (JP; JQ), expanded by hand
    P, Q, J, L = Proj(), CoProj(), Flip(), Laurent(a)
    return P * J * L * J * P + Q * J * L * J * Q


@pytest.mark.parametrize(
    "A,want",
    [
        (Flip(), Flip()),
        (Proj(), Proj()),
        (CoProj(), CoProj()),
        (Ident(), Ident()),
    ],
)
def test_map_W_generators(A, want):
    assert equivalent(map_W(Section(A)), want)


@given(trig_symbols(max_band=2))
def test_map_W_laurent(a):
    got = map_W(Section(Laurent(a)))
    assert equivalent(got, _w_oracle(a))
    assert equivalent(got, Proj() * Laurent(a.flip()) * Proj() + CoProj() * Laurent(a.flip()) * CoProj())


def test_map_W_jideal():
    L = FiniteRank({(0, -1): 5.0}, 1)
    assert equivalent(map_W(JIdeal(FiniteRank({}, 1), L)), finite_rank({(0, -1): 5.0}))


@given(seqs(), seqs())
def test_homomorphism_P_W(s1, s2):
    prod = SeqProd((s1, s2))
    assert equivalent(map_P(prod), map_P(s1) * map_P(s2))
    assert equivalent(map_W(prod), map_W(s1) * map_W(s2))


@given(op_words(), op_words())
def test_homomorphism_U(A, B):
    lhs = map_U(A * B)
    x, y = map_U(A), map_U(B)
    for i in range(2):
        for j in range(2):
            assert equivalent(lhs[i][j], x[i][0] * y[0][j] + x[i][1] * y[1][j])


@given(seqs())
def test_adjoint_equivariance(s):
    assert equivalent(map_W(SeqAdjoint(s)), adjoint(map_W(s)))
    assert equivalent(map_P(SeqAdjoint(s)), adjoint(map_P(s)))


@pytest.mark.parametrize("A", [Ident(), Proj(), CoProj(), Flip()])
@pytest.mark.parametrize("which", ["P", "W"])
def test_oracle_exact_for_generators(A, which):
    s = Section(A)
    pred = map_W(s) if which == "W" else map_P(s)
    probes = default_probes(4)
    for n in (8, 32, 64):
        assert strong_limit_oracle(s, pred, n, probes, which) == 0.0


@given(trig_symbols(d=1, max_band=2))
def test_oracle_trig_laurent_exact(a):
    s = Section(Laurent(a))
    probes = default_probes(4, count=2)
    assert strong_limit_oracle(s, map_W(s), 16, probes) <= 1e-12
    assert strong_limit_oracle(s, map_P(s), 16, probes, "P") <= 1e-12


def test_oracle_chi_plus_decreasing():
    chi = PCSymbol.chi_plus()
    s = Section(Laurent(chi))
    probes = default_probes(4)
    res = [strong_limit_oracle(s, map_W(s), n, probes) for n in (32, 64, 128)]
    assert res[0] > res[1] > res[2] > 0


def test_oracle_window_errors():
    with pytest.raises(ValueError):
        strong_limit_oracle(Section(Ident()), Ident(), 2, default_probes(4))


def test_jideal_assembly():
    K = FiniteRank({(0, 0): 1.0}, 1)
    L = FiniteRank({(0, 0): 2.0}, 1)
    A = assemble_seq(JIdeal(K, L), 4)
    # P_n K P_n hits index 0 (position 4); W_n L W_n hits index n-1 (position 7)
    want = np.zeros((8, 8))
    want[4, 4] = 1
    want[7, 7] = 2
    assert np.array_equal(A, want)


def test_seq_text_roundtrip():
    syms = {"a": PCSymbol.chi_plus()}
    text = '(sum (section (prod (laurent "a") P)) (jideal (finite 0 0 [1,0]) (finite 1 1 [2,0])))'
    s = parse_seq(text, syms)
    again = parse_seq(seq_to_text(s, syms), syms)
    assert np.array_equal(assemble_seq(s, 6), assemble_seq(again, 6))


def test_plain_operator_text_is_section():
    assert parse_seq("(sum I J)") == Section(parse_seq("(sum I J)").op)


def test_bad_jideal():
    with pytest.raises(ExprError):
        parse_seq("(jideal I J)")
