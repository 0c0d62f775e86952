import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import matrices, trig_symbols
from finsec.opexpr import (
    Adjoint,
    CoProj,
    ExprError,
    Flip,
    Ident,
    Laurent,
    Prod,
    Proj,
    Scale,
    Sum,
    adjoint,
    canonical_form,
    equivalent,
    finite_rank,
    normalize,
    parse_op,
    to_text,
)
from finsec.sections import assemble_windowed
from finsec.symbol import PCSymbol


def exprs(d=1):
    """Random expressions over I, P, Q, J, L(trig), finite rank (block size d)."""
    atoms = st.one_of(
        st.sampled_from([Ident(), Proj(), CoProj(), Flip()]),
        st.builds(Laurent, trig_symbols(d=d)),
        st.builds(
            lambda i, j, m: finite_rank({(i, j): m}, d),
            st.integers(-3, 2),
            st.integers(-3, 2),
            matrices(d),
        ),
    )

    def extend(inner):
        return st.one_of(
            st.lists(inner, min_size=2, max_size=3).map(lambda xs: Sum(tuple(xs))),
            st.lists(inner, min_size=2, max_size=3).map(lambda xs: Prod(tuple(xs))),
            st.builds(Scale, st.sampled_from([2.0, -1.0, 0.5j]), inner),
            st.builds(Adjoint, inner),
        )

    return st.recursive(atoms, extend, max_leaves=5)


def test_adjoint_examples():
    a = PCSymbol.trig({1: 1.0 + 2j})
    assert adjoint(Proj()) == Proj()
    assert equivalent(adjoint(Laurent(a)), Laurent(a.adjoint()))
    assert equivalent(adjoint(Prod((Flip(), Laurent(a)))), Prod((Laurent(a.adjoint()), Flip())))


@pytest.mark.parametrize(
    "expr,want",
    [
        (Prod((Flip(), Flip())), Ident()),
        (Prod((Flip(), Proj(), Flip())), CoProj()),
        (Prod((Flip(), CoProj(), Flip())), Proj()),
        (Sum((Proj(), CoProj())), Ident()),
        (Prod((Proj(), Proj())), Proj()),
        (Prod((Proj(), CoProj())), Sum(())),
    ],
)
def test_normalize_rewrites(expr, want):
    assert equivalent(expr, want)


def test_laurent_merge_and_flip():
    a = PCSymbol.trig({0: 1.0, 1: 2.0})
    b = PCSymbol.chi_plus()
    assert equivalent(Prod((Laurent(a), Laurent(b))), Laurent(a * b))
    assert equivalent(Prod((Flip(), Laurent(b), Flip())), Laurent(b.flip()))


def test_canonical_examples():
    cf = canonical_form(Proj())
    assert cf.a == PCSymbol.constant(1.0) and cf.b.is_zero() and cf.c.is_zero() and cf.d.is_zero()
    cf = canonical_form(Flip())
    assert cf.a.is_zero() and cf.b.is_zero()
    assert cf.c == PCSymbol.constant(1.0) and cf.d == PCSymbol.constant(1.0)
    a = PCSymbol.trig({1: 1.0})
    assert canonical_form(Prod((Proj(), Laurent(a), Proj()))) is None


@given(exprs())
def test_normalize_preserves_action(e):
    n, margin = 6, 24
    lhs = assemble_windowed(e, n, margin, d=1)
    rhs = assemble_windowed(normalize(e), n, margin, d=1)
    assert np.abs(lhs - rhs).max() <= 1e-10


@given(exprs(d=2))
def test_normalize_preserves_action_blocks(e):
    lhs = assemble_windowed(e, 5, 20, d=2)
    rhs = assemble_windowed(normalize(e), 5, 20, d=2)
    assert np.abs(lhs - rhs).max() <= 1e-10


@given(exprs())
def test_adjoint_involution(e):
    assert equivalent(adjoint(adjoint(e)), e)


@given(exprs())
def test_adjoint_is_conjugate_transpose(e):
    m = assemble_windowed(e, 5, 20, d=1)
    ma = assemble_windowed(adjoint(e), 5, 20, d=1)
    assert np.abs(ma - m.conj().T).max() <= 1e-10


@given(exprs())
def test_canonical_roundtrip(e):
    cf = canonical_form(e, d=1)
    if cf is None:
        return
    assert equivalent(cf.to_expr(), e)


@given(exprs())
def test_normalize_idempotent(e):
    once = normalize(e)
    assert equivalent(normalize(once), once)


@given(exprs())
def test_text_roundtrip(e):
    assert equivalent(parse_op(to_text(e)), e)


def test_parse_named_symbols():
    syms = {"a": PCSymbol.trig({0: 2.0, 1: 1.0})}
    e = parse_op('(sum (prod (laurent "a") P) (scale [0,1] J))', syms)
    assert equivalent(e, Laurent(syms["a"]) * Proj() + 1j * Flip())
    assert to_text(Laurent(syms["a"]), syms) == '(laurent "a")'


@pytest.mark.parametrize("bad", ["(sum I", "(foo I)", '(laurent "missing")', "(scale I)", "X"])
def test_parse_errors(bad):
    with pytest.raises(ExprError):
        parse_op(bad, {})


def test_equivalent_with_jumps():
    chi = Laurent(PCSymbol.chi_plus())
    a = Laurent(PCSymbol.trig({0: 1.0, 1: 2.0}))
    assert equivalent(chi * Proj() + chi * CoProj(), chi)
    assert equivalent(Proj() * (chi + 2 * Ident()) * Proj(), Proj() * chi * Proj() + 2 * Proj())
    assert equivalent(Flip() * chi * a * Flip(), Laurent((PCSymbol.chi_plus() * a.sym).flip()))
    assert not equivalent(Proj() * chi * Proj(), chi * Proj())
    assert not equivalent(chi * Proj(), Laurent(PCSymbol.chi_minus()) * Proj())


@pytest.mark.parametrize(
    "lhs,rhs,want",
    [
        (Proj() * Laurent(PCSymbol.monomial(-1)), Proj() * Laurent(PCSymbol.monomial(-1)) * Proj(), True),
        (Proj() * Laurent(PCSymbol.monomial(1)), Proj() * Laurent(PCSymbol.monomial(1)) * Proj(), False),
        (Proj() * Laurent(PCSymbol.monomial(1)) * CoProj(), finite_rank({(0, -1): 1.0}), True),
    ],
)
def test_equivalent_banded(lhs, rhs, want):
    assert equivalent(lhs, rhs) is want
