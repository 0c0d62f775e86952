"""Sequence expressions and the homomorphisms ``P``, ``U`` and ``W``.

``map_P`` keeps the operator behind a section, ``map_W`` computes the strong
limit of ``W_n A_n W_n`` in closed form, and ``map_U`` is the auxiliary 2x2
representation used to build ``map_W``.  :func:`strong_limit_oracle` checks
both maps against finite-``n`` matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .opexpr import (
    Adjoint,
    CoProj,
    ExprError,
    FiniteRank,
    FiniteRankOp,
    Flip,
    Ident,
    Laurent,
    OpExpr,
    Prod,
    Proj,
    Scale,
    Sum,
    ZERO,
    _parse_complex,
    _read_finite,
    adjoint,
    block_dim,
    finite_text,
    normalize,
    read_sexpr,
    to_text,
    tree_to_op,
)
from .sections import assemble, finite_rank_section, structured_op
from .symbol import SymbolError


class SeqExpr:
    def __add__(self, other):
        return SeqSum((self, other))

    def __mul__(self, other):
        if isinstance(other, SeqExpr):
            return SeqProd((self, other))
        return SeqScale(complex(other), self)

    def __rmul__(self, other):
        return SeqScale(complex(other), self)

    def __neg__(self):
        return SeqScale(-1.0, self)


@dataclass(frozen=True)
class Section(SeqExpr):
    """The sequence ``(P_n A P_n)``."""

    op: OpExpr


@dataclass(frozen=True, eq=False)
class JIdeal(SeqExpr):
    """The sequence ``(P_n K P_n + W_n L W_n)`` with finite-rank ``K``, ``L``."""

    K: FiniteRank
    L: FiniteRank

    def __eq__(self, other):
        return isinstance(other, JIdeal) and self.K == other.K and self.L == other.L


@dataclass(frozen=True)
class SeqSum(SeqExpr):
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True)
class SeqProd(SeqExpr):
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))


@dataclass(frozen=True)
class SeqScale(SeqExpr):
    lam: complex
    s: SeqExpr

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))


@dataclass(frozen=True)
class SeqAdjoint(SeqExpr):
    s: SeqExpr


def seq_atoms(s: SeqExpr):
    if isinstance(s, (Section, JIdeal)):
        yield s
    elif isinstance(s, SeqSum):
        for t in s.terms:
            yield from seq_atoms(t)
    elif isinstance(s, SeqProd):
        for f in s.factors:
            yield from seq_atoms(f)
    elif isinstance(s, (SeqScale, SeqAdjoint)):
        yield from seq_atoms(s.s)
    else:
        raise ExprError(f"unknown sequence node {type(s).__name__}")


def seq_block_dim(s: SeqExpr) -> int:
    dims = set()
    for a in seq_atoms(s):
        if isinstance(a, Section):
            d = block_dim(a.op)
            if d is not None:
                dims.add(d)
        else:
            dims.update((a.K.d, a.L.d))
    if len(dims) > 1:
        raise ExprError(f"mixed block dimensions {sorted(dims)}")
    return dims.pop() if dims else 1


def _structural(s: SeqExpr, atom) -> OpExpr:
    if isinstance(s, (Section, JIdeal)):
        return atom(s)
    if isinstance(s, SeqSum):
        return Sum(tuple(_structural(t, atom) for t in s.terms))
    if isinstance(s, SeqProd):
        return Prod(tuple(_structural(f, atom) for f in s.factors))
    if isinstance(s, SeqScale):
        return Scale(s.lam, _structural(s.s, atom))
    if isinstance(s, SeqAdjoint):
        return Adjoint(_structural(s.s, atom))
    raise ExprError(f"unknown sequence node {type(s).__name__}")


def map_P(s: SeqExpr) -> OpExpr:
    """Strong limit of ``P_n A_n P_n``, in normal form."""
    return normalize(_structural(s, lambda a: a.op if isinstance(a, Section) else FiniteRankOp(a.K)))


# ---------------------------------------------------------------------------
# 2x2 representation
# ---------------------------------------------------------------------------

TwoByTwo = tuple  # ((e11, e12), (e21, e22))


def _mat(e11, e12, e21, e22) -> TwoByTwo:
    return ((e11, e12), (e21, e22))


def _mat_mul(x: TwoByTwo, y: TwoByTwo) -> TwoByTwo:
    return tuple(
        tuple(Sum((Prod((x[i][0], y[0][j])), Prod((x[i][1], y[1][j])))) for j in range(2)) for i in range(2)
    )


def _map_U_raw(e: OpExpr) -> TwoByTwo:
    if isinstance(e, Ident):
        return _mat(Ident(), ZERO, ZERO, Ident())
    if isinstance(e, Proj):
        return _mat(Ident(), ZERO, ZERO, ZERO)
    if isinstance(e, CoProj):
        return _mat(ZERO, ZERO, ZERO, Ident())
    if isinstance(e, Flip):
        return _mat(ZERO, Flip(), Flip(), ZERO)
    if isinstance(e, Laurent):
        return _mat(e, ZERO, ZERO, e)
    if isinstance(e, FiniteRankOp):
        return _mat(ZERO, ZERO, ZERO, ZERO)
    if isinstance(e, Sum):
        parts = [_map_U_raw(t) for t in e.terms]
        return tuple(tuple(Sum(tuple(p[i][j] for p in parts)) for j in range(2)) for i in range(2))
    if isinstance(e, Prod):
        out = _mat(Ident(), ZERO, ZERO, Ident())
        for f in e.factors:
            out = _mat_mul(out, _map_U_raw(f))
        return out
    if isinstance(e, Scale):
        m = _map_U_raw(e.e)
        return tuple(tuple(Scale(e.lam, m[i][j]) for j in range(2)) for i in range(2))
    if isinstance(e, Adjoint):
        m = _map_U_raw(e.e)
        return tuple(tuple(adjoint(m[j][i]) for j in range(2)) for i in range(2))
    raise ExprError(f"unknown node {type(e).__name__}")


def map_U(e: OpExpr) -> TwoByTwo:
    """2x2 image with ``P -> diag(I, 0)``, ``J -> offdiag(J, J)``, finite rank -> 0."""
    m = _map_U_raw(e)
    return tuple(tuple(normalize(m[i][j]) for j in range(2)) for i in range(2))


def _W_section(a: OpExpr) -> OpExpr:
    u = _map_U_raw(a)
    P, Q, J = Proj(), CoProj(), Flip()
    left = (Prod((P, J)), Prod((Q, J)))
    right = (Prod((J, P)), Prod((J, Q)))
    return Sum(tuple(Prod((left[i], u[i][j], right[j])) for i in range(2) for j in range(2)))


def map_W(s: SeqExpr) -> OpExpr:
    """Strong limit of ``W_n A_n W_n``, in normal form."""
    return normalize(_structural(s, lambda a: _W_section(a.op) if isinstance(a, Section) else FiniteRankOp(a.L)))


# ---------------------------------------------------------------------------
# assembly and oracle
# ---------------------------------------------------------------------------

def assemble_seq(s: SeqExpr, n: int, margin: int | None = None, d: int | None = None) -> np.ndarray:
    """The ``n``-th member of the sequence as a ``2n d`` square matrix."""
    d = d or seq_block_dim(s)
    if isinstance(s, Section):
        return assemble(s.op, n, margin, d)
    if isinstance(s, JIdeal):
        W = structured_op("W_n", n, d)
        return finite_rank_section(s.K, n) + W @ finite_rank_section(s.L, n) @ W
    if isinstance(s, SeqSum):
        out = np.zeros((2 * n * d, 2 * n * d), dtype=complex)
        for t in s.terms:
            out = out + assemble_seq(t, n, margin, d)
        return out
    if isinstance(s, SeqProd):
        out = np.eye(2 * n * d, dtype=complex)
        for f in s.factors:
            out = out @ assemble_seq(f, n, margin, d)
        return out
    if isinstance(s, SeqScale):
        return s.lam * assemble_seq(s.s, n, margin, d)
    if isinstance(s, SeqAdjoint):
        return assemble_seq(s.s, n, margin, d).conj().T
    raise ExprError(f"unknown sequence node {type(s).__name__}")


def default_probes(m: int, d: int = 1, count: int = 4, seed: int = 0) -> list[np.ndarray]:
    """Unit vectors at indices -1 and 0 plus seeded random vectors on Z_m."""
    rng = np.random.default_rng(seed)
    size = 2 * m * d
    probes = []
    for i in (m * d - 1, m * d):
        v = np.zeros(size, dtype=complex)
        v[i] = 1.0
        probes.append(v)
    for _ in range(count):
        probes.append(rng.standard_normal(size) + 1j * rng.standard_normal(size))
    return probes


def _embed(v: np.ndarray, m: int, n: int, d: int) -> np.ndarray:
    out = np.zeros(2 * n * d, dtype=complex)
    out[(n - m) * d : (n + m) * d] = v
    return out


def strong_limit_oracle(
    s: SeqExpr,
    predicted: OpExpr,
    n: int,
    probes: Sequence[np.ndarray],
    which: str = "W",
    obs: int | None = None,
    margin: int | None = None,
) -> float:
    """Max over probes of ``|| (X_n s_n X_n - predicted) v ||`` on the window Z_obs.

    ``X_n`` is ``W_n`` for ``which="W"`` and ``P_n`` for ``which="P"``; every
    probe is a vector on Z_m (length ``2 m d``) with ``m <= n``.
    """
    d = seq_block_dim(s)
    if not probes:
        raise ValueError("no probes given")
    m = len(probes[0]) // (2 * d)
    if any(len(v) != 2 * m * d for v in probes):
        raise ValueError("probes must share one window")
    if m > n:
        raise ValueError(f"probe support Z_{m} exceeds window Z_{n}")
    obs = obs or 2 * m
    if obs > n:
        raise ValueError(f"observation window Z_{obs} exceeds window Z_{n}")
    A = assemble_seq(s, n, margin, d)
    if which == "W":
        W = structured_op("W_n", n, d)
        A = W @ A @ W
    elif which != "P":
        raise ValueError(f"unknown limit {which!r}")
    K = max(obs, m)
    pred = assemble(predicted, K, margin, d)
    worst = 0.0
    for v in probes:
        y = (A @ _embed(v, m, n, d))[(n - obs) * d : (n + obs) * d]
        z = (pred @ _embed(v, m, K, d))[(K - obs) * d : (K + obs) * d]
        worst = max(worst, float(np.linalg.norm(y - z)))
    return worst


# ---------------------------------------------------------------------------
# textual format
# ---------------------------------------------------------------------------

_SEQ_HEADS = ("section", "jideal")
_COMBINATORS = ("sum", "prod", "scale", "adj")


def _is_seq_tree(node) -> bool:
    if not isinstance(node, list) or not node or not isinstance(node[0], str):
        return False
    if node[0] in _SEQ_HEADS:
        return True
    if node[0] in _COMBINATORS:
        return any(_is_seq_tree(c) for c in node[1:])
    return False


def tree_to_seq(node, symbols: dict | None = None) -> SeqExpr:
    """Convert a parsed tree; a plain operator expression ``A`` becomes ``(section A)``."""
    if not _is_seq_tree(node):
        return Section(tree_to_op(node, symbols))
    head, args = node[0], node[1:]
    if head == "section":
        if len(args) != 1:
            raise ExprError("section expects one operator")
        return Section(tree_to_op(args[0], symbols))
    if head == "jideal":
        if len(args) != 2:
            raise ExprError("jideal expects two finite-rank operators")
        frs = []
        for a in args:
            if not (isinstance(a, list) and a and a[0] == "finite"):
                raise ExprError("jideal arguments must be (finite ...) blocks")
            frs.append(_read_finite(a[1:]))
        return JIdeal(frs[0], frs[1])
    if head == "sum":
        return SeqSum(tuple(tree_to_seq(a, symbols) for a in args))
    if head == "prod":
        return SeqProd(tuple(tree_to_seq(a, symbols) for a in args))
    if head == "scale":
        if len(args) != 2:
            raise ExprError("scale expects a number and an expression")
        try:
            lam = _parse_complex(args[0])
        except SymbolError as exc:
            raise ExprError(str(exc)) from exc
        return SeqScale(lam, tree_to_seq(args[1], symbols))
    if len(args) != 1:
        raise ExprError("adj expects one argument")
    return SeqAdjoint(tree_to_seq(args[0], symbols))


def parse_seq(text: str, symbols: dict | None = None) -> SeqExpr:
    return tree_to_seq(read_sexpr(text), symbols)


def seq_to_text(s: SeqExpr, symbols: dict | None = None) -> str:
    if isinstance(s, Section):
        return f"(section {to_text(s.op, symbols)})"
    if isinstance(s, JIdeal):
        return f"(jideal {finite_text(s.K)} {finite_text(s.L)})"
    if isinstance(s, SeqSum):
        return "(sum" + "".join(" " + seq_to_text(t, symbols) for t in s.terms) + ")"
    if isinstance(s, SeqProd):
        return "(prod" + "".join(" " + seq_to_text(f, symbols) for f in s.factors) + ")"
    if isinstance(s, SeqScale):
        return f"(scale [{s.lam.real!r},{s.lam.imag!r}] {seq_to_text(s.s, symbols)})"
    if isinstance(s, SeqAdjoint):
        return f"(adj {seq_to_text(s.s, symbols)})"
    raise ExprError(f"unknown sequence node {type(s).__name__}")
