"""Local symbols of sequences at points of the closed upper half circle.

At an interior point the image of a section is a 2x2 matrix of compressed
whole-line operators; at ``t = +1`` and ``t = -1`` it is a single compressed
whole-line operator that may contain the reflection ``Jhat``.  A Laurent
factor with one-sided limits ``a+``, ``a-`` becomes the jump model
``a+ (I - S_R)/2 + a- (I + S_R)/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .linemodels import (
    ZERO_L,
    AdjointL,
    ChiPos,
    CompressUnit,
    ConstL,
    FlipL,
    GridSpec,
    IdentL,
    LineOp,
    ProdL,
    ScaleL,
    SingR,
    SumL,
    discretize,
    line_adjoint,
    line_to_text,
)
from .opexpr import (
    Adjoint,
    CoProj,
    ExprError,
    FiniteRankOp,
    Flip,
    Ident,
    Laurent,
    OpExpr,
    Prod,
    Proj,
    Scale,
    Sum,
    contains_flip,
    normalize,
    symbols_in,
)
from .sections import SweepResult, singular_summary, verdict_numeric
from .symbol import ANGLE_TOL, TWO_PI
from .symbolmaps import JIdeal, Section, SeqAdjoint, SeqExpr, SeqProd, SeqScale, SeqSum, seq_atoms, seq_block_dim

FOLD_TOL = 1e-10


@dataclass(frozen=True)
class LocalPoint:
    tau: float  # angle in [0, pi]
    kind: str  # interior | plus_one | minus_one

    @classmethod
    def at(cls, theta: float) -> "LocalPoint":
        """Fold an angle onto ``[0, pi]`` and classify it."""
        t = math.fmod(theta, TWO_PI)
        if t < 0:
            t += TWO_PI
        if t > math.pi:
            t = TWO_PI - t
        if t <= FOLD_TOL or TWO_PI - t <= FOLD_TOL:
            return cls(0.0, "plus_one")
        if abs(t - math.pi) <= FOLD_TOL:
            return cls(math.pi, "minus_one")
        return cls(t, "interior")

    @property
    def sign(self) -> float:
        if self.kind == "interior":
            raise ValueError("interior points have no sign")
        return 1.0 if self.kind == "plus_one" else -1.0

    def label(self) -> str:
        if self.kind == "plus_one":
            return "t=+1"
        if self.kind == "minus_one":
            return "t=-1"
        return f"theta={self.tau:.12g}"


PLUS_ONE = LocalPoint(0.0, "plus_one")
MINUS_ONE = LocalPoint(math.pi, "minus_one")


def fiber_points(s: SeqExpr, extra: Iterable[float] = ()) -> list[LocalPoint]:
    """Folded jump angles of every symbol in ``s`` (and of its flip), plus
    ``t = +-1`` whenever the flip occurs, plus any user-supplied angles."""
    pts: list[LocalPoint] = []
    has_flip = False
    for atom in seq_atoms(s):
        if not isinstance(atom, Section):
            continue
        has_flip = has_flip or contains_flip(atom.op)
        for sym in symbols_in(atom.op):
            for j in sym.jumps:
                pts.append(LocalPoint.at(j))
                pts.append(LocalPoint.at(-j))
    if has_flip:
        pts += [PLUS_ONE, MINUS_ONE]
    pts += [LocalPoint.at(t) for t in extra]
    out: list[LocalPoint] = []
    for p in sorted(pts, key=lambda p: p.tau):
        if not out or abs(p.tau - out[-1].tau) > FOLD_TOL:
            out.append(p)
    return out


# ---------------------------------------------------------------------------
# small simplifier so that images print and compare cleanly
# ---------------------------------------------------------------------------

def _is_zero(op: LineOp) -> bool:
    return isinstance(op, SumL) and not op.terms


def simplify_line(op: LineOp) -> LineOp:
    if isinstance(op, SumL):
        terms = []
        for t in (simplify_line(t) for t in op.terms):
            if isinstance(t, SumL):
                terms.extend(t.terms)
            elif not _is_zero(t):
                terms.append(t)
        return terms[0] if len(terms) == 1 else SumL(tuple(terms))
    if isinstance(op, ProdL):
        factors = []
        for f in (simplify_line(f) for f in op.factors):
            if _is_zero(f):
                return ZERO_L
            if isinstance(f, IdentL):
                continue
            if isinstance(f, ProdL):
                factors.extend(f.factors)
            else:
                factors.append(f)
        if not factors:
            return IdentL()
        return factors[0] if len(factors) == 1 else ProdL(tuple(factors))
    if isinstance(op, ScaleL):
        inner = simplify_line(op.e)
        if _is_zero(inner) or op.lam == 0:
            return ZERO_L
        if op.lam == 1:
            return inner
        return ScaleL(op.lam, inner)
    if isinstance(op, CompressUnit):
        inner = simplify_line(op.e)
        return ZERO_L if _is_zero(inner) else CompressUnit(inner)
    if isinstance(op, AdjointL):
        return simplify_line(line_adjoint(op.e))
    return op


# ---------------------------------------------------------------------------
# generator images
# ---------------------------------------------------------------------------

def chi_minus() -> LineOp:
    """Indicator of ``(-inf, 0]`` as ``I - chi+``."""
    return SumL((IdentL(), ScaleL(-1.0, ChiPos())))


def jump_model(plus: np.ndarray, minus: np.ndarray, tol: float = 1e-12) -> LineOp:
    """``a+ (I - S_R)/2 + a- (I + S_R)/2``, collapsed to a constant if ``a+ = a-``."""
    if np.linalg.norm(plus - minus) <= tol:
        return ConstL(plus)
    return SumL(
        (
            ProdL((ConstL(plus), ScaleL(0.5, SumL((IdentL(), ScaleL(-1.0, SingR())))))),
            ProdL((ConstL(minus), ScaleL(0.5, SumL((IdentL(), SingR()))))),
        )
    )


Mat2 = tuple


def _m2(a, b, c, d) -> Mat2:
    return ((a, b), (c, d))


def _m2_mul(x: Mat2, y: Mat2) -> Mat2:
    return tuple(
        tuple(SumL((ProdL((x[i][0], y[0][j])), ProdL((x[i][1], y[1][j])))) for j in range(2)) for i in range(2)
    )


def _m2_map(x: Mat2, fn) -> Mat2:
    return tuple(tuple(fn(x[i][j]) for j in range(2)) for i in range(2))


def _interior_image(e: OpExpr, tau: float, d: int) -> Mat2:
    eye = IdentL()
    if isinstance(e, Ident):
        return _m2(eye, ZERO_L, ZERO_L, eye)
    if isinstance(e, Proj):
        return _m2(ChiPos(), ZERO_L, ZERO_L, chi_minus())
    if isinstance(e, CoProj):
        return _m2(chi_minus(), ZERO_L, ZERO_L, ChiPos())
    if isinstance(e, Flip):
        return _m2(ZERO_L, eye, eye, ZERO_L)
    if isinstance(e, Laurent):
        a_plus, a_minus = e.sym.one_sided_limits(tau)
        t_plus, t_minus = e.sym.flip().one_sided_limits(tau)
        return _m2(jump_model(a_plus, a_minus), ZERO_L, ZERO_L, jump_model(t_plus, t_minus))
    if isinstance(e, FiniteRankOp):
        return _m2(ZERO_L, ZERO_L, ZERO_L, ZERO_L)
    if isinstance(e, Sum):
        parts = [_interior_image(t, tau, d) for t in e.terms]
        return tuple(tuple(SumL(tuple(p[i][j] for p in parts)) for j in range(2)) for i in range(2))
    if isinstance(e, Prod):
        out = _m2(eye, ZERO_L, ZERO_L, eye)
        for f in e.factors:
            out = _m2_mul(out, _interior_image(f, tau, d))
        return out
    if isinstance(e, Scale):
        return _m2_map(_interior_image(e.e, tau, d), lambda x: ScaleL(e.lam, x))
    if isinstance(e, Adjoint):
        m = _interior_image(e.e, tau, d)
        return tuple(tuple(line_adjoint(m[j][i]) for j in range(2)) for i in range(2))
    raise ExprError(f"unknown node {type(e).__name__}")


def _boundary_image(e: OpExpr, p: LocalPoint, d: int) -> LineOp:
    if isinstance(e, Ident):
        return IdentL()
    if isinstance(e, Proj):
        return ChiPos()
    if isinstance(e, CoProj):
        return chi_minus()
    if isinstance(e, Flip):
        return FlipL() if p.sign > 0 else ScaleL(-1.0, FlipL())
    if isinstance(e, Laurent):
        return jump_model(*e.sym.one_sided_limits(p.tau))
    if isinstance(e, FiniteRankOp):
        return ZERO_L
    if isinstance(e, Sum):
        return SumL(tuple(_boundary_image(t, p, d) for t in e.terms))
    if isinstance(e, Prod):
        return ProdL(tuple(_boundary_image(f, p, d) for f in e.factors))
    if isinstance(e, Scale):
        return ScaleL(e.lam, _boundary_image(e.e, p, d))
    if isinstance(e, Adjoint):
        return line_adjoint(_boundary_image(e.e, p, d))
    raise ExprError(f"unknown node {type(e).__name__}")


@dataclass
class LocalSymbol:
    point: LocalPoint
    d: int
    entries: Mat2 | None = None  # interior
    e: LineOp | None = None  # boundary

    @property
    def kind(self) -> str:
        return "interior" if self.entries is not None else "boundary"

    def discretize(self, n: int, pad: int | None = None) -> np.ndarray:
        grid = GridSpec(n)
        if self.entries is not None:
            return np.block([[discretize(self.entries[i][j], grid, self.d, pad) for j in range(2)] for i in range(2)])
        return discretize(self.e, grid, self.d, pad)

    def text(self) -> str:
        if self.entries is not None:
            rows = [" ".join(line_to_text(x) for x in row) for row in self.entries]
            return "(matrix (" + ") (".join(rows) + "))"
        return line_to_text(self.e)


def _interior_compressed(A: OpExpr, p: LocalPoint, d: int) -> Mat2:
    m = _interior_image(A, p.tau, d)
    return _m2_map(m, lambda x: simplify_line(CompressUnit(simplify_line(x))))


def local_symbol_interior(A: OpExpr, p: LocalPoint, d: int | None = None, normal: bool = True) -> LocalSymbol:
    if p.kind != "interior":
        raise ValueError("local_symbol_interior needs an interior point")
    d = d or seq_block_dim(Section(A))
    A = normalize(A) if normal else A
    return LocalSymbol(p, d, entries=_interior_compressed(A, p, d))


def local_symbol_boundary(A: OpExpr, p: LocalPoint, d: int | None = None, normal: bool = True) -> LocalSymbol:
    if p.kind == "interior":
        raise ValueError("local_symbol_boundary needs t = +1 or t = -1")
    d = d or seq_block_dim(Section(A))
    A = normalize(A) if normal else A
    return LocalSymbol(p, d, e=simplify_line(CompressUnit(simplify_line(_boundary_image(A, p, d)))))


def _seq_image(s: SeqExpr, p: LocalPoint, d: int, normal: bool):
    interior = p.kind == "interior"
    if isinstance(s, Section):
        ls = (local_symbol_interior if interior else local_symbol_boundary)(s.op, p, d, normal)
        return ls.entries if interior else ls.e
    if isinstance(s, JIdeal):
        return _m2(ZERO_L, ZERO_L, ZERO_L, ZERO_L) if interior else ZERO_L
    if isinstance(s, SeqSum):
        parts = [_seq_image(t, p, d, normal) for t in s.terms]
        if interior:
            return tuple(tuple(SumL(tuple(q[i][j] for q in parts)) for j in range(2)) for i in range(2))
        return SumL(tuple(parts))
    if isinstance(s, SeqProd):
        parts = [_seq_image(f, p, d, normal) for f in s.factors]
        if interior:
            out = _m2(IdentL(), ZERO_L, ZERO_L, IdentL())
            for q in parts:
                out = _m2_mul(out, q)
            return out
        return ProdL(tuple(parts))
    if isinstance(s, SeqScale):
        inner = _seq_image(s.s, p, d, normal)
        if interior:
            return _m2_map(inner, lambda x: ScaleL(s.lam, x))
        return ScaleL(s.lam, inner)
    if isinstance(s, SeqAdjoint):
        inner = _seq_image(s.s, p, d, normal)
        if interior:
            return tuple(tuple(line_adjoint(inner[j][i]) for j in range(2)) for i in range(2))
        return line_adjoint(inner)
    raise ExprError(f"unknown sequence node {type(s).__name__}")


def local_symbol_seq(s: SeqExpr, p: LocalPoint, d: int | None = None, normal: bool = True) -> LocalSymbol:
    """Image of a sequence; atoms are compressed first, then combined."""
    d = d or seq_block_dim(s)
    img = _seq_image(s, p, d, normal)
    if p.kind == "interior":
        return LocalSymbol(p, d, entries=_m2_map(img, simplify_line))
    return LocalSymbol(p, d, e=simplify_line(img))


@dataclass
class LocalCheck:
    point: LocalPoint
    verdict: str  # invertible | singular | inconclusive
    rows: list[tuple[int, float]] = field(default_factory=list)
    text: str = ""


_VERDICT = {"stable": "invertible", "unstable": "singular", "inconclusive": "inconclusive"}


def check_local_invertibility(
    ls: LocalSymbol, grids: Sequence[int] = (32, 64, 128), floor: float = 1e-6, pad: int | None = None
) -> LocalCheck:
    """Discretize on each grid (cells per unit length) and classify the sigma_min trend."""
    grids = list(grids)
    if any(b <= a for a, b in zip(grids, grids[1:])):
        raise ValueError("grids must increase")
    rows = []
    for n in grids:
        smin, cond = singular_summary(ls.discretize(n, pad))
        rows.append((n, smin, cond))
    verdict = _VERDICT[verdict_numeric(SweepResult(rows), floor, trend_window=len(rows))]
    return LocalCheck(ls.point, verdict, [(n, s) for n, s, _ in rows], ls.text())
