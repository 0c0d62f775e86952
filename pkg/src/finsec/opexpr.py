"""Operator expressions over ``I, P, Q, J, L(a)`` and finite-rank atoms.

The rewrite engine works on *words*: every expression expands into a list of
``(coef, word)`` terms, where a word is a tuple of atoms.  Words are then
brought to a fixed shape:

* ``J`` is pushed to the right end using ``J P = Q J``, ``J L(a) = L(ã) J``
  and ``J J = I``;
* adjacent Laurent factors multiply, ``P P = P``, ``Q Q = Q``, ``P Q = 0``;
* constant Laurent factors commute with ``P``, ``Q`` and are moved left;
* finite-rank atoms swallow neighbouring projections, ``J`` and Laurent
  factors with trigonometric-polynomial symbols.  Next to a symbol with
  jumps a scalar may sit on either factor, so ``2 K L(a)`` and ``K L(2a)``
  can have different normal forms.

To make the result canonical, every gap next to a non-constant Laurent factor
(or next to ``J``) is split with ``I = P + Q``.  Like terms are then combined,
and ``w1 P w2 + w1 Q w2`` collapses to ``w1 w2`` except at the final projector,
which stays split.  Every word thus ends in ``P``, ``Q``, ``QJ`` or ``PJ``
(or is finite rank), the shape of ``L(a)P + L(b)Q + L(c)JP + L(d)JQ``.
``normalize`` prints the compact variant from ``collapsed_terms``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .symbol import PCSymbol, SymbolError, as_matrix, _parse_complex, _parse_complex_matrix

NUM_TOL = 1e-12


class ExprError(ValueError):
    pass


# ---------------------------------------------------------------------------
# finite-rank atom
# ---------------------------------------------------------------------------

class FiniteRank:
    """Finitely supported block matrix ``(i, j) -> d x d`` on ``l2(Z)``."""

    __hash__ = None  # type: ignore[assignment]

    def __init__(self, entries, d: int | None = None):
        items = entries.items() if isinstance(entries, dict) else entries
        clean: dict[tuple[int, int], np.ndarray] = {}
        for (i, j), m in items:
            m = as_matrix(m, d)
            if d is None:
                d = m.shape[0]
            key = (int(i), int(j))
            clean[key] = clean[key] + m if key in clean else m
        self.d = int(d or 1)
        self.entries: dict[tuple[int, int], np.ndarray] = {
            k: v for k, v in sorted(clean.items()) if np.any(v != 0)
        }

    def is_zero(self) -> bool:
        return not self.entries

    def support(self) -> tuple[int, int]:
        """Largest ``|index|`` touched, as ``(max_row, max_col)``."""
        if not self.entries:
            return 0, 0
        rows = max(max(i, -i - 1) for i, _ in self.entries)
        cols = max(max(j, -j - 1) for _, j in self.entries)
        return rows, cols

    def _map(self, fn) -> "FiniteRank":
        out = []
        for (i, j), m in self.entries.items():
            r = fn(i, j, m)
            if r is not None:
                out.append(r)
        return FiniteRank(out, self.d)

    def scale(self, lam) -> "FiniteRank":
        return self._map(lambda i, j, m: ((i, j), lam * m))

    def add(self, other: "FiniteRank") -> "FiniteRank":
        return FiniteRank(list(self.entries.items()) + list(other.entries.items()), self.d)

    def matmul(self, other: "FiniteRank") -> "FiniteRank":
        out = []
        for (i, k), m in self.entries.items():
            for (k2, j), n in other.entries.items():
                if k == k2:
                    out.append(((i, j), m @ n))
        return FiniteRank(out, self.d)

    def left_const(self, c: np.ndarray) -> "FiniteRank":
        return self._map(lambda i, j, m: ((i, j), c @ m))

    def right_const(self, c: np.ndarray) -> "FiniteRank":
        return self._map(lambda i, j, m: ((i, j), m @ c))

    def right_laurent(self, sym: PCSymbol) -> "FiniteRank":
        """``K L(a)`` for a trigonometric polynomial ``a`` (still finitely supported)."""
        b = sym.bandwidth
        out = []
        for (i, j), m in self.entries.items():
            for k in range(j - b, j + b + 1):
                out.append(((i, k), m @ sym.fourier_coeff(j - k)))
        return FiniteRank(out, self.d)

    def left_laurent(self, sym: PCSymbol) -> "FiniteRank":
        """``L(a) K`` for a trigonometric polynomial ``a``."""
        b = sym.bandwidth
        out = []
        for (i, j), m in self.entries.items():
            for r in range(i - b, i + b + 1):
                out.append(((r, j), sym.fourier_coeff(r - i) @ m))
        return FiniteRank(out, self.d)

    def keep_rows(self, positive: bool) -> "FiniteRank":
        return self._map(lambda i, j, m: ((i, j), m) if (i >= 0) == positive else None)

    def keep_cols(self, positive: bool) -> "FiniteRank":
        return self._map(lambda i, j, m: ((i, j), m) if (j >= 0) == positive else None)

    def flip_rows(self) -> "FiniteRank":
        return self._map(lambda i, j, m: ((-i - 1, j), m))

    def flip_cols(self) -> "FiniteRank":
        return self._map(lambda i, j, m: ((i, -j - 1), m))

    def adjoint(self) -> "FiniteRank":
        return self._map(lambda i, j, m: ((j, i), m.conj().T))

    def allclose(self, other: "FiniteRank", tol: float = NUM_TOL) -> bool:
        if not isinstance(other, FiniteRank) or other.d != self.d:
            return False
        keys = set(self.entries) | set(other.entries)
        z = np.zeros((self.d, self.d))
        return all(np.linalg.norm(self.entries.get(k, z) - other.entries.get(k, z)) <= tol for k in keys)

    def __eq__(self, other):
        if not isinstance(other, FiniteRank):
            return NotImplemented
        return self.allclose(other)

    def sort_key(self) -> str:
        return ";".join(
            f"{i},{j}:" + ",".join(f"{z.real:.12g}{z.imag:+.12g}j" for z in m.ravel()) for (i, j), m in self.entries.items()
        )

    def __repr__(self) -> str:
        return f"FiniteRank({len(self.entries)} entries, d={self.d})"


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

class OpExpr:
    """Base class; use ``+``, ``*``, ``@`` and unary ``-`` to compose."""

    def __add__(self, other):
        return Sum((self, _coerce(other)))

    def __radd__(self, other):
        return Sum((_coerce(other), self))

    def __sub__(self, other):
        return Sum((self, Scale(-1.0, _coerce(other))))

    def __neg__(self):
        return Scale(-1.0, self)

    def __mul__(self, other):
        if isinstance(other, OpExpr):
            return Prod((self, other))
        return Scale(complex(other), self)

    def __rmul__(self, other):
        return Scale(complex(other), self)

    __matmul__ = __mul__


def _coerce(x) -> OpExpr:
    if isinstance(x, OpExpr):
        return x
    return Scale(complex(x), Ident())


@dataclass(frozen=True)
class Ident(OpExpr):
    pass


@dataclass(frozen=True)
class Proj(OpExpr):
    pass


@dataclass(frozen=True)
class CoProj(OpExpr):
    pass


@dataclass(frozen=True)
class Flip(OpExpr):
    pass


@dataclass(frozen=True)
class Laurent(OpExpr):
    sym: PCSymbol


@dataclass(frozen=True, eq=False)
class FiniteRankOp(OpExpr):
    fr: FiniteRank

    def __eq__(self, other):
        return isinstance(other, FiniteRankOp) and self.fr == other.fr


@dataclass(frozen=True)
class Sum(OpExpr):
    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True)
class Prod(OpExpr):
    factors: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))


@dataclass(frozen=True)
class Scale(OpExpr):
    lam: complex
    e: OpExpr

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))


@dataclass(frozen=True)
class Adjoint(OpExpr):
    e: OpExpr


def finite_rank(entries, d: int | None = None) -> FiniteRankOp:
    return FiniteRankOp(FiniteRank(entries, d))


ZERO = Sum(())


def block_dim(e: OpExpr) -> int | None:
    """Block dimension carried by the leaves, or ``None`` if undetermined."""
    dims = set()
    for leaf in iter_leaves(e):
        if isinstance(leaf, Laurent):
            dims.add(leaf.sym.d)
        elif isinstance(leaf, FiniteRankOp):
            dims.add(leaf.fr.d)
    if len(dims) > 1:
        raise ExprError(f"mixed block dimensions {sorted(dims)}")
    return dims.pop() if dims else None


def iter_leaves(e: OpExpr):
    if isinstance(e, Sum):
        for t in e.terms:
            yield from iter_leaves(t)
    elif isinstance(e, Prod):
        for f in e.factors:
            yield from iter_leaves(f)
    elif isinstance(e, (Scale, Adjoint)):
        yield from iter_leaves(e.e)
    else:
        yield e


def symbols_in(e: OpExpr) -> list[PCSymbol]:
    return [leaf.sym for leaf in iter_leaves(e) if isinstance(leaf, Laurent)]


def contains_flip(e: OpExpr) -> bool:
    return any(isinstance(leaf, Flip) for leaf in iter_leaves(e))


# ---------------------------------------------------------------------------
# adjoint
# ---------------------------------------------------------------------------

def adjoint(e: OpExpr) -> OpExpr:
    """Push the adjoint down to the leaves (products are reversed)."""
    if isinstance(e, (Ident, Proj, CoProj, Flip)):
        return e
    if isinstance(e, Laurent):
        return Laurent(e.sym.adjoint())
    if isinstance(e, FiniteRankOp):
        return FiniteRankOp(e.fr.adjoint())
    if isinstance(e, Sum):
        return Sum(tuple(adjoint(t) for t in e.terms))
    if isinstance(e, Prod):
        return Prod(tuple(adjoint(f) for f in reversed(e.factors)))
    if isinstance(e, Scale):
        return Scale(e.lam.conjugate(), adjoint(e.e))
    if isinstance(e, Adjoint):
        return e.e
    raise ExprError(f"unknown node {type(e).__name__}")


# ---------------------------------------------------------------------------
# word rewriting
# ---------------------------------------------------------------------------
# atoms: "P", "Q", "J", ("L", PCSymbol), ("F", FiniteRank)

def _is_L(x) -> bool:
    return isinstance(x, tuple) and x[0] == "L"


def _is_F(x) -> bool:
    return isinstance(x, tuple) and x[0] == "F"


def _is_const_L(x) -> bool:
    return _is_L(x) and x[1].is_constant()


def _atom_eq(x, y) -> bool:
    if isinstance(x, str) or isinstance(y, str):
        return x == y
    return x[0] == y[0] and x[1] == y[1]


def _atom_key(x) -> str:
    if isinstance(x, str):
        return "0" + x
    if x[0] == "L":
        return "1" + x[1].sort_key()
    return "2" + x[1].sort_key()


def _expand(e: OpExpr, d: int) -> list[tuple[complex, list]]:
    if isinstance(e, Ident):
        return [(1.0 + 0j, [])]
    if isinstance(e, Proj):
        return [(1.0 + 0j, ["P"])]
    if isinstance(e, CoProj):
        return [(1.0 + 0j, ["Q"])]
    if isinstance(e, Flip):
        return [(1.0 + 0j, ["J"])]
    if isinstance(e, Laurent):
        return [(1.0 + 0j, [("L", e.sym)])]
    if isinstance(e, FiniteRankOp):
        return [(1.0 + 0j, [("F", e.fr)])]
    if isinstance(e, Sum):
        out = []
        for t in e.terms:
            out.extend(_expand(t, d))
        return out
    if isinstance(e, Prod):
        acc = [(1.0 + 0j, [])]
        for f in e.factors:
            parts = _expand(f, d)
            acc = [(c1 * c2, w1 + w2) for c1, w1 in acc for c2, w2 in parts]
        return acc
    if isinstance(e, Scale):
        return [(e.lam * c, w) for c, w in _expand(e.e, d)]
    if isinstance(e, Adjoint):
        return _expand(adjoint(e.e), d)
    raise ExprError(f"unknown node {type(e).__name__}")


def _conj_J(x):
    """``J x J`` for a single atom."""
    if x == "P":
        return "Q"
    if x == "Q":
        return "P"
    if _is_L(x):
        return ("L", x[1].flip())
    if _is_F(x):
        return ("F", x[1].flip_rows().flip_cols())
    raise ExprError(f"cannot conjugate {x!r}")


def _push_J(word: list) -> list:
    out = []
    flipped = False
    for x in word:
        if x == "J":
            flipped = not flipped
        elif flipped:
            out.append(_conj_J(x))
        else:
            out.append(x)
    if flipped:
        out.append("J")
    return out


def _simplify(coef: complex, word: list):
    """Rewrite a word to a fixed point; returns ``(coef, word)`` or ``None`` for zero."""
    w = _push_J(list(word))
    changed = True
    while changed:
        changed = False
        # scalar Laurents go to the coefficient
        for i, x in enumerate(w):
            if _is_L(x):
                lam = x[1].scalar_value()
                if lam is not None:
                    if abs(lam) == 0:
                        return None
                    coef *= lam
                    del w[i]
                    changed = True
                    break
            elif _is_F(x) and x[1].is_zero():
                return None
        if changed:
            continue
        for i in range(len(w) - 1):
            x, y = w[i], w[i + 1]
            rep = None
            if x in ("P", "Q") and y in ("P", "Q"):
                if x != y:
                    return None
                rep = [x]
            elif _is_L(x) and _is_L(y):
                rep = [("L", x[1] * y[1])]
            elif _is_F(x) and _is_F(y):
                rep = [("F", x[1].matmul(y[1]))]
            elif _is_F(x) and y in ("P", "Q"):
                rep = [("F", x[1].keep_cols(y == "P"))]
            elif x in ("P", "Q") and _is_F(y):
                rep = [("F", y[1].keep_rows(x == "P"))]
            elif _is_F(x) and y == "J":
                rep = [("F", x[1].flip_cols())]
            elif _is_F(x) and _is_const_L(y):
                rep = [("F", x[1].right_const(y[1].constant_value()))]
            elif _is_const_L(x) and _is_F(y):
                rep = [("F", y[1].left_const(x[1].constant_value()))]
            elif _is_F(x) and _is_L(y) and y[1].is_trig_polynomial():
                rep = [("F", x[1].right_laurent(y[1]))]
            elif _is_L(x) and x[1].is_trig_polynomial() and _is_F(y):
                rep = [("F", y[1].left_laurent(x[1]))]
            elif x in ("P", "Q") and _is_const_L(y):
                rep = [y, x]
            elif _is_const_L(x) and y in ("P", "Q") and i + 2 < len(w) and _is_L(w[i + 2]):
                # L(B) P L(a) = P L(B a): keep block constants out of the way
                w[i : i + 3] = [y, ("L", x[1] * w[i + 2][1])]
                changed = True
                break
            if rep is not None:
                w[i : i + 2] = rep
                changed = True
                break
    if coef == 0:
        return None
    return coef, w


def _split(coef: complex, w: list) -> list[tuple[complex, list]]:
    """Insert ``P + Q`` into every gap adjacent to a non-constant Laurent or ``J``."""
    def solid(x):
        return x is not None and not (x in ("P", "Q") or _is_F(x))

    def strong(x):
        return x == "J" or (_is_L(x) and not x[1].is_constant())

    only_const = all(_is_const_L(x) for x in w)
    gaps = []
    for i in range(len(w) + 1):
        left = w[i - 1] if i > 0 else None
        right = w[i] if i < len(w) else None
        if left == "J":
            continue
        if left is not None and not solid(left):
            continue
        if right is not None and not solid(right):
            continue
        if strong(left) or strong(right) or (only_const and i == len(w)):
            gaps.append(i)
    words = [(coef, list(w))]
    for g in reversed(gaps):
        nxt = []
        for c, ww in words:
            nxt.append((c, ww[:g] + ["P"] + ww[g:]))
            nxt.append((c, ww[:g] + ["Q"] + ww[g:]))
        words = nxt
    out = []
    for c, ww in words:
        r = _simplify(c, ww)
        if r is not None:
            out.append(r)
    return out


def _pivot(sym: PCSymbol) -> complex:
    """First coefficient of ``sym`` that is not negligible (deterministic order)."""
    flat = np.concatenate([np.ravel(c) for p in sym.pieces for c in p.coefs] or [np.zeros(1)])
    big = np.abs(flat).max()
    if big == 0:
        return 1.0
    return complex(flat[np.argmax(np.abs(flat) > 1e-9 * big)])


def _canon_scale(w: tuple) -> tuple:
    """Move scalar factors of the later Laurent atoms onto the carrier (the first
    finite-rank atom, else the first Laurent), so ``L(2a) P L(b)`` and
    ``L(a) P L(2b)`` become the same word."""
    kinds = [_is_F(x) for x in w]
    if any(kinds):
        carrier = kinds.index(True)
    else:
        ls = [i for i, x in enumerate(w) if _is_L(x)]
        if len(ls) < 2:
            return w
        carrier = ls[0]
    lam = 1.0 + 0j
    out = list(w)
    for i, x in enumerate(w):
        if i != carrier and _is_L(x) and not x[1].is_constant():
            p = _pivot(x[1])
            out[i] = ("L", x[1].scale(1.0 / p))
            lam *= p
    if lam != 1:
        out[carrier] = (w[carrier][0], w[carrier][1].scale(lam))
    return tuple(out)


def _fold(coef: complex, w: list, d: int) -> tuple[complex, tuple]:
    """Absorb the coefficient into the first finite-rank atom, else the first Laurent.

    Words without either get a constant Laurent prepended, so ``I`` and ``L(a)``
    (or ``P`` and ``L(a)P``) can merge into one term.
    """
    for pick in (_is_F, _is_L):
        for i, x in enumerate(w):
            if pick(x):
                x = (x[0], x[1].scale(coef))
                return 1.0 + 0j, _canon_scale(tuple(w[:i]) + (x,) + tuple(w[i + 1 :]))
    return 1.0 + 0j, (("L", PCSymbol.constant(coef, d)),) + tuple(w)


def _word_key(term) -> tuple:
    coef, w = term
    return (len(w), [_atom_key(x) for x in w], round(coef.real, 12), round(coef.imag, 12))


def _atom_zero(x) -> bool:
    if _is_L(x):
        return x[1].is_zero(NUM_TOL)
    if _is_F(x):
        return all(np.linalg.norm(m) <= NUM_TOL for m in x[1].entries.values())
    return False


def _tail_index(w) -> int | None:
    """Position of the final projector (the last ``P``/``Q``, before an optional ``J``)."""
    i = len(w) - 1
    if i >= 0 and w[i] == "J":
        i -= 1
    return i if i >= 0 and w[i] in ("P", "Q") else None


def _try_merge(t1, t2, d: int, pq):
    """Merge two terms into at most one.  ``pq=False`` only combines words with
    the same skeleton; ``pq=True`` collapses ``...P... + ...Q...`` at an inner
    position and ``pq="tail"`` at the final projector."""
    c1, w1 = t1
    c2, w2 = t2
    if len(w1) != len(w2):
        return None
    diff = [i for i in range(len(w1)) if not _atom_eq(w1[i], w2[i])]
    if not diff:
        if pq:
            return None
        if not any(_is_L(x) or _is_F(x) for x in w1):
            return [(c1 + c2, w1)]
        return [_fold(2.0 + 0j, list(w1), d)] if abs(c1 - c2) <= NUM_TOL else None
    if len(diff) != 1:
        return None
    i = diff[0]
    x, y = w1[i], w2[i]
    if abs(c1 - c2) > NUM_TOL * max(1.0, abs(c1)):
        return None
    if isinstance(x, str) and isinstance(y, str) and {x, y} == {"P", "Q"}:
        tail = i == _tail_index(w1)
        if pq is False or (pq is True and tail) or (pq == "tail" and not tail):
            return None
        r = _simplify(c1, list(w1[:i] + w1[i + 1 :]))
        return [] if r is None else [_fold(*r, d)]
    if pq:
        return None
    if _is_L(x) and _is_L(y):
        s = x[1] + y[1]
        new = w1[:i] + (("L", s),) + w1[i + 1 :]
        return [] if s.is_zero(NUM_TOL) else [(c1, _canon_scale(new))]
    if _is_F(x) and _is_F(y):
        f = x[1].add(y[1])
        new = w1[:i] + (("F", f),) + w1[i + 1 :]
        return [] if f.is_zero() else [(c1, new)]
    return None


def _live(terms: list) -> list:
    return [t for t in terms if abs(t[0]) > NUM_TOL and not any(_atom_zero(x) for x in t[1])]


def _merge_once(terms: list, d: int, pq):
    for i in range(len(terms)):
        for j in range(i + 1, len(terms)):
            r = _try_merge(terms[i], terms[j], d, pq)
            if r is not None:
                rest = [t for k, t in enumerate(terms) if k not in (i, j)]
                return sorted(rest + _live(r), key=_word_key)
    return None


def _merge_all(terms: list, d: int) -> list:
    # like terms are always combined before any inner P + Q pair collapses and
    # the final projector is never collapsed, so the result does not depend on
    # the order in which the terms arrive
    terms = sorted(_live(terms), key=_word_key)
    while True:
        while (nxt := _merge_once(terms, d, False)) is not None:
            terms = nxt
        nxt = _merge_once(terms, d, True)
        if nxt is None:
            return terms
        terms = nxt


def normal_terms(e: OpExpr, d: int | None = None) -> list[tuple[complex, tuple]]:
    """The normal form as a sorted list of ``(coef, word)`` pairs."""
    if d is None:
        d = block_dim(e) or 1
    split = []
    for c, w in _expand(e, d):
        r = _simplify(c, w)
        if r is None:
            continue
        for c2, w2 in _split(*r):
            split.append(_fold(c2, w2, d))
    return _merge_all(split, d)


def collapsed_terms(e: OpExpr, d: int | None = None) -> list[tuple[complex, tuple]]:
    """Normal terms with ``w P + w Q`` pairs at the final projector folded back to ``w``.

    Shorter to print, but not unique; compare with ``normal_terms``.
    """
    if d is None:
        d = block_dim(e) or 1
    terms = normal_terms(e, d)
    while (nxt := _merge_once(terms, d, "tail")) is not None:
        terms = nxt
        while (nxt := _merge_once(terms, d, False)) is not None:
            terms = nxt
    return terms


def _atom_expr(x) -> OpExpr:
    if x == "P":
        return Proj()
    if x == "Q":
        return CoProj()
    if x == "J":
        return Flip()
    if _is_L(x):
        return Laurent(x[1])
    return FiniteRankOp(x[1])


def from_terms(terms: Sequence[tuple[complex, tuple]]) -> OpExpr:
    parts = []
    for coef, w in terms:
        if w and _is_L(w[0]):
            lam = w[0][1].scalar_value()
            if lam is not None:
                coef, w = coef * lam, w[1:]
        factors = [_atom_expr(x) for x in w]
        if not factors:
            body: OpExpr = Ident()
        elif len(factors) == 1:
            body = factors[0]
        else:
            body = Prod(tuple(factors))
        if abs(coef - 1.0) > 0:
            body = Scale(coef, body)
        parts.append(body)
    if len(parts) == 1:
        return parts[0]
    return Sum(tuple(parts))


def normalize(e: OpExpr) -> OpExpr:
    """Deterministic normal form (see module docstring), printed compactly."""
    return from_terms(collapsed_terms(e))


def _sandwich_part(sym: PCSymbol, left: str, right: str) -> PCSymbol:
    """Part of ``sym`` that ``left L(sym) right`` can see, for ``left != right``.

    ``P L(c) Q`` only uses the modes ``k >= 1`` and ``Q L(c) P`` the modes
    ``k <= -1``.  For a trigonometric polynomial the other modes are dropped;
    a symbol with jumps can only lose its mean.
    """
    if sym.is_trig_polynomial():
        sign = 1 if left == "P" else -1
        modes = {k: c for k, c in sym.pieces[0].modes.items() if sign * k >= 1}
        return PCSymbol.trig(modes, sym.d)
    return sym - PCSymbol.constant(sym.fourier_coeff(0), sym.d)


def _full_split(coef: complex, w: list) -> list[tuple[complex, list]]:
    """Put a projector on both sides of every non-constant Laurent factor."""
    for i, x in enumerate(w):
        if not (_is_L(x) and not x[1].is_constant()):
            continue
        for j in (i, i + 1):
            if j == i:
                nb = w[i - 1] if i > 0 else None
            else:
                nb = w[j] if j < len(w) else None
            if nb not in ("P", "Q"):
                out = []
                for proj in ("P", "Q"):
                    r = _simplify(coef, w[:j] + [proj] + w[j:])
                    if r is not None:
                        out.extend(_full_split(*r))
                return out
    return [(coef, w)]


def comparison_terms(e: OpExpr, d: int | None = None) -> list[tuple[complex, tuple]]:
    """A finer normal form used to decide equality.

    Every non-constant Laurent factor sits between projectors, and sandwiches
    ``P L(c) Q`` and ``Q L(c) P`` keep only the modes they can see.  Like terms
    are combined but projectors are never collapsed, so each projector pattern
    is compared separately.
    """
    if d is None:
        d = block_dim(e) or 1
    out = []
    for coef, w in normal_terms(e, d):
        for c2, w2 in _full_split(coef, list(w)):
            w2 = list(w2)
            dead = False
            for i in range(1, len(w2) - 1):
                x = w2[i]
                if _is_L(x) and w2[i - 1] in ("P", "Q") and w2[i + 1] in ("P", "Q") and w2[i - 1] != w2[i + 1]:
                    part = _sandwich_part(x[1], w2[i - 1], w2[i + 1])
                    if part.is_zero(NUM_TOL):
                        dead = True
                        break
                    w2[i] = ("L", part)
            if not dead:
                out.append(_fold(c2, w2, d))
    terms = sorted(_live(out), key=_word_key)
    while (nxt := _merge_once(terms, d, False)) is not None:
        terms = nxt
    return terms


def _mean_split(coef: complex, w: list) -> list[tuple[complex, list]]:
    """Split ``X L(c) X`` into ``c0 X + X L(c - c0) X`` so inner symbols have zero mean."""
    for i in range(1, len(w) - 1):
        x = w[i]
        if not (_is_L(x) and w[i - 1] in ("P", "Q") and w[i - 1] == w[i + 1]) or x[1].is_constant():
            continue
        sym = x[1]
        mean = sym.fourier_coeff(0)
        if np.abs(mean).max() <= NUM_TOL:
            continue
        out = []
        for part in (PCSymbol.constant(mean, sym.d), sym - PCSymbol.constant(mean, sym.d)):
            if part.is_zero(NUM_TOL):
                continue
            r = _simplify(coef, w[:i] + [("L", part)] + w[i + 1 :])
            if r is not None:
                out.extend(_mean_split(*r))
        return out
    return [(coef, w)]


_N_DRAWS = 3


def _fr_probe(fr: FiniteRank, draw: int) -> np.ndarray:
    out = np.zeros((fr.d, fr.d), dtype=complex)
    for (i, j), m in fr.entries.items():
        r = np.random.default_rng((draw, i + 10**6, j + 10**6)).standard_normal(2)
        out += complex(r[0], r[1]) * m
    return out


def _skeleton(w) -> tuple:
    return tuple("F" if _is_F(x) else x for x in w if not _is_L(x))


def _probe_value(coef: complex, w, d: int, thetas, draw: int) -> np.ndarray:
    # Laurent factors between the same pair of tokens share one angle
    m = coef * np.eye(d, dtype=complex)
    slot = 0
    for x in w:
        if _is_L(x):
            m = m @ x[1].sample([thetas[slot]])[0]
        else:
            if _is_F(x):
                m = m @ _fr_probe(x[1], draw)
            slot += 1
    return m


def _band_and_support(e: OpExpr) -> tuple[int, int] | None:
    """Total Laurent bandwidth and finite-rank reach, or ``None`` if a symbol jumps."""
    band = supp = 0
    for leaf in iter_leaves(e):
        if isinstance(leaf, Laurent):
            if not leaf.sym.is_trig_polynomial():
                return None
            band += leaf.sym.bandwidth
        elif isinstance(leaf, FiniteRankOp):
            supp = max(supp, *leaf.fr.support())
    return band, supp


def _equal_banded(e1: OpExpr, e2: OpExpr, d: int, band: int, supp: int, tol: float) -> bool:
    # With trigonometric symbols, e1 - e2 = L(a)P + L(b)Q + L(c)JP + L(d)JQ + K
    # with every symbol of bandwidth <= band and K supported in |i|, |j| < band + supp + 1.
    # A window of that reach plus one band sees every coefficient of a, b, c, d and all of K;
    # composing with a margin of one band makes the window entries exact.
    from .sections import assemble_windowed

    n = 2 * band + supp + 4
    margin = band + supp + 2
    m1 = assemble_windowed(e1, n, margin, d)
    m2 = assemble_windowed(e2, n, margin, d)
    scale = 1.0 + max(np.abs(m1).max(initial=0.0), np.abs(m2).max(initial=0.0))
    return bool(np.abs(m1 - m2).max(initial=0.0) <= tol * scale)


def _equal_multilinear(e1: OpExpr, e2: OpExpr, d: int, tol: float) -> bool:
    groups: dict[tuple, list] = {}
    for sign, e in ((1, e1), (-1, e2)):
        for c, w in comparison_terms(e, d):
            for c2, w2 in _mean_split(c, list(w)):
                groups.setdefault(_skeleton(w2), []).append((sign * c2, w2))
    rng = np.random.default_rng(20240917)
    for draw in range(_N_DRAWS):
        for skel, terms in groups.items():
            thetas = rng.uniform(0, 2 * np.pi, len(skel) + 1)
            vals = [_probe_value(c, w, d, thetas, draw) for c, w in terms]
            total = sum(vals)
            scale = 1.0 + sum(np.abs(v).max() for v in vals)
            if np.abs(total).max() > tol * scale:
                return False
    return True


def equivalent(e1: OpExpr, e2: OpExpr, tol: float = 1e-9) -> bool:
    """Decide ``e1 == e2`` as operators on ``l2(Z)``.

    With trigonometric symbols only, both sides are banded up to a finite-rank
    part of known reach, so equality is read off exactly from one window.

    Otherwise the two sides are brought to ``comparison_terms`` and the means
    of inner ``X L(c) X`` factors are split off.  Terms with the same pattern
    of tokens (``P``, ``Q``, ``J``, finite rank) form a multilinear expression
    in the symbols between the tokens; each pattern is compared by evaluating
    it with every slot at its own pseudo-random angle and every finite-rank
    atom paired with random weights.  This misses identities that move mass
    between patterns, such as ``P L(ab) P = P L(a) P L(b) P + P L(a) Q L(b) P``,
    so it can report ``False`` for equal operators but not the reverse.
    """
    d = block_dim(e1) or block_dim(e2) or 1
    bs1, bs2 = _band_and_support(e1), _band_and_support(e2)
    if bs1 is not None and bs2 is not None:
        return _equal_banded(e1, e2, d, max(bs1[0], bs2[0]), max(bs1[1], bs2[1]), tol)
    return _equal_multilinear(e1, e2, d, tol)


# ---------------------------------------------------------------------------
# canonical form
# ---------------------------------------------------------------------------

@dataclass
class CanonicalForm:
    a: PCSymbol
    b: PCSymbol
    c: PCSymbol
    d: PCSymbol
    k: FiniteRank

    def to_expr(self) -> OpExpr:
        """``L(a)P + L(b)Q + L(c)JP + L(d)JQ + K``."""
        return Sum(
            (
                Prod((Laurent(self.a), Proj())),
                Prod((Laurent(self.b), CoProj())),
                Prod((Laurent(self.c), Flip(), Proj())),
                Prod((Laurent(self.d), Flip(), CoProj())),
                FiniteRankOp(self.k),
            )
        )


_SLOTS = {
    (): ("a", "b"),
    ("P",): ("a",),
    ("Q",): ("b",),
    ("J",): ("c", "d"),
    ("Q", "J"): ("c",),
    ("P", "J"): ("d",),
}


def canonical_form(e: OpExpr, d: int | None = None) -> CanonicalForm | None:
    """Split ``e`` as ``L(a)P + L(b)Q + L(c)JP + L(d)JQ + K`` if it has that shape."""
    d = d or block_dim(e) or 1
    acc = {s: PCSymbol.zero(d) for s in "abcd"}
    k = FiniteRank({}, d)
    for coef, w in normal_terms(e, d):
        if len(w) == 1 and _is_F(w[0]):
            k = k.add(w[0][1].scale(coef))
            continue
        if w and _is_L(w[0]):
            sym = w[0][1].scale(coef)
            tail = w[1:]
        else:
            sym = PCSymbol.constant(coef, d)
            tail = w
        if not all(isinstance(x, str) for x in tail):
            return None
        slots = _SLOTS.get(tuple(tail))
        if slots is None:
            return None
        for s in slots:
            acc[s] = acc[s] + sym
    return CanonicalForm(acc["a"], acc["b"], acc["c"], acc["d"], k)


# ---------------------------------------------------------------------------
# textual format
# ---------------------------------------------------------------------------

def read_sexpr(text: str):
    """Parse prefix notation into nested lists.

    Strings (``"name"``) become ``("str", name)``, JSON arrays/objects are decoded
    in place, every other token is returned as a bare string.
    """
    dec = json.JSONDecoder()
    pos = 0
    n = len(text)

    def skip():
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def item():
        nonlocal pos
        skip()
        if pos >= n:
            raise ExprError("unexpected end of expression")
        ch = text[pos]
        if ch == "(":
            pos += 1
            out = []
            while True:
                skip()
                if pos >= n:
                    raise ExprError("unbalanced parenthesis")
                if text[pos] == ")":
                    pos += 1
                    return out
                out.append(item())
        if ch == ")":
            raise ExprError(f"unexpected ')' at {pos}")
        if ch == '"':
            val, end = dec.raw_decode(text, pos)
            pos = end
            return ("str", val)
        if ch in "[{":
            try:
                val, end = dec.raw_decode(text, pos)
            except json.JSONDecodeError as exc:
                raise ExprError(f"bad inline literal at {pos}: {exc}") from exc
            pos = end
            return val
        start = pos
        while pos < n and not text[pos].isspace() and text[pos] not in '()"[{':
            pos += 1
        tok = text[start:pos]
        try:
            return float(tok) if any(c in tok for c in ".eE") else int(tok)
        except ValueError:
            return tok

    tree = item()
    skip()
    if pos != n:
        raise ExprError(f"trailing input at {pos}")
    return tree


def _resolve_symbol(node, symbols: dict | None) -> PCSymbol:
    if isinstance(node, tuple) and node[0] == "str":
        if not symbols or node[1] not in symbols:
            raise ExprError(f"unknown symbol {node[1]!r}")
        return symbols[node[1]]
    if isinstance(node, list):
        try:
            return PCSymbol.from_literal(node)
        except SymbolError as exc:
            raise ExprError(str(exc)) from exc
    raise ExprError(f"cannot read a symbol from {node!r}")


def _read_finite(args) -> FiniteRank:
    if len(args) % 3:
        raise ExprError("finite expects triples i j matrix")
    entries = []
    for i in range(0, len(args), 3):
        r, c, m = args[i : i + 3]
        if not isinstance(r, int) or not isinstance(c, int):
            raise ExprError("finite indices must be integers")
        try:
            entries.append(((r, c), _parse_complex_matrix(m)))
        except SymbolError as exc:
            raise ExprError(str(exc)) from exc
    dims = {m.shape[0] for _, m in entries}
    if len(dims) > 1:
        raise ExprError("finite entries of mixed size")
    return FiniteRank(entries, dims.pop() if dims else 1)


def tree_to_op(node, symbols: dict | None = None) -> OpExpr:
    if isinstance(node, str):
        atoms = {"I": Ident, "P": Proj, "Q": CoProj, "J": Flip}
        if node in atoms:
            return atoms[node]()
        raise ExprError(f"unknown atom {node!r}")
    if not isinstance(node, list) or not node or not isinstance(node[0], str):
        raise ExprError(f"malformed expression {node!r}")
    head, args = node[0], node[1:]
    if head == "sum":
        return Sum(tuple(tree_to_op(a, symbols) for a in args))
    if head == "prod":
        return Prod(tuple(tree_to_op(a, symbols) for a in args))
    if head == "scale":
        if len(args) != 2:
            raise ExprError("scale expects a number and an expression")
        try:
            lam = _parse_complex(args[0])
        except SymbolError as exc:
            raise ExprError(str(exc)) from exc
        return Scale(lam, tree_to_op(args[1], symbols))
    if head == "adj":
        if len(args) != 1:
            raise ExprError("adj expects one argument")
        return Adjoint(tree_to_op(args[0], symbols))
    if head == "laurent":
        if len(args) != 1:
            raise ExprError("laurent expects one symbol")
        return Laurent(_resolve_symbol(args[0], symbols))
    if head == "finite":
        return FiniteRankOp(_read_finite(args))
    raise ExprError(f"unknown operator {head!r}")


def parse_op(text: str, symbols: dict | None = None) -> OpExpr:
    return tree_to_op(read_sexpr(text), symbols)


def _fmt_num(z: complex) -> str:
    return f"[{z.real!r},{z.imag!r}]"


def _symbol_text(sym: PCSymbol, symbols: dict | None) -> str:
    for name, s in (symbols or {}).items():
        if isinstance(s, PCSymbol) and s.d == sym.d and s == sym:
            return json.dumps(name)
    return json.dumps(sym.to_literal(), separators=(",", ":"))


def finite_text(fr: FiniteRank) -> str:
    parts = ["finite"]
    for (i, j), m in fr.entries.items():
        mat = [[[float(z.real), float(z.imag)] for z in row] for row in m]
        parts.append(f"{i} {j} {json.dumps(mat, separators=(',', ':'))}")
    return "(" + " ".join(parts) + ")"


def to_text(e: OpExpr, symbols: dict | None = None) -> str:
    """Render in prefix notation; symbols found in ``symbols`` are printed by name."""
    if isinstance(e, Ident):
        return "I"
    if isinstance(e, Proj):
        return "P"
    if isinstance(e, CoProj):
        return "Q"
    if isinstance(e, Flip):
        return "J"
    if isinstance(e, Laurent):
        return f"(laurent {_symbol_text(e.sym, symbols)})"
    if isinstance(e, FiniteRankOp):
        return finite_text(e.fr)
    if isinstance(e, Sum):
        return "(sum" + "".join(" " + to_text(t, symbols) for t in e.terms) + ")"
    if isinstance(e, Prod):
        return "(prod" + "".join(" " + to_text(f, symbols) for f in e.factors) + ")"
    if isinstance(e, Scale):
        return f"(scale {_fmt_num(e.lam)} {to_text(e.e, symbols)})"
    if isinstance(e, Adjoint):
        return f"(adj {to_text(e.e, symbols)})"
    raise ExprError(f"unknown node {type(e).__name__}")
