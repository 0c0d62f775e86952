"""Operators on the line and half-line and their cell discretizations.

A grid with ``n`` cells per unit length maps a function to its cell averages
scaled by ``sqrt(n)``; the discrete version of an operator ``A`` has entries
``n * int_{cell j} (A chi_{cell k})(x) dx``.  For the Cauchy-type kernels these
double integrals have closed forms in terms of ``g(u) = u log|u|`` and, after
scaling, do not depend on ``n``.

Kernel conventions used throughout::

    (S_R f)(x) = (1/(pi i)) PV int_R  f(y) / (y - x) dy
    (S f)(x)   = (1/(pi i)) PV int_0^inf f(y) / (y - x) dy
    (N f)(x)   = (1/(pi i))    int_0^inf f(y) / (y + x) dy
    (M f)(z)   = int_0^inf x^{-iz-1/2} f(x) dx
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expi

from .symbol import as_matrix


class LineError(ValueError):
    pass


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

class LineOp:
    def __add__(self, other):
        return SumL((self, other))

    def __sub__(self, other):
        return SumL((self, ScaleL(-1.0, other)))

    def __neg__(self):
        return ScaleL(-1.0, self)

    def __mul__(self, other):
        if isinstance(other, LineOp):
            return ProdL((self, other))
        return ScaleL(complex(other), self)

    def __rmul__(self, other):
        return ScaleL(complex(other), self)


@dataclass(frozen=True)
class IdentL(LineOp):
    pass


@dataclass(frozen=True)
class ChiPos(LineOp):
    """Multiplication by the indicator of ``[0, inf)``."""


@dataclass(frozen=True)
class SingR(LineOp):
    """Cauchy singular integral on the whole line."""


@dataclass(frozen=True)
class FlipL(LineOp):
    """``f(x) -> f(-x)``."""


@dataclass(frozen=True, eq=False)
class ConstL(LineOp):
    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", as_matrix(self.a))

    def __eq__(self, other):
        return isinstance(other, ConstL) and other.a.shape == self.a.shape and np.allclose(other.a, self.a, rtol=0, atol=1e-12)


@dataclass(frozen=True)
class CompressUnit(LineOp):
    """``chi e chi`` with ``chi`` the indicator of ``[-1, 1]`` (``[0, 1]`` on the half-line)."""

    e: LineOp


@dataclass(frozen=True)
class SingHalf(LineOp):
    pass


@dataclass(frozen=True)
class HankelHalf(LineOp):
    pass


@dataclass(frozen=True, eq=False)
class MellinConv(LineOp):
    """``M^{-1} b M`` on the half-line; ``b_minus``/``b_plus`` are the limits at -inf/+inf."""

    b: Callable[[np.ndarray], np.ndarray]
    b_minus: complex | None = None
    b_plus: complex | None = None

    def __eq__(self, other):
        return isinstance(other, MellinConv) and other.b is self.b


@dataclass(frozen=True)
class SumL(LineOp):
    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True)
class ProdL(LineOp):
    factors: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))


@dataclass(frozen=True)
class ScaleL(LineOp):
    lam: complex
    e: LineOp

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))


@dataclass(frozen=True)
class AdjointL(LineOp):
    e: LineOp


ZERO_L = SumL(())
_HALF_ATOMS = (SingHalf, HankelHalf, MellinConv)
_WHOLE_ATOMS = (ChiPos, SingR, FlipL)


def line_leaves(op: LineOp):
    if isinstance(op, SumL):
        for t in op.terms:
            yield from line_leaves(t)
    elif isinstance(op, ProdL):
        for f in op.factors:
            yield from line_leaves(f)
    elif isinstance(op, (ScaleL, AdjointL, CompressUnit)):
        yield from line_leaves(op.e)
    else:
        yield op


def line_block_dim(op: LineOp) -> int | None:
    dims = {leaf.a.shape[0] for leaf in line_leaves(op) if isinstance(leaf, ConstL)}
    if len(dims) > 1:
        raise LineError(f"mixed block dimensions {sorted(dims)}")
    return dims.pop() if dims else None


def is_half_line(op: LineOp) -> bool | None:
    """True/False for half-/whole-line expressions, None if undetermined."""
    leaves = list(line_leaves(op))
    half = any(isinstance(x, _HALF_ATOMS) for x in leaves)
    whole = any(isinstance(x, _WHOLE_ATOMS) for x in leaves)
    if half and whole:
        raise LineError("expression mixes half-line and whole-line generators")
    if half:
        return True
    if whole:
        return False
    return None


def line_adjoint(op: LineOp) -> LineOp:
    if isinstance(op, (IdentL, ChiPos, SingR, FlipL, SingHalf)):
        return op
    if isinstance(op, HankelHalf):
        return ScaleL(-1.0, op)
    if isinstance(op, ConstL):
        return ConstL(op.a.conj().T)
    if isinstance(op, MellinConv):
        b = op.b
        bm = None if op.b_minus is None else complex(op.b_minus).conjugate()
        bp = None if op.b_plus is None else complex(op.b_plus).conjugate()
        return MellinConv(lambda z: np.conj(b(z)), bm, bp)
    if isinstance(op, CompressUnit):
        return CompressUnit(line_adjoint(op.e))
    if isinstance(op, SumL):
        return SumL(tuple(line_adjoint(t) for t in op.terms))
    if isinstance(op, ProdL):
        return ProdL(tuple(line_adjoint(f) for f in reversed(op.factors)))
    if isinstance(op, ScaleL):
        return ScaleL(op.lam.conjugate(), line_adjoint(op.e))
    if isinstance(op, AdjointL):
        return op.e
    raise LineError(f"unknown node {type(op).__name__}")


def line_to_text(op: LineOp) -> str:
    if isinstance(op, IdentL):
        return "I"
    if isinstance(op, ChiPos):
        return "chi+"
    if isinstance(op, SingR):
        return "S_R"
    if isinstance(op, FlipL):
        return "Jhat"
    if isinstance(op, SingHalf):
        return "S"
    if isinstance(op, HankelHalf):
        return "N"
    if isinstance(op, MellinConv):
        return "(mellin)"
    if isinstance(op, ConstL):
        if op.a.shape == (1, 1):
            z = op.a[0, 0]
            return f"(const [{float(z.real)!r},{float(z.imag)!r}])"
        rows = ",".join("[" + ",".join(f"[{float(z.real)!r},{float(z.imag)!r}]" for z in r) + "]" for r in op.a)
        return f"(const [{rows}])"
    if isinstance(op, CompressUnit):
        return f"(compress {line_to_text(op.e)})"
    if isinstance(op, SumL):
        return "(sum" + "".join(" " + line_to_text(t) for t in op.terms) + ")"
    if isinstance(op, ProdL):
        return "(prod" + "".join(" " + line_to_text(f) for f in op.factors) + ")"
    if isinstance(op, ScaleL):
        return f"(scale [{float(op.lam.real)!r},{float(op.lam.imag)!r}] {line_to_text(op.e)})"
    if isinstance(op, AdjointL):
        return f"(adj {line_to_text(op.e)})"
    raise LineError(f"unknown node {type(op).__name__}")


# ---------------------------------------------------------------------------
# Cauchy cell integrals
# ---------------------------------------------------------------------------

def _g(u):
    u = np.asarray(u, dtype=float)
    au = np.abs(u)
    return np.where(au > 0, u * np.log(np.where(au > 0, au, 1.0)), 0.0)


def cauchy_cell_integral(a: float, b: float, c: float, d: float) -> float:
    """PV of ``int_a^b int_c^d dy dx / (y - x)``."""
    return float(_g(d - a) - _g(d - b) - _g(c - a) + _g(c - b))


def hankel_cell_integral(a: float, b: float, c: float, d: float) -> float:
    """``int_a^b int_c^d dy dx / (x + y)`` for nonnegative intervals."""
    return float(_g(b + d) - _g(a + d) - _g(b + c) + _g(a + c))


def unit_cauchy(m) -> np.ndarray:
    """Double integral of ``1/(y-x)`` over ``x in [0,1]``, ``y in [m, m+1]``.

    Equals ``g(m+1) - 2 g(m) + g(m-1)``; evaluated without cancellation for
    ``|m| >= 2`` and odd in ``m``.
    """
    m = np.asarray(m, dtype=np.int64)
    am = np.abs(m).astype(float)
    out = np.zeros(m.shape, dtype=float)
    one = am == 1
    out[one] = 2.0 * math.log(2.0)
    big = am >= 2
    mb = am[big]
    out[big] = mb * np.log1p(-1.0 / mb**2) + np.log1p(2.0 / (mb - 1.0))
    return np.sign(m) * out


def unit_hankel(s) -> np.ndarray:
    """Double integral of ``1/(x+y)`` over unit cells ``[j, j+1] x [k, k+1]`` with ``s = j + k``."""
    return unit_cauchy(np.asarray(s, dtype=np.int64) + 1)


# ---------------------------------------------------------------------------
# grids and discretization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """``support="unit"``: cells ``[i/n, (i+1)/n]`` for ``i`` in Z_n (covering [-1, 1]).
    ``support="half"``: cells ``0..m-1`` on ``[0, m/n]`` (default ``m = 8n``)."""

    n: int
    support: str = "unit"
    m: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise LineError("need at least one cell per unit")
        if self.support not in ("unit", "half"):
            raise LineError(f"unknown support {self.support!r}")
        if self.support == "half" and self.m is None:
            object.__setattr__(self, "m", 8 * self.n)

    @property
    def cells(self) -> np.ndarray:
        if self.support == "unit":
            return np.arange(-self.n, self.n)
        return np.arange(self.m)


def _kron(mat: np.ndarray, d: int) -> np.ndarray:
    return np.kron(mat, np.eye(d)) if d > 1 else mat.astype(complex)


def sing_r_matrix(idx: np.ndarray) -> np.ndarray:
    diff = idx[None, :] - idx[:, None]
    return unit_cauchy(diff) / (1j * math.pi)


def hankel_matrix(idx: np.ndarray) -> np.ndarray:
    return unit_hankel(idx[:, None] + idx[None, :]) / (1j * math.pi)


def _s_count(op: LineOp) -> tuple[int, bool]:
    """(max number of S_R factors in a word, whether padding is needed below)."""
    if isinstance(op, SingR):
        return 1, False
    if isinstance(op, SumL):
        res = [_s_count(t) for t in op.terms] or [(0, False)]
        return max(r[0] for r in res), any(r[1] for r in res)
    if isinstance(op, ProdL):
        res = [_s_count(f) for f in op.factors]
        return sum(r[0] for r in res), any(r[1] for r in res)
    if isinstance(op, (ScaleL, AdjointL)):
        return _s_count(op.e)
    if isinstance(op, CompressUnit):
        c, need = _s_count(op.e)
        return 0, need or c > 1
    return 0, False


def _disc(op: LineOp, idx: np.ndarray, n: int, d: int, half: bool, mellin_cfg) -> np.ndarray:
    size = len(idx)
    if isinstance(op, IdentL):
        return np.eye(size * d, dtype=complex)
    if isinstance(op, ConstL):
        if op.a.shape[0] != d:
            raise LineError("block dimension mismatch")
        return np.kron(np.eye(size), op.a)
    if isinstance(op, ChiPos):
        return _kron(np.diag((idx >= 0).astype(float)), d)
    if isinstance(op, FlipL):
        pos = {int(k): p for p, k in enumerate(idx)}
        m = np.zeros((size, size))
        for q, k in enumerate(idx):
            m[pos[int(-k - 1)], q] = 1.0
        return _kron(m, d)
    if isinstance(op, (SingR, SingHalf)):
        return _kron(sing_r_matrix(idx), d)
    if isinstance(op, HankelHalf):
        return _kron(hankel_matrix(idx), d)
    if isinstance(op, MellinConv):
        return _kron(mellin_conv_matrix(op.b, size, op.b_minus, op.b_plus, mellin_cfg), d)
    if isinstance(op, CompressUnit):
        inner = _disc(op.e, idx, n, d, half, mellin_cfg)
        keep = (idx < n) & (idx >= (0 if half else -n))
        mask = np.repeat(keep, d).astype(float)
        return mask[:, None] * inner * mask[None, :]
    if isinstance(op, SumL):
        out = np.zeros((size * d, size * d), dtype=complex)
        for t in op.terms:
            out = out + _disc(t, idx, n, d, half, mellin_cfg)
        return out
    if isinstance(op, ProdL):
        out = np.eye(size * d, dtype=complex)
        for f in op.factors:
            out = out @ _disc(f, idx, n, d, half, mellin_cfg)
        return out
    if isinstance(op, ScaleL):
        return op.lam * _disc(op.e, idx, n, d, half, mellin_cfg)
    if isinstance(op, AdjointL):
        return _disc(op.e, idx, n, d, half, mellin_cfg).conj().T
    raise LineError(f"unknown node {type(op).__name__}")


def discretize(op: LineOp, grid: GridSpec, d: int | None = None, pad: int | None = None, mellin_cfg=None) -> np.ndarray:
    """Matrix of ``E_{-n} op E_n`` on the grid's cells.

    On the unit grid, whole-line expressions are understood as compressed to
    ``[-1, 1]``.  Words holding two or more uncompressed ``S_R`` factors are
    composed on a window padded by ``pad`` cells per side (default ``8n``)
    before cutting back; otherwise the result is exact.
    """
    d = d or line_block_dim(op) or 1
    half = is_half_line(op)
    if grid.support == "unit":
        if half:
            raise LineError("half-line operator on a whole-line grid")
        count, need = _s_count(op)
        if count > 1 or need:
            pad = 8 * grid.n if pad is None else pad
            N = grid.n + pad
            full = _disc(op, np.arange(-N, N), grid.n, d, False, mellin_cfg)
            lo, hi = (N - grid.n) * d, (N + grid.n) * d
            return full[lo:hi, lo:hi]
        mat = _disc(op, grid.cells, grid.n, d, False, mellin_cfg)
        return mat
    if half is False:
        raise LineError("whole-line operator on a half-line grid")
    return _disc(op, grid.cells, grid.n, d, True, mellin_cfg)


def e_plus(n: int, idx: np.ndarray, refine: int = 8) -> np.ndarray:
    """``E_n`` sampled on ``refine`` points per cell: vector -> step function values."""
    size = len(idx)
    return math.sqrt(n) * np.kron(np.eye(size), np.ones((refine, 1)))


def e_minus(n: int, idx: np.ndarray, refine: int = 8) -> np.ndarray:
    """``E_{-n}`` on the same sampling: step function -> scaled cell integrals."""
    size = len(idx)
    return math.sqrt(n) * np.kron(np.eye(size), np.full((1, refine), 1.0 / (n * refine)))


def export_csv(mat: np.ndarray, path) -> None:
    """Row-major dump with ``re,im`` pairs."""
    with open(path, "w") as fh:
        for row in mat:
            fh.write(",".join(f"{z.real:.17g},{z.imag:.17g}" for z in row) + "\n")


# ---------------------------------------------------------------------------
# doubling
# ---------------------------------------------------------------------------

LineMat = tuple  # ((e11, e12), (e21, e22))


def _lm(a, b, c, e) -> LineMat:
    return ((a, b), (c, e))


def _lm_mul(x: LineMat, y: LineMat) -> LineMat:
    return tuple(
        tuple(SumL((ProdL((x[i][0], y[0][j])), ProdL((x[i][1], y[1][j])))) for j in range(2)) for i in range(2)
    )


def phi_omega(op: LineOp) -> LineMat:
    """Image under ``f -> (f|R+, f(-.)|R+)`` as a 2x2 matrix of half-line operators."""
    if isinstance(op, _HALF_ATOMS):
        raise LineError("phi_omega expects a whole-line operator")
    if isinstance(op, IdentL):
        return _lm(IdentL(), ZERO_L, ZERO_L, IdentL())
    if isinstance(op, ChiPos):
        return _lm(IdentL(), ZERO_L, ZERO_L, ZERO_L)
    if isinstance(op, SingR):
        return _lm(SingHalf(), ScaleL(-1.0, HankelHalf()), HankelHalf(), ScaleL(-1.0, SingHalf()))
    if isinstance(op, FlipL):
        return _lm(ZERO_L, IdentL(), IdentL(), ZERO_L)
    if isinstance(op, ConstL):
        return _lm(op, ZERO_L, ZERO_L, op)
    if isinstance(op, CompressUnit):
        inner = phi_omega(op.e)
        return tuple(tuple(CompressUnit(inner[i][j]) for j in range(2)) for i in range(2))
    if isinstance(op, SumL):
        parts = [phi_omega(t) for t in op.terms]
        return tuple(tuple(SumL(tuple(p[i][j] for p in parts)) for j in range(2)) for i in range(2))
    if isinstance(op, ProdL):
        out = _lm(IdentL(), ZERO_L, ZERO_L, IdentL())
        for f in op.factors:
            out = _lm_mul(out, phi_omega(f))
        return out
    if isinstance(op, ScaleL):
        m = phi_omega(op.e)
        return tuple(tuple(ScaleL(op.lam, m[i][j]) for j in range(2)) for i in range(2))
    if isinstance(op, AdjointL):
        m = phi_omega(op.e)
        return tuple(tuple(line_adjoint(m[j][i]) for j in range(2)) for i in range(2))
    raise LineError(f"unknown node {type(op).__name__}")


def omega_permutation(cells: int, d: int = 1) -> np.ndarray:
    """Reorders whole-line cells ``-cells..cells-1`` as ``0..cells-1`` then ``-1..-cells``."""
    order = list(range(cells, 2 * cells)) + [cells - 1 - k for k in range(cells)]
    p = np.zeros((2 * cells, 2 * cells))
    p[np.arange(2 * cells), order] = 1.0
    return _kron(p, d).real


def discretize_block(mat: LineMat, grid: GridSpec, d: int | None = None, pad: int | None = None) -> np.ndarray:
    blocks = [[discretize(mat[i][j], grid, d, pad) for j in range(2)] for i in range(2)]
    return np.block(blocks)


# ---------------------------------------------------------------------------
# Mellin utilities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MellinConfig:
    """Quadrature settings: Gauss-Legendre panels of ``panel_width`` with
    ``order`` nodes on ``[-Z, Z]`` for the part of ``b`` that decays at infinity."""

    Z: float = 40.0
    panel_width: float = 0.5
    order: int = 16
    limit_probe: float = 1e12
    s_lo: float = -60.0
    s_hi: float = 60.0


def _gl_nodes(lo: float, hi: float, width: float, order: int, breaks=()) -> tuple[np.ndarray, np.ndarray]:
    cuts = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    x0, w0 = np.polynomial.legendre.leggauss(order)
    xs, ws = [], []
    for a, b in zip(cuts, cuts[1:]):
        k = max(1, int(math.ceil((b - a) / width)))
        edges = np.linspace(a, b, k + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        xs.append((mid[:, None] + half[:, None] * x0[None, :]).ravel())
        ws.append((half[:, None] * w0[None, :]).ravel())
    return np.concatenate(xs), np.concatenate(ws)


def mellin_transform(f: Callable[[np.ndarray], np.ndarray], z, breaks=(), cfg: MellinConfig | None = None):
    """``int_0^inf x^{-iz-1/2} f(x) dx`` by Gauss-Legendre on a logarithmic grid.

    ``f`` is sampled at ``x = e^s`` for ``s`` in ``[cfg.s_lo, cfg.s_hi]``;
    ``breaks`` lists points of ``(0, inf)`` where ``f`` jumps.
    """
    cfg = cfg or MellinConfig()
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if not np.all(np.isfinite(z_arr)):
        raise LineError("z must be finite")
    sb = [math.log(b) for b in breaks if b > 0]
    s, w = _gl_nodes(cfg.s_lo, cfg.s_hi, cfg.panel_width, cfg.order, sb)
    x = np.exp(s)
    fx = np.asarray(f(x), dtype=complex)
    kern = np.exp(np.outer(0.5 - 1j * z_arr, s))
    out = kern @ (w * fx)
    return out[0] if np.ndim(z) == 0 else out


def _half_line_fourier(omega: np.ndarray, a: float = 0.5) -> np.ndarray:
    """``int_0^inf e^{i omega z} / (a^2 + z^2) dz`` in closed form."""
    w = np.abs(omega)
    cos_part = math.pi * np.exp(-a * w) / (2 * a)
    with np.errstate(over="ignore", invalid="ignore"):
        sin_part = np.where(
            w > 0,
            (np.exp(-a * w) * expi(a * w) - np.exp(a * w) * expi(-a * w)) / (2 * a),
            0.0,
        )
    return cos_part + 1j * np.sign(omega) * sin_part


def _limits(b, b_minus, b_plus, cfg: MellinConfig) -> tuple[complex, complex]:
    def probe(sign):
        far, near = (complex(np.asarray(b(np.array([sign * r])))[0]) for r in (cfg.limit_probe, math.sqrt(cfg.limit_probe)))
        if abs(far - near) > 1e-6 * (1 + abs(far)):
            raise LineError("b does not settle at infinity; pass its limits explicitly")
        return far

    if b_minus is None:
        b_minus = probe(-1)
    if b_plus is None:
        b_plus = probe(1)
    return complex(b_minus), complex(b_plus)


def mellin_conv_matrix(
    b: Callable[[np.ndarray], np.ndarray],
    n: int,
    b_minus: complex | None = None,
    b_plus: complex | None = None,
    cfg: MellinConfig | None = None,
) -> np.ndarray:
    """Cell discretization of ``M^{-1} b M`` on the first ``n`` unit cells of ``[0, inf)``.

    Entry ``(j, k)`` is ``(1/2pi) int b(z) conj(B_j(z)) B_k(z) dz`` with ``B_k``
    the Mellin transform of the indicator of ``[k, k+1]``.  ``b`` is split into
    its step part (``b(-inf)`` on ``z < 0``, ``b(+inf)`` on ``z > 0``), which is
    integrated in closed form, and a decaying remainder, integrated by
    Gauss-Legendre on ``[-Z, Z]``.  The result does not depend on the grid
    scale, so it serves every ``n`` cells-per-unit grid.
    """
    cfg = cfg or MellinConfig()
    if n < 1:
        raise LineError("need at least one cell")
    bm, bp = _limits(b, b_minus, b_plus, cfg)
    if not (np.isfinite(bm) and np.isfinite(bp)):
        raise LineError("b must have finite limits at +-inf")
    z, wz = _gl_nodes(-cfg.Z, cfg.Z, cfg.panel_width, cfg.order, (0.0,))
    bz = np.asarray(b(z), dtype=complex)
    if not np.all(np.isfinite(bz)):
        raise LineError("b is not finite on the quadrature nodes")
    rem = (bz - np.where(z < 0, bm, bp)) * wz / (0.25 + z**2)
    idx = np.arange(n)
    G = np.zeros((n, n), dtype=complex)
    for dp, sp in ((1, 1.0), (0, -1.0)):
        p = (idx + dp).astype(float)[:, None]
        for dq, sq in ((1, 1.0), (0, -1.0)):
            q = (idx + dq).astype(float)[None, :]
            live = (p > 0) & (q > 0)
            amp = np.where(live, sp * sq * np.sqrt(p * q), 0.0)
            omega = np.where(live, np.log(np.where(p > 0, p, 1.0) / np.where(q > 0, q, 1.0)), 0.0)
            hp = _half_line_fourier(omega)
            step = bp * hp + bm * np.conj(hp)
            tail = np.zeros_like(step)
            for start in range(0, len(z), 512):
                zz = z[start : start + 512]
                tail += np.einsum("jkt,t->jk", np.exp(1j * omega[:, :, None] * zz[None, None, :]), rem[start : start + 512])
            G += amp * (step + tail)
    return G / (2 * math.pi)
