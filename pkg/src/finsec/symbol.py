"""Matrix-valued piecewise trigonometric polynomials on the unit circle.

A symbol is stored as an ordered list of arcs ``(alpha, beta]`` that partition
the circle; on each arc it is a finite Fourier sum ``sum_k c_k e^{ik theta}``
with ``d x d`` complex coefficients.  Everything here is exact up to floating
point: Fourier coefficients come from closed-form arc integrals, products use
the common refinement of both partitions.

Angles follow the counterclockwise convention: ``plus`` limits are taken as the
angle increases, ``minus`` limits as it decreases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-12
JUMP_TOL = 1e-12
MERGE_TOL = 1e-14
EQ_TOL = 1e-12


class SymbolError(ValueError):
    pass


def as_matrix(value, d: int | None = None) -> np.ndarray:
    """Coerce a scalar or square array into a complex ``d x d`` matrix."""
    arr = np.asarray(value, dtype=complex)
    if arr.ndim == 0:
        return arr * np.eye(d or 1, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise SymbolError(f"expected a square matrix, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise SymbolError(f"block dimension mismatch: {arr.shape[0]} != {d}")
    if not np.all(np.isfinite(arr)):
        raise SymbolError("matrix entries must be finite")
    return arr.copy()


def _wrap(theta: float) -> float:
    t = math.fmod(theta, TWO_PI)
    if t < 0:
        t += TWO_PI
    if TWO_PI - t < ANGLE_TOL:
        t = 0.0
    return t + 0.0


def _arc_integral(q: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Closed form of int_alpha^beta e^{i q x} dx for an integer array q."""
    q = np.asarray(q)
    out = np.empty(q.shape, dtype=complex)
    zero = q == 0
    out[zero] = beta - alpha
    if abs(beta - alpha - TWO_PI) <= ANGLE_TOL:
        out[~zero] = 0.0
        return out
    qq = q[~zero].astype(float)
    out[~zero] = (np.exp(1j * qq * beta) - np.exp(1j * qq * alpha)) / (1j * qq)
    return out


@dataclass(frozen=True, eq=False)
class ArcPiece:
    """One arc ``(alpha, beta]`` carrying a trigonometric polynomial."""

    alpha: float
    beta: float
    ks: np.ndarray  # sorted integer modes
    coefs: np.ndarray  # shape (len(ks), d, d)

    @classmethod
    def make(cls, alpha: float, beta: float, modes: Mapping[int, np.ndarray], d: int) -> "ArcPiece":
        if not beta > alpha or beta - alpha > TWO_PI + ANGLE_TOL:
            raise SymbolError(f"invalid arc ({alpha}, {beta}]")
        items = sorted((int(k), as_matrix(c, d)) for k, c in modes.items())
        items = [(k, c) for k, c in items if np.any(c != 0)]
        ks = np.array([k for k, _ in items], dtype=np.int64)
        coefs = np.array([c for _, c in items], dtype=complex).reshape(len(items), d, d)
        return cls(float(alpha), float(beta), ks, coefs)

    @property
    def d(self) -> int:
        return self.coefs.shape[1]

    @property
    def modes(self) -> dict[int, np.ndarray]:
        return {int(k): c for k, c in zip(self.ks, self.coefs)}

    def poly(self, theta) -> np.ndarray:
        """Evaluate the polynomial (ignoring the arc) at an array of angles."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if len(self.ks) == 0:
            return np.zeros((len(theta), self.d, self.d), dtype=complex)
        phase = np.exp(1j * np.outer(theta, self.ks))
        return np.einsum("tk,kij->tij", phase, self.coefs)

    def poly_integral(self, lo: float, hi: float) -> np.ndarray:
        if len(self.ks) == 0:
            return np.zeros((self.d, self.d), dtype=complex)
        w = _arc_integral(self.ks, lo, hi)
        return np.einsum("k,kij->ij", w, self.coefs)

    def same_poly(self, other: "ArcPiece", tol: float = MERGE_TOL) -> bool:
        a, b = self.modes, other.modes
        for k in set(a) | set(b):
            ca = a.get(k, 0.0)
            cb = b.get(k, 0.0)
            if np.linalg.norm(np.asarray(ca) - np.asarray(cb)) > tol:
                return False
        return True


def _mode_add(a: dict, b: dict, wa=1.0, wb=1.0) -> dict:
    out = {k: wa * c for k, c in a.items()}
    for k, c in b.items():
        out[k] = out[k] + wb * c if k in out else wb * c
    return out


def _mode_mul(a: dict, b: dict) -> dict:
    out: dict[int, np.ndarray] = {}
    for k1, c1 in a.items():
        for k2, c2 in b.items():
            k = k1 + k2
            p = c1 @ c2
            out[k] = out[k] + p if k in out else p
    return out


class PCSymbol:
    """A ``d x d``-matrix-valued piecewise trigonometric polynomial.

    Instances are immutable.  Use the constructors (:meth:`constant`,
    :meth:`trig`, :meth:`indicator`, :meth:`from_arcs`, :meth:`from_literal`)
    rather than calling ``__init__`` with raw pieces.
    """

    __hash__ = None  # type: ignore[assignment]

    def __init__(self, d: int, pieces: Sequence[ArcPiece]):
        if d < 1:
            raise SymbolError("block dimension must be positive")
        if not pieces:
            raise SymbolError("a symbol needs at least one piece")
        self.d = int(d)
        self.pieces: tuple[ArcPiece, ...] = tuple(pieces)
        self._check_partition()

    # -- construction -----------------------------------------------------
    @classmethod
    def from_arcs(cls, arcs: Iterable[tuple[float, float, Mapping[int, object]]], d: int | None = None) -> "PCSymbol":
        """Build a normalized symbol from ``(alpha, beta, modes)`` triples."""
        arcs = list(arcs)
        if d is None:
            d = 1
            for _, _, modes in arcs:
                for c in modes.values():
                    arr = np.asarray(c)
                    if arr.ndim == 2:
                        d = arr.shape[0]
                        break
        pieces = [ArcPiece.make(a, b, m, d) for a, b, m in arcs]
        return cls._normalized(d, pieces)

    @classmethod
    def _normalized(cls, d: int, pieces: list[ArcPiece]) -> "PCSymbol":
        if not pieces:
            raise SymbolError("empty piece list")
        # shift every arc so that alpha lies in [0, 2pi)
        shifted = []
        for p in pieces:
            a = _wrap(p.alpha)
            shifted.append(ArcPiece(a, a + (p.beta - p.alpha), p.ks, p.coefs))
        shifted.sort(key=lambda p: p.alpha)
        merged: list[ArcPiece] = []
        for p in shifted:
            if merged and merged[-1].same_poly(p) and abs(merged[-1].beta - p.alpha) <= ANGLE_TOL:
                last = merged[-1]
                merged[-1] = ArcPiece(last.alpha, p.beta, last.ks, last.coefs)
            else:
                merged.append(p)
        if len(merged) > 1 and merged[-1].same_poly(merged[0]):
            first, last = merged[0], merged[-1]
            span = (last.beta - last.alpha) + (first.beta - first.alpha)
            merged = [ArcPiece(last.alpha, last.alpha + span, last.ks, last.coefs)] + merged[1:-1]
            merged = sorted(
                (ArcPiece(_wrap(p.alpha), _wrap(p.alpha) + (p.beta - p.alpha), p.ks, p.coefs) for p in merged),
                key=lambda p: p.alpha,
            )
        if len(merged) == 1:
            p = merged[0]
            merged = [ArcPiece(0.0, TWO_PI, p.ks, p.coefs)]
        return cls(d, merged)

    @classmethod
    def constant(cls, value, d: int | None = None) -> "PCSymbol":
        c = as_matrix(value, d)
        return cls.from_arcs([(0.0, TWO_PI, {0: c})], d=c.shape[0])

    @classmethod
    def zero(cls, d: int = 1) -> "PCSymbol":
        return cls.constant(0.0, d)

    @classmethod
    def identity(cls, d: int = 1) -> "PCSymbol":
        return cls.constant(1.0, d)

    @classmethod
    def trig(cls, modes: Mapping[int, object], d: int | None = None) -> "PCSymbol":
        """Continuous symbol ``sum_k modes[k] e^{ik theta}``."""
        return cls.from_arcs([(0.0, TWO_PI, dict(modes))], d=d)

    @classmethod
    def monomial(cls, k: int, value=1.0, d: int | None = None) -> "PCSymbol":
        return cls.trig({k: value}, d=d)

    @classmethod
    def indicator(cls, alpha: float, beta: float, value=1.0, d: int | None = None) -> "PCSymbol":
        """``value`` on the arc ``(alpha, beta]`` and zero elsewhere."""
        c = as_matrix(value, d)
        d = c.shape[0]
        span = beta - alpha
        if span >= TWO_PI - ANGLE_TOL:
            return cls.constant(c)
        a = _wrap(alpha)
        return cls.from_arcs([(a, a + span, {0: c}), (a + span, a + TWO_PI, {})], d=d)

    @classmethod
    def chi_plus(cls, d: int = 1) -> "PCSymbol":
        """Indicator of the upper half circle."""
        return cls.indicator(0.0, math.pi, 1.0, d)

    @classmethod
    def chi_minus(cls, d: int = 1) -> "PCSymbol":
        return cls.indicator(math.pi, TWO_PI, 1.0, d)

    # -- literal format -----------------------------------------------------
    @classmethod
    def from_literal(cls, pieces: Sequence[Mapping]) -> "PCSymbol":
        """Parse ``[{arc: [alpha, beta], modes: {k: matrix}}, ...]``.

        Matrices are nested lists whose leaves are ``[re, im]`` pairs (a bare
        number or a single ``[re, im]`` pair is accepted for ``d = 1``).
        """
        arcs = []
        for piece in pieces:
            try:
                alpha, beta = (float(x) for x in piece["arc"])
                modes = {int(k): _parse_complex_matrix(v) for k, v in (piece.get("modes") or {}).items()}
            except (KeyError, TypeError) as exc:
                raise SymbolError(f"malformed symbol piece {piece!r}") from exc
            arcs.append((alpha, beta, modes))
        if not arcs:
            raise SymbolError("symbol literal has no pieces")
        dims = {m.shape[0] for _, _, modes in arcs for m in modes.values()}
        if len(dims) > 1:
            raise SymbolError(f"inconsistent block dimensions {sorted(dims)}")
        d = dims.pop() if dims else 1
        total = sum(b - a for a, b, _ in arcs)
        if abs(total - TWO_PI) > 1e-9:
            raise SymbolError(f"arcs cover {total}, not 2*pi")
        return cls.from_arcs(arcs, d=d)

    def to_literal(self) -> list[dict]:
        out = []
        for p in self.pieces:
            modes = {}
            for k, c in zip(p.ks, p.coefs):
                modes[int(k)] = [[[float(z.real), float(z.imag)] for z in row] for row in c]
            if not modes and self.d > 1:
                # keep the block size readable from the literal
                modes[0] = [[[0.0, 0.0]] * self.d for _ in range(self.d)]
            out.append({"arc": [p.alpha, p.beta], "modes": modes})
        return out

    # -- structure ----------------------------------------------------------
    def _check_partition(self) -> None:
        ps = self.pieces
        for p in ps:
            if p.d != self.d:
                raise SymbolError("piece dimension mismatch")
            if not (0.0 <= p.alpha < TWO_PI) or not p.beta > p.alpha:
                raise SymbolError(f"bad arc ({p.alpha}, {p.beta}]")
        for p, q in zip(ps, ps[1:]):
            if abs(p.beta - q.alpha) > ANGLE_TOL:
                raise SymbolError("arcs leave a gap or overlap")
        if abs(ps[-1].beta - (ps[0].alpha + TWO_PI)) > ANGLE_TOL:
            raise SymbolError("arcs do not close up around the circle")

    @property
    def breakpoints(self) -> list[float]:
        if len(self.pieces) == 1:
            return []
        return [p.alpha for p in self.pieces]

    @property
    def jumps(self) -> list[float]:
        """Angles in ``[0, 2pi)`` where the one-sided limits differ."""
        out = []
        n = len(self.pieces)
        if n == 1:
            return out
        for i in range(n):
            left = self.pieces[i - 1]
            right = self.pieces[i]
            t = right.alpha
            lv = left.poly(t)[0]
            rv = right.poly(t)[0]
            if np.linalg.norm(lv - rv) > JUMP_TOL:
                out.append(t)
        return sorted(out)

    @property
    def bandwidth(self) -> int:
        return max((int(np.max(np.abs(p.ks))) for p in self.pieces if len(p.ks)), default=0)

    def is_continuous(self) -> bool:
        return not self.jumps

    def is_trig_polynomial(self) -> bool:
        return len(self.pieces) == 1

    def is_constant(self) -> bool:
        return len(self.pieces) == 1 and all(k == 0 for k in self.pieces[0].ks)

    def constant_value(self) -> np.ndarray:
        if not self.is_constant():
            raise SymbolError("symbol is not constant")
        p = self.pieces[0]
        return p.coefs[0].copy() if len(p.ks) else np.zeros((self.d, self.d), dtype=complex)

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.is_constant() and np.linalg.norm(self.constant_value()) <= tol

    def scalar_value(self, tol: float = EQ_TOL) -> complex | None:
        """If the symbol is ``c * I`` return ``c``, otherwise ``None``."""
        if not self.is_constant():
            return None
        c = self.constant_value()
        lam = c[0, 0]
        if np.linalg.norm(c - lam * np.eye(self.d)) <= tol:
            return complex(lam)
        return None

    # -- evaluation -----------------------------------------------------------
    def _locate(self, t: float, side: str) -> ArcPiece:
        """Piece containing angle ``t`` (already wrapped) from the given side."""
        for p in self.pieces:
            for s in (t, t + TWO_PI):
                if side == "plus" and p.alpha <= s < p.beta:
                    return p
                if side == "minus" and p.alpha < s <= p.beta:
                    return p
        raise SymbolError(f"angle {t} not covered")  # pragma: no cover

    def eval(self, theta: float) -> np.ndarray:
        t = _wrap(theta)
        for j in self.jumps:
            if min(abs(t - j), TWO_PI - abs(t - j)) <= ANGLE_TOL:
                raise SymbolError("ambiguous point; use one_sided_limits")
        return self._locate(t, "minus").poly(t)[0]

    __call__ = eval

    def sample(self, thetas) -> np.ndarray:
        """Vectorized evaluation, shape ``(len, d, d)``; breakpoints use the arc ``(alpha, beta]``."""
        thetas = np.mod(np.atleast_1d(np.asarray(thetas, dtype=float)), TWO_PI)
        out = np.empty((len(thetas), self.d, self.d), dtype=complex)
        for p in self.pieces:
            mask = ((thetas > p.alpha) & (thetas <= p.beta)) | ((thetas + TWO_PI > p.alpha) & (thetas + TWO_PI <= p.beta))
            if np.any(mask):
                out[mask] = p.poly(thetas[mask])
        return out

    def one_sided_limits(self, tau: float) -> tuple[np.ndarray, np.ndarray]:
        """``(a(tau+0), a(tau-0))`` along increasing / decreasing angle."""
        t = _wrap(tau)
        plus = self._locate(t, "plus").poly(t)[0]
        minus = self._locate(t, "minus").poly(t)[0]
        if t == 0.0:
            minus = self._locate(TWO_PI, "minus").poly(TWO_PI)[0]
        return plus, minus

    # -- Fourier data ---------------------------------------------------------
    def fourier_coeffs(self, ks) -> np.ndarray:
        """Exact Fourier coefficients for an integer array ``ks``: shape ``(len, d, d)``."""
        ks = np.atleast_1d(np.asarray(ks, dtype=np.int64))
        out = np.zeros((len(ks), self.d, self.d), dtype=complex)
        for p in self.pieces:
            if len(p.ks) == 0:
                continue
            q = p.ks[None, :] - ks[:, None]
            w = _arc_integral(q, p.alpha, p.beta)
            out += np.einsum("nk,kij->nij", w, p.coefs)
        return out / TWO_PI

    def fourier_coeff(self, k: int) -> np.ndarray:
        return self.fourier_coeffs([k])[0]

    def integrate(self, lo: float, hi: float) -> np.ndarray:
        """``int_lo^hi a(e^{ix}) dx`` for any ``lo <= hi``, exact per arc."""
        total = np.zeros((self.d, self.d), dtype=complex)
        if hi <= lo:
            return total
        for p in self.pieces:
            s_lo = math.floor((lo - p.beta) / TWO_PI)
            s_hi = math.ceil((hi - p.alpha) / TWO_PI)
            for s in range(s_lo, s_hi + 1):
                a = max(lo, p.alpha + s * TWO_PI)
                b = min(hi, p.beta + s * TWO_PI)
                if b > a:
                    total += p.poly_integral(a, b)
        return total

    # -- algebra --------------------------------------------------------------
    def _refine(self, other: "PCSymbol"):
        if self.d != other.d:
            raise SymbolError(f"block dimension mismatch: {self.d} vs {other.d}")
        cuts = sorted(set(self.breakpoints) | set(other.breakpoints))
        dedup: list[float] = []
        for c in cuts:
            if not dedup or c - dedup[-1] > ANGLE_TOL:
                dedup.append(c)
        if dedup and TWO_PI - dedup[-1] + dedup[0] <= ANGLE_TOL:
            dedup.pop()
        if not dedup:
            arcs = [(0.0, TWO_PI)]
        else:
            arcs = [(a, b) for a, b in zip(dedup, dedup[1:])] + [(dedup[-1], dedup[0] + TWO_PI)]
        for a, b in arcs:
            mid = _wrap(0.5 * (a + b))
            yield a, b, self._locate(mid, "minus").modes, other._locate(mid, "minus").modes

    def __add__(self, other):
        if not isinstance(other, PCSymbol):
            other = PCSymbol.constant(other, self.d)
        return PCSymbol.from_arcs([(a, b, _mode_add(ma, mb)) for a, b, ma, mb in self._refine(other)], d=self.d)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        if not isinstance(other, PCSymbol):
            other = PCSymbol.constant(other, self.d)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PCSymbol):
            arr = np.asarray(other)
            if arr.ndim == 0:
                return self.scale(complex(other))
            other = PCSymbol.constant(arr)
        return PCSymbol.from_arcs([(a, b, _mode_mul(ma, mb)) for a, b, ma, mb in self._refine(other)], d=self.d)

    def __rmul__(self, other):
        arr = np.asarray(other)
        if arr.ndim == 0:
            return self.scale(complex(other))
        return PCSymbol.constant(arr) * self

    def scale(self, lam: complex) -> "PCSymbol":
        return PCSymbol.from_arcs([(p.alpha, p.beta, {k: lam * c for k, c in p.modes.items()}) for p in self.pieces], d=self.d)

    def adjoint(self) -> "PCSymbol":
        """Pointwise conjugate transpose."""
        return PCSymbol.from_arcs(
            [(p.alpha, p.beta, {-k: c.conj().T for k, c in p.modes.items()}) for p in self.pieces], d=self.d
        )

    def flip(self) -> "PCSymbol":
        """``a(1/t)``: substitute ``theta -> -theta``."""
        arcs = []
        for p in self.pieces:
            a = _wrap(-p.beta)
            arcs.append((a, a + (p.beta - p.alpha), {-k: c for k, c in p.modes.items()}))
        return PCSymbol.from_arcs(arcs, d=self.d)

    def rotate(self, phi: float) -> "PCSymbol":
        """``a(t / tau)`` with ``tau = e^{i phi}``."""
        arcs = []
        for p in self.pieces:
            arcs.append((p.alpha + phi, p.beta + phi, {k: c * np.exp(-1j * k * phi) for k, c in p.modes.items()}))
        return PCSymbol.from_arcs(arcs, d=self.d)

    # -- comparison -----------------------------------------------------------
    def allclose(self, other: "PCSymbol", tol: float = EQ_TOL) -> bool:
        if not isinstance(other, PCSymbol) or other.d != self.d or len(other.pieces) != len(self.pieces):
            return False
        for p, q in zip(self.pieces, other.pieces):
            if abs(p.alpha - q.alpha) > ANGLE_TOL or abs(p.beta - q.beta) > ANGLE_TOL:
                return False
            if not p.same_poly(q, tol):
                return False
        return True

    def __eq__(self, other):
        if not isinstance(other, PCSymbol):
            return NotImplemented
        return self.allclose(other)

    def sort_key(self) -> str:
        parts = []
        for p in self.pieces:
            modes = ",".join(
                f"{k}:" + ";".join(f"{z.real:.12g}{z.imag:+.12g}j" for z in c.ravel()) for k, c in zip(p.ks, p.coefs)
            )
            parts.append(f"({p.alpha:.12g},{p.beta:.12g}|{modes})")
        return "".join(parts)

    def __repr__(self) -> str:
        if self.is_constant():
            return f"PCSymbol.constant({self.constant_value().tolist()!r})"
        return f"PCSymbol(d={self.d}, pieces={len(self.pieces)}, jumps={[round(j, 6) for j in self.jumps]})"


def _parse_complex(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise SymbolError(f"cannot read complex number from {v!r}")


def _parse_complex_matrix(v) -> np.ndarray:
    try:
        return np.array([[_parse_complex(v)]], dtype=complex)
    except SymbolError:
        pass
    rows = [[_parse_complex(x) for x in row] for row in v]
    return as_matrix(np.array(rows, dtype=complex))


# -- module-level operations ---------------------------------------------------

def eval_symbol(sym: PCSymbol, theta: float) -> np.ndarray:
    return sym.eval(theta)


def one_sided_limits(sym: PCSymbol, tau: float) -> tuple[np.ndarray, np.ndarray]:
    return sym.one_sided_limits(tau)


def fourier_coeff(sym: PCSymbol, k: int) -> np.ndarray:
    return sym.fourier_coeff(k)


def add(a: PCSymbol, b: PCSymbol) -> PCSymbol:
    return a + b


def mul(a: PCSymbol, b: PCSymbol) -> PCSymbol:
    return a * b


def scale(lam: complex, a: PCSymbol) -> PCSymbol:
    return a.scale(lam)


def adjoint_sym(a: PCSymbol) -> PCSymbol:
    return a.adjoint()


def flip_symbol(a: PCSymbol) -> PCSymbol:
    return a.flip()


def fejer_mean(sym: PCSymbol, n: int, theta: float) -> np.ndarray:
    """Fejer-Cesaro mean ``sum_{|k|<=n} (1 - |k|/(n+1)) a_k e^{ik theta}``."""
    if n < 0:
        raise SymbolError("n must be non-negative")
    ks = np.arange(-n, n + 1)
    w = (1.0 - np.abs(ks) / (n + 1.0)) * np.exp(1j * ks * theta)
    return np.einsum("k,kij->ij", w, sym.fourier_coeffs(ks))


def _window_mean(sym: PCSymbol, theta: float, h: float) -> np.ndarray:
    """Mean of ``sym`` over ``[theta - h, theta + h]``, integrated in ``u = x - theta``.

    Working relative to ``theta`` keeps a jump at ``theta`` at exactly ``u = 0``,
    so a symmetric window splits into two halves of length exactly ``h``.
    """
    total = np.zeros((sym.d, sym.d), dtype=complex)
    for p in sym.pieces:
        for shift in (-TWO_PI, 0.0, TWO_PI):
            u1 = max(p.alpha - theta + shift, -h)
            u2 = min(p.beta - theta + shift, h)
            if u2 <= u1:
                continue
            for k, c in zip(p.ks, p.coefs):
                if k == 0:
                    w = u2 - u1
                else:
                    w = np.exp(1j * k * theta) * (np.exp(1j * k * u2) - np.exp(1j * k * u1)) / (1j * k)
                total = total + w * c
    # divide the parts separately: complex division by a real scalar rounds
    return total.real / (2 * h) + 1j * (total.imag / (2 * h))


def approx_identity(sym: PCSymbol, kernel: str, param: float, theta: float) -> np.ndarray:
    """Smooth ``sym`` at ``theta`` with a moving average or the Poisson kernel.

    ``kernel="moving_average"`` takes ``param = lambda >= 1`` and averages over
    the window ``[theta - pi/lambda, theta + pi/lambda]`` exactly.
    ``kernel="poisson"`` takes ``param = r`` in ``[0, 1)`` and damps the k-th
    Fourier coefficient by ``r^|k|``.
    """
    if kernel == "moving_average":
        lam = float(param)
        if lam < 1:
            raise SymbolError("moving average needs lambda >= 1")
        return _window_mean(sym, float(theta), math.pi / lam)
    if kernel == "poisson":
        r = float(param)
        if not 0 <= r < 1:
            raise SymbolError("Poisson kernel needs 0 <= r < 1")
        if r == 0:
            return sym.fourier_coeff(0)
        if sym.is_trig_polynomial():
            kmax = sym.bandwidth
        else:
            kmax = min(int(math.ceil(math.log(1e-17) / math.log(r))), 200_000)
        ks = np.arange(-kmax, kmax + 1)
        w = r ** np.abs(ks) * np.exp(1j * ks * theta)
        return np.einsum("k,kij->ij", w, sym.fourier_coeffs(ks))
    raise SymbolError(f"unknown kernel {kernel!r}")
