"""Dense finite sections on the window Z_n = {-n, ..., n-1}.

Matrices are ``2n*d`` square with cell-major, block-minor layout: block row
``p = i + n`` holds index ``i``.  Two assembly paths exist: exact entries from
Fourier coefficients when an expression has the canonical shape, and direct
composition on an enlarged window otherwise.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .opexpr import (
    Adjoint,
    CanonicalForm,
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
    block_dim,
    canonical_form,
    from_terms,
    normal_terms,
)
from .symbol import PCSymbol

SVD_REL_ZERO = 1e-12


def window(n: int) -> np.ndarray:
    return np.arange(-n, n)


def _blocks_to_dense(blocks: np.ndarray) -> np.ndarray:
    """(m, m, d, d) block array -> (m d, m d) matrix."""
    m, _, d, _ = blocks.shape
    return blocks.transpose(0, 2, 1, 3).reshape(m * d, m * d)


def _scalar_to_dense(mat: np.ndarray, d: int) -> np.ndarray:
    return np.kron(mat, np.eye(d)) if d > 1 else mat.astype(complex)


def _perm(n: int, target) -> np.ndarray:
    """Matrix of ``y_k = x_{target(k)}`` compressed to Z_n (``None`` means 0)."""
    idx = window(n)
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    for p, k in enumerate(idx):
        src = target(int(k))
        if src is not None and -n <= src < n:
            m[p, src + n] = 1.0
    return m


def structured_op(name: str, n: int, d: int = 1, k: int | None = None, tau: complex | None = None) -> np.ndarray:
    """Compression to Z_n of one of the basic sequence-space operators.

    Names: ``P_n``, ``P``, ``Q``, ``J``, ``W_n``, ``U`` (shift by ``k``),
    ``V`` (``k = +-m``) and ``Y_tau`` (``diag(tau^{-k})``).
    """
    idx = window(n)
    if name in ("P_n", "I"):
        m = np.eye(2 * n, dtype=complex)
    elif name == "P":
        m = np.diag((idx >= 0).astype(complex))
    elif name == "Q":
        m = np.diag((idx < 0).astype(complex))
    elif name == "J":
        m = _perm(n, lambda j: -j - 1)
    elif name == "W_n":
        m = _perm(n, lambda j: n - 1 - j if j >= 0 else -n - 1 - j)
    elif name == "U":
        if k is None:
            raise ValueError("U needs a shift k")
        m = _perm(n, lambda j: j - k)
    elif name == "V":
        if k is None or k == 0:
            raise ValueError("V needs a nonzero k")
        s = abs(k)
        if k > 0:
            m = _perm(n, lambda j: j - s if j >= s else (j + s if j < -s else None))
        else:
            m = _perm(n, lambda j: j + s if j >= 0 else j - s)
    elif name == "Y_tau":
        if tau is None:
            raise ValueError("Y_tau needs tau")
        m = np.diag(np.asarray(complex(tau)) ** (-idx.astype(float)))
    else:
        raise ValueError(f"unknown structured operator {name!r}")
    return _scalar_to_dense(m, d)


def laurent_section(sym: PCSymbol, n: int) -> np.ndarray:
    """Compression of ``L(a)`` to Z_n: block (j, k) = a_{j-k}."""
    d = sym.d
    coef = sym.fourier_coeffs(np.arange(-2 * n + 1, 2 * n))
    idx = window(n)
    diff = idx[:, None] - idx[None, :]
    return _blocks_to_dense(coef[diff + 2 * n - 1])


def finite_rank_section(fr: FiniteRank, n: int) -> np.ndarray:
    d = fr.d
    out = np.zeros((2 * n * d, 2 * n * d), dtype=complex)
    for (i, j), m in fr.entries.items():
        if -n <= i < n and -n <= j < n:
            p, q = (i + n) * d, (j + n) * d
            out[p : p + d, q : q + d] += m
    return out


def assemble_canonical(cf: CanonicalForm, n: int) -> np.ndarray:
    """Exact section of ``L(a)P + L(b)Q + L(c)JP + L(d)JQ + K`` on Z_n."""
    ks = np.arange(-2 * n + 1, 2 * n)
    off = 2 * n - 1
    idx = window(n)
    jj, kk = np.meshgrid(idx, idx, indexing="ij")
    diff = jj - kk + off
    summ = jj + kk + 1 + off
    pos = (kk >= 0)[:, :, None, None]
    ca, cb, cc, cd = (s.fourier_coeffs(ks) for s in (cf.a, cf.b, cf.c, cf.d))
    blocks = np.where(pos, ca[diff] + cc[summ], cb[diff] + cd[summ])
    return _blocks_to_dense(blocks) + finite_rank_section(cf.k, n)


def _eval_window(e: OpExpr, N: int, d: int, cache: dict) -> np.ndarray:
    if isinstance(e, Ident):
        return np.eye(2 * N * d, dtype=complex)
    if isinstance(e, Proj):
        return structured_op("P", N, d)
    if isinstance(e, CoProj):
        return structured_op("Q", N, d)
    if isinstance(e, Flip):
        return structured_op("J", N, d)
    if isinstance(e, Laurent):
        key = id(e.sym)
        if key not in cache:
            cache[key] = laurent_section(e.sym, N)
        return cache[key]
    if isinstance(e, FiniteRankOp):
        return finite_rank_section(e.fr, N)
    if isinstance(e, Sum):
        out = np.zeros((2 * N * d, 2 * N * d), dtype=complex)
        for t in e.terms:
            out = out + _eval_window(t, N, d, cache)
        return out
    if isinstance(e, Prod):
        out = np.eye(2 * N * d, dtype=complex)
        for f in e.factors:
            out = out @ _eval_window(f, N, d, cache)
        return out
    if isinstance(e, Scale):
        return e.lam * _eval_window(e.e, N, d, cache)
    if isinstance(e, Adjoint):
        return _eval_window(e.e, N, d, cache).conj().T
    raise ExprError(f"unknown node {type(e).__name__}")


def cut_center(mat: np.ndarray, N: int, n: int, d: int) -> np.ndarray:
    lo = (N - n) * d
    hi = (N + n) * d
    return mat[lo:hi, lo:hi]


def assemble_windowed(e: OpExpr, n: int, margin: int | None = None, d: int | None = None) -> np.ndarray:
    """Compose every factor on Z_{n+margin}, then cut out Z_n (default margin 4n)."""
    if margin is None:
        margin = 4 * n
    if margin < 0:
        raise ValueError("margin must be non-negative")
    d = d or block_dim(e) or 1
    N = n + margin
    return cut_center(_eval_window(e, N, d, {}), N, n, d)


def _single_laurent_words(e: OpExpr, n: int, d: int) -> OpExpr | None:
    """Normal form of ``e`` if every word has at most one Laurent or finite-rank
    factor supported in Z_n.  Such words commute with ``P_n`` except for that
    one factor, so composing on Z_n itself is exact."""
    terms = normal_terms(e, d)
    for _, w in terms:
        heavy = [x for x in w if isinstance(x, tuple) and not (x[0] == "L" and x[1].is_constant())]
        if len(heavy) > 1:
            return None
        if heavy and heavy[0][0] == "F":
            r, c = heavy[0][1].support()
            if max(r, c) >= n:
                return None
    return from_terms(terms)


def assemble(e: OpExpr, n: int, margin: int | None = None, d: int | None = None) -> np.ndarray:
    """``P_n e P_n``: exact when ``e`` is canonical or has at most one Laurent
    factor per word, windowed otherwise."""
    d = d or block_dim(e) or 1
    cf = canonical_form(e, d)
    if cf is not None:
        return assemble_canonical(cf, n)
    simple = _single_laurent_words(e, n, d)
    if simple is not None:
        return assemble_windowed(simple, n, 0, d)
    return assemble_windowed(e, n, margin, d)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    rows: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def ns(self) -> list[int]:
        return [r[0] for r in self.rows]

    @property
    def sigma_min(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    @property
    def cond(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "sigma_min", "cond"])
            for n, s, c in self.rows:
                w.writerow([n, fmt17(s), fmt17(c)])


def fmt17(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def singular_summary(mat: np.ndarray) -> tuple[float, float]:
    """``(sigma_min, cond)`` with tiny relative singular values reported as 0."""
    if mat.size == 0:
        return 1.0, 1.0
    s = np.linalg.svd(mat, compute_uv=False)
    smax, smin = float(s[0]), float(s[-1])
    if smax == 0.0 or smin < SVD_REL_ZERO * smax:
        return 0.0, math.inf
    return smin, smax / smin


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FINSEC_THREADS", "1")))
    except ValueError:
        return 1


def sv_sweep(builder: Callable[[int], np.ndarray], ns: Sequence[int]) -> SweepResult:
    ns = list(ns)
    if not ns:
        raise ValueError("empty list of window sizes")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("window sizes must increase")

    def one(n):
        smin, cond = singular_summary(builder(n))
        return (n, smin, cond)

    workers = min(_threads(), len(ns))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(one, ns))
    else:
        rows = [one(n) for n in ns]
    return SweepResult(rows)


DECAY_SLOPE = -0.5


def verdict_numeric(sweep: SweepResult, floor: float = 1e-6, trend_window: int = 3) -> str:
    """``stable``, ``unstable`` or ``inconclusive`` from the tail of a sweep.

    Unstable: the last sigma_min is 0, or the tail decreases monotonically and
    either ends below ``floor`` or decays like ``n^p`` with ``p <= -0.5``
    between its last two entries.  Stable: the tail stays above ``floor``
    without such decay.  Anything else is inconclusive.
    """
    s = sweep.sigma_min
    ns = np.asarray(sweep.ns, dtype=float)
    if len(s) == 0:
        raise ValueError("empty sweep")
    k = max(1, trend_window)
    tail, tn = s[-k:], ns[-k:]
    if tail[-1] == 0.0:
        return "unstable"
    monotone = all(b <= a * (1 + 1e-14) for a, b in zip(tail, tail[1:]))
    decaying = False
    if len(tail) >= 2 and monotone and tail[-2] > 0:
        slope = math.log(tail[-1] / tail[-2]) / math.log(tn[-1] / tn[-2])
        decaying = slope <= DECAY_SLOPE
    if np.all(tail >= floor) and not decaying:
        return "stable"
    if monotone and (tail[-1] < floor or decaying):
        return "unstable"
    return "inconclusive"
