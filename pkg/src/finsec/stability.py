"""End-to-end stability check for a sequence expression.

Four kinds of evidence are collected: invertibility of ``map_P(s)`` and
``map_W(s)``, and invertibility of the local symbols at interior points and at
``t = +-1``.  The prediction is compared with a direct singular-value sweep of
the sections themselves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .localsym import LocalCheck, check_local_invertibility, fiber_points, local_symbol_seq
from .opexpr import OpExpr, adjoint, block_dim, collapsed_terms, to_text
from .sections import SweepResult, assemble, fmt17, singular_summary, sv_sweep, verdict_numeric
from .symbol import PCSymbol
from .symbolmaps import SeqExpr, assemble_seq, map_P, map_W, seq_block_dim

DENSE_ANGLES = 4096


@dataclass
class StabilityConfig:
    floor: float = 1e-6
    windows: tuple[int, ...] = (16, 32, 64, 128)
    grids: tuple[int, ...] = (32, 64, 128)
    margin: int | None = None
    trend_window: int = 3
    extra_points: tuple[float, ...] = ()
    pad: int | None = None


@dataclass
class OperatorCheck:
    verdict: str  # invertible | singular | inconclusive
    method: str  # exact-symbol | trend-heuristic
    rows: list[tuple[int, float]] = field(default_factory=list)
    text: str = ""


_VERDICT = {"stable": "invertible", "unstable": "singular", "inconclusive": "inconclusive"}


def _pure_laurent(A: OpExpr, d: int) -> PCSymbol | None:
    """Symbol ``a`` if ``A`` equals ``L(a)`` or ``L(a) J`` (``J`` is unitary)."""
    terms = collapsed_terms(A, d)
    if not terms:
        return PCSymbol.zero(d)
    if len(terms) != 1:
        return None
    coef, w = terms[0]
    if w and w[-1] == "J":
        w = w[:-1]
    if not w:
        return PCSymbol.constant(coef, d)
    if len(w) == 1 and isinstance(w[0], tuple) and w[0][0] == "L":
        return w[0][1].scale(coef)
    return None


def symbol_min_singular(a: PCSymbol, samples: int = DENSE_ANGLES) -> float:
    """Smallest singular value of ``a`` over a dense grid and all one-sided limits."""
    theta = (np.arange(samples) + 0.5) * (2 * math.pi / samples)
    vals = list(a.sample(theta))
    for j in a.jumps + a.breakpoints:
        vals.extend(a.one_sided_limits(j))
    return float(min(np.linalg.svd(v, compute_uv=False)[-1] for v in vals))


def check_operator_invertibility(
    A: OpExpr,
    windows: Sequence[int] = (16, 32, 64, 128),
    floor: float = 1e-6,
    d: int | None = None,
    margin: int | None = None,
    trend_window: int = 3,
) -> OperatorCheck:
    """Invertibility proxy for an operator on ``l2(Z)``.

    A pure Laurent operator is decided from its symbol.  Otherwise the lower
    bounds of ``A`` and ``A*`` are probed with the rectangular sections
    ``P_{2m} A P_m`` over the windows ``m``; the smaller of the two
    singular values is classified by its trend.
    """
    d = d or block_dim(A) or 1
    text = to_text(A)
    sym = _pure_laurent(A, d)
    if sym is not None:
        smin = symbol_min_singular(sym)
        verdict = "invertible" if smin >= floor else "singular"
        return OperatorCheck(verdict, "exact-symbol", [(0, smin)], text)
    Astar = adjoint(A)
    rows = []
    for m in windows:
        M = 2 * m
        cols = slice((M - m) * d, (M + m) * d)
        s1 = singular_summary(assemble(A, M, margin, d)[:, cols])[0]
        s2 = singular_summary(assemble(Astar, M, margin, d)[:, cols])[0]
        rows.append((m, min(s1, s2), math.inf))
    verdict = _VERDICT[verdict_numeric(SweepResult(rows), floor, trend_window)]
    return OperatorCheck(verdict, "trend-heuristic", [(m, s) for m, s, _ in rows], text)


@dataclass
class StabilityReport:
    cond_a: OperatorCheck
    cond_b: OperatorCheck
    cond_c: list[LocalCheck]
    cond_d: list[LocalCheck]
    predicted: str
    observed: SweepResult
    observed_verdict: str
    agreement: bool | None

    def evidence(self) -> list[str]:
        return [self.cond_a.verdict, self.cond_b.verdict] + [c.verdict for c in self.cond_c + self.cond_d]

    def to_text(self) -> str:
        lines = [
            f"predicted: {self.predicted}",
            f"observed: {self.observed_verdict}",
            f"agreement: {'n/a' if self.agreement is None else str(self.agreement).lower()}",
            "qc_part: constant (piecewise trigonometric symbols only)",
        ]
        for name, chk in (("cond_a", self.cond_a), ("cond_b", self.cond_b)):
            lines += [f"{name}:", f"  operator: {chk.text}", f"  method: {chk.method}", f"  verdict: {chk.verdict}"]
            lines.append("  table: window,sigma_min")
            lines += [f"    {m},{fmt17(s)}" for m, s in chk.rows]
        for name, checks in (("cond_c", self.cond_c), ("cond_d", self.cond_d)):
            lines.append(f"{name}:")
            for chk in checks:
                lines += [
                    f"  - point: {chk.point.label()}",
                    f"    symbol: {chk.text}",
                    "    method: discretized-local-symbol",
                    f"    verdict: {chk.verdict}",
                    "    table: cells,sigma_min",
                ]
                lines += [f"      {c},{fmt17(s)}" for c, s in chk.rows]
        lines.append("sweep: n,sigma_min,cond")
        lines += [f"  {n},{fmt17(s)},{fmt17(c)}" for n, s, c in self.observed.rows]
        return "\n".join(lines) + "\n"

    def write_csvs(self, out: Path, stem: str = "report") -> list[Path]:
        out = Path(out)
        paths = []
        for name, chk in (("cond_a", self.cond_a), ("cond_b", self.cond_b)):
            p = out / f"{stem}_{name}.csv"
            p.write_text("window,sigma_min\n" + "".join(f"{m},{fmt17(s)}\n" for m, s in chk.rows))
            paths.append(p)
        for name, checks in (("cond_c", self.cond_c), ("cond_d", self.cond_d)):
            p = out / f"{stem}_{name}.csv"
            p.write_text(
                "point,cells,sigma_min\n"
                + "".join(f"{c.point.label()},{n},{fmt17(s)}\n" for c in checks for n, s in c.rows)
            )
            paths.append(p)
        p = out / f"{stem}_sweep.csv"
        self.observed.to_csv(p)
        paths.append(p)
        return paths


def predict(verdicts: Sequence[str]) -> str:
    if any(v == "singular" for v in verdicts):
        return "unstable"
    if all(v == "invertible" for v in verdicts):
        return "stable"
    return "inconclusive"


def stability_report(s: SeqExpr, cfg: StabilityConfig | None = None) -> StabilityReport:
    cfg = cfg or StabilityConfig()
    d = seq_block_dim(s)
    cond_a = check_operator_invertibility(map_P(s), cfg.windows, cfg.floor, d, cfg.margin, cfg.trend_window)
    cond_b = check_operator_invertibility(map_W(s), cfg.windows, cfg.floor, d, cfg.margin, cfg.trend_window)
    cond_c, cond_d = [], []
    for p in fiber_points(s, cfg.extra_points):
        chk = check_local_invertibility(local_symbol_seq(s, p, d), cfg.grids, cfg.floor, cfg.pad)
        (cond_c if p.kind == "interior" else cond_d).append(chk)
    verdicts = [cond_a.verdict, cond_b.verdict] + [c.verdict for c in cond_c + cond_d]
    predicted = predict(verdicts)
    sweep = sv_sweep(lambda n: assemble_seq(s, n, cfg.margin, d), cfg.windows)
    observed = verdict_numeric(sweep, cfg.floor, cfg.trend_window)
    decisive = predicted != "inconclusive" and observed != "inconclusive"
    agreement = (predicted == observed) if decisive else None
    return StabilityReport(cond_a, cond_b, cond_c, cond_d, predicted, sweep, observed, agreement)
