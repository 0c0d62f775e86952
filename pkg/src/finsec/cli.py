"""Batch front end.

Usage::

    finsec --command report --config run.yaml --out results/

The config is YAML with three tables: ``symbols`` (name -> symbol literal),
``expressions`` (name -> prefix expression) and ``params``.  Without
``--config`` a built-in corpus is used.  Exit status: 0 ok, 1 failed identity,
2 parse error, 3 validation error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import ast
import logging
import math
import operator
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .linemodels import (
    ChiPos,
    FlipL,
    GridSpec,
    LineError,
    SingR,
    discretize,
    discretize_block,
    e_minus,
    e_plus,
    export_csv,
    omega_permutation,
    phi_omega,
)
from .localsym import check_local_invertibility, fiber_points, local_symbol_seq
from .opexpr import CoProj, ExprError, Flip, Laurent, Proj, read_sexpr, to_text
from .sections import assemble_windowed, assemble, fmt17, structured_op, sv_sweep
from .stability import StabilityConfig, stability_report
from .symbol import PCSymbol, SymbolError
from .symbolmaps import (
    Section,
    SeqExpr,
    assemble_seq,
    default_probes,
    map_P,
    map_W,
    seq_block_dim,
    strong_limit_oracle,
    tree_to_seq,
)

log = logging.getLogger("finsec")

EXIT_OK, EXIT_IDENTITY, EXIT_PARSE, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2, 3, 4
COMMANDS = ("sections", "sweep", "maps", "local", "report", "identities")


class ParseError(Exception):
    pass


class ValidationError(Exception):
    pass


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def eval_angle(v) -> float:
    """Numbers or arithmetic strings in ``pi`` such as ``"2*pi/3"``."""
    if isinstance(v, (int, float)):
        return float(v)
    if not isinstance(v, str):
        raise ParseError(f"cannot read angle {v!r}")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            x = ev(node.operand)
            return -x if isinstance(node.op, ast.USub) else x
        raise ParseError(f"unsupported angle expression {v!r}")

    try:
        return ev(ast.parse(v, mode="eval"))
    except SyntaxError as exc:
        raise ParseError(f"bad angle {v!r}") from exc


def parse_symbol_literal(lit) -> PCSymbol:
    if not isinstance(lit, list):
        raise ParseError("a symbol literal is a list of pieces")
    pieces = []
    for piece in lit:
        if not isinstance(piece, dict) or "arc" not in piece:
            raise ParseError(f"malformed piece {piece!r}")
        arc = piece["arc"]
        if not isinstance(arc, list) or len(arc) != 2:
            raise ParseError(f"arc must be [alpha, beta], got {arc!r}")
        pieces.append({"arc": [eval_angle(a) for a in arc], "modes": piece.get("modes") or {}})
    try:
        return PCSymbol.from_literal(pieces)
    except SymbolError as exc:
        raise ParseError(str(exc)) from exc


@dataclass
class RunConfig:
    symbols: dict[str, PCSymbol] = field(default_factory=dict)
    expressions: dict[str, SeqExpr] = field(default_factory=dict)
    ns: tuple[int, ...] = (4, 8, 16, 32, 64)
    windows: tuple[int, ...] = (16, 32, 64, 128)
    grids: tuple[int, ...] = (32, 64, 128)
    oracle_ns: tuple[int, ...] = (32, 64, 128)
    probe_window: int = 4
    margin: int | None = None
    floor: float = 1e-6
    trend_window: int = 3
    extra_points: tuple[float, ...] = ()

    def stability(self) -> StabilityConfig:
        return StabilityConfig(
            floor=self.floor,
            windows=self.windows,
            grids=self.grids,
            margin=self.margin,
            trend_window=self.trend_window,
            extra_points=self.extra_points,
        )


DEFAULT_CONFIG = """
symbols:
  t:    [{arc: [0, 2*pi], modes: {1: 1}}]
  two_plus_t: [{arc: [0, 2*pi], modes: {0: 2, 1: 1}}]
  chi_plus:   [{arc: [0, pi], modes: {0: 1}}, {arc: [pi, 2*pi], modes: {}}]
expressions:
  shift: '(laurent "t")'
  I+J: '(sum I J)'
  2I+J: '(sum (scale [2,0] I) J)'
  L(2+t): '(laurent "two_plus_t")'
  3I+J: '(sum (scale [3,0] I) J)'
  chiP+Q: '(sum (prod (laurent "chi_plus") P) Q)'
params: {}
"""


def _names_in(tree) -> set[str]:
    if isinstance(tree, tuple) and tree and tree[0] == "str":
        return {tree[1]}
    if isinstance(tree, list):
        out: set[str] = set()
        for x in tree:
            out |= _names_in(x)
        return out
    return set()


def _positive_ints(v, key) -> tuple[int, ...]:
    if not isinstance(v, list) or not v or not all(isinstance(x, int) and x > 0 for x in v):
        raise ValidationError(f"params.{key} must be a nonempty list of positive integers")
    if any(b <= a for a, b in zip(v, v[1:])):
        raise ValidationError(f"params.{key} must increase")
    return tuple(v)


def load_config(text: str) -> RunConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("config must be a mapping")
    cfg = RunConfig()
    for name, lit in (raw.get("symbols") or {}).items():
        cfg.symbols[str(name)] = parse_symbol_literal(lit)
    exprs = raw.get("expressions") or {}
    if not isinstance(exprs, dict):
        raise ParseError("expressions must be a mapping")
    for name, text_expr in exprs.items():
        if not isinstance(text_expr, str):
            raise ParseError(f"expression {name!r} must be a string")
        try:
            tree = read_sexpr(text_expr)
        except ExprError as exc:
            raise ParseError(f"expression {name!r}: {exc}") from exc
        missing = _names_in(tree) - set(cfg.symbols)
        if missing:
            raise ValidationError(f"expression {name!r} references unknown symbols {sorted(missing)}")
        try:
            cfg.expressions[str(name)] = tree_to_seq(tree, cfg.symbols)
            seq_block_dim(cfg.expressions[str(name)])
        except (ExprError, SymbolError) as exc:
            raise ValidationError(f"expression {name!r}: {exc}") from exc
    params = raw.get("params") or {}
    if not isinstance(params, dict):
        raise ParseError("params must be a mapping")
    for key in ("ns", "windows", "grids", "oracle_ns"):
        if key in params:
            setattr(cfg, key, _positive_ints(params[key], key))
    for key in ("probe_window", "trend_window"):
        if key in params:
            v = params[key]
            if not isinstance(v, int) or v <= 0:
                raise ValidationError(f"params.{key} must be a positive integer")
            setattr(cfg, key, v)
    if params.get("margin") is not None:
        if not isinstance(params["margin"], int) or params["margin"] < 0:
            raise ValidationError("params.margin must be a non-negative integer")
        cfg.margin = params["margin"]
    if "floor" in params:
        try:
            cfg.floor = float(params["floor"])
        except (TypeError, ValueError) as exc:
            raise ValidationError("params.floor must be a number") from exc
        if not cfg.floor > 0:
            raise ValidationError("params.floor must be positive")
    if "extra_points" in params:
        cfg.extra_points = tuple(eval_angle(x) for x in params["extra_points"] or [])
    selected = params.get("only")
    if selected is not None:
        unknown = set(selected) - set(cfg.expressions)
        if unknown:
            raise ValidationError(f"params.only names unknown expressions {sorted(unknown)}")
        cfg.expressions = {k: cfg.expressions[k] for k in selected}
    return cfg


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _slug(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name)


def cmd_sections(cfg: RunConfig, out: Path) -> int:
    for name, s in cfg.expressions.items():
        for n in cfg.ns:
            export_csv(assemble_seq(s, n, cfg.margin), out / f"{_slug(name)}_section_n{n}.csv")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    for name, s in cfg.expressions.items():
        sv_sweep(lambda n, s=s: assemble_seq(s, n, cfg.margin), cfg.ns).to_csv(out / f"{_slug(name)}_sweep.csv")
    return EXIT_OK


def cmd_maps(cfg: RunConfig, out: Path) -> int:
    for name, s in cfg.expressions.items():
        d = seq_block_dim(s)
        mp, mw = map_P(s), map_W(s)
        (out / f"{_slug(name)}_maps.txt").write_text(
            f"map_P: {to_text(mp, cfg.symbols)}\nmap_W: {to_text(mw, cfg.symbols)}\n"
        )
        probes = default_probes(cfg.probe_window, d)
        for which, pred in (("P", mp), ("W", mw)):
            lines = ["n,residual"]
            for n in cfg.oracle_ns:
                r = strong_limit_oracle(s, pred, n, probes, which, margin=cfg.margin)
                lines.append(f"{n},{fmt17(r)}")
            (out / f"{_slug(name)}_oracle_{which}.csv").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_local(cfg: RunConfig, out: Path) -> int:
    for name, s in cfg.expressions.items():
        doc = []
        for p in fiber_points(s, cfg.extra_points):
            chk = check_local_invertibility(local_symbol_seq(s, p), cfg.grids, cfg.floor)
            doc += [f"point: {p.label()}", f"kind: {p.kind}", f"symbol: {chk.text}", f"verdict: {chk.verdict}", ""]
            label = _slug(p.label())
            (out / f"{_slug(name)}_local_{label}.csv").write_text(
                "cells,sigma_min\n" + "".join(f"{c},{fmt17(v)}\n" for c, v in chk.rows)
            )
        if not doc:
            doc = ["no fiber points", ""]
        (out / f"{_slug(name)}_local.txt").write_text("\n".join(doc))
    return EXIT_OK


def cmd_report(cfg: RunConfig, out: Path) -> int:
    for name, s in cfg.expressions.items():
        rep = stability_report(s, cfg.stability())
        (out / f"{_slug(name)}_report.txt").write_text(f"expression: {name}\n" + rep.to_text())
        rep.write_csvs(out, f"{_slug(name)}_report")
        log.info("%s: predicted=%s observed=%s", name, rep.predicted, rep.observed_verdict)
    return EXIT_OK


def identity_suite(seed: int = 0) -> list[tuple[str, float, bool]]:
    """Built-in checks; each row is (name, max error, passed)."""
    rng = np.random.default_rng(seed)
    rows = []

    def add(name, err, tol):
        rows.append((name, float(err), bool(err <= tol)))

    for n in (8, 32):
        J = structured_op("J", n)
        add(f"J^2=I n={n}", np.abs(J @ J - np.eye(2 * n)).max(), 0.0)
        add(f"JPJ=Q n={n}", np.abs(J @ structured_op("P", n) @ J - structured_op("Q", n)).max(), 0.0)
    for k in range(3):
        d = 1 + k % 2
        modes = {m: rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) for m in range(-2, 3)}
        a = PCSymbol.trig(modes, d)
        lhs = assemble_windowed(Flip() * Laurent(a) * Flip(), 16, margin=4)
        rhs = assemble(Laurent(a.flip()), 16)
        add(f"JL(a)J=L(a~) sample={k}", np.abs(lhs - rhs).max(), 1e-12)
    chi = PCSymbol.chi_plus()
    probes = default_probes(4)
    for label, A in (("P", Proj()), ("Q", CoProj()), ("J", Flip())):
        s = Section(A)
        worst = max(strong_limit_oracle(s, map_W(s), n, probes) for n in (16, 32, 64))
        add(f"W-formula {label}", worst, 0.0)
    s = Section(Laurent(chi))
    res = [strong_limit_oracle(s, map_W(s), n, probes) for n in (32, 64, 128)]
    rows.append(("W-formula L(chi+) decreasing", res[-1], all(b <= a + 1e-14 for a, b in zip(res, res[1:]))))
    grid, half = GridSpec(32), GridSpec(32, "half", 32)
    om = omega_permutation(32)
    for label, op in (("chi+", ChiPos()), ("Jhat", FlipL()), ("S_R", SingR())):
        err = np.abs(om @ discretize(op, grid) @ om.T - discretize_block(phi_omega(op), half)).max()
        add(f"phi_omega {label}", err, 1e-10)
    idx = np.arange(-16, 16)
    add("E_-n E_n = I", np.abs(e_minus(16, idx) @ e_plus(16, idx) - np.eye(32)).max(), 1e-14)
    return rows


def cmd_identities(cfg: RunConfig, out: Path) -> int:
    rows = identity_suite()
    lines = ["name,max_error,status"] + [f"{n},{fmt17(e)},{'pass' if ok else 'FAIL'}" for n, e, ok in rows]
    (out / "identities.csv").write_text("\n".join(lines) + "\n")
    failed = [n for n, _, ok in rows if not ok]
    for n in failed:
        log.error("identity failed: %s", n)
    return EXIT_IDENTITY if failed else EXIT_OK


HANDLERS = {
    "sections": cmd_sections,
    "sweep": cmd_sweep,
    "maps": cmd_maps,
    "local": cmd_local,
    "report": cmd_report,
    "identities": cmd_identities,
}


def run(command: str, cfg: RunConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    try:
        return HANDLERS[command](cfg, out)
    except (np.linalg.LinAlgError, FloatingPointError, LineError, OverflowError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="finsec", description=__doc__.split("\n\n")[0])
    ap.add_argument("--config", type=Path, help="YAML run configuration (default: built-in corpus)")
    ap.add_argument("--out", type=Path, default=Path("finsec_out"), help="output directory")
    ap.add_argument("--command", choices=COMMANDS, required=True)
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text = args.config.read_text() if args.config else DEFAULT_CONFIG
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_PARSE
    try:
        cfg = load_config(text)
    except ParseError as exc:
        log.error("parse error: %s", exc)
        return EXIT_PARSE
    except ValidationError as exc:
        log.error("validation error: %s", exc)
        return EXIT_VALIDATION
    return run(args.command, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
