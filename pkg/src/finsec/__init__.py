"""Finite sections of Toeplitz-plus-Hankel type operators with flip."""
from .symbol import PCSymbol, approx_identity, fejer_mean
from .opexpr import (
    Adjoint,
    CoProj,
    Flip,
    Ident,
    Laurent,
    Prod,
    Proj,
    Scale,
    Sum,
    canonical_form,
    finite_rank,
    normalize,
    parse_op,
)
from .sections import assemble, structured_op, sv_sweep, verdict_numeric
from .symbolmaps import JIdeal, Section, map_P, map_U, map_W, parse_seq, strong_limit_oracle
from .stability import StabilityConfig, stability_report

__version__ = "0.1.0"
