"""Strong-limit residuals of the predicted W-image for L(chi_+) and friends.

Generators give exactly zero; a jump symbol converges like 1/n.
"""
import argparse

from finsec.opexpr import Flip, Laurent, Proj
from finsec.symbol import PCSymbol
from finsec.symbolmaps import Section, default_probes, map_P, map_W, strong_limit_oracle

ATOMS = {
    "P": Proj(),
    "J": Flip(),
    "L(chi+)": Laurent(PCSymbol.chi_plus()),
    "L(ind[1,2.5])": Laurent(PCSymbol.indicator(1.0, 2.5)),
    "L(2+t)": Laurent(PCSymbol.trig({0: 2.0, 1: 1.0})),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ns", type=int, nargs="+", default=[16, 32, 64, 128, 256])
    ap.add_argument("--probe-window", type=int, default=4)
    args = ap.parse_args()
    probes = default_probes(args.probe_window)
    print("atom,which,n,residual,n*residual")
    for name, A in ATOMS.items():
        s = Section(A)
        for which, pred in (("W", map_W(s)), ("P", map_P(s))):
            for n in args.ns:
                r = strong_limit_oracle(s, pred, n, probes, which)
                print(f"{name},{which},{n},{r:.6g},{n * r:.6g}")


if __name__ == "__main__":
    main()
