"""Fejer means and moving averages of chi_+ near its jump at angle 0.

The Fejer mean at the jump sits at 1/2 for every n; slightly off the jump it
approaches the one-sided limit as n grows.  The moving average is exactly 1/2
at the jump for every admissible lambda.
"""
import argparse

import numpy as np

from finsec.symbol import PCSymbol, approx_identity, fejer_mean


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ns", type=int, nargs="+", default=[10, 50, 200, 1000])
    ap.add_argument("--offset", type=float, default=0.05, help="angle off the jump")
    args = ap.parse_args()
    chi = PCSymbol.chi_plus()
    print("n,at_jump,at_+offset,at_-offset")
    for n in args.ns:
        vals = [fejer_mean(chi, n, th)[0, 0].real for th in (0.0, args.offset, -args.offset)]
        print(f"{n}," + ",".join(f"{v:.6f}" for v in vals))
    print("lambda,moving_average_at_0,moving_average_at_pi")
    for lam in np.geomspace(1, 1e4, 5):
        a = approx_identity(chi, "moving_average", lam, 0.0)[0, 0].real
        b = approx_identity(chi, "moving_average", lam, np.pi)[0, 0].real
        print(f"{lam:.6g},{float(a)!r},{float(b)!r}")


if __name__ == "__main__":
    main()
