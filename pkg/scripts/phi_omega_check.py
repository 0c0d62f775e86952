"""Discrete doubling check: omega-permuted whole-line matrices vs half-line blocks."""
import argparse
import time

import numpy as np

from finsec.linemodels import (
    ChiPos,
    FlipL,
    GridSpec,
    ProdL,
    SingR,
    SumL,
    discretize,
    discretize_block,
    omega_permutation,
    phi_omega,
)

OPS = {
    "chi": ChiPos(),
    "Jhat": FlipL(),
    "S_R": SingR(),
    "chi S_R Jhat": ProdL((ChiPos(), SingR(), FlipL())),
    "S_R + Jhat": SumL((SingR(), FlipL())),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cells", type=int, nargs="+", default=[16, 64, 128, 256])
    args = ap.parse_args()
    print("cells,operator,max_abs_error,seconds")
    for cells in args.cells:
        W = omega_permutation(cells)
        for name, op in OPS.items():
            t0 = time.perf_counter()
            lhs = W @ discretize(op, GridSpec(cells)) @ W.T
            rhs = discretize_block(phi_omega(op), GridSpec(cells, "half", m=cells))
            print(f"{cells},{name},{np.abs(lhs - rhs).max():.3g},{time.perf_counter() - t0:.3f}")


if __name__ == "__main__":
    main()
