"""Stability verdicts for a small corpus, with the evidence behind each.

    python3 scripts/corpus_sweep.py [--windows 16 32 64 128] [--out corpus.csv]
"""
import argparse
import csv
import time

from finsec.opexpr import CoProj, Flip, Ident, Laurent, Proj
from finsec.stability import StabilityConfig, stability_report
from finsec.symbol import PCSymbol
from finsec.symbolmaps import Section

CORPUS = {
    "L(t)": Section(Laurent(PCSymbol.monomial(1))),
    "I+J": Section(Ident() + Flip()),
    "2I+J": Section(2 * Ident() + Flip()),
    "L(2+t)": Section(Laurent(PCSymbol.trig({0: 2.0, 1: 1.0}))),
    "3I+J": Section(3 * Ident() + Flip()),
    "L(chi+)P+Q": Section(Laurent(PCSymbol.chi_plus()) * Proj() + CoProj()),
    "L(chi+)P+2Q": Section(Laurent(PCSymbol.chi_plus() + 1.0) * Proj() + 2 * CoProj()),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--windows", type=int, nargs="+", default=[16, 32, 64, 128])
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    cfg = StabilityConfig(windows=tuple(args.windows))
    rows = []
    for name, s in CORPUS.items():
        t0 = time.perf_counter()
        rep = stability_report(s, cfg)
        rows.append({
            "case": name,
            "predicted": rep.predicted,
            "observed": rep.observed_verdict,
            "agree": rep.agreement,
            "evidence": " ".join(rep.evidence()),
            "sigma_min_last": rep.observed.sigma_min[-1],
            "cond_last": rep.observed.cond[-1],
            "seconds": round(time.perf_counter() - t0, 3),
        })
        r = rows[-1]
        print(f"{name:12s} predicted={r['predicted']:12s} observed={r['observed']:12s} agree={r['agree']}  "
              f"sigma_min={r['sigma_min_last']:.4g}  [{r['evidence']}]")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
