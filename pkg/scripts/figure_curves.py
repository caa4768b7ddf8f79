#!/usr/bin/env python3
"""BER curves and bound for identity vs designed h, one CSV per curve.

    python3 scripts/figure_curves.py --scheme ccm_bsm --ibo 3 --outdir results/
"""

import argparse
import logging
from pathlib import Path

from ccmlab.bound import write_bound_csv
from ccmlab.ccm import ConjugationFunction
from ccmlab.experiment import ExperimentConfig, run_ber, run_bound, run_optimize


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scheme", default="ccm_bsm", choices=["ccm_bsm", "ccm_mtm"])
    ap.add_argument("--ibo", type=float, default=3.0)
    ap.add_argument("--grid", default="2,3,4,5,6,7,8,9,10")
    ap.add_argument("--max-bits", type=int, default=10**8)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    grid = tuple(float(v) for v in args.grid.split(","))
    cfg = ExperimentConfig(scheme=args.scheme, ibo_db=args.ibo, ebn0_grid=grid, stop_max_bits=args.max_bits,
                           master_seed=args.seed, workers=args.workers)
    stem = f"{args.scheme}_ibo{args.ibo:g}"

    trace = run_optimize(cfg)
    trace.final.save(out / f"{stem}_h.txt")
    trace.write_csv(out / f"{stem}_trace.csv", cfg.to_lines())
    for tag, conj in (("designed", trace.final), ("identity", ConjugationFunction.identity(cfg.opt_m))):
        run_ber(cfg, conj).write_csv(out / f"{stem}_ber_{tag}.csv")
    write_bound_csv(out / f"{stem}_bound.csv", run_bound(cfg, trace.final), cfg.to_lines())
    print(f"wrote {stem}_* to {out}")


if __name__ == "__main__":
    main()
