#!/usr/bin/env python3
"""Eb/N0 needed for a target BER at two back-offs, CCM (designed h) vs the CC/4-PAM link.

    python3 scripts/robustness.py --target 1e-4 --out results/robustness.csv
"""

import argparse
import csv
import logging
import time

from ccmlab.experiment import ExperimentConfig, required_ebn0, run_optimize


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--target", type=float, default=1e-4)
    ap.add_argument("--ibo", type=float, nargs=2, default=(40.0, 5.0), metavar=("LINEAR", "COMPRESSED"))
    ap.add_argument("--schemes", nargs="+", default=["ccm_bsm", "ccm_mtm", "baseline"])
    ap.add_argument("--start", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    rows = []
    for scheme in args.schemes:
        need = []
        for ibo in args.ibo:
            cfg = ExperimentConfig(scheme=scheme, ibo_db=ibo, ebn0_grid=(args.start, args.start + 0.5),
                                   master_seed=args.seed, workers=args.workers)
            conj = None
            t0 = time.time()
            if scheme != "baseline":
                conj = run_optimize(cfg).final
            eb, _ = required_ebn0(cfg, args.target, conj)
            need.append(eb)
            print(f"{scheme:9s} ibo {ibo:5.1f} dB: Eb/N0 @ {args.target:g} = {eb:.3f} dB ({time.time() - t0:.0f} s)")
        rows.append((scheme, *need, need[1] - need[0]))
        print(f"{scheme:9s} penalty {need[1] - need[0]:.3f} dB")

    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["scheme", f"ebn0_ibo{args.ibo[0]:g}", f"ebn0_ibo{args.ibo[1]:g}", "penalty_db"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
