#!/usr/bin/env python3
"""Bound vs simulated BER as the optimizer's parameter box widens.

A wide box lets h flatten into steps; for the tent multimap that opens
ambiguous events longer than the enumerated loops, and the bound stops
tracking the BER. This scan shows where that happens.

    python3 scripts/box_scan.py --scheme ccm_mtm --ibo 5 --boxes 1 1.5 2 2.5 4
"""

import argparse
import logging
from dataclasses import replace

from ccmlab.experiment import ExperimentConfig, mass_near, run_ber, run_bound, run_optimize, sample_stream


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scheme", default="ccm_mtm", choices=["ccm_bsm", "ccm_mtm"])
    ap.add_argument("--ibo", type=float, default=5.0)
    ap.add_argument("--boxes", type=float, nargs="+", default=[1.0, 1.5, 2.0, 2.5, 4.0])
    ap.add_argument("--ebn0", type=float, default=8.0)
    ap.add_argument("--max-bits", type=int, default=3 * 10**6)
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    base = ExperimentConfig(scheme=args.scheme, ibo_db=args.ibo, ebn0_grid=(args.ebn0,),
                            stop_max_bits=args.max_bits)
    print("box,bound,ber,bit_errors,mass_near_0_half_1")
    for box in args.boxes:
        cfg = replace(base, opt_param_bound=box)
        conj = run_optimize(cfg).final
        b = run_bound(cfg, conj)[0].value
        pt = run_ber(cfg, conj).points[0]
        mass = mass_near(sample_stream(cfg, 10**5, conj))
        print(f"{box:g},{b:.3e},{pt.ber:.3e},{pt.bit_errors},{mass:.3f}", flush=True)


if __name__ == "__main__":
    main()
