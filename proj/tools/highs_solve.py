#!/usr/bin/env python3
"""Solve an MPS file with HiGHS and write a raw HiGHS solution file.

usage: highs_solve.py MODEL.mps SOLUTION.sol [--time-limit S] [--mip-gap G]

The tight default tolerances keep constraint residuals of the returned point
well below 1e-7.
"""
import argparse
import sys

import highspy


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("mps")
    ap.add_argument("sol")
    ap.add_argument("--time-limit", type=float, default=600.0)
    ap.add_argument("--mip-gap", type=float, default=1e-9)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("threads", args.threads)
    h.setOptionValue("time_limit", args.time_limit)
    h.setOptionValue("mip_rel_gap", args.mip_gap)
    h.setOptionValue("mip_abs_gap", 1e-9)
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    h.setOptionValue("dual_feasibility_tolerance", 1e-9)
    h.setOptionValue("mip_feasibility_tolerance", 1e-9)

    if h.readModel(args.mps) == highspy.HighsStatus.kError:
        print("cannot read " + args.mps, file=sys.stderr)
        return 2
    h.run()
    status = h.getModelStatus()
    print("status " + h.modelStatusToString(status))
    info = h.getInfo()
    if h.getLp().integrality_ and info.mip_gap < 1e300:
        print("mip_gap %.17g" % info.mip_gap)
    h.writeSolution(args.sol, 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
