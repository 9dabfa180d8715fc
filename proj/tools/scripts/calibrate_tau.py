#!/usr/bin/env python3
"""Grid search for the tau constants (C_tau, A_tau) used by `apkit correlation`
and `apkit gycheck --shifts`.

A candidate passes when, on the calibration tuples, the correlation ratio stays
<= 1 and every two-shift divisor-sum ratio stays <= --gy-band. Among passing
candidates the smallest tau wins (A first, then C). The winner is then scored on
a held-out tuple set drawn from a different seed.

    python3 tools/scripts/calibrate_tau.py --apkit build/tools/apkit
"""

import argparse
import itertools
import json
import random
import subprocess
import sys


def run(apkit, *args):
    proc = subprocess.run([apkit, *map(str, args)], capture_output=True, text=True)
    if proc.returncode not in (0, 4):
        sys.exit(f"apkit {' '.join(map(str, args))} failed ({proc.returncode}): {proc.stderr}")
    return json.loads(proc.stdout)["result"]


def shift_pairs(seed, count, spread):
    rng = random.Random(seed)
    pairs = [(0, 1)]
    while len(pairs) < count:
        a, b = rng.sample(range(spread), 2)
        pairs.append((min(a, b), max(a, b)))
    return pairs


def score(apkit, args, c_tau, a_tau, seed, pairs):
    corr = run(apkit, "--seed", seed, "correlation", "--n", args.corr_n, "--measure", "majorant", "--w", args.w,
               "--theta", args.theta, "--m", 2, "--tuples", args.tuples, "--c-tau", c_tau, "--a-tau", a_tau)
    gy = [run(apkit, "gycheck", "--n", args.gy_n, "--w", args.w, "--theta", args.theta, "--shifts",
              f"{h0},{h1}", "--a-tau", a_tau)["ratio"] for h0, h1 in pairs]
    return corr["max_ratio"], max(gy)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--apkit", default="build/tools/apkit")
    ap.add_argument("--corr-n", type=int, default=10007)
    ap.add_argument("--gy-n", type=int, default=999983)
    ap.add_argument("--w", type=int, default=2)
    ap.add_argument("--theta", type=float, default=0.05)
    ap.add_argument("--tuples", type=int, default=100)
    ap.add_argument("--pairs", type=int, default=8)
    ap.add_argument("--spread", type=int, default=60, help="shifts are drawn from [0, spread)")
    ap.add_argument("--gy-band", type=float, default=1.2)
    ap.add_argument("--c-grid", default="1,2,4,8")
    ap.add_argument("--a-grid", default="1,2,3,4,6", help="A_tau values (m = 2)")
    ap.add_argument("--calibration-seed", type=int, default=1)
    ap.add_argument("--holdout-seed", type=int, default=2)
    args = ap.parse_args()

    cal_pairs = shift_pairs(args.calibration_seed, args.pairs, args.spread)
    hold_pairs = shift_pairs(args.holdout_seed, args.pairs, args.spread)
    c_grid = [float(c) for c in args.c_grid.split(",")]
    a_grid = [float(a) for a in args.a_grid.split(",")]

    winner = None
    print("A_tau  C_tau  corr_max  gy_max  pass")
    for a_tau, c_tau in itertools.product(sorted(a_grid), sorted(c_grid)):
        corr, gy = score(args.apkit, args, c_tau, a_tau, args.calibration_seed, cal_pairs)
        ok = corr <= 1.0 and gy <= args.gy_band
        print(f"{a_tau:5g}  {c_tau:5g}  {corr:8.4f}  {gy:6.4f}  {'yes' if ok else 'no'}")
        if ok and winner is None:
            winner = (a_tau, c_tau)

    if winner is None:
        print("no candidate passed on the calibration set")
        return 1
    corr, gy = score(args.apkit, args, winner[1], winner[0], args.holdout_seed, hold_pairs)
    verdict = corr <= 1.0 and gy <= args.gy_band
    print(f"chosen A_tau={winner[0]:g} C_tau={winner[1]:g}; held-out corr_max={corr:.4f} gy_max={gy:.4f} "
          f"{'pass' if verdict else 'FAIL'}")
    return 0 if verdict else 1


if __name__ == "__main__":
    sys.exit(main())
