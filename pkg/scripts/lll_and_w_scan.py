"""Two small probes: resampling cost below the auto host size, and clean-copy frequency.

    python3 scripts/lll_and_w_scan.py lll --n 20 --d 3 --factors 1,0.5,0.25,0.1
    python3 scripts/lll_and_w_scan.py w --pattern clique:4 --N 4:12 --trials 100
"""

import argparse
import json

import numpy as np

from setmap import graphs, oracle
from setmap._prf import derive_seed
from setmap.cli import _int_list
from setmap.lll import BudgetExhausted, lll_condition, make_problem, moser_tardos, required_host_size


def lll_scan(args):
    p = graphs.random_regular(args.n, args.d, seed=args.seed)
    full = required_host_size(p)
    for factor in (float(x) for x in args.factors.split(",")):
        N = max(int(full * factor), p.n)
        counts, fails = [], 0
        for t in range(args.trials):
            prob = make_problem(p, N, seed=derive_seed(args.seed, N, t))
            try:
                counts.append(moser_tardos(prob, derive_seed(args.seed, N, t, 1)).resamples)
            except BudgetExhausted:
                fails += 1
        print(json.dumps({
            "N": N, "factor": factor, "lll_condition": lll_condition(p, N)[2],
            "events": prob.event_count, "budget_failures": fails,
            "mean_resamples": float(np.mean(counts)) if counts else None,
            "max_resamples": int(max(counts)) if counts else None,
        }))


def w_scan(args):
    kind, params = graphs.parse_generator(args.pattern)
    p = graphs.generate(kind, params, args.seed)
    for row in oracle.scan_w(p, _int_list(args.N), args.trials, args.seed, ell=args.ell):
        print(json.dumps(row))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="what", required=True)
    a = sub.add_parser("lll")
    a.add_argument("--n", type=int, default=20)
    a.add_argument("--d", type=int, default=3)
    a.add_argument("--factors", default="1,0.5,0.25,0.1,0.05")
    a.add_argument("--trials", type=int, default=50)
    a.add_argument("--seed", type=int, default=0)
    b = sub.add_parser("w")
    b.add_argument("--pattern", default="clique:4")
    b.add_argument("--N", default="4:12")
    b.add_argument("--ell", type=int, default=1)
    b.add_argument("--trials", type=int, default=100)
    b.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    (lll_scan if args.what == "lll" else w_scan)(args)


if __name__ == "__main__":
    main()
