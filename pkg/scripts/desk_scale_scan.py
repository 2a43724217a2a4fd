"""Success rate of the block pipeline against the host-size constant C.

    python3 scripts/desk_scale_scan.py --C 8,16,32,64,128,256 --seeds 50 --out desk.csv
"""

import argparse
import csv
import math
import sys
import time

from setmap import graphs
from setmap._prf import derive_seed
from setmap.embedder import PipelineConfig, RetriesExhausted, embed_pipeline
from setmap.mappings import gen_uniform_disjoint

PATTERNS = {
    "K14": lambda: graphs.clique(14),
    "K10,10": lambda: graphs.complete_bipartite(10, 10),
    "P101": lambda: graphs.path(101),
    "random(40,100)": lambda: graphs.random_pattern(40, 100, seed=40100),
}


def scan(name, p, C, seeds, ell, seed):
    N = math.ceil(C * ell * p.m)
    f = gen_uniform_disjoint(N, 2, ell, derive_seed(seed, N), dense=False)
    t0 = time.perf_counter()
    ok, retries = 0, []
    for s in range(seeds):
        try:
            _, report = embed_pipeline(p, f, PipelineConfig(C=C, ell=ell, seed=derive_seed(seed, N, s)))
        except RetriesExhausted:
            continue
        ok += 1
        retries.append(report.retries)
    return {
        "pattern": name, "m": p.m, "C": C, "N": N, "seeds": seeds, "successes": ok,
        "success_rate": ok / seeds,
        "mean_retries": sum(retries) / len(retries) if retries else "",
        "seconds": round(time.perf_counter() - t0, 2),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--C", default="16,64,256", help="comma separated constants")
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--ell", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--patterns", default=",".join(PATTERNS))
    ap.add_argument("--out", help="CSV path (stdout if omitted)")
    args = ap.parse_args(argv)

    rows = []
    for name in args.patterns.split(","):
        p = PATTERNS[name]()
        for C in (float(c) for c in args.C.split(",")):
            row = scan(name, p, C, args.seeds, args.ell, args.seed)
            print(f"{name:>16} C={C:<6g} N={row['N']:<7} success={row['success_rate']:.2f}", file=sys.stderr)
            rows.append(row)

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(out, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    if args.out:
        out.close()


if __name__ == "__main__":
    main()
