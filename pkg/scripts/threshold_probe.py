"""Tabulate the smallest carrier size at which each closure construction first admits an
independent set of a given size.

    python3 scripts/threshold_probe.py --k 1 --max-size 24 --targets 1,2,3
"""

import argparse

from fraisse_workbench import combinatorics as comb


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--max-size", type=int, default=20)
    ap.add_argument("--targets", default="1,2,3")
    ap.add_argument("--trials", type=int, default=5, help="trials for the random construction")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sizes = range(1, args.max_size + 1)
    targets = [int(x) for x in args.targets.split(",")]
    rows = []
    for construction, trials in (("identity", 1), ("gn", 1), ("random", args.trials)):
        rows += comb.threshold_probe(args.k, construction, trials, sizes, targets, seed=args.seed)
    print(comb.format_probe(rows))


if __name__ == "__main__":
    main()
