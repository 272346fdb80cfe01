"""Build a chain of finite approximations to the generic limit and report growth per stage.

    python3 scripts/build_chain.py --stages 8 --size 3 --out /tmp/chain
"""

import argparse
import time

from fraisse_workbench import generic
from fraisse_workbench.structure import L, Lk


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--stages", type=int, default=8)
    ap.add_argument("--size", type=int, default=3, help="size budget for catalogued extensions")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--k", type=int, help="build inside K_k instead of K")
    ap.add_argument("--out", help="write the chain directory here")
    args = ap.parse_args()

    sig = L if args.k is None else Lk(args.k)
    t0 = time.perf_counter()
    chain = generic.build_chain(sig, args.stages, args.size, seed=args.seed)
    elapsed = time.perf_counter() - t0

    print(f"{'stage':>5} {'|U|':>5} {'|V|':>5} {'max rel':>7}")
    for i, s in enumerate(chain.stages):
        top_rel = max((r.rel for r in s.table.values()), default=0)
        print(f"{i:>5} {len(s.U):>5} {len(s.V):>5} {top_rel:>7}")
    print(f"requests={len(chain.request_log)} pending={len(chain.pending)} seconds={elapsed:.2f}")
    print("integrity:", "PASS" if generic.verify_chain_integrity(chain).ok else "FAIL")
    if args.out:
        generic.write_chain(chain, args.out)
        print("wrote", args.out)


if __name__ == "__main__":
    main()
