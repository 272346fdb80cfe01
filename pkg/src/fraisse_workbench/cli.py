"""Command-line front end.

Exit codes: 0 ok, 1 domain failure, 2 input error, 3 budget exhausted.
``--format machine`` prints sorted KEY=VALUE lines.  WORKBENCH_BUDGET_MS caps
the wall-clock time of the verification suites.
"""

from __future__ import annotations

import argparse
import itertools
import os
import random
import sys
import time
from typing import Dict, List, Optional

from . import combinatorics as comb
from . import generic, prime, witness
from .amalgam import amalgamate, check_K, check_Kk
from .closure import is_independent
from .errors import BudgetExceeded, PreconditionError, SignatureMismatch, StructureError, WorkbenchError
from .structure import Embedding, L, Lk, read_structure, write_structure

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class Output:
    def __init__(self, fmt: str):
        self.fmt = fmt
        self.keys: Dict[str, str] = {}
        self.lines: List[str] = []

    def put(self, key: str, value) -> None:
        self.keys[key] = str(value)

    def say(self, line: str) -> None:
        self.lines.append(line)

    def flush(self) -> None:
        if self.fmt == "machine":
            for k in sorted(self.keys):
                print(f"{k}={self.keys[k]}")
        else:
            for line in self.lines:
                print(line)


class Deadline:
    def __init__(self):
        ms = os.environ.get("WORKBENCH_BUDGET_MS")
        self.limit = None if ms is None else time.monotonic() + int(ms) / 1000.0

    def check(self, what: str) -> None:
        if self.limit is not None and time.monotonic() > self.limit:
            raise BudgetExceeded(f"WORKBENCH_BUDGET_MS exhausted during {what}")


def _ids(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()] if text else []


def _read_map(path: Optional[str], default: List[int]) -> List[int]:
    if path is None:
        return default
    with open(path, encoding="utf-8") as fh:
        return _ids(fh.read().strip())


def _write_map(path: str, m) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(map(str, m)) + "\n")


# -- commands -----------------------------------------------------------------------


def cmd_check(args, out: Output) -> int:
    s = read_structure(args.path)
    if args.cls == "Kk":
        k = args.k if args.k is not None else s.signature.k
        rep = check_Kk(s, k)
    else:
        rep = check_K(s)
    out.put("MEMBER", int(rep.verdict))
    out.put("VIOLATIONS", len(rep.violations))
    for i, line in enumerate(rep.lines()):
        out.say(line)
        out.put(f"VIOLATION.{i:04d}", line.split(" ", 1)[1])
    out.say("member" if rep.verdict else "not a member")
    return EXIT_OK if rep.verdict else EXIT_FAIL


def cmd_amalgamate(args, out: Output) -> int:
    A, B, C = (read_structure(p) for p in (args.a, args.b, args.c))
    eAB = Embedding(A, B, tuple(_read_map(args.map_b, list(A.universe))))
    eAC = Embedding(A, C, tuple(_read_map(args.map_c, list(A.universe))))
    D, eBD, eCD, k = amalgamate(A, B, C, eAB, eAC)
    os.makedirs(args.out, exist_ok=True)
    write_structure(D, os.path.join(args.out, "D.txt"))
    _write_map(os.path.join(args.out, "eBD.map"), eBD.map)
    _write_map(os.path.join(args.out, "eCD.map"), eCD.map)
    out.put("K", k)
    out.put("SIZE", D.size)
    out.say(f"fresh index k={k}; D has {D.size} elements; written to {args.out}")
    return EXIT_OK


def cmd_generic(args, out: Output) -> int:
    sig = L if args.k is None else Lk(args.k)
    if args.action == "build":
        chain = generic.build_chain(sig, args.stages, args.size, seed=args.seed, max_rel=args.max_rel)
        generic.write_chain(chain, args.dir)
        out.put("STAGES", len(chain.stages))
        out.put("SIZE", chain.top.size)
        out.put("REQUESTS", len(chain.request_log))
        out.put("PENDING", len(chain.pending))
        out.put("SEED", args.seed)
        out.say(f"seed={args.seed} stages={len(chain.stages)} top size={chain.top.size} "
                f"log={len(chain.request_log)} pending={len(chain.pending)}")
        return EXIT_OK
    deadline = Deadline()
    chain = generic.load_chain(args.dir)
    reports = []
    suites = [
        ("integrity", lambda: generic.verify_chain_integrity(chain)),
        ("extension", lambda: generic.verify_extension_property(chain, args.a_cap, args.a_prime_cap)),
        ("facts", lambda: generic.verify_recorded_facts(chain, args.size_cap)),
        ("indiscernibility", lambda: generic.indiscernibility_check(chain, args.n_cap)),
        ("isolation", lambda: isolation_suite(chain, args.iso_stage, args.iso_len, deadline)),
    ]
    for name, run in suites:
        deadline.check(name)
        rep = run()
        reports.append((name, rep))
    width = max(len(n) for n, _ in reports)
    out.say(f"{'suite'.ljust(width)}  checked  failures")
    for name, rep in reports:
        out.say(f"{name.ljust(width)}  {rep.checked:7d}  {len(rep.failures):8d}")
        out.put(f"{name.upper()}.CHECKED", rep.checked)
        out.put(f"{name.upper()}.FAILURES", len(rep.failures))
        for f in rep.failures[:5]:
            out.say(f"  {name}: {f}")
    ok = all(rep.ok for _, rep in reports)
    out.put("VERDICT", "PASS" if ok else "FAIL")
    out.say("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def isolation_suite(chain, stage: int, max_len: int, deadline: Optional[Deadline] = None):
    """check_isolation for every tuple of length <= max_len of one stage."""
    from .reports import Report

    total = Report("isolation")
    if stage >= len(chain.stages):
        total.fail(f"chain has no stage {stage}")
        return total
    st = chain.stages[stage]
    index: dict = {}
    for n in range(1, max_len + 1):
        for tup in itertools.product(st.universe, repeat=n):
            if deadline is not None:
                deadline.check("isolation")
            d = generic.isolating_diagram(chain, stage, tup)
            rep = generic.check_isolation(chain, d, len(chain.stages) - 1, index)
            total.checked += rep.checked
            total.failures.extend(f"{tup}: {f}" for f in rep.failures)
    return total


def cmd_gnfamily(args, out: Output) -> int:
    if args.action == "build":
        fam = comb.build_gn_family(args.k, args.n)
        text = comb.serialize_family(fam)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            out.say(text.rstrip("\n"))
        out.put("K", fam.k)
        out.put("N", fam.carrier_size)
        out.put("N_MAX", fam.n_max)
        return EXIT_OK
    if args.file:
        with open(args.file, encoding="utf-8") as fh:
            fam = comb.parse_family(fh.read())
    else:
        fam = comb.build_gn_family(args.k, args.n)
    Deadline().check("gnfamily")
    rep = comb.verify_gn_family(fam)
    out.put("K", fam.k)
    out.put("N", fam.carrier_size)
    out.put("CHECKED", rep.checked)
    out.put("FAILURES", len(rep.failures))
    out.put("VERDICT", "PASS" if rep.ok else "FAIL")
    out.say(rep.summary())
    out.say("PASS" if rep.ok else "FAIL")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_lemma2(args, out: Output) -> int:
    rng = random.Random(args.seed)
    deadline = Deadline()
    found = not_found = unverified = 0
    for trial in range(args.trials):
        deadline.check("lemma2")
        n = args.n if args.n is not None else rng.randint(1, 24)
        if args.construction == "gn":
            op = comb.gn_operator(comb.build_gn_family(args.k, n))
        elif args.construction == "identity":
            op = comb.GeneratedClosure(range(n), [])
        else:
            op = comb.random_operator(rng, n)
        res = comb.find_independent_set(op, args.target)
        if res is None:
            not_found += 1
            out.say(f"trial {trial} n={n}: NOT-FOUND")
        else:
            ok = len(res) == args.target and is_independent(op, res)
            unverified += not ok
            found += 1
            out.say(f"trial {trial} n={n}: FOUND {','.join(map(str, sorted(res)))}{'' if ok else ' (NOT INDEPENDENT)'}")
    out.put("SEED", args.seed)
    out.put("FOUND", found)
    out.put("NOT_FOUND", not_found)
    out.put("UNVERIFIED", unverified)
    out.say(f"seed={args.seed} found={found} not-found={not_found} unverified={unverified}")
    return EXIT_OK if unverified == 0 else EXIT_FAIL


def cmd_probe(args, out: Output) -> int:
    rows = comb.threshold_probe(args.k, args.construction, args.trials, _ids(args.sizes), _ids(args.targets), args.seed)
    for r in rows:
        out.put(f"THRESHOLD.{r.trial:03d}.{r.target}", "-" if r.threshold is None else r.threshold)
    out.put("SEED", args.seed)
    out.say(comb.format_probe(rows).rstrip("\n"))
    return EXIT_OK


def cmd_prime(args, out: Output) -> int:
    if args.action == "build":
        if not args.out:
            raise ValueError("prime build needs --out")
        stage = read_structure(args.path)
        bp = prime.build_prime(stage, args.d_count)
        write_structure(bp, args.out)
        out.put("D_COUNT", bp.signature.named_constants)
        out.say(f"wrote {args.out} with d_count={bp.signature.named_constants}")
        return EXIT_OK
    bp = read_structure(args.path)
    Deadline().check("prime check")
    rep = prime.check_substitution(bp, args.n, args.depth, args.index_cap)
    cands = prime.find_p_witness_candidates(bp, prime.TypeP(bp.signature.named_constants))
    out.put("CHECKED", rep.checked)
    out.put("COUNTEREXAMPLES", len(rep.failures))
    out.put("P_CANDIDATES", ",".join(map(str, cands)) or "-")
    for f in rep.failures:
        out.say(f"COUNTEREXAMPLE {f}")
    out.say(f"checked={rep.checked} counterexamples={len(rep.failures)} p-candidates={len(cands)}")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_extend(args, out: Output) -> int:
    A = read_structure(args.a)
    D = read_structure(args.d)
    dbar = sorted(_ids(args.dbar))
    from .structure import induced

    dsub, _ = induced(A, dbar)
    eD = Embedding(dsub, D, tuple(_ids(args.map) if args.map else range(len(dbar))))
    C, _, _ = witness.extend_with_witness(A, dbar, D, eD, args.k, args.size_cap)
    write_structure(C, args.out)
    rep = witness.verify_local_membership(C, args.k, args.size_cap)
    out.put("SIZE", C.size)
    out.put("CHECKED", rep.checked)
    out.put("FAILURES", len(rep.failures))
    for f in rep.failures:
        out.say(f)
    out.say(f"wrote {args.out} ({C.size} elements); {rep.summary()}")
    return EXIT_OK if rep.ok else EXIT_FAIL


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "machine"), default=argparse.SUPPRESS)
    ap = argparse.ArgumentParser(prog="fraisse-workbench", description=__doc__.splitlines()[0])
    ap.add_argument("--format", choices=("text", "machine"), default="text")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="membership in K or K_k")
    p.add_argument("path")
    p.add_argument("--class", dest="cls", choices=("K", "Kk"), default="K")
    p.add_argument("--k", type=int)
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("amalgamate", parents=[common], help="amalgamate B and C over A")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("c")
    p.add_argument("--map-b", help="file with the ids of A's image in B")
    p.add_argument("--map-c", help="file with the ids of A's image in C")
    p.add_argument("--out", required=True)
    p.set_defaults(run=cmd_amalgamate)

    p = sub.add_parser("generic", parents=[common], help="build or verify an approximation chain")
    p.add_argument("action", choices=("build", "verify"))
    p.add_argument("--dir", required=True)
    p.add_argument("--stages", type=int, default=12)
    p.add_argument("--size", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-rel", type=int, default=0)
    p.add_argument("--k", type=int, help="build in L_k instead of L")
    p.add_argument("--a-cap", type=int, default=2)
    p.add_argument("--a-prime-cap", type=int, default=3)
    p.add_argument("--size-cap", type=int, default=3)
    p.add_argument("--n-cap", type=int, default=3)
    p.add_argument("--iso-stage", type=int, default=4)
    p.add_argument("--iso-len", type=int, default=2)
    p.set_defaults(run=cmd_generic)

    p = sub.add_parser("gnfamily", parents=[common], help="g_n families without independent (k+1)-sets")
    p.add_argument("action", choices=("build", "verify"))
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--file")
    p.add_argument("--out")
    p.set_defaults(run=cmd_gnfamily)

    p = sub.add_parser("lemma2", parents=[common], help="independent-set search on sampled operators")
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--construction", choices=("random", "gn", "identity"), default="random")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--n", type=int, help="carrier size (random in 1..24 if omitted)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(run=cmd_lemma2)

    p = sub.add_parser("probe", parents=[common], help="least carrier size with an independent set")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--construction", choices=("random", "gn", "identity"), default="random")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--sizes", default="2,4,8,12,16,20,24")
    p.add_argument("--targets", default="1,2,3")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(run=cmd_probe)

    p = sub.add_parser("prime", parents=[common], help="the L' enrichment of a stage")
    p.add_argument("action", choices=("build", "check"))
    p.add_argument("path")
    p.add_argument("--d-count", type=int)
    p.add_argument("--out")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--index-cap", type=int)
    p.set_defaults(run=cmd_prime)

    p = sub.add_parser("extend", parents=[common], help="add a witness structure to a locally-K_k structure")
    p.add_argument("a")
    p.add_argument("d")
    p.add_argument("--dbar", default="")
    p.add_argument("--map", help="ids in D of the sorted dbar points (default 0..)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--size-cap", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(run=cmd_extend)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    out = Output(args.format)
    try:
        code = args.run(args, out)
    except BudgetExceeded as exc:
        out.put("ERROR", "budget")
        out.say(f"budget exhausted: {exc}")
        code = EXIT_BUDGET
    except PreconditionError as exc:
        out.put("ERROR", "precondition")
        out.say(f"error: {exc}")
        code = EXIT_FAIL
    except (StructureError, SignatureMismatch, OSError, ValueError) as exc:
        out.put("ERROR", "input")
        out.say(f"input error: {exc}")
        code = EXIT_INPUT
    except WorkbenchError as exc:
        out.put("ERROR", "domain")
        out.say(f"error: {exc}")
        code = EXIT_FAIL
    out.put("EXIT", code)
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
