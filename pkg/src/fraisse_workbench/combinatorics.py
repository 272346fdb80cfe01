"""Finite versions of the independent-set extraction recursion and of the
g_n function families with no large independent sets."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .closure import GeneratedClosure, RelativeClosure, as_operator, is_independent
from .errors import BudgetExceeded, StructureParseError
from .reports import Report

Tup = Tuple[int, ...]

DEFAULT_FAMILY_BUDGET = 2_000_000


@dataclass(frozen=True)
class GTuple:
    """Values of g_0, g_1, ... on one tuple: ``vals`` up to ``stab``, then ``tail`` forever."""

    vals: Tup
    tail: int

    @property
    def stab(self) -> int:
        return len(self.vals)

    def value(self, n: int) -> int:
        return self.vals[n] if n < len(self.vals) else self.tail


@dataclass
class GnFamily:
    k: int
    carrier_size: int
    table: Dict[Tup, GTuple]

    @property
    def n_max(self) -> int:
        return max((g.stab for g in self.table.values()), default=0)

    def g(self, n: int, t: Sequence[int]) -> int:
        return self.table[tuple(t)].value(n)

    @property
    def functions(self) -> List[Dict[Tup, int]]:
        """Materialised g_0..g_{n_max} as total maps carrier^k -> carrier."""
        return [{t: rec.value(n) for t, rec in self.table.items()} for n in range(self.n_max + 1)]


def _g1(i: int) -> GTuple:
    return GTuple(tuple(range(i)), i)


def _gtuple(t: Tup, memo: Dict[Tup, GTuple]) -> GTuple:
    hit = memo.get(t)
    if hit is not None:
        return hit
    if len(t) == 1:
        out = _g1(t[0])
    else:
        top = max(t)
        where = [j for j, x in enumerate(t) if x == top]
        if len(where) > 1:
            out = GTuple((), top)
        else:
            # the shorter family lives on {a_j : j < top}; values there do not
            # depend on the size of the enumerated set, only on the tuple
            out = _gtuple(t[: where[0]] + t[where[0] + 1:], memo)
    memo[t] = out
    return out


def build_gn_family(k: int, N: int, budget: int = DEFAULT_FAMILY_BUDGET) -> GnFamily:
    """g_n on {a_0..a_{N-1}}^k (a_i is the id i).

    k = 1: g_n(a_i) = a_n for n < i and a_i otherwise.  For k + 1 with maximum
    index i*: a unique maximum is deleted and the k-family on {a_j : j < i*}
    is used; a repeated maximum gives the constant a_{i*}.
    """
    if k < 1 or N < 1:
        raise ValueError("need k >= 1 and N >= 1")
    if N ** k > budget:
        raise BudgetExceeded(f"{N}^{k} tuples exceed the family budget {budget}")
    memo: Dict[Tup, GTuple] = {}
    table = {t: _gtuple(t, memo) for t in itertools.product(range(N), repeat=k)}
    return GnFamily(k, N, table)


def gn_operator(fam: GnFamily, drop: Iterable[int] = ()) -> GeneratedClosure:
    """Closure under g_0..g_{n_max} (every later g_m stays inside its argument)."""
    drop = set(drop)
    gens = [(fam.k, fn) for n, fn in enumerate(fam.functions) if n not in drop]
    if not gens:
        gens = [(fam.k, {t: t[0] for t in fam.table})]
    return GeneratedClosure(range(fam.carrier_size), gens)


def verify_gn_family(fam: GnFamily) -> Report:
    rep = Report("gn_family")
    N, k = fam.carrier_size, fam.k
    for t in itertools.product(range(N), repeat=k):
        rep.checked += 1
        rec = fam.table.get(t)
        if rec is None:
            rep.fail(f"g undefined on {t}")
            continue
        if any(not 0 <= v < N for v in rec.vals + (rec.tail,)):
            rep.fail(f"g leaves the carrier on {t}")
        if rec.tail not in t:
            rep.fail(f"{t} does not stabilise inside the tuple")
    op = gn_operator(fam)
    sizes = [len(op.closure(t)) for t in itertools.product(range(N), repeat=k)]
    rep.stats["max_closure"] = max(sizes, default=0)
    rep.stats["n_max"] = fam.n_max
    for S in itertools.combinations(range(N), k + 1):
        rep.checked += 1
        if is_independent(op, S):
            rep.fail(f"independent set {S}")
    return rep


def serialize_family(fam: GnFamily) -> str:
    lines = [f"gnfamily k={fam.k} n={fam.carrier_size}"]
    for t in sorted(fam.table):
        rec = fam.table[t]
        lines.append(f"gtuple {','.join(map(str, t))} stab={rec.stab} vals=[{','.join(map(str, rec.vals))}] tail={rec.tail}")
    return "\n".join(lines) + "\n"


def parse_family(text: str) -> GnFamily:
    k = N = None
    table: Dict[Tup, GTuple] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "gnfamily" and k is None:
                kv = dict(p.split("=", 1) for p in parts[1:])
                k, N = int(kv["k"]), int(kv["n"])
            elif parts[0] == "gtuple" and k is not None:
                t = tuple(int(x) for x in parts[1].split(","))
                kv = dict(p.split("=", 1) for p in parts[2:])
                body = kv["vals"].strip("[]")
                vals = tuple(int(x) for x in body.split(",")) if body else ()
                if len(t) != k or int(kv["stab"]) != len(vals) or t in table:
                    raise ValueError
                table[t] = GTuple(vals, int(kv["tail"]))
            else:
                raise ValueError
        except (ValueError, KeyError, IndexError):
            raise StructureParseError(lineno, "expected a 'gnfamily' header then 'gtuple' lines") from None
    if k is None:
        raise StructureParseError(1, "missing gnfamily header")
    return GnFamily(k, N, table)


# -- independent-set extraction ---------------------------------------------------


def find_independent_set(op, target: int) -> Optional[FrozenSet[int]]:
    """An independent set of size ``target``, or None if there is none.

    Follows the recursion: take a proper closed Y = cl(seed), a point b outside
    Y, and look for a set of size target - 1 in Y for cl'(A) = cl(A ∪ {b}) ∩ Y.
    Seeds have size < target and are tried in ascending order; b is the least
    candidate first.  The search backtracks over all (Y, b), so None means no
    independent set of that size exists.
    """
    op = as_operator(op)
    if target <= 0:
        return frozenset()
    carrier = sorted(op.carrier)
    if target == 1:
        c0 = op.closure(())
        rest = [x for x in carrier if x not in c0]
        return frozenset(rest[:1]) if rest else None
    tried = set()
    for r in range(target):
        for seed in itertools.combinations(carrier, r):
            Y = op.closure(seed)
            if len(Y) == len(carrier) or Y in tried:
                continue
            tried.add(Y)
            for b in carrier:
                if b in Y:
                    continue
                sub = find_independent_set(RelativeClosure(op, Y, b), target - 1)
                if sub is not None:
                    return sub | {b}
    return None


def random_operator(rng: random.Random, n: int, n_unary: int = 2, n_binary: int = 1, spread: int = 3) -> GeneratedClosure:
    """Random operator on {0..n-1} whose generators never increase the maximum.

    Each value is within ``spread`` below its largest argument, so closures
    stay small, and every initial segment {0..m-1} is closed.
    """
    gens = []
    for _ in range(n_unary):
        gens.append((1, {(x,): rng.randint(max(0, x - spread), x) for x in range(n)}))
    for _ in range(n_binary):
        gr = {}
        for t in itertools.product(range(n), repeat=2):
            m = max(t)
            gr[t] = rng.randint(max(0, m - spread), m)
        gens.append((2, gr))
    return GeneratedClosure(range(n), gens)


def restrict_operator(op: GeneratedClosure, m: int) -> GeneratedClosure:
    """Restriction to the closed initial segment {0..m-1}."""
    gens = []
    for a, gr in op.generators:
        sub = {t: v for t, v in gr.items() if all(x < m for x in t)}
        if any(v >= m for v in sub.values()):
            raise ValueError(f"{{0..{m - 1}}} is not closed")
        gens.append((a, sub))
    return GeneratedClosure(range(m), gens, op.include_base)


@dataclass
class ProbeRow:
    construction: str
    trial: int
    target: int
    threshold: Optional[int]  # least probed carrier size with a success


def threshold_probe(k: int, construction: str, trials: int, sizes: Sequence[int], targets: Sequence[int], seed: int = 0) -> List[ProbeRow]:
    """Least carrier size (among ``sizes``) at which find_independent_set
    succeeds, per trial and target.  Every success is re-checked."""
    rng = random.Random(seed)
    rows = []
    biggest = max(sizes)
    for trial in range(trials):
        if construction == "identity":
            base = GeneratedClosure(range(biggest), [])
        elif construction == "gn":
            base = gn_operator(build_gn_family(k, biggest))
        elif construction == "random":
            base = random_operator(rng, biggest)
        else:
            raise ValueError(f"unknown construction {construction!r}")
        for target in targets:
            hit = None
            for n in sorted(sizes):
                op = restrict_operator(base, n)
                found = find_independent_set(op, target)
                if found is not None:
                    if len(found) != target or not is_independent(op, found):
                        raise AssertionError(f"unverified set {sorted(found)}")
                    hit = n
                    break
            rows.append(ProbeRow(construction, trial, target, hit))
    return rows


def format_probe(rows: Sequence[ProbeRow]) -> str:
    head = ("construction", "trial", "target", "threshold")
    body = [(r.construction, str(r.trial), str(r.target), "-" if r.threshold is None else str(r.threshold)) for r in rows]
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip() for line in [head, *body]) + "\n"
