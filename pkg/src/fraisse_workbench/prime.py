"""The L' enrichment of a stage: a W-part of named points d_n, g(a, b) = d_rel(a,b)
and h(a, b, c) = d_|cl{a,b,c}|, plus the checks that go with it."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .amalgam import check_K
from .closure import StructureClosure
from .errors import BudgetExceeded, PreconditionError, SignatureMismatch
from .reports import Report
from .structure import FiniteStructure, close_tuples, Lprime, embedding_defect, serialize_structure

Tup = Tuple[int, ...]


@dataclass(frozen=True)
class TypeP:
    """{W(x)} together with x != c_n for n < named_constants."""

    named_constants: int

    def realized_by(self, bp: FiniteStructure, x: int) -> bool:
        if bp.sorts[x] != "W":
            return False
        return x not in bp.consts[: self.named_constants]


def _triple_closure_sizes(stage: FiniteStructure) -> Dict[frozenset, int]:
    op = StructureClosure(stage)
    sizes = {}
    for r in (1, 2):
        for S in itertools.combinations(stage.U, r):
            sizes[frozenset(S)] = len(op.closure(S))
    for a, b, c in itertools.combinations(stage.U, 3):
        pair = op.closure((a, b))
        sizes[frozenset((a, b, c))] = sizes[frozenset((a, b))] if c in pair else len(close_tuples(stage, (c,), base=pair))
    return sizes


def required_d_count(stage: FiniteStructure, _sizes: Optional[Dict[frozenset, int]] = None) -> int:
    """Least d_count naming every rel index and every |cl(triple)| of the stage."""
    sizes = _sizes if _sizes is not None else _triple_closure_sizes(stage)
    return max([stage.max_rel] + list(sizes.values())) + 1


def build_prime(stage: FiniteStructure, d_count: Optional[int] = None, check: bool = True) -> FiniteStructure:
    """Stage plus W = {d_0 .. d_{d_count-1}} (ids after the stage), c_n = d_n.

    ``d_count=None`` uses the least admissible value.
    """
    if stage.signature.kind != "L":
        raise SignatureMismatch("build_prime needs an L-structure")
    if check:
        rep = check_K(stage)
        if not rep.verdict:
            raise PreconditionError("stage is not a member", rep.violations[0])
    sizes = _triple_closure_sizes(stage)
    need = required_d_count(stage, sizes)
    if d_count is None:
        d_count = need
    if d_count < need:
        raise PreconditionError(f"d_count {d_count} is too small; need at least {need}", need)
    base = stage.size
    d = [base + n for n in range(d_count)]
    us = stage.U
    g = {(a, b): d[stage.table[(a, b)].rel] for a in us for b in us}
    h = {t: d[sizes[frozenset(t)]] for t in itertools.product(us, repeat=3)}
    return FiniteStructure(
        Lprime(d_count), stage.sorts + ("W",) * d_count, dict(stage.p), dict(stage.table), tuple(d), g, h
    )


def extend_automorphism(bp: FiniteStructure, sigma: Sequence[int]) -> Tup:
    """sigma on the L-reduct, extended by the identity on W; verified."""
    red = bp.reduct()
    sigma = tuple(sigma)
    if len(sigma) != red.size or sorted(sigma) != list(red.universe):
        raise PreconditionError("sigma is not a permutation of the reduct")
    bad = embedding_defect(red, red, sigma)
    if bad is not None:
        raise PreconditionError("sigma is not an automorphism of the reduct", bad)
    ext = sigma + tuple(range(red.size, bp.size))
    bad = embedding_defect(bp, bp, ext)
    if bad is not None:
        raise AssertionError(f"extension is not an automorphism: {bad}")
    return ext


def find_p_witness_candidates(bp: FiniteStructure, tp: TypeP) -> List[int]:
    return [x for x in bp.W if tp.realized_by(bp, x)]


def check_prime_invariants(stage: FiniteStructure, bp: FiniteStructure) -> Report:
    """Reduct identity, g constant on rel classes, h symmetric."""
    rep = Report("prime_invariants")
    rep.checked += 1
    if serialize_structure(bp.reduct()) != serialize_structure(stage):
        rep.fail("L-reduct differs from the stage")
    by_rel: Dict[int, int] = {}
    for (a, b), w in sorted(bp.g.items()):
        rep.checked += 1
        r = bp.table[(a, b)].rel
        if by_rel.setdefault(r, w) != w:
            rep.fail(f"g({a},{b}) differs from another pair with rel {r}")
    for t, w in bp.h.items():
        rep.checked += 1
        if any(bp.h[perm] != w for perm in itertools.permutations(t)):
            rep.fail(f"h{t} is not symmetric")
    return rep


# -- index substitution ----------------------------------------------------------------
#
# Terms and atoms are nested tuples.  An index is an int below n or the marker
# I, which stands for the substituted index (i on one side, j on the other).

I = "I"
BOT = None  # value of a term whose function is undefined on its arguments


def _terms(n: int, depth: int, budget: int) -> List[tuple]:
    idx = list(range(n)) + [I]
    layers = [[("x",)] + [("c", m) for m in idx]]
    for _ in range(depth):
        prev = [t for layer in layers for t in layer]
        new = [("p", t) for t in prev]
        new += [("f", m, a, b) for m in idx for a in prev for b in prev]
        new += [("g", a, b) for a in prev for b in prev]
        if len(prev) ** 3 + sum(len(x) for x in layers) > budget:
            raise BudgetExceeded("term enumeration exceeds the budget")
        new += [("h", a, b, c) for a in prev for b in prev for c in prev]
        layers.append([t for t in new if t not in set(prev)])
    return [t for layer in layers for t in layer]


def _eval(bp: FiniteStructure, term: tuple, i: int, x: int, memo: dict):
    hit = memo.get(term, memo)
    if hit is not memo:
        return hit
    op = term[0]
    if op == "x":
        v = x
    elif op == "c":
        m = i if term[1] == I else term[1]
        v = bp.consts[m] if m < len(bp.consts) else BOT
    else:
        args = [_eval(bp, a, i, x, memo) for a in (term[2:] if op == "f" else term[1:])]
        if any(a is BOT or bp.sorts[a] != "U" for a in args):
            v = BOT
        elif op == "p":
            v = bp.p.get(args[0], BOT)
        elif op == "f":
            m = i if term[1] == I else term[1]
            v = bp.table[tuple(args)].f(m, tuple(args))
        elif op == "g":
            v = bp.g[tuple(args)]
        else:
            v = bp.h[tuple(args)]
    memo[term] = v
    return v


def _show(term) -> str:
    if term == ("x",):
        return "x"
    if term[0] == "c":
        return f"c_{term[1]}"
    if term[0] == "f":
        return f"f_{term[1]}({_show(term[2])},{_show(term[3])})"
    return f"{term[0]}({','.join(_show(a) for a in term[1:])})"


def _rel_holds(bp, m, a, b) -> bool:
    if a is BOT or b is BOT or bp.sorts[a] != "U" or bp.sorts[b] != "U":
        return False
    return bp.table[(a, b)].rel == m


def check_substitution(
    bp: FiniteStructure,
    n: int,
    depth_cap: int = 1,
    index_cap: Optional[int] = None,
    term_budget: int = 200_000,
) -> Report:
    """Atomic formulas phi(x) over L'_n plus R_I, f_I, c_I with terms of depth
    <= depth_cap: phi holds at c_i with I = i iff it holds at c_j with I = j,
    for all n <= i, j < index_cap (default: all constants).

    Equality atoms agree iff the terms' value partitions agree; the unary and
    R atoms are then compared on the matched values.
    """
    rep = Report("substitution")
    m_count = bp.signature.named_constants
    if bp.signature.kind != "Lprime":
        raise SignatureMismatch("check_substitution needs an L' structure")
    if not 0 <= n < m_count:
        raise PreconditionError(f"need n < {m_count}")
    top = m_count if index_cap is None else min(index_cap, m_count)
    terms = _terms(n, depth_cap, term_budget)
    rep.stats["terms"] = len(terms)
    idx = list(range(n)) + [I]
    values = {}
    for i in range(n, top):
        memo: dict = {}
        values[i] = [_eval(bp, t, i, bp.consts[i], memo) for t in terms]
    for i, j in itertools.combinations(range(n, top), 2):
        vi, vj = values[i], values[j]
        fwd: Dict[int, int] = {}
        back: Dict[int, int] = {}
        bad = None
        for t, a, b in zip(terms, vi, vj):
            rep.checked += 1
            if (a is BOT) != (b is BOT):
                bad = f"{_show(t)} = {_show(t)}"
                break
            if a is BOT:
                continue
            if fwd.setdefault(a, b) != b or back.setdefault(b, a) != a:
                other = next(s for s, a2, b2 in zip(terms, vi, vj) if a2 is not BOT and (a2 == a) != (b2 == b))
                bad = f"{_show(t)} = {_show(other)}"
                break
            for name in ("U", "V", "W"):
                if (bp.sorts[a] == name) != (bp.sorts[b] == name):
                    bad = f"{name}({_show(t)})"
                    break
            if bad:
                break
        if bad is None:
            vals = sorted(fwd)
            for m in idx:
                mi = i if m == I else m
                mj = j if m == I else m
                for a, b in itertools.product(vals, repeat=2):
                    rep.checked += 1
                    if _rel_holds(bp, mi, a, b) != _rel_holds(bp, mj, fwd[a], fwd[b]):
                        ta = terms[vi.index(a)]
                        tb = terms[vi.index(b)]
                        bad = f"R_{m}({_show(ta)},{_show(tb)})"
                        break
                if bad:
                    break
        if bad is not None:
            rep.fail(f"i={i} j={j}: {bad}")
    return rep
