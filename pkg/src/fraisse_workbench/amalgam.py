"""Membership in K / K_k, amalgamation, joint embedding, small-member enumeration."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .closure import StructureClosure
from .errors import BudgetExceeded, PreconditionError, SignatureMismatch
from .structure import (
    L,
    Embedding,
    FiniteStructure,
    Signature,
    TupleRecord,
    empty_structure,
    find_isomorphism,
    _invariants,
)

DEFAULT_ENUM_BUDGET = 2_000_000


@dataclass
class ConstraintReport:
    violations: List[Tuple[str, tuple]] = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.verdict

    def lines(self) -> List[str]:
        return [f"VIOLATION {c} {','.join(map(str, w))}" for c, w in self.violations]


def _closure_constraints(s: FiniteStructure, dominance_id: str, independence_id: str, report: ConstraintReport):
    """Closure-dominance and independence checks shared by K and K_k.

    Dominance: every tuple inside cl(set(t)) has rel index <= rel(t).
    Independence: no cl-independent subset of U of size arity + 1.
    """
    op = StructureClosure(s)
    ar = s.signature.arity
    table = s.table
    worst: Dict[frozenset, Tuple[int, tuple]] = {}
    for t in sorted(table):
        rec = table[t]
        c = op.closure(t)
        if c not in worst:
            best = (-1, ())
            for t2 in itertools.product(sorted(c), repeat=ar):
                r = table[t2].rel
                if r > best[0]:
                    best = (r, t2)
            worst[c] = best
        r2, t2 = worst[c]
        if r2 > rec.rel:
            report.violations.append((dominance_id, t + t2))
    size = ar + 1
    for S in itertools.combinations(s.U, size):
        fs = frozenset(S)
        if all(x not in op.closure(fs - {x}) for x in S):
            report.violations.append((independence_id, S))


def check_K(s: FiniteStructure) -> ConstraintReport:
    """Constraints (i)-(viii) for an L-structure.

    (v) and (vi) hold by representation; (i), (iii) and (iv) are guaranteed by
    the representation for kind L as well, but are still tested so a report
    never silently trusts it.
    """
    if s.signature.kind != "L":
        raise SignatureMismatch(f"check_K needs an L-structure, got {s.signature.kind}")
    rep = ConstraintReport()
    for x, srt in enumerate(s.sorts):
        if srt not in ("U", "V"):
            rep.violations.append(("i", (x,)))
    for x in s.U:
        y = s.p.get(x)
        if y is None or s.sorts[y] != "V":
            rep.violations.append(("ii", (x,)))
    for t, r in s.table.items():
        if any(s.sorts[y] != "U" for y in r.low):
            rep.violations.append(("iii", t))
        if any(s.sorts[x] != "U" for x in t):
            rep.violations.append(("iv", t))
    _closure_constraints(s, "vii", "viii", rep)
    return rep


def check_Kk(s: FiniteStructure, k: int) -> ConstraintReport:
    """Constraints (i)-(iv) of the class K_k ((i) and (ii) hold by representation)."""
    if s.signature.kind != "Lk":
        raise SignatureMismatch(f"check_Kk needs an L_k-structure, got {s.signature.kind}")
    if s.signature.k != k:
        raise SignatureMismatch(f"structure has k={s.signature.k}, asked for k={k}")
    rep = ConstraintReport()
    _closure_constraints(s, "k_iii", "k_iv", rep)
    return rep


def check_member(s: FiniteStructure) -> ConstraintReport:
    if s.signature.kind == "L":
        return check_K(s)
    if s.signature.kind == "Lk":
        return check_Kk(s, s.signature.k)
    raise SignatureMismatch("membership is defined for L and L_k structures only")


def _require_member(s: FiniteStructure, name: str):
    rep = check_member(s)
    if not rep.verdict:
        raise PreconditionError(f"{name} is not a member", rep.violations[0])


def amalgamate(
    A: FiniteStructure,
    B: FiniteStructure,
    C: FiniteStructure,
    eAB: Embedding,
    eAC: Embedding,
    check: bool = True,
) -> Tuple[FiniteStructure, Embedding, Embedding, int]:
    """Amalgamate B and C over A.

    D has B's ids first, then C minus the image of A in ascending C order.
    Every tuple meeting both B∖A and C∖A gets the fresh index k (the least
    natural above |U^B|, |U^C| and every index used in B or C); its f-values
    run through U^C (lead coordinate on the B side) or U^B (lead coordinate in
    C∖A), then repeat the lead coordinate.

    Returns ``(D, eBD, eCD, k)``.
    """
    sig = B.signature
    if not (A.signature == B.signature == C.signature):
        raise SignatureMismatch("A, B, C must share a signature")
    if sig.kind == "Lprime":
        raise SignatureMismatch("amalgamation is defined for L and L_k")
    for e, src, tgt, name in ((eAB, A, B, "eAB"), (eAC, A, C, "eAC")):
        if e.source is not src and e.source != src or e.target is not tgt and e.target != tgt:
            raise PreconditionError(f"{name} does not go between the given structures")
        if not e.is_valid():
            raise PreconditionError(f"{name} is not an embedding")
    if check:
        for s, name in ((A, "A"), (B, "B"), (C, "C")):
            _require_member(s, name)

    nB = B.size
    a_of_c = {c: a for a, c in enumerate(eAC.map)}
    c_to_d: Dict[int, int] = {}
    nxt = nB
    for c in C.universe:
        if c in a_of_c:
            c_to_d[c] = eAB.map[a_of_c[c]]
        else:
            c_to_d[c] = nxt
            nxt += 1
    sorts = list(B.sorts) + [None] * (nxt - nB)
    for c, d in c_to_d.items():
        if d >= nB:
            sorts[d] = C.sorts[c]
    p = dict(B.p)
    for c, v in C.p.items():
        d, dv = c_to_d[c], c_to_d[v]
        if d in p and p[d] != dv:
            raise PreconditionError("embedding mismatch on A", ("p", c))
        p[d] = dv
    table = dict(B.table)
    for t, r in C.table.items():
        td = tuple(c_to_d[x] for x in t)
        rd = TupleRecord(r.rel, tuple(c_to_d[y] for y in r.low))
        if td in table and table[td] != rd:
            raise PreconditionError("embedding mismatch on A", ("tuple", t))
        table[td] = rd

    image_a = set(eAB.map)
    u_b = list(B.U)
    u_c = [c_to_d[c] for c in C.U]
    only_b = {x for x in u_b if x not in image_a}
    only_c = {c_to_d[c] for c in C.U if c not in a_of_c}
    l, m = len(u_b), len(u_c)
    k = max(l, m, B.max_rel, C.max_rel) + 1
    if only_b and only_c:
        u_d = sorted(set(u_b) | set(u_c))
        for t in itertools.product(u_d, repeat=sig.arity):
            if t in table:
                continue
            lead = t[0]
            head = u_b if lead in only_c else u_c
            table[t] = TupleRecord(k, tuple(head) + (lead,) * (k - len(head)))
    D = FiniteStructure(sig, tuple(sorts), p, table)
    eBD = Embedding(B, D, tuple(B.universe))
    eCD = Embedding(C, D, tuple(c_to_d[c] for c in C.universe))
    return D, eBD, eCD, k


def joint_embed(B: FiniteStructure, C: FiniteStructure, check: bool = True):
    if B.signature != C.signature:
        raise SignatureMismatch("B and C must share a signature")
    A = empty_structure(B.signature)
    return amalgamate(A, B, C, Embedding(A, B, ()), Embedding(A, C, ()), check=check)


# -- enumeration -----------------------------------------------------------------


def _record_options(u: Sequence[int], max_rel: int) -> List[TupleRecord]:
    out = []
    for r in range(max_rel + 1):
        for low in itertools.product(u, repeat=r):
            out.append(TupleRecord(r, low))
    return out


def iter_candidates(sig: Signature, max_size: int, max_rel: int):
    """All representable structures with p total into V, U-ids first.

    Yields (U-count, V-count, structure).
    """
    ar = sig.arity
    for size in range(max_size + 1):
        profiles = [(size, 0)] if sig.kind == "Lk" else [(nu, size - nu) for nu in range(size + 1)]
        for nu, nv in profiles:
            u = list(range(nu))
            v = list(range(nu, nu + nv))
            sorts = ("U",) * nu + ("V",) * nv
            tuples = list(itertools.product(u, repeat=ar))
            opts = _record_options(u, max_rel)
            p_maps = [{}] if sig.kind == "Lk" else [dict(zip(u, img)) for img in itertools.product(v, repeat=nu)]
            for pm in p_maps:
                for recs in itertools.product(opts, repeat=len(tuples)):
                    yield nu, nv, FiniteStructure(sig, sorts, pm, dict(zip(tuples, recs)))


def count_candidates(sig: Signature, max_size: int, max_rel: int) -> int:
    ar = sig.arity
    total = 0
    for size in range(max_size + 1):
        profiles = [(size, 0)] if sig.kind == "Lk" else [(nu, size - nu) for nu in range(size + 1)]
        for nu, nv in profiles:
            per = sum(nu ** r for r in range(max_rel + 1))
            pm = 1 if sig.kind == "Lk" else nv ** nu
            total += pm * per ** (nu ** ar)
    return total


def canonical_key(s: FiniteStructure) -> tuple:
    """Exact isomorphism invariant: least relabelled encoding over sort-preserving
    permutations.  Only meant for the small structures of the enumerations."""
    blocks = [[x for x in s.universe if s.sorts[x] == srt] for srt in ("U", "V", "W")]
    best = None
    for perms in itertools.product(*(itertools.permutations(b) for b in blocks)):
        order = [x for perm in perms for x in perm]
        new = {x: i for i, x in enumerate(order)}
        enc = (
            tuple(s.sorts[x] for x in order),
            tuple(sorted((new[x], new[y]) for x, y in s.p.items())),
            tuple(sorted((tuple(new[x] for x in t), r.rel, tuple(new[y] for y in r.low)) for t, r in s.table.items())),
            tuple(new[c] for c in s.consts),
        )
        if best is None or enc < best:
            best = enc
    return best


class IsoCatalog:
    """Deduplicates structures up to isomorphism, keeping first representatives.

    Candidates are bucketed by an invariant (the exact canonical key for small
    structures) and confirmed with find_isomorphism.
    """

    def __init__(self, exact_limit: int = 6):
        self.members: List[FiniteStructure] = []
        self._buckets: Dict[tuple, List[int]] = {}
        self.exact_limit = exact_limit

    def key(self, s: FiniteStructure) -> tuple:
        if s.size <= self.exact_limit:
            return canonical_key(s)
        return (s.size, tuple(sorted(_invariants(s))))

    def find(self, s: FiniteStructure) -> Optional[Tuple[int, tuple]]:
        for i in self._buckets.get(self.key(s), ()):
            iso = find_isomorphism(s, self.members[i])
            if iso is not None:
                return i, iso
        return None

    def add(self, s: FiniteStructure) -> bool:
        if self.find(s) is not None:
            return False
        self._buckets.setdefault(self.key(s), []).append(len(self.members))
        self.members.append(s)
        return True


def enumerate_K(max_size: int, max_rel: int, sig: Signature = L, budget: int = DEFAULT_ENUM_BUDGET) -> List[FiniteStructure]:
    """One representative per isomorphism type of members of size <= max_size
    whose rel indices are all <= max_rel."""
    need = count_candidates(sig, max_size, max_rel)
    if need > budget:
        raise BudgetExceeded(f"{need} candidate structures exceed the enumeration budget {budget}")
    cat = IsoCatalog()
    for _, _, s in iter_candidates(sig, max_size, max_rel):
        if check_member(s).verdict:
            cat.add(s)
    return cat.members


def enumerate_Kk(k: int, max_size: int, max_rel: int, budget: int = DEFAULT_ENUM_BUDGET) -> List[FiniteStructure]:
    return enumerate_K(max_size, max_rel, Signature("Lk", k), budget)
