"""Adding the new points of a witness structure D to a locally-K_k structure A.

C has A's ids first and then the points b_0 < b_1 < ... of D outside the
image of d̄, in D's order.  Tuples inside A or inside D keep their records.
A new tuple (one meeting both the b's and A outside d̄) is handled by the
last b_i it contains:

* b_i in a non-lead position: every f_n is the lead coordinate;
* b_i only in the lead position: f_n(b, ā') = g_n(ā') unless that lies in ā',
  in which case it is b, with g_n the family over the enumeration of C.

Lead tuples get one fresh index rel*, above every index of A and D and every
stabilisation index of the family.  Repeated-point tuples start at index 0 and
are raised to the largest index inside their closure until nothing changes,
which is what keeps closure dominance.
"""

from __future__ import annotations

import itertools
from typing import Dict, Iterable, Optional, Sequence, Tuple

from .amalgam import check_Kk
from .combinatorics import build_gn_family
from .errors import PreconditionError, SignatureMismatch
from .reports import Report
from .structure import (
    Embedding,
    FiniteStructure,
    TupleRecord,
    close_tuples,
    embedding_defect,
    find_isomorphism,
    generated_closure,
    induced,
)

Tup = Tuple[int, ...]


def closed_generated_sets(s: FiniteStructure, size_cap: int):
    """Universes of the generated substructures of size <= size_cap."""
    from .generic import closed_subsets

    return closed_subsets(s, size_cap)


def verify_local_membership(C: FiniteStructure, k: int, size_cap: int) -> Report:
    """Every generated substructure of C of size <= size_cap is in K_k."""
    if C.signature.kind != "Lk" or C.signature.k != k:
        raise SignatureMismatch(f"need an L_{k} structure")
    rep = Report("local_membership")
    for X in sorted(closed_generated_sets(C, size_cap), key=lambda c: (len(c), sorted(c))):
        rep.checked += 1
        sub, emb = induced(C, X)
        res = check_Kk(sub, k)
        for c, w in res.violations:
            rep.fail(f"VIOLATION {c} {','.join(str(emb.map[x]) for x in w)}")
    return rep


def extend_with_witness(
    A: FiniteStructure,
    dbar: Sequence[int],
    D: FiniteStructure,
    eD: Embedding,
    k: int,
    check_cap: int = 5,
) -> Tuple[FiniteStructure, Embedding, Embedding]:
    """Returns ``(C, A -> C, D -> C)``.

    ``eD`` embeds the substructure of A on sorted(dbar) into D.
    """
    for s, name in ((A, "A"), (D, "D")):
        if s.signature.kind != "Lk" or s.signature.k != k:
            raise SignatureMismatch(f"{name} must be an L_{k} structure")
    dset = sorted(set(dbar))
    if generated_closure(A, dset) != set(dset):
        raise PreconditionError("dbar is not closed in A", tuple(sorted(generated_closure(A, dset) - set(dset))))
    rep = verify_local_membership(A, k, check_cap)
    if not rep.ok:
        raise PreconditionError("A is not locally in K_k", rep.failures[0])
    res = check_Kk(D, k)
    if not res.verdict:
        raise PreconditionError("D is not in K_k", res.violations[0])
    dsub, _ = induced(A, dset)
    if eD.source != dsub or eD.target != D or not eD.is_valid():
        raise PreconditionError("eD is not an embedding of the dbar-structure into D")

    nA = A.size
    img = {d: dset[j] for j, d in enumerate(eD.map)}  # D id -> A id on the image of dbar
    d_to_c: Dict[int, int] = {}
    nxt = nA
    for x in D.universe:
        if x in img:
            d_to_c[x] = img[x]
        else:
            d_to_c[x] = nxt
            nxt += 1
    size = nxt
    new_pts = list(range(nA, size))
    in_d = set(d_to_c.values())

    table: Dict[Tup, TupleRecord] = dict(A.table)
    for t, r in D.table.items():
        table[tuple(d_to_c[x] for x in t)] = TupleRecord(r.rel, tuple(d_to_c[y] for y in r.low))
    if not new_pts:
        return A, Embedding(A, A, tuple(A.universe)), Embedding(D, A, tuple(d_to_c[x] for x in D.universe))

    fam = build_gn_family(k, size)
    ar = k + 1
    mixed = [t for t in itertools.product(range(size), repeat=ar) if t not in table]
    for t in mixed:
        assert any(x >= nA for x in t) and any(x not in in_d for x in t)
    rel_star = max([A.max_rel, D.max_rel, fam.n_max, size]) + 1

    repeated = []
    for t in mixed:
        b = max(t)  # the last new point in the tuple
        if b in t[1:]:
            table[t] = TupleRecord(0, ())
            repeated.append(t)
        else:
            rest = t[1:]
            low = []
            for n in range(rel_star):
                v = fam.g(n, rest)
                low.append(b if v in rest else v)
            table[t] = TupleRecord(rel_star, tuple(low))

    # raise repeated-point tuples to the largest index in their closure
    probe = FiniteStructure(A.signature, ("U",) * size, {}, table)
    closures = {t: sorted(close_tuples(probe, t)) for t in repeated}
    changed = True
    while changed:
        changed = False
        for t in repeated:
            need = max(table[u].rel for u in itertools.product(closures[t], repeat=ar))
            if need > table[t].rel:
                table[t] = TupleRecord(need, (t[0],) * need)
                changed = True

    C = FiniteStructure(A.signature, ("U",) * size, {}, table)
    return C, Embedding(A, C, tuple(A.universe)), Embedding(D, C, tuple(d_to_c[x] for x in D.universe))


def witness_agrees(D: FiniteStructure, C: FiniteStructure, eDC: Embedding, w: int, extra: Iterable[int] = ()) -> Optional[str]:
    """gen({w} ∪ extra) in C is the image of gen({w} ∪ extra) in D."""
    X = {w} | set(extra)
    gd = sorted(generated_closure(D, X))
    gc = generated_closure(C, {eDC.map[x] for x in X})
    if {eDC.map[x] for x in gd} != gc:
        return f"generated sets differ for {sorted(X)}"
    sub_d, _ = induced(D, gd)
    sub_c, emb_c = induced(C, gc)
    pos = {x: j for j, x in enumerate(emb_c.map)}
    m = tuple(pos[eDC.map[x]] for x in gd)
    if embedding_defect(sub_d, sub_c, m) is not None or find_isomorphism(sub_d, sub_c) is None:
        return f"generated substructures differ for {sorted(X)}"
    return None
