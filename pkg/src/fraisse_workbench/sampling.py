"""Random members, random extensions and random witness instances."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .amalgam import amalgamate, check_member, enumerate_K, joint_embed
from .errors import PreconditionError
from .structure import (
    Embedding,
    FiniteStructure,
    L,
    Lk,
    Signature,
    TupleRecord,
    find_embedding,
    generated_closure,
    generated_substructure,
    induced,
)


def random_candidate(rng: random.Random, sig: Signature, nu: int, nv: int, max_rel: int) -> FiniteStructure:
    """Uniform over representable structures with the given sort counts
    (p total into V, rel indices <= max_rel, U ids first)."""
    u = list(range(nu))
    v = list(range(nu, nu + nv))
    p = {} if sig.kind == "Lk" else {x: rng.choice(v) for x in u}
    table = {}
    per = [nu ** r for r in range(max_rel + 1)] if nu else [1]
    for t in _tuples(u, sig.arity):
        r = rng.choices(range(len(per)), weights=per)[0]
        table[t] = TupleRecord(r, tuple(rng.choice(u) for _ in range(r)))
    return FiniteStructure(sig, ("U",) * nu + ("V",) * nv, p, table)


def _tuples(u, ar):
    return list(itertools.product(u, repeat=ar))


def random_member(rng: random.Random, max_size: int, max_rel: int, sig: Signature = L, tries: int = 10_000) -> FiniteStructure:
    """Rejection sampling over random_candidate with a uniform size and U/V split."""
    for _ in range(tries):
        size = rng.randint(0, max_size)
        if sig.kind == "Lk":
            nu, nv = size, 0
        else:
            nu = rng.randint(0, size)
            nv = size - nu
            if nu and not nv:
                continue
        s = random_candidate(rng, sig, nu, nv, max_rel)
        if check_member(s).verdict:
            return s
    raise PreconditionError("no member found within the sampling budget")


def shuffle_ids(rng: random.Random, s: FiniteStructure) -> Tuple[FiniteStructure, Tuple[int, ...]]:
    """Isomorphic copy with permuted ids; returns (copy, old id -> new id)."""
    perm = list(s.universe)
    rng.shuffle(perm)
    sorts = [None] * s.size
    for x in s.universe:
        sorts[perm[x]] = s.sorts[x]
    p = {perm[x]: perm[y] for x, y in s.p.items()}
    table = {tuple(perm[x] for x in t): TupleRecord(r.rel, tuple(perm[y] for y in r.low)) for t, r in s.table.items()}
    return FiniteStructure(s.signature, tuple(sorts), p, table), tuple(perm)


@dataclass
class Triple:
    A: FiniteStructure
    B: FiniteStructure
    C: FiniteStructure
    eAB: Embedding
    eAC: Embedding


def random_triple(rng: random.Random, max_size: int = 4, max_rel: int = 3, sig: Signature = L, tries: int = 10_000) -> Triple:
    """B a random member, A = a random generated substructure of B, C a random
    member extending (a copy of) A, ids of C shuffled."""
    B = random_member(rng, max_size, max_rel, sig)
    X = [x for x in B.universe if rng.random() < 0.5]
    A, eAB = generated_substructure(B, X)
    for _ in range(tries):
        extra_u = rng.randint(0, max_size - A.size)
        extra_v = 0 if sig.kind == "Lk" else rng.randint(0, max_size - A.size - extra_u)
        C = _random_extension(rng, A, extra_u, extra_v, max_rel)
        if C is None:
            continue
        C2, perm = shuffle_ids(rng, C)
        eAC = Embedding(A, C2, tuple(perm[x] for x in A.universe))
        return Triple(A, B, C2, eAB, eAC)
    raise PreconditionError("no extension found within the sampling budget")


def _random_extension(rng, A: FiniteStructure, extra_u: int, extra_v: int, max_rel: int) -> Optional[FiniteStructure]:
    """A random member whose initial segment (in the same layout) is A.

    Layout: A's ids are kept, new points get the next ids.  Returned with A
    embedded by the identity on A's ids.
    """
    sorts = list(A.sorts) + ["U"] * extra_u + ["V"] * extra_v
    u = [x for x, s in enumerate(sorts) if s == "U"]
    v = [x for x, s in enumerate(sorts) if s == "V"]
    if u and not v:
        return None
    new_u = u[len(A.U):]
    p = dict(A.p)
    for x in new_u:
        p[x] = rng.choice(v)
    table = dict(A.table)
    per = [len(u) ** r for r in range(max_rel + 1)]
    for t in _tuples(u, A.signature.arity):
        if t in table:
            continue
        r = rng.choices(range(len(per)), weights=per)[0]
        table[t] = TupleRecord(r, tuple(rng.choice(u) for _ in range(r)))
    C = FiniteStructure(A.signature, tuple(sorts), p, table)
    if not check_member(C).verdict:
        return None
    return C


# -- witness instances -----------------------------------------------------------


_SEEDS_CACHE = {}


def _kk_seeds(k: int) -> List[FiniteStructure]:
    """Members of K_k of size <= 2 with indices <= 1, plus the discrete size-3 one."""
    if k not in _SEEDS_CACHE:
        small = enumerate_K(2, 1, Lk(k))
        small += [m for m in enumerate_K(3, 0, Lk(k)) if m.size == 3]
        _SEEDS_CACHE[k] = [m for m in small if m.size > 0]
    return _SEEDS_CACHE[k]


def random_kk_member(rng: random.Random, k: int, max_size: int) -> FiniteStructure:
    """Grows a K_k member by repeated joint embeddings and amalgamations of
    small members; stops before exceeding max_size."""
    seeds = _kk_seeds(k)
    A = rng.choice([m for m in seeds if m.size <= max_size])
    target = rng.randint(A.size, max_size)
    while A.size < target:
        M = rng.choice([m for m in seeds if A.size + m.size <= max_size] or [None])
        if M is None:
            break
        X = [x for x in M.universe if rng.random() < 0.4]
        base, eBM = generated_substructure(M, X)
        eBA = find_embedding(base, A) if base.size < M.size else None
        if eBA is not None and rng.random() < 0.7:
            A, _, _, _ = amalgamate(base, A, M, Embedding(base, A, eBA), eBM, check=False)
        else:
            A, _, _, _ = joint_embed(A, M, check=False)
    return A


@dataclass
class WitnessInstance:
    A: FiniteStructure
    dbar: Tuple[int, ...]
    D: FiniteStructure
    eD: Embedding
    witness: int  # a point of D outside the image of dbar (or any point if none)


def random_witness_instance(rng: random.Random, k: int = 2, a_max: int = 8, new_max: int = 3) -> WitnessInstance:
    """A random K_k member A (|A| <= a_max), a closed d̄ in A, and D in K_k
    extending the d̄-structure by at most new_max points."""
    A = random_kk_member(rng, k, a_max)
    X = [x for x in A.universe if rng.random() < 0.3]
    dset = sorted(generated_closure(A, X))
    dsub, _ = induced(A, dset)
    seeds = [m for m in _kk_seeds(k) if m.size <= new_max]
    M = rng.choice(seeds)
    Y = [x for x in M.universe if rng.random() < 0.5]
    base, eBM = generated_substructure(M, Y)
    eBd = find_embedding(base, dsub) if 0 < base.size < M.size else None
    if eBd is not None and rng.random() < 0.5:
        D, eDD, _, _ = amalgamate(base, dsub, M, Embedding(base, dsub, eBd), eBM, check=False)
    else:
        D, eDD, _, _ = joint_embed(dsub, M, check=False)
    if not check_member(D).verdict:
        raise AssertionError("amalgam left K_k")
    eD = Embedding(dsub, D, eDD.map)
    outside = [x for x in D.universe if x not in set(eD.map)]
    w = rng.choice(outside) if outside else 0
    return WitnessInstance(A, tuple(dset), D, eD, w)
