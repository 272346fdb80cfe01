"""Finite structures in the signatures L, L' and L_k.

The infinitely many symbols f_n / R_n are stored per tuple as a
``TupleRecord(rel, low)``: ``rel`` is the unique n with R_n holding on the
tuple and ``low`` lists f_0 .. f_{rel-1}.  Every f_m with m >= rel returns the
first coordinate, so structures violating the partition or the
"R_n -> f_m(x, y) = x" rule cannot be represented at all.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, Iterator, Mapping, NamedTuple, Optional, Sequence, Tuple

from .errors import SignatureMismatch, StructureError, StructureParseError

KINDS = ("L", "Lprime", "Lk")
SORTS = ("U", "V", "W")

Tup = Tuple[int, ...]


@dataclass(frozen=True)
class Signature:
    kind: str = "L"
    k: int = 1
    named_constants: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StructureError(f"unknown signature kind {self.kind!r}")
        if self.k < 1:
            raise StructureError("arity_k must be >= 1")
        if self.kind in ("L", "Lprime") and self.k != 1:
            raise StructureError(f"{self.kind} has binary f_n/R_n (k = 1)")
        if self.kind != "Lprime" and self.named_constants:
            raise StructureError(f"{self.kind} has no interpreted constants")

    @property
    def arity(self) -> int:
        return self.k + 1


L = Signature("L")


def Lk(k: int) -> Signature:
    return Signature("Lk", k)


def Lprime(named_constants: int) -> Signature:
    return Signature("Lprime", 1, named_constants)


class TupleRecord(NamedTuple):
    rel: int
    low: Tup

    def f(self, n: int, t: Tup) -> int:
        return self.low[n] if n < self.rel else t[0]


@dataclass(frozen=True)
class FiniteStructure:
    """Immutable finite structure; element ids are ``0 .. size-1``."""

    signature: Signature
    sorts: Tuple[str, ...]
    p: Mapping[int, int] = field(default_factory=dict)
    table: Mapping[Tup, TupleRecord] = field(default_factory=dict)
    consts: Tup = ()
    g: Mapping[Tup, int] = field(default_factory=dict)
    h: Mapping[Tup, int] = field(default_factory=dict)

    def __post_init__(self):
        self._validate()

    def _validate(self):
        sig, sorts = self.signature, self.sorts
        allowed = {"L": "UV", "Lprime": "UVW", "Lk": "U"}[sig.kind]
        for x, srt in enumerate(sorts):
            if srt not in allowed:
                raise StructureError(f"element {x} has sort {srt} not allowed in {sig.kind}")
        n = len(sorts)
        u_set = set(self.U)
        if sig.kind == "Lk" and self.p:
            raise StructureError("L_k has no p")
        for x, y in self.p.items():
            if x not in u_set:
                raise StructureError(f"p defined on non-U element {x}")
            if not 0 <= y < n:
                raise StructureError(f"p({x}) = {y} outside the universe")
        ar = sig.arity
        if len(self.table) != len(u_set) ** ar:
            raise StructureError("tuple table is not total on U-tuples")
        for t, rec in self.table.items():
            if len(t) != ar or any(x not in u_set for x in t):
                raise StructureError(f"tuple {t} is not a {ar}-tuple of U-elements")
            if rec.rel < 0 or len(rec.low) != rec.rel:
                raise StructureError(f"tuple {t}: f list length must equal rel={rec.rel}")
            if any(y not in u_set for y in rec.low):
                raise StructureError(f"tuple {t}: f value outside U")
        if sig.kind != "Lprime":
            if self.consts or self.g or self.h:
                raise StructureError("constants, g and h only exist in L'")
            return
        w_set = set(self.W)
        if len(self.consts) != sig.named_constants:
            raise StructureError("constant count does not match the signature")
        for i, c in enumerate(self.consts):
            if c not in w_set:
                raise StructureError(f"c{i} interpreted outside W")
        for name, tbl, width in (("g", self.g, 2), ("h", self.h, 3)):
            if len(tbl) != len(u_set) ** width:
                raise StructureError(f"{name} is not total on U^{width}")
            for t, w in tbl.items():
                if len(t) != width or any(x not in u_set for x in t):
                    raise StructureError(f"{name} key {t} is not a U-tuple")
                if w not in w_set:
                    raise StructureError(f"{name}{t} = {w} lands outside W")

    # -- element views -------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.sorts)

    @property
    def universe(self) -> range:
        return range(len(self.sorts))

    @cached_property
    def U(self) -> Tup:
        return tuple(x for x, s in enumerate(self.sorts) if s == "U")

    @cached_property
    def V(self) -> Tup:
        return tuple(x for x, s in enumerate(self.sorts) if s == "V")

    @cached_property
    def W(self) -> Tup:
        return tuple(x for x, s in enumerate(self.sorts) if s == "W")

    @cached_property
    def low_sets(self) -> Dict[Tup, frozenset]:
        """Distinct f-values per tuple (f lists repeat the lead coordinate)."""
        return {t: frozenset(r.low) for t, r in self.table.items()}

    @cached_property
    def max_rel(self) -> int:
        return max((r.rel for r in self.table.values()), default=0)

    def reduct(self) -> "FiniteStructure":
        """The L-reduct of an L' structure (W-elements dropped; ids of U/V kept)."""
        if self.signature.kind != "Lprime":
            return self
        keep = [x for x in self.universe if self.sorts[x] != "W"]
        if keep != list(range(len(keep))):
            raise StructureError("W-elements must follow all U/V elements to take the reduct")
        return FiniteStructure(L, self.sorts[: len(keep)], dict(self.p), dict(self.table))

    def eval_f(self, n: int, t: Sequence[int]) -> int:
        return eval_f(self, n, t)

    def eval_R(self, t: Sequence[int]) -> int:
        return eval_R(self, t)


def _check_u_tuple(s: FiniteStructure, t: Sequence[int]) -> Tup:
    t = tuple(t)
    if len(t) != s.signature.arity:
        raise StructureError(f"expected a {s.signature.arity}-tuple, got {t}")
    for x in t:
        if not 0 <= x < s.size:
            raise StructureError(f"element {x} not in the universe")
        if s.sorts[x] != "U":
            raise StructureError(f"element {x} is not a U-element")
    return t


def eval_f(s: FiniteStructure, n: int, t: Sequence[int]) -> int:
    t = _check_u_tuple(s, t)
    return s.table[t].f(n, t)


def eval_R(s: FiniteStructure, t: Sequence[int]) -> int:
    return s.table[_check_u_tuple(s, t)].rel


def empty_structure(sig: Signature = L) -> FiniteStructure:
    if sig.named_constants:
        raise StructureError("an L' structure with constants is never empty")
    return FiniteStructure(sig, ())


# -- closure under the tuple functions ---------------------------------------


def close_tuples(
    s: FiniteStructure, seed: Iterable[int], limit: Optional[int] = None, base: Iterable[int] = ()
) -> Optional[set]:
    """Least superset of ``seed`` (U-elements) closed under every f_n.

    ``base`` must already be closed; only tuples meeting the rest are visited.
    With ``limit``, gives up and returns None as soon as the set outgrows it.
    """
    order = sorted(set(base))
    closed = set(order)
    i = len(order)
    fresh = sorted(set(seed) - closed)
    closed.update(fresh)
    order.extend(fresh)
    lows = s.low_sets
    ar = s.signature.arity
    while i < len(order):
        e = order[i]
        i += 1
        if ar == 2:
            tuples = [(e, e)]
            for j in range(i - 1):
                z = order[j]
                tuples.append((e, z))
                tuples.append((z, e))
        else:
            tuples = [t for t in itertools.product(order[:i], repeat=ar) if e in t]
        for t in tuples:
            lo = lows[t]
            if lo <= closed:
                continue
            new = lo - closed
            closed |= new
            order.extend(sorted(new))
            if limit is not None and len(closed) > limit:
                return None
    return closed


def induced(s: FiniteStructure, elems: Iterable[int]) -> Tuple[FiniteStructure, "Embedding"]:
    """Induced structure on a closed subset, renumbered in ascending id order."""
    keep = sorted(set(elems))
    new = {x: i for i, x in enumerate(keep)}
    try:
        sorts = tuple(s.sorts[x] for x in keep)
        p = {new[x]: new[y] for x, y in s.p.items() if x in new}
        keep_u = [x for x in keep if s.sorts[x] == "U"]
        table = {}
        for t in itertools.product(keep_u, repeat=s.signature.arity):
            r = s.table[t]
            table[tuple(new[x] for x in t)] = TupleRecord(r.rel, tuple(new[y] for y in r.low))
        g = {tuple(new[x] for x in t): new[s.g[t]] for t in itertools.product(keep_u, repeat=2)} if s.g else {}
        h = {tuple(new[x] for x in t): new[s.h[t]] for t in itertools.product(keep_u, repeat=3)} if s.h else {}
        consts = tuple(new[c] for c in s.consts)
    except KeyError as exc:
        raise StructureError(f"subset is not closed: missing {exc.args[0]}") from None
    sub = FiniteStructure(s.signature, sorts, p, table, consts, g, h)
    return sub, Embedding(sub, s, tuple(keep))


def generated_closure(s: FiniteStructure, X: Iterable[int], limit: Optional[int] = None) -> Optional[set]:
    """Universe of the substructure generated by X (None if it outgrows ``limit``)."""
    X = set(X)
    for x in X:
        if not 0 <= x < s.size:
            raise StructureError(f"element {x} not in the universe")
    closed = close_tuples(s, [x for x in X if s.sorts[x] == "U"], limit)
    if closed is None:
        return None
    out = closed | X
    out.update(s.p[x] for x in closed if x in s.p)
    if s.signature.kind == "Lprime":
        out.update(s.consts)
        us = sorted(closed)
        out.update(s.g[t] for t in itertools.product(us, repeat=2))
        out.update(s.h[t] for t in itertools.product(us, repeat=3))
    if limit is not None and len(out) > limit:
        return None
    return out


def generated_substructure(s: FiniteStructure, X: Iterable[int]) -> Tuple[FiniteStructure, "Embedding"]:
    """Smallest substructure containing X, with its inclusion embedding."""
    return induced(s, generated_closure(s, X))


# -- embeddings and isomorphisms -----------------------------------------------


@dataclass(frozen=True)
class Embedding:
    source: FiniteStructure
    target: FiniteStructure
    map: Tup

    def __call__(self, x: int) -> int:
        return self.map[x]

    def compose(self, then: "Embedding") -> "Embedding":
        """``then ∘ self``."""
        return Embedding(self.source, then.target, tuple(then.map[y] for y in self.map))

    def is_valid(self) -> bool:
        return embedding_defect(self.source, self.target, self.map) is None

    def check(self) -> "Embedding":
        why = embedding_defect(self.source, self.target, self.map)
        if why is not None:
            raise StructureError(f"not an embedding: {why}")
        return self


def embedding_defect(src: FiniteStructure, tgt: FiniteStructure, m: Sequence[int]) -> Optional[str]:
    """None if ``m`` embeds src into tgt, else a short reason."""
    if src.signature != tgt.signature:
        return "signature mismatch"
    if len(m) != src.size:
        return "map is not total"
    if len(set(m)) != len(m):
        return "map is not injective"
    for x, y in enumerate(m):
        if not 0 <= y < tgt.size:
            return f"{x} -> {y} outside target"
        if src.sorts[x] != tgt.sorts[y]:
            return f"sort of {x} not preserved"
    for x in src.U:
        if (x in src.p) != (m[x] in tgt.p):
            return f"p-definedness of {x} not preserved"
        if x in src.p and tgt.p[m[x]] != m[src.p[x]]:
            return f"p({x}) not preserved"
    for i, c in enumerate(src.consts):
        if tgt.consts[i] != m[c]:
            return f"c{i} not preserved"
    for t, r in src.table.items():
        r2 = tgt.table[tuple(m[x] for x in t)]
        if r2.rel != r.rel:
            return f"rel index of {t} not preserved"
        if r2.low != tuple(m[y] for y in r.low):
            return f"f values of {t} not preserved"
    for name in ("g", "h"):
        for t, w in getattr(src, name).items():
            if getattr(tgt, name)[tuple(m[x] for x in t)] != m[w]:
                return f"{name}{t} not preserved"
    return None


def is_automorphism(s: FiniteStructure, m: Sequence[int]) -> bool:
    return sorted(m) == list(s.universe) and embedding_defect(s, s, m) is None


def _invariants(s: FiniteStructure) -> list:
    ar = s.signature.arity
    pos_rels = [[[] for _ in range(ar)] for _ in s.universe]
    for t, r in s.table.items():
        for i, x in enumerate(t):
            pos_rels[x][i].append(r.rel)
    preimages = [0] * s.size
    for y in s.p.values():
        preimages[y] += 1
    const_idx = {c: i for i, c in enumerate(s.consts)}
    out = []
    for x in s.universe:
        diag = s.table[(x,) * ar].rel if s.sorts[x] == "U" else -1
        out.append((
            s.sorts[x],
            diag,
            tuple(tuple(sorted(col)) for col in pos_rels[x]),
            preimages[x],
            x in s.p,
            const_idx.get(x, -1),
        ))
    return out


def _partial_ok(src: FiniteStructure, tgt: FiniteStructure, m: Dict[int, int], x: int, y: int) -> bool:
    """Cheap consistency test for extending ``m`` by x -> y."""
    if src.sorts[x] != tgt.sorts[y]:
        return False
    if src.sorts[x] == "U":
        if (x in src.p) != (y in tgt.p):
            return False
        px = src.p.get(x)
        if px is not None and px in m and tgt.p[y] != m[px]:
            return False
        ar = src.signature.arity
        assigned = [z for z in m] + [x]
        assigned = [z for z in assigned if src.sorts[z] == "U"]
        if ar == 2:
            cands = [(x, x)] + [(x, z) for z in assigned if z != x] + [(z, x) for z in assigned if z != x]
        else:
            cands = [t for t in itertools.product(assigned, repeat=ar) if x in t]
        mm = dict(m)
        mm[x] = y
        for t in cands:
            r = src.table[t]
            r2 = tgt.table[tuple(mm[z] for z in t)]
            if r.rel != r2.rel:
                return False
            for a, b in zip(r.low, r2.low):
                if a in mm and mm[a] != b:
                    return False
    else:
        # y must not be the p-image of something whose preimage maps elsewhere
        for z, w in m.items():
            if src.sorts[z] == "U" and src.p.get(z) == x and tgt.p.get(w) != y:
                return False
    return True


def _search(src, tgt, order, candidates, fixed) -> Iterator[Tup]:
    m: Dict[int, int] = dict(fixed)
    used = set(m.values())
    if len(used) != len(m):
        return
    for x, y in fixed.items():
        rest = {z: w for z, w in fixed.items() if z != x}
        if not _partial_ok(src, tgt, rest, x, y):
            return
    free = [x for x in order if x not in m]

    def rec(i):
        if i == len(free):
            mp = tuple(m[x] for x in range(src.size))
            if embedding_defect(src, tgt, mp) is None:
                yield mp
            return
        x = free[i]
        for y in candidates(x, m):
            if y in used:
                continue
            if not _partial_ok(src, tgt, m, x, y):
                continue
            m[x] = y
            used.add(y)
            yield from rec(i + 1)
            del m[x]
            used.discard(y)

    yield from rec(0)


def iter_isomorphisms(s: FiniteStructure, t: FiniteStructure) -> Iterator[Tup]:
    """All isomorphisms s -> t, by backtracking in element-id order."""
    if s.signature != t.signature:
        raise SignatureMismatch(f"{s.signature} vs {t.signature}")
    if s.size != t.size or sorted(s.sorts) != sorted(t.sorts):
        return
    inv_s, inv_t = _invariants(s), _invariants(t)
    if sorted(inv_s) != sorted(inv_t):
        return
    by_inv: Dict[tuple, list] = {}
    for y, iv in enumerate(inv_t):
        by_inv.setdefault(iv, []).append(y)
    yield from _search(s, t, list(s.universe), lambda x, m: by_inv.get(inv_s[x], ()), {})


def find_isomorphism(s: FiniteStructure, t: FiniteStructure) -> Optional[Tup]:
    return next(iter_isomorphisms(s, t), None)


def iter_embeddings(src: FiniteStructure, tgt: FiniteStructure, fixed: Optional[Mapping[int, int]] = None) -> Iterator[Tup]:
    """Embeddings src -> tgt extending the partial map ``fixed``."""
    if src.signature != tgt.signature:
        raise SignatureMismatch(f"{src.signature} vs {tgt.signature}")
    fixed = dict(fixed or {})
    # V/W first so that p-images constrain U candidates
    order = sorted(src.universe, key=lambda x: (src.sorts[x] == "U", x))
    by_sort: Dict[str, list] = {}
    for y in tgt.universe:
        by_sort.setdefault(tgt.sorts[y], []).append(y)
    preimages: Dict[int, list] = {}
    for u, v in tgt.p.items():
        preimages.setdefault(v, []).append(u)
    for lst in preimages.values():
        lst.sort()

    def candidates(x, m):
        if src.sorts[x] == "U" and x in src.p and src.p[x] in m:
            return preimages.get(m[src.p[x]], ())
        return by_sort.get(src.sorts[x], ())

    yield from _search(src, tgt, order, candidates, fixed)


def find_embedding(src: FiniteStructure, tgt: FiniteStructure, fixed: Optional[Mapping[int, int]] = None) -> Optional[Tup]:
    return next(iter_embeddings(src, tgt, fixed), None)


# -- canonical text format --------------------------------------------------


def _ids(t: Iterable[int]) -> str:
    return ",".join(str(x) for x in t)


def serialize_structure(s: FiniteStructure) -> str:
    lines = [f"sig {s.signature.kind} k={s.signature.k}"]
    lines += [f"elem {x} {srt}" for x, srt in enumerate(s.sorts)]
    lines += [f"p {x} {s.p[x]}" for x in sorted(s.p)]
    lines += [f"const c{i} {c}" for i, c in enumerate(s.consts)]
    for t in sorted(s.table):
        r = s.table[t]
        lines.append(f"tuple {_ids(t)} rel={r.rel} f=[{_ids(r.low)}]")
    lines += [f"g {_ids(t)} {s.g[t]}" for t in sorted(s.g)]
    lines += [f"h {_ids(t)} {s.h[t]}" for t in sorted(s.h)]
    return "\n".join(lines) + "\n"


def structure_hash(s: FiniteStructure) -> str:
    return hashlib.sha256(serialize_structure(s).encode()).hexdigest()[:16]


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise StructureParseError(lineno, f"expected an integer, got {tok!r}") from None


def _id_list(tok: str, lineno: int) -> Tup:
    if tok == "":
        return ()
    return tuple(_int(x, lineno) for x in tok.split(","))


def parse_structure(text: str) -> FiniteStructure:
    sig = None
    sig_line = 1
    elems: Dict[int, str] = {}
    p: Dict[int, int] = {}
    p_lines: Dict[int, int] = {}
    consts: Dict[int, int] = {}
    table: Dict[Tup, TupleRecord] = {}
    g: Dict[Tup, int] = {}
    h: Dict[Tup, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        if sig is None:
            if head != "sig" or len(parts) != 3 or not parts[2].startswith("k="):
                raise StructureParseError(lineno, "first declaration must be 'sig <kind> k=<int>'")
            kind, k = parts[1], _int(parts[2][2:], lineno)
            if kind not in KINDS:
                raise StructureParseError(lineno, f"unknown signature kind {kind!r}")
            sig = (kind, k)
            sig_line = lineno
            continue
        if head == "elem":
            if len(parts) != 3 or parts[2] not in SORTS:
                raise StructureParseError(lineno, "malformed sort line, expected 'elem <id> <U|V|W>'")
            x = _int(parts[1], lineno)
            if x in elems:
                raise StructureParseError(lineno, f"element {x} declared twice")
            elems[x] = parts[2]
        elif head == "p":
            if len(parts) != 3:
                raise StructureParseError(lineno, "expected 'p <id> <id>'")
            x, y = _int(parts[1], lineno), _int(parts[2], lineno)
            if elems.get(x) != "U":
                raise StructureParseError(lineno, f"p defined on non-U element {x}")
            if x in p:
                raise StructureParseError(lineno, f"p({x}) declared twice")
            p[x] = y
            p_lines[x] = lineno
        elif head == "const":
            if len(parts) != 3 or not parts[1].startswith("c"):
                raise StructureParseError(lineno, "expected 'const c<n> <id>'")
            i = _int(parts[1][1:], lineno)
            if i in consts:
                raise StructureParseError(lineno, f"c{i} declared twice")
            consts[i] = _int(parts[2], lineno)
        elif head == "tuple":
            if len(parts) != 4 or not parts[2].startswith("rel=") or not parts[3].startswith("f=["):
                raise StructureParseError(lineno, "expected 'tuple <ids> rel=<n> f=[<ids>]'")
            if not parts[3].endswith("]"):
                raise StructureParseError(lineno, "unterminated f list")
            t = _id_list(parts[1], lineno)
            rel = _int(parts[2][4:], lineno)
            low = _id_list(parts[3][3:-1], lineno)
            if len(low) != rel:
                raise StructureParseError(lineno, f"f list has length {len(low)} but rel={rel}")
            for x in t:
                if elems.get(x) != "U":
                    raise StructureParseError(lineno, f"tuple mentions non-U element {x}")
            if t in table:
                raise StructureParseError(lineno, f"tuple {t} declared twice (exactly one R_n per tuple)")
            table[t] = TupleRecord(rel, low)
        elif head in ("g", "h"):
            if len(parts) != 3:
                raise StructureParseError(lineno, f"expected '{head} <ids> <id>'")
            (g if head == "g" else h)[_id_list(parts[1], lineno)] = _int(parts[2], lineno)
        else:
            raise StructureParseError(lineno, f"unknown declaration {head!r}")
    if sig is None:
        raise StructureParseError(1, "missing 'sig' line")
    if sorted(elems) != list(range(len(elems))):
        raise StructureParseError(sig_line, "element ids must be dense from 0")
    if sorted(consts) != list(range(len(consts))):
        raise StructureParseError(sig_line, "constants must be c0 .. c<m-1>")
    try:
        signature = Signature(sig[0], sig[1], len(consts))
        return FiniteStructure(
            signature,
            tuple(elems[x] for x in range(len(elems))),
            p,
            table,
            tuple(consts[i] for i in range(len(consts))),
            g,
            h,
        )
    except StructureError as exc:
        raise StructureParseError(sig_line, str(exc)) from None


def read_structure(path) -> FiniteStructure:
    with open(path, encoding="utf-8") as fh:
        return parse_structure(fh.read())


def write_structure(s: FiniteStructure, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_structure(s))
