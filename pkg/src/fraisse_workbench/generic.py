"""Finite approximation chains B_0 ⊆ B_1 ⊆ ... of the K-generic structure.

Each stage is closed off before the next one starts:

* a joint-embedding tick adds a fresh copy of one catalogue member (round robin
  in a seed-shuffled order), so every member eventually embeds and V keeps
  growing;
* then extension requests are drained FIFO.  A request is a closed
  substructure A of the current top (embedded copy of a catalogue member),
  together with a catalogue extension A ⊆ A'.  If A' already embeds over A the
  request is logged as witnessed, otherwise A' is amalgamated in over A.
  New elements produce new closed substructures and hence new requests.

Requests only range over catalogue members: structures of size <= size_budget
with every rel index <= max_rel.  The amalgams themselves use fresh, ever
larger indices, so the catalogue bound caps how many types must be realised.
"""

from __future__ import annotations

import itertools
import os
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .amalgam import IsoCatalog, amalgamate, check_member, enumerate_K, joint_embed
from .closure import StructureClosure
from .errors import StructureError
from .reports import Report
from .structure import (
    Embedding,
    FiniteStructure,
    Signature,
    empty_structure,
    embedding_defect,
    find_embedding,
    generated_closure,
    generated_substructure,
    induced,
    iter_isomorphisms,
    read_structure,
    structure_hash,
    write_structure,
)

Tup = Tuple[int, ...]


@dataclass(frozen=True)
class ExtensionType:
    base: FiniteStructure
    ext: FiniteStructure
    inc: Tup  # embedding base -> ext
    base_hash: str
    ext_hash: str


def closed_subsets(s: FiniteStructure, cap: int, containing: Optional[Iterable[int]] = None) -> Set[FrozenSet[int]]:
    """Closed subsets of size <= cap (only those meeting ``containing`` if given)."""
    singles: Dict[int, FrozenSet[int]] = {}
    for x in s.universe:
        c = generated_closure(s, {x}, cap)
        if c is not None:
            singles[x] = frozenset(c)
    if containing is None:
        base = generated_closure(s, (), cap)
        seeds = [frozenset(base)] if base is not None else []
    else:
        seeds = [singles[x] for x in containing if x in singles]
    found: Set[FrozenSet[int]] = set(seeds)
    todo = list(seeds)
    while todo:
        S = todo.pop()
        for y, cy in singles.items():
            if y in S or len(S | cy) > cap:
                continue
            c = generated_closure(s, S | cy, cap)
            if c is None:
                continue
            c = frozenset(c)
            if c not in found:
                found.add(c)
                todo.append(c)
    return found


class ExtensionCatalog:
    """Catalogue members (one per iso type) and all their proper extensions."""

    def __init__(self, sig: Signature, size_budget: int, max_rel: int):
        self.signature = sig
        self.size_budget = size_budget
        self.max_rel = max_rel
        self.members = enumerate_K(size_budget, max_rel, sig)
        self.iso = IsoCatalog()
        for m in self.members:
            self.iso.add(m)
        self.hashes = [structure_hash(m) for m in self.members]
        self.by_hash = {h: m for h, m in zip(self.hashes, self.members)}
        self.extensions: Dict[int, List[ExtensionType]] = {i: [] for i in range(len(self.members))}
        for j, ext in enumerate(self.members):
            for X in sorted(closed_subsets(ext, ext.size), key=lambda c: (len(c), sorted(c))):
                if len(X) == ext.size:
                    continue
                sub, emb = induced(ext, X)
                i, iso = self.iso.find(sub)
                inv = {b: a for a, b in enumerate(iso)}
                inc = tuple(emb.map[inv[b]] for b in self.members[i].universe)
                self.extensions[i].append(ExtensionType(self.members[i], ext, inc, self.hashes[i], self.hashes[j]))

    def locate(self, s: FiniteStructure) -> Optional[Tuple[int, Tup]]:
        if s.size > self.size_budget or s.max_rel > self.max_rel:
            return None
        return self.iso.find(s)

    def extension_by_hashes(self, base_hash: str, ext_hash: str, inc: Tup) -> ExtensionType:
        base = self.by_hash[base_hash]
        return ExtensionType(base, self.by_hash[ext_hash], tuple(inc), base_hash, ext_hash)

    def requests_for(self, s: FiniteStructure, X: FrozenSet[int], a_prime_cap: Optional[int] = None):
        """(extension type, embedding of its base onto X) for every catalogue extension of X."""
        sub, emb = induced(s, X)
        loc = self.locate(sub)
        if loc is None:
            return
        i = loc[0]
        base = self.members[i]
        for iso in iter_isomorphisms(base, sub):
            at = tuple(emb.map[iso[b]] for b in base.universe)
            for et in self.extensions[i]:
                if a_prime_cap is None or et.ext.size <= a_prime_cap:
                    yield et, at


@dataclass
class Request:
    etype: ExtensionType
    at: Tup
    tick: int

    def describe(self) -> str:
        return f"A={self.etype.base_hash} A'={self.etype.ext_hash} inc={_fmt(self.etype.inc)} at={_fmt(self.at)}"


@dataclass
class LogEntry:
    stage: int
    kind: str  # jep | amalgamate | witness
    base_hash: str
    ext_hash: str
    inc: Tup
    at: Tup
    img: Tup

    def line(self) -> str:
        return (
            f"stage={self.stage} kind={self.kind} A={self.base_hash} A'={self.ext_hash} "
            f"inc={_fmt(self.inc)} at={_fmt(self.at)} img={_fmt(self.img)}"
        )

    @classmethod
    def parse(cls, line: str) -> "LogEntry":
        kv = dict(tok.split("=", 1) for tok in line.split())
        return cls(int(kv["stage"]), kv["kind"], kv["A"], kv["A'"], _unfmt(kv["inc"]), _unfmt(kv["at"]), _unfmt(kv["img"]))


def _fmt(t: Sequence[int]) -> str:
    return ",".join(map(str, t)) if len(t) else "-"


def _unfmt(s: str) -> Tup:
    return () if s == "-" else tuple(int(x) for x in s.split(","))


@dataclass
class GenericChain:
    signature: Signature
    stages: List[FiniteStructure]
    request_log: List[LogEntry]
    pending: List[Request]
    seed: int
    size_budget: int
    max_rel: int
    catalog: ExtensionCatalog = field(repr=False, compare=False)
    ticks: int = 0

    @property
    def top(self) -> FiniteStructure:
        return self.stages[-1]

    def inclusion(self, i: int, j: int) -> Embedding:
        """Stage i ⊆ stage j (ids are stable along the chain)."""
        if i > j:
            raise ValueError("inclusions go forward along the chain")
        return Embedding(self.stages[i], self.stages[j], tuple(self.stages[i].universe))


class _Builder:
    def __init__(self, sig, size_budget, max_rel, seed, tick_budget):
        self.catalog = ExtensionCatalog(sig, size_budget, max_rel)
        self.sig = sig
        self.size_budget = size_budget
        self.top = empty_structure(sig)
        self.seen: Set[FrozenSet[int]] = set()
        self.queue: deque = deque()
        self.log: List[LogEntry] = []
        self.tick = 0
        self.tick_budget = tick_budget
        jep = [i for i, m in enumerate(self.catalog.members) if m.size > 0]
        random.Random(seed).shuffle(jep)
        self.jep_order = jep

    def scan(self, new_elems: Optional[Iterable[int]]):
        found = closed_subsets(self.top, self.size_budget, new_elems)
        for X in sorted(found, key=lambda c: (len(c), sorted(c))):
            if X in self.seen:
                continue
            self.seen.add(X)
            for et, at in self.catalog.requests_for(self.top, X):
                self.queue.append(Request(et, at, self.tick))

    def jep(self, stage: int):
        if not self.jep_order:
            return
        i = self.jep_order[(stage - 1) % len(self.jep_order)]
        M = self.catalog.members[i]
        old = self.top.size
        self.top, _, eCD, _ = joint_embed(self.top, M, check=False)
        self.log.append(LogEntry(stage, "jep", structure_hash(empty_structure(self.sig)), self.catalog.hashes[i], (), (), eCD.map))
        self.scan(range(old, self.top.size))

    def drain(self, stage: int) -> bool:
        while self.queue:
            if self.tick >= self.tick_budget:
                return False
            req = self.queue.popleft()
            self.tick += 1
            et = req.etype
            fixed = {et.inc[b]: req.at[b] for b in range(len(req.at))}
            hit = find_embedding(et.ext, self.top, fixed)
            if hit is not None:
                self.log.append(LogEntry(stage, "witness", et.base_hash, et.ext_hash, et.inc, req.at, hit))
                continue
            old = self.top.size
            eAB = Embedding(et.base, self.top, req.at)
            eAC = Embedding(et.base, et.ext, et.inc)
            self.top, _, eCD, _ = amalgamate(et.base, self.top, et.ext, eAB, eAC, check=False)
            self.log.append(LogEntry(stage, "amalgamate", et.base_hash, et.ext_hash, et.inc, req.at, eCD.map))
            self.scan(range(old, self.top.size))
        return True


def build_chain(
    signature: Signature,
    stage_budget: int,
    size_budget: int,
    seed: int = 0,
    max_rel: int = 0,
    tick_budget: int = 1_000_000,
    check_stages: bool = True,
) -> GenericChain:
    """Build stages 0..stage_budget; unfinished work is left in ``pending``."""
    if stage_budget < 0 or size_budget < 0:
        raise ValueError("budgets must be non-negative")
    b = _Builder(signature, size_budget, max_rel, seed, tick_budget)
    b.scan(None)
    stages = [b.top]
    for stage in range(1, stage_budget + 1):
        b.jep(stage)
        finished = b.drain(stage)
        if check_stages:
            rep = check_member(b.top)
            if not rep.verdict:
                raise StructureError(f"stage {stage} left the class: {rep.violations[0]}")
        stages.append(b.top)
        if not finished:
            break
    return GenericChain(signature, stages, b.log, list(b.queue), seed, size_budget, max_rel, b.catalog, b.tick)


def replay_log(signature: Signature, catalog: ExtensionCatalog, entries: Sequence[LogEntry], n_stages: int) -> List[FiniteStructure]:
    """Rebuild the stages from a request log alone."""
    top = empty_structure(signature)
    stages = [top]
    by_stage: Dict[int, List[LogEntry]] = {}
    for e in entries:
        by_stage.setdefault(e.stage, []).append(e)
    for stage in range(1, n_stages):
        for e in by_stage.get(stage, []):
            if e.kind == "jep":
                top, _, eCD, _ = joint_embed(top, catalog.by_hash[e.ext_hash], check=False)
            elif e.kind == "amalgamate":
                et = catalog.extension_by_hashes(e.base_hash, e.ext_hash, e.inc)
                top, _, eCD, _ = amalgamate(
                    et.base, top, et.ext, Embedding(et.base, top, e.at), Embedding(et.base, et.ext, et.inc), check=False
                )
            elif e.kind == "witness":
                et = catalog.extension_by_hashes(e.base_hash, e.ext_hash, e.inc)
                if embedding_defect(et.ext, top, e.img) is not None:
                    raise StructureError(f"logged witness does not embed: {e.line()}")
                continue
            else:
                raise StructureError(f"unknown log entry kind {e.kind!r}")
            if eCD.map != e.img:
                raise StructureError(f"replay diverged at: {e.line()}")
        stages.append(top)
    return stages


# -- persistence --------------------------------------------------------------------


def write_chain(chain: GenericChain, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    meta = {
        "kind": chain.signature.kind,
        "k": chain.signature.k,
        "seed": chain.seed,
        "size_budget": chain.size_budget,
        "max_rel": chain.max_rel,
        "stages": len(chain.stages),
        "pending": len(chain.pending),
        "ticks": chain.ticks,
    }
    with open(os.path.join(directory, "chain.txt"), "w", encoding="utf-8") as fh:
        fh.writelines(f"{k}={v}\n" for k, v in meta.items())
    for i, s in enumerate(chain.stages):
        write_structure(s, os.path.join(directory, f"stage_{i:03d}.txt"))
    with open(os.path.join(directory, "request_log.txt"), "w", encoding="utf-8") as fh:
        fh.writelines(e.line() + "\n" for e in chain.request_log)
    with open(os.path.join(directory, "pending.txt"), "w", encoding="utf-8") as fh:
        fh.writelines(r.describe() + "\n" for r in chain.pending)


def load_chain(directory) -> GenericChain:
    with open(os.path.join(directory, "chain.txt"), encoding="utf-8") as fh:
        meta = dict(line.strip().split("=", 1) for line in fh if line.strip())
    sig = Signature(meta["kind"], int(meta["k"]))
    stages = [read_structure(os.path.join(directory, f"stage_{i:03d}.txt")) for i in range(int(meta["stages"]))]
    with open(os.path.join(directory, "request_log.txt"), encoding="utf-8") as fh:
        log = [LogEntry.parse(line) for line in fh if line.strip()]
    catalog = ExtensionCatalog(sig, int(meta["size_budget"]), int(meta["max_rel"]))
    pending = []
    with open(os.path.join(directory, "pending.txt"), encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            kv = dict(tok.split("=", 1) for tok in line.split())
            et = catalog.extension_by_hashes(kv["A"], kv["A'"], _unfmt(kv["inc"]))
            pending.append(Request(et, _unfmt(kv["at"]), -1))
    return GenericChain(sig, stages, log, pending, int(meta["seed"]), int(meta["size_budget"]), int(meta["max_rel"]), catalog, int(meta["ticks"]))


# -- verification suites ---------------------------------------------------------------


def first_stage(chain: GenericChain, X: Iterable[int]) -> int:
    m = max(X, default=-1)
    return next(i for i, s in enumerate(chain.stages) if s.size > m)


def verify_chain_integrity(chain: GenericChain) -> Report:
    """Every stage is a member and is the induced substructure of the next one."""
    rep = Report("chain_integrity")
    for i, s in enumerate(chain.stages):
        rep.checked += 1
        mem = check_member(s)
        if not mem.verdict:
            rep.fail(f"stage {i} not a member: {mem.violations[0]}")
        if i + 1 < len(chain.stages):
            nxt = chain.stages[i + 1]
            if nxt.size < s.size or embedding_defect(s, nxt, tuple(s.universe)) is not None:
                rep.fail(f"stage {i} is not included in stage {i + 1}")
    return rep


def verify_extension_property(chain: GenericChain, a_cap: int, a_prime_cap: int) -> Report:
    """Every catalogue extension A' (|A'| <= a_prime_cap) of every closed A
    (|A| <= a_cap) of a stage embeds over A into some later stage.

    Stages are nested, so "some later stage" is decided on the last one.
    """
    rep = Report("extension_property")
    top = chain.top
    catalog = chain.catalog
    if a_prime_cap > catalog.size_budget:
        catalog = ExtensionCatalog(chain.signature, a_prime_cap, chain.max_rel)
    for X in sorted(closed_subsets(top, a_cap), key=lambda c: (len(c), sorted(c))):
        s0 = first_stage(chain, X)
        for et, at in catalog.requests_for(top, X, a_prime_cap):
            rep.checked += 1
            fixed = {et.inc[b]: at[b] for b in range(len(at))}
            if find_embedding(et.ext, top, fixed) is None:
                rep.fail(f"stage {s0}: no extension A={et.base_hash} A'={et.ext_hash} at={_fmt(at)}")
    for r in chain.pending:
        rep.fail(f"pending request {r.describe()}")
    return rep


def _closed_in(s: FiniteStructure, top: FiniteStructure) -> bool:
    """The universe of s (an initial id segment of top) is closed in top."""
    n = s.size
    us = s.U
    if any(top.p[x] >= n for x in s.p):
        return False
    return all(max(top.low_sets[t], default=-1) < n for t in itertools.product(us, repeat=top.signature.arity))


def verify_recorded_facts(chain: GenericChain, size_cap: int) -> Report:
    """V grows; closures are finite and stage-absolute; no independent set of
    size arity+1; tuples of distinct V-points of equal length generate
    isomorphic substructures.

    Absoluteness is checked directly for sets of size <= min(size_cap, 2) and
    follows for larger sets because each stage is closed in the last one.
    """
    rep = Report("recorded_facts")
    sig = chain.signature
    top = chain.top
    if sig.kind == "L":
        sizes = [len(st.V) for st in chain.stages]
        rep.stats["V_sizes"] = sizes
        for i in range(1, len(sizes)):
            if sizes[i] < sizes[i - 1]:
                rep.fail(f"|V| shrinks from stage {i - 1} to {i}")
        if len(sizes) > 2 and sizes[-1] <= sizes[1]:
            rep.fail("|V| does not grow along the chain")
    top_op = StructureClosure(top)
    indep = sig.arity + 1
    for i, st in enumerate(chain.stages):
        rep.checked += 1
        if not _closed_in(st, top):
            rep.fail(f"stage {i} is not closed in the last stage")
            continue
        op = StructureClosure(st)
        for r in range(1, min(size_cap, 2) + 1):
            for X in itertools.combinations(st.U, r):
                rep.checked += 1
                if op.closure(X) != top_op.closure(X):
                    rep.fail(f"stage {i}: cl{X} differs in the last stage")
        for X in itertools.combinations(st.U, indep):
            rep.checked += 1
            if all(x not in top_op.closure(set(X) - {x}) for x in X):
                rep.fail(f"stage {i}: independent set {X}")
        if sig.kind == "L":
            for n in range(1, min(size_cap, len(st.V)) + 1):
                ref = None
                for tup in itertools.permutations(st.V, n):
                    rep.checked += 1
                    if generated_closure(st, tup) != set(tup):
                        rep.fail(f"stage {i}: V-tuple {tup} generates extra elements")
                        continue
                    if ref is None:
                        ref = tup
                        ref_sub, ref_emb = induced(st, tup)
                        continue
                    sub, emb = induced(st, tup)
                    pos = {x: j for j, x in enumerate(emb.map)}
                    back = dict(zip(ref, tup))
                    m = tuple(pos[back[x]] for x in ref_emb.map)
                    if embedding_defect(ref_sub, sub, m) is not None:
                        rep.fail(f"stage {i}: V-tuples {ref} and {tup} are not isomorphic")
    return rep


def realised_extensions(chain: GenericChain, base: FiniteStructure, base_map: Sequence[int], cap: int) -> FrozenSet[Tuple[str, Tup]]:
    """Catalogue extensions (|A'| <= cap) realised over the copy of ``base`` in the last stage.

    Types are keyed by (ext hash, inc) relative to ``base``, with the base
    pinned positionally through ``base_map`` (base id -> stage id).
    """
    loc = chain.catalog.locate(base)
    if loc is None:
        return frozenset()
    i, iso = loc
    out = set()
    rep_base = chain.catalog.members[i]
    inv = {r: b for b, r in enumerate(iso)}
    at = tuple(base_map[inv[r]] for r in rep_base.universe)
    for et in chain.catalog.extensions[i]:
        if et.ext.size > cap:
            continue
        fixed = {et.inc[b]: at[b] for b in range(len(at))}
        if find_embedding(et.ext, chain.top, fixed) is not None:
            out.add((et.ext_hash, et.inc))
    return frozenset(out)


def indiscernibility_check(chain: GenericChain, n_cap: int, a_prime_cap: Optional[int] = None) -> Report:
    """Any two n-tuples of distinct V-points (n <= n_cap) of the last stage
    induce a partial isomorphism and have the same catalogue extensions.

    Every tuple is compared with the first one; the relation is transitive.
    """
    rep = Report("indiscernibility")
    if chain.signature.kind != "L":
        return rep
    cap = a_prime_cap if a_prime_cap is not None else chain.size_budget
    top = chain.top
    for n in range(1, n_cap + 1):
        ref: Optional[Tup] = None
        for tup in itertools.permutations(top.V, n):
            rep.checked += 1
            if len(generated_closure(top, tup)) != n:
                rep.fail(f"V-tuple {tup} generates extra elements")
                continue
            if ref is None:
                ref = tup
            elif not _same_type(chain, ref, tup, cap):
                rep.fail(f"V-tuples {ref} and {tup} realise different extensions")
    return rep


def _same_type(chain: GenericChain, a: Tup, b: Tup, cap: int) -> bool:
    """Both V-tuples extend to the same catalogue extensions, positionally."""
    top = chain.top
    for ta, tb in ((a, b), (b, a)):
        for et, at in chain.catalog.requests_for(top, frozenset(ta)):
            if et.ext.size > cap:
                continue
            pos = {x: j for j, x in enumerate(ta)}
            at_b = tuple(tb[pos[x]] for x in at)
            fa = find_embedding(et.ext, top, {et.inc[q]: at[q] for q in range(len(at))}) is not None
            fb = find_embedding(et.ext, top, {et.inc[q]: at_b[q] for q in range(len(at))}) is not None
            if fa != fb:
                return False
    return True


# -- isolating diagrams ---------------------------------------------------------------


@dataclass(frozen=True)
class DiagramFormula:
    """The L_n-reduct of the atomic diagram of gen(tuple), tuple positions distinguished."""

    base: FiniteStructure
    distinguished: Tup  # base ids of the tuple entries, in order
    reduct_bound: int

    def atoms(self) -> List[str]:
        b, n = self.base, self.reduct_bound
        out = []
        for x in b.universe:
            out.append(f"{b.sorts[x]}(x{x})")
        for x, y in itertools.combinations(b.universe, 2):
            out.append(f"x{x}!=x{y}")
        for x in sorted(b.p):
            out.append(f"p(x{x})=x{b.p[x]}")
        for t in sorted(b.table):
            r = b.table[t]
            args = ",".join(f"x{z}" for z in t)
            for j in range(n + 1):
                out.append(f"{'' if r.rel == j else '~'}R{j}({args})")
                out.append(f"f{j}({args})=x{r.f(j, t)}")
        return out


def isolating_diagram(chain: GenericChain, stage: int, tup: Sequence[int]) -> DiagramFormula:
    s = chain.stages[stage]
    base, emb = generated_substructure(s, tup)
    pos = {x: j for j, x in enumerate(emb.map)}
    return DiagramFormula(base, tuple(pos[x] for x in tup), base.max_rel)


def diagram_map(d: DiagramFormula, s: FiniteStructure, tup: Sequence[int]) -> Optional[Tup]:
    """The embedding of d.base into s sending the distinguished positions to
    ``tup`` and respecting the L_n-reduct, or None if ``tup`` fails d.

    The base is generated by its distinguished elements, so the map is forced:
    it is propagated through p and f_0..f_n while each atom is checked.
    """
    b, n = d.base, d.reduct_bound
    if len(tup) != len(d.distinguished):
        return None
    m: Dict[int, int] = {}
    used: Dict[int, int] = {}
    queue: deque = deque()

    def assign(x: int, y: int) -> bool:
        if x in m:
            return m[x] == y
        if y in used or b.sorts[x] != s.sorts[y]:
            return False
        m[x] = y
        used[y] = x
        queue.append(x)
        return True

    for j, x in zip(d.distinguished, tup):
        if not assign(j, x):
            return None
    ar = b.signature.arity
    done: List[int] = []
    while queue:
        x = queue.popleft()
        if b.sorts[x] != "U":
            continue
        y = m[x]
        if (x in b.p) != (y in s.p):
            return None
        if x in b.p and not assign(b.p[x], s.p[y]):
            return None
        done.append(x)
        for t in itertools.product(done, repeat=ar):
            if x not in t:
                continue
            img = tuple(m[z] for z in t)
            r, r2 = b.table[t], s.table[img]
            if (r.rel if r.rel <= n else n + 1) != (r2.rel if r2.rel <= n else n + 1):
                return None
            for j in range(n + 1):
                if not assign(r.f(j, t), r2.f(j, img)):
                    return None
    if len(m) != b.size:
        return None
    return tuple(m[x] for x in b.universe)


def _profile(s: FiniteStructure, tup: Tup) -> tuple:
    us = [x for x in tup if s.sorts[x] == "U"]
    rels = tuple(s.table[t].rel for t in itertools.product(us, repeat=s.signature.arity))
    eq = tuple(tup.index(x) for x in tup)
    return (tuple(s.sorts[x] for x in tup), eq, rels)


def check_isolation(chain: GenericChain, d: DiagramFormula, stage_cap: int, _index: Optional[dict] = None) -> Report:
    """Tuples satisfying d generate copies of d.base, and all of them realise
    the same catalogue extensions (finite surrogate for having one type)."""
    rep = Report("isolation")
    n = len(d.distinguished)
    last = min(stage_cap, len(chain.stages) - 1)
    seen: Set[Tup] = set()
    key = None
    ref_tuple = None
    base_tuple = d.distinguished
    prof = _profile(d.base, base_tuple)
    for i in range(last + 1):
        s = chain.stages[i]
        if _index is not None:
            if (i, n) not in _index:
                _index[(i, n)] = _profile_index(s, n)
            cands = _index[(i, n)].get((n, prof), [])
        else:
            cands = [t for t in itertools.product(s.universe, repeat=n) if _profile(s, t) == prof]
        for tup in cands:
            if tup in seen:
                continue
            mp = diagram_map(d, s, tup)
            if mp is None:
                continue
            seen.add(tup)
            rep.checked += 1
            gen = generated_closure(s, tup)
            if set(mp) != gen or embedding_defect(d.base, s, mp) is not None:
                rep.fail(f"stage {i}: {tup} satisfies the diagram but gen{tup} is not a copy of the base")
                continue
            # the map is a full embedding, so it determines the base; the
            # extensions are looked up in the last stage, whatever i is
            cache = _index.setdefault("realised", {}) if _index is not None else {}
            real = cache.get(mp)
            if real is None:
                real = cache[mp] = realised_extensions(chain, d.base, mp, chain.size_budget)
            if key is None:
                key, ref_tuple = real, tup
            elif real != key:
                rep.fail(f"stage {i}: {ref_tuple} and {tup} satisfy the diagram but realise different extensions")
    return rep


def _profile_index(s: FiniteStructure, n: int) -> Dict[tuple, List[Tup]]:
    idx: Dict[tuple, List[Tup]] = {}
    for t in itertools.product(s.universe, repeat=n):
        idx.setdefault((n, _profile(s, t)), []).append(t)
    return idx
