"""Closure operators, cl(X) on structures, and cl-independence."""

from __future__ import annotations

import itertools
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import StructureError, StructureParseError
from .structure import FiniteStructure, close_tuples

Generator = Tuple[int, Mapping[Tuple[int, ...], int]]


class ClosureOperator:
    """Base class: a closure operator on a finite carrier.

    Subclasses implement ``_compute``; results are memoised per input set.
    """

    carrier: FrozenSet[int]

    def __init__(self, carrier: Iterable[int]):
        self.carrier = frozenset(carrier)
        self._cache: Dict[FrozenSet[int], FrozenSet[int]] = {}

    def closure(self, X: Iterable[int]) -> FrozenSet[int]:
        X = frozenset(X)
        hit = self._cache.get(X)
        if hit is not None:
            return hit
        stray = X - self.carrier
        if stray:
            raise StructureError(f"elements {sorted(stray)} are outside the carrier")
        out = frozenset(self._compute(X))
        self._cache[X] = out
        return out

    def _compute(self, X: FrozenSet[int]) -> Iterable[int]:
        raise NotImplementedError

    __call__ = closure


class GeneratedClosure(ClosureOperator):
    """Transitive closure under finitely many total generator functions.

    Each generator is ``(arity, graph)`` with ``graph`` defined on all of
    carrier^arity (arity 0 generators are constants).  With ``include_base``
    the input set is part of its own closure.
    """

    def __init__(self, carrier: Iterable[int], generators: Sequence[Generator], include_base: bool = True):
        super().__init__(carrier)
        self.generators: List[Generator] = [(a, dict(gr)) for a, gr in generators]
        self.include_base = include_base
        for a, gr in self.generators:
            if len(gr) != len(self.carrier) ** a:
                raise StructureError(f"generator of arity {a} is not total on the carrier")

    @classmethod
    def from_functions(cls, carrier: Iterable[int], functions: Sequence[Tuple[int, Callable]], include_base: bool = True):
        carrier = sorted(set(carrier))
        gens = []
        for a, fn in functions:
            gens.append((a, {t: fn(*t) for t in itertools.product(carrier, repeat=a)}))
        return cls(carrier, gens, include_base)

    def _compute(self, X):
        if not self.include_base:
            return self._transitive(X)
        closed = set(X)
        order = sorted(closed)
        for a, gr in self.generators:
            if a == 0:
                y = gr[()]
                if y not in closed:
                    closed.add(y)
                    order.append(y)
        i = 0
        while i < len(order):
            e = order[i]
            i += 1
            current = order[:i]
            for a, gr in self.generators:
                if a == 0:
                    continue
                if a == 1:
                    tuples = [(e,)]
                else:
                    tuples = [t for t in itertools.product(current, repeat=a) if e in t]
                for t in tuples:
                    y = gr[t]
                    if y not in closed:
                        closed.add(y)
                        order.append(y)
        return closed

    def _transitive(self, X):
        # cl_0 iterated: only generated values, X itself not added
        out: set = set()
        while True:
            avail = sorted(X | out)
            new = {gr[t] for a, gr in self.generators for t in itertools.product(avail, repeat=a)}
            if new <= out:
                return out
            out |= new


class IdentityClosure(ClosureOperator):
    def _compute(self, X):
        return X


class StructureClosure(ClosureOperator):
    """cl on the U-part of a structure: closure under all f_n."""

    def __init__(self, s: FiniteStructure):
        super().__init__(s.U)
        self.structure = s

    def _compute(self, X):
        return close_tuples(self.structure, X)


class RelativeClosure(ClosureOperator):
    """cl'(A) = cl(A ∪ {b}) ∩ Y on the carrier Y."""

    def __init__(self, base: ClosureOperator, Y: Iterable[int], b: int):
        super().__init__(Y)
        self.base = base
        self.b = b

    def _compute(self, X):
        return self.base.closure(X | {self.b}) & self.carrier


def as_operator(s_or_op: Union[FiniteStructure, ClosureOperator]) -> ClosureOperator:
    if isinstance(s_or_op, FiniteStructure):
        return StructureClosure(s_or_op)
    return s_or_op


def cl(s_or_op: Union[FiniteStructure, ClosureOperator], X: Iterable[int]) -> FrozenSet[int]:
    return as_operator(s_or_op).closure(X)


def is_independent(op: Union[FiniteStructure, ClosureOperator], X: Iterable[int]) -> bool:
    op = as_operator(op)
    X = frozenset(X)
    if X - op.carrier:
        raise StructureError(f"elements {sorted(X - op.carrier)} are outside the carrier")
    return all(x not in op.closure(X - {x}) for x in X)


def max_independent_brute(op: Union[FiniteStructure, ClosureOperator], size_cap: int) -> FrozenSet[int]:
    """Largest independent set of size <= size_cap; lexicographically least among ties."""
    op = as_operator(op)
    elems = sorted(op.carrier)
    for r in range(min(size_cap, len(elems)), -1, -1):
        for combo in itertools.combinations(elems, r):
            if is_independent(op, combo):
                return frozenset(combo)
    return frozenset()


def independent_subsets(op: Union[FiniteStructure, ClosureOperator], size: int) -> Iterable[Tuple[int, ...]]:
    op = as_operator(op)
    for combo in itertools.combinations(sorted(op.carrier), size):
        if is_independent(op, combo):
            yield combo


# -- text format for generator-based operators ----------------------------------


def serialize_operator(op: GeneratedClosure) -> str:
    carrier = sorted(op.carrier)
    if carrier != list(range(len(carrier))):
        raise StructureError("only carriers of the form 0..n-1 are serializable")
    lines = [f"carrier {len(carrier)}"]
    for a, gr in op.generators:
        rows = ";".join(f"{','.join(map(str, t))}>{gr[t]}" for t in sorted(gr))
        lines.append(f"gen {a} {rows}")
    return "\n".join(lines) + "\n"


def parse_operator(text: str) -> GeneratedClosure:
    n: Optional[int] = None
    gens: List[Generator] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(maxsplit=2)
        try:
            if parts[0] == "carrier" and n is None:
                n = int(parts[1])
            elif parts[0] == "gen" and n is not None:
                a = int(parts[1])
                graph = {}
                for row in (parts[2].split(";") if len(parts) > 2 else []):
                    lhs, rhs = row.split(">")
                    key = tuple(int(x) for x in lhs.split(",")) if lhs else ()
                    graph[key] = int(rhs)
                gens.append((a, graph))
            else:
                raise ValueError(parts[0])
        except (ValueError, IndexError):
            raise StructureParseError(lineno, "expected 'carrier <n>' then 'gen <arity> <rows>' lines") from None
    if n is None:
        raise StructureParseError(1, "missing carrier line")
    try:
        return GeneratedClosure(range(n), gens)
    except StructureError as exc:
        raise StructureParseError(1, str(exc)) from None
