import itertools
import random

import pytest
from hypothesis import given, strategies as st

from oracles import naive_closure
from fraisse_workbench import combinatorics as comb
from fraisse_workbench.closure import (
    GeneratedClosure,
    IdentityClosure,
    StructureClosure,
    cl,
    independent_subsets,
    is_independent,
    max_independent_brute,
    parse_operator,
    serialize_operator,
)
from fraisse_workbench.errors import StructureError
from fraisse_workbench.sampling import random_candidate
from fraisse_workbench.structure import L, generated_closure

seeds = st.integers(0, 2**32 - 1)


def random_structure(seed, nu=6):
    return random_candidate(random.Random(seed), L, nu, 1, 3)


def random_gen_op(seed, n=6):
    rng = random.Random(seed)
    gens = [(1, {(x,): rng.randrange(n) for x in range(n)})]
    gens.append((2, {t: rng.randrange(n) for t in itertools.product(range(n), repeat=2)}))
    return GeneratedClosure(range(n), gens)


def test_empty_closure():
    assert cl(random_structure(1), ()) == frozenset()


@given(seeds)
def test_singleton_contains_itself(seed):
    s = random_structure(seed)
    for x in s.U:
        assert x in cl(s, {x})


@given(seeds)
def test_matches_naive_fixpoint(seed):
    s = random_structure(seed)
    for X in itertools.combinations(s.U, 2):
        assert cl(s, X) == naive_closure(s, X)


def test_v_elements_rejected():
    s = random_structure(2)
    with pytest.raises(StructureError):
        cl(s, {s.V[0]})


@given(seeds)
def test_closure_axioms(seed):
    op = random_gen_op(seed)
    subsets = [frozenset(c) for r in range(4) for c in itertools.combinations(range(6), r)]
    for X in subsets:
        c = op.closure(X)
        assert X <= c and op.closure(c) == c
        for Y in subsets:
            if X <= Y:
                assert c <= op.closure(Y)


@given(seeds)
def test_structure_closure_is_u_part(seed):
    s = random_structure(seed, 4)
    for X in itertools.combinations(s.U, 2):
        assert cl(s, X) == {x for x in generated_closure(s, X) if s.sorts[x] == "U"}


class TestIndependence:
    def test_singleton(self):
        op = GeneratedClosure(range(3), [(0, {(): 0})])
        assert not is_independent(op, {0})
        assert is_independent(op, {1})

    def test_dependent_triple(self):
        # 0 = g(1, 2): a permutation puts x_0 into the closure of the others
        graph = {t: t[0] for t in itertools.product(range(3), repeat=2)}
        graph[(1, 2)] = 0
        op = GeneratedClosure(range(3), [(2, graph)])
        assert not is_independent(op, {0, 1, 2})
        assert is_independent(op, {0, 1})

    @given(seeds)
    def test_matches_definition(self, seed):
        op = random_gen_op(seed)
        for r in range(4):
            for X in itertools.combinations(range(6), r):
                direct = all(x not in naive_op_closure(op, set(X) - {x}) for x in X)
                assert is_independent(op, X) == direct

    @given(seeds)
    def test_hereditary(self, seed):
        op = random_gen_op(seed)
        for X in independent_subsets(op, 3):
            for Y in itertools.combinations(X, 2):
                assert is_independent(op, Y)


def naive_op_closure(op, X):
    cur = set(X)
    while True:
        new = set(cur)
        for a, gr in op.generators:
            for t in itertools.product(sorted(cur), repeat=a):
                new.add(gr[t])
        if new == cur:
            return cur
        cur = new


class TestMaxIndependent:
    def test_identity_gives_everything(self):
        assert max_independent_brute(IdentityClosure(range(5)), 5) == frozenset(range(5))

    def test_gn_family_k1(self):
        op = comb.gn_operator(comb.build_gn_family(1, 16))
        assert len(max_independent_brute(op, 3)) <= 1

    @given(seeds)
    def test_cross_checked(self, seed):
        op = random_gen_op(seed)
        best = max_independent_brute(op, 6)
        assert is_independent(op, best)
        sizes = [r for r in range(7) if any(is_independent(op, c) for c in itertools.combinations(range(6), r))]
        assert len(best) == max(sizes)


def test_operator_text_round_trip():
    op = random_gen_op(7, 4)
    back = parse_operator(serialize_operator(op))
    assert back.generators == op.generators and back.carrier == op.carrier


def test_structure_operator_carrier_is_u():
    s = random_structure(3)
    assert StructureClosure(s).carrier == frozenset(s.U)
