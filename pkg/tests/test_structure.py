import itertools
import random
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from oracles import brute_isomorphic, naive_closure
from fraisse_workbench.amalgam import iter_candidates
from fraisse_workbench.errors import StructureError, StructureParseError
from fraisse_workbench.prime import build_prime
from fraisse_workbench.sampling import random_candidate, random_member, shuffle_ids
from fraisse_workbench.structure import (
    FiniteStructure,
    L,
    Lk,
    TupleRecord,
    empty_structure,
    eval_f,
    eval_R,
    find_isomorphism,
    generated_closure,
    generated_substructure,
    is_automorphism,
    parse_structure,
    serialize_structure,
)

GOLDEN = Path(__file__).parent / "golden"


def two_u(rel_ab=2, low_ab=(1, 0)):
    table = {t: TupleRecord(0, ()) for t in itertools.product((0, 1), repeat=2)}
    table[(0, 1)] = TupleRecord(rel_ab, low_ab)
    return FiniteStructure(L, ("U", "U", "V"), {0: 2, 1: 2}, table)


seeds = st.integers(0, 2**32 - 1)


def random_l(seed, max_u=3, max_v=2, max_rel=3):
    rng = random.Random(seed)
    return random_candidate(rng, L, rng.randint(0, max_u), rng.randint(1, max_v), max_rel)


class TestEval:
    def test_rel_zero_returns_lead(self):
        s = two_u()
        assert all(eval_f(s, n, (1, 0)) == 1 for n in range(10))

    def test_direct_read(self):
        s = two_u()
        assert eval_f(s, 1, (0, 1)) == 0
        assert eval_f(s, 0, (0, 1)) == 1
        assert eval_R(s, (0, 1)) == 2

    def test_rejects_v_and_strangers(self):
        s = two_u()
        with pytest.raises(StructureError):
            eval_f(s, 0, (0, 2))
        with pytest.raises(StructureError):
            eval_R(s, (0, 7))

    @given(seeds, st.integers(0, 12))
    def test_implicit_rule(self, seed, n):
        s = random_l(seed)
        for t, r in s.table.items():
            if n >= r.rel:
                assert eval_f(s, n, t) == t[0]

    def test_unrepresentable(self):
        with pytest.raises(StructureError):
            FiniteStructure(L, ("U", "V"), {0: 1}, {(0, 0): TupleRecord(1, ())})
        with pytest.raises(StructureError):
            FiniteStructure(L, ("U", "V"), {0: 1}, {})
        with pytest.raises(StructureError):
            FiniteStructure(Lk(1), ("U",), {0: 0}, {(0, 0): TupleRecord(0, ())})


class TestGenerated:
    def test_v_only(self):
        s = two_u()
        sub, emb = generated_substructure(s, [2])
        assert emb.map == (2,) and sub.sorts == ("V",)

    def test_empty(self):
        sub, _ = generated_substructure(two_u(), [])
        assert sub == empty_structure()

    def test_hand_built_four(self):
        # 0 -> f_0(0,0) = 1, 1 -> f_1(1,1) = 2, 2 stays; 3 isolated
        u = range(4)
        table = {t: TupleRecord(0, ()) for t in itertools.product(u, repeat=2)}
        table[(0, 0)] = TupleRecord(1, (1,))
        table[(1, 1)] = TupleRecord(2, (1, 2))
        s = FiniteStructure(L, ("U",) * 4 + ("V",), {x: 4 for x in u}, table)
        assert generated_closure(s, [0]) == naive_closure(s, {0}) | {4} == {0, 1, 2, 4}
        assert generated_closure(s, [3]) == {3, 4}

    @given(seeds, st.data())
    def test_matches_naive_iteration(self, seed, data):
        s = random_l(seed, max_u=4)
        X = data.draw(st.sets(st.sampled_from(list(s.universe))))
        got = generated_closure(s, X)
        us = naive_closure(s, {x for x in X if s.sorts[x] == "U"})
        assert got == us | set(X) | {s.p[x] for x in us}

    @given(seeds, st.data())
    def test_idempotent_and_monotone(self, seed, data):
        s = random_l(seed, max_u=4)
        X = data.draw(st.sets(st.sampled_from(list(s.universe))))
        Y = X | data.draw(st.sets(st.sampled_from(list(s.universe))))
        cx = generated_closure(s, X)
        assert generated_closure(s, cx) == cx
        assert cx <= generated_closure(s, Y)

    def test_prime_adds_constants(self):
        s = random_member(random.Random(3), 4, 1)
        bp = build_prime(s)
        sub, _ = generated_substructure(bp, [])
        assert sub.signature == bp.signature
        assert len(sub.W) == bp.signature.named_constants


class TestIsomorphism:
    def test_identity(self):
        s = two_u()
        assert find_isomorphism(s, s) == (0, 1, 2)
        assert is_automorphism(s, (0, 1, 2))

    def test_one_index_differs(self):
        assert find_isomorphism(two_u(2), two_u(3, (1, 0, 1))) is None

    def test_against_permutation_search(self):
        pool = [s for _, _, s in iter_candidates(L, 3, 2)]
        rng = random.Random(0)
        by_sorts = {}
        for s in pool:
            by_sorts.setdefault(s.sorts, []).append(s)
        pairs = 0
        for group in by_sorts.values():
            for a, b in itertools.islice(itertools.combinations(group, 2), 0, None, max(1, len(group) // 40)):
                pairs += 1
                assert (find_isomorphism(a, b) is not None) == brute_isomorphic(a, b)
        for s in rng.sample(pool, 200):
            c, _ = shuffle_ids(rng, s)
            iso = find_isomorphism(s, c)
            assert iso is not None and brute_isomorphic(s, c)
        assert pairs > 100


class TestText:
    def test_empty_round_trip(self):
        text = serialize_structure(empty_structure())
        assert text == "sig L k=1\n"
        assert parse_structure(text) == empty_structure()

    def test_golden_two_element(self):
        s = FiniteStructure(L, ("U", "V"), {0: 1}, {(0, 0): TupleRecord(0, ())})
        assert serialize_structure(s) == (GOLDEN / "uv.txt").read_text()

    @given(seeds)
    def test_round_trip(self, seed):
        s = random_l(seed)
        text = serialize_structure(s)
        back = parse_structure(text)
        assert back == s and serialize_structure(back) == text
        assert all(eval_R(back, t) == eval_R(s, t) for t in s.table)

    def test_prime_round_trip(self):
        bp = build_prime(random_member(random.Random(5), 4, 2))
        assert parse_structure(serialize_structure(bp)) == bp

    def test_comments_and_blank_lines(self):
        text = "# header\nsig L k=1\n\nelem 0 V  # lonely\n"
        assert parse_structure(text).sorts == ("V",)

    @pytest.mark.parametrize(
        "text, line",
        [
            ("sig L k=1\nelem 0 X\n", 2),
            ("sig L k=1\nelem 0 U\nelem 1 V\np 1 0\n", 4),
            ("sig L k=1\nelem 0 U\nelem 1 V\ntuple 0,0 rel=1 f=[]\n", 4),
            ("sig L k=1\nelem 0 U\ntuple 0,0 rel=0 f=[]\ntuple 0,0 rel=0 f=[]\n", 4),
            ("elem 0 U\n", 1),
            ("sig L k=1\nfrob 1\n", 2),
        ],
    )
    def test_errors_name_the_line(self, text, line):
        with pytest.raises(StructureParseError) as err:
            parse_structure(text)
        assert err.value.line == line
        assert f"line {line}" in str(err.value)
