import itertools
import random

import pytest
from hypothesis import given, strategies as st

from fraisse_workbench import combinatorics as comb
from fraisse_workbench.closure import GeneratedClosure, IdentityClosure, is_independent, max_independent_brute
from fraisse_workbench.errors import BudgetExceeded, StructureParseError

seeds = st.integers(0, 2**32 - 1)


def fixpoint(functions, k, X):
    """Independent closure oracle over explicit function tables."""
    cur = set(X)
    while True:
        new = set(cur)
        for fn in functions:
            for t in itertools.product(sorted(cur), repeat=k):
                new.add(fn[t])
        if new == cur:
            return cur
        cur = new


class TestFamily:
    def test_base_case_values(self):
        fam = comb.build_gn_family(1, 8)
        assert fam.g(3, (5,)) == 3
        assert fam.g(3, (2,)) == 2
        assert [fam.g(n, (4,)) for n in range(7)] == [0, 1, 2, 3, 4, 4, 4]

    def test_repeated_maximum(self):
        fam3 = comb.build_gn_family(3, 6)
        assert all(fam3.g(n, (4, 4, 1)) == 4 for n in range(12))
        fam2 = comb.build_gn_family(2, 6)
        assert all(fam2.g(n, (4, 4)) == 4 for n in range(12))

    def test_unique_maximum_delegates(self):
        fam2 = comb.build_gn_family(2, 8)
        fam1 = comb.build_gn_family(1, 8)
        for i, j in itertools.product(range(8), repeat=2):
            if i != j:
                small = min(i, j)
                assert all(fam2.g(n, (i, j)) == fam1.g(n, (small,)) for n in range(10))

    def test_two_points(self):
        fam = comb.build_gn_family(1, 2)
        op = comb.gn_operator(fam)
        assert 0 in op.closure({1})
        assert not is_independent(op, {0, 1})
        assert is_independent(op, {0})

    @pytest.mark.parametrize("k, N", [(1, 20), (2, 12), (3, 6)])
    def test_verified(self, k, N):
        rep = comb.verify_gn_family(comb.build_gn_family(k, N))
        assert rep.ok, rep.failures[:3]
        assert rep.stats["max_closure"] <= N

    def test_k2_all_triples(self):
        rep = comb.verify_gn_family(comb.build_gn_family(2, 12))
        assert rep.ok and rep.checked == 12 * 12 + 220

    def test_stabilisation_is_membership(self):
        fam = comb.build_gn_family(3, 6)
        for t, rec in fam.table.items():
            assert all(rec.value(m) in t for m in range(rec.stab, rec.stab + 5))

    def test_initial_segments_agree(self):
        big = comb.build_gn_family(2, 10)
        small = comb.build_gn_family(2, 6)
        assert all(big.table[t] == rec for t, rec in small.table.items())

    def test_deterministic(self):
        assert comb.serialize_family(comb.build_gn_family(2, 7)) == comb.serialize_family(comb.build_gn_family(2, 7))

    @pytest.mark.parametrize("N", [2, 3, 8])
    def test_deleting_g0(self, N):
        fam = comb.build_gn_family(1, N)
        others = fam.functions[1:]
        expected = 0 not in fixpoint(others, 1, {1}) and 1 not in fixpoint(others, 1, {0})
        assert is_independent(comb.gn_operator(fam, drop={0}), {0, 1}) == expected

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            comb.build_gn_family(3, 200)
        with pytest.raises(ValueError):
            comb.build_gn_family(0, 5)


class TestSerialization:
    def test_round_trip(self):
        fam = comb.build_gn_family(2, 5)
        text = comb.serialize_family(fam)
        assert text.startswith("gnfamily k=2 n=5\n")
        back = comb.parse_family(text)
        assert back.table == fam.table and (back.k, back.carrier_size) == (2, 5)

    def test_bad_line(self):
        with pytest.raises(StructureParseError) as err:
            comb.parse_family("gnfamily k=1 n=2\ngtuple 0 stab=2 vals=[0] tail=0\n")
        assert err.value.line == 2

    def test_missing_header(self):
        with pytest.raises(StructureParseError):
            comb.parse_family("")


class TestSearch:
    def test_target_one(self):
        op = GeneratedClosure(range(4), [(0, {(): 0})])
        assert comb.find_independent_set(op, 1) == frozenset({1})
        assert comb.find_independent_set(GeneratedClosure(range(1), [(0, {(): 0})]), 1) is None

    def test_identity_full_carrier(self):
        assert comb.find_independent_set(IdentityClosure(range(3)), 3) == frozenset(range(3))

    def test_gn_with_a_generator_deleted(self):
        fam = comb.build_gn_family(1, 20)
        for drop in range(4):
            op = comb.gn_operator(fam, drop={drop})
            found = comb.find_independent_set(op, 2)
            assert found is not None and is_independent(op, found)

    def test_gn_k1_has_no_pair(self):
        for N in (1, 2, 5, 16, 40):
            assert comb.find_independent_set(comb.gn_operator(comb.build_gn_family(1, N)), 2) is None

    @given(seeds, st.integers(1, 4))
    def test_complete_against_brute_force(self, seed, target):
        rng = random.Random(seed)
        op = comb.random_operator(rng, rng.randint(1, 10), spread=rng.randint(0, 4))
        found = comb.find_independent_set(op, target)
        best = max_independent_brute(op, target)
        if found is None:
            assert len(best) < target
        else:
            assert len(found) == target and is_independent(op, found)

    def test_initial_segments_closed(self):
        op = comb.random_operator(random.Random(1), 12)
        for m in range(13):
            assert op.closure(range(m)) == frozenset(range(m))
        with pytest.raises(ValueError):
            comb.restrict_operator(GeneratedClosure(range(2), [(1, {(0,): 1, (1,): 1})]), 1)


class TestProbe:
    def test_identity_threshold_is_target(self):
        rows = comb.threshold_probe(1, "identity", 1, range(1, 7), [1, 2, 3, 4])
        assert [r.threshold for r in rows] == [1, 2, 3, 4]

    def test_gn_never_reaches_two(self):
        rows = comb.threshold_probe(1, "gn", 1, [2, 8, 16, 32], [2])
        assert rows[0].threshold is None

    def test_random_frontier_monotone(self):
        rows = comb.threshold_probe(1, "random", 6, list(range(1, 19)), [1, 2, 3], seed=3)
        for trial in range(6):
            ths = [r.threshold for r in rows if r.trial == trial]
            defined = [t for t in ths if t is not None]
            assert defined == sorted(defined)
            # once a target is out of reach, larger targets are too
            assert ths[: len(defined)] == defined

    def test_format(self):
        text = comb.format_probe([comb.ProbeRow("gn", 0, 2, None), comb.ProbeRow("gn", 1, 2, 17)])
        lines = text.splitlines()
        assert lines[0].split() == ["construction", "trial", "target", "threshold"]
        assert lines[1].split() == ["gn", "0", "2", "-"]
        assert lines[2].index("2") == lines[0].index("target")

    def test_unknown_construction(self):
        with pytest.raises(ValueError):
            comb.threshold_probe(1, "nope", 1, [2], [1])
