import itertools
import random

import pytest
from hypothesis import given, strategies as st

from test_amalgam import discrete
from fraisse_workbench.amalgam import check_Kk
from fraisse_workbench.errors import PreconditionError, SignatureMismatch
from fraisse_workbench.sampling import random_witness_instance
from fraisse_workbench.structure import (
    Embedding,
    Lk,
    close_tuples,
    eval_f,
    induced,
    serialize_structure,
)
from fraisse_workbench.witness import extend_with_witness, verify_local_membership, witness_agrees

seeds = st.integers(0, 2**32 - 1)
K2 = Lk(2)


def hand_instance():
    """A = three discrete points, dbar = (0,), D = two discrete points over it."""
    A = discrete(3, sig=K2)
    D = discrete(2, sig=K2)
    dsub, _ = induced(A, [0])
    C, eAC, eDC = extend_with_witness(A, (0,), D, Embedding(dsub, D, (0,)), 2)
    return A, D, C, eAC, eDC


class TestHandInstance:
    def test_layout(self):
        A, D, C, eAC, eDC = hand_instance()
        assert C.size == 4 and eAC.map == (0, 1, 2) and eDC.map == (0, 3)
        assert eAC.is_valid() and eDC.is_valid()

    def test_lead_case(self):
        _, _, C, _, _ = hand_instance()
        # g_0(a_1, a_2) = a_0 lies outside the tail; every later g_n lies inside it
        assert eval_f(C, 0, (3, 1, 2)) == 0
        assert [eval_f(C, n, (3, 1, 2)) for n in range(1, 6)] == [3] * 5
        assert [eval_f(C, n, (3, 1, 1)) for n in range(6)] == [3] * 6

    def test_repeated_point_case(self):
        _, _, C, _, _ = hand_instance()
        for t in itertools.product(range(4), repeat=3):
            if 3 in t[1:] and any(x in (1, 2) for x in t):
                r = C.table[t]
                assert all(eval_f(C, n, t) == t[0] for n in range(r.rel + 3))
                cl = sorted(close_tuples(C, t))
                assert r.rel == max(C.table[u].rel for u in itertools.product(cl, repeat=3))

    def test_member_and_witness(self):
        _, D, C, _, eDC = hand_instance()
        assert verify_local_membership(C, 2, 5).ok
        assert check_Kk(C, 2).verdict
        assert witness_agrees(D, C, eDC, 1) is None


class TestProperties:
    @given(seeds)
    def test_sampled_instances(self, seed):
        inst = random_witness_instance(random.Random(seed))
        C, eAC, eDC = extend_with_witness(inst.A, inst.dbar, inst.D, inst.eD, 2)
        assert verify_local_membership(C, 2, 5).ok
        assert witness_agrees(inst.D, C, eDC, inst.witness) is None
        assert witness_agrees(inst.D, C, eDC, inst.witness, inst.eD.map[:1]) is None

    @given(seeds)
    def test_conservative(self, seed):
        inst = random_witness_instance(random.Random(seed))
        C, eAC, eDC = extend_with_witness(inst.A, inst.dbar, inst.D, inst.eD, 2)
        for t, r in inst.A.table.items():
            assert C.table[t] == r
        for t, r in inst.D.table.items():
            td = tuple(eDC.map[x] for x in t)
            assert C.table[td].rel == r.rel
            assert C.table[td].low == tuple(eDC.map[y] for y in r.low)

    def test_deterministic(self):
        outs = []
        for _ in range(2):
            rng = random.Random(42)
            inst = random_witness_instance(rng)
            C, _, _ = extend_with_witness(inst.A, inst.dbar, inst.D, inst.eD, 2)
            outs.append(serialize_structure(C))
        assert outs[0] == outs[1]

    def test_no_new_points(self):
        A = discrete(3, sig=K2)
        dsub, _ = induced(A, [0, 1])
        C, eAC, _ = extend_with_witness(A, (0, 1), dsub, Embedding(dsub, dsub, (0, 1)), 2)
        assert C == A and eAC.map == (0, 1, 2)


class TestLocalMembership:
    def test_member(self):
        assert verify_local_membership(discrete(3, sig=K2), 2, 5).ok

    def test_injected_independent_set(self):
        rep = verify_local_membership(discrete(4, sig=K2), 2, 5)
        assert rep.failures == ["VIOLATION k_iv 0,1,2,3"]

    def test_wrong_signature(self):
        with pytest.raises(SignatureMismatch):
            verify_local_membership(discrete(3, sig=Lk(1)), 2, 5)


class TestPreconditions:
    def test_dbar_not_closed(self):
        from fraisse_workbench.structure import FiniteStructure, TupleRecord

        table = dict(discrete(2, sig=K2).table)
        table[(0, 0, 0)] = TupleRecord(1, (1,))
        A = FiniteStructure(K2, ("U", "U"), {}, table)
        D = discrete(1, sig=K2)
        dsub = discrete(1, sig=K2)
        with pytest.raises(PreconditionError, match="not closed"):
            extend_with_witness(A, (0,), D, Embedding(dsub, D, (0,)), 2)

    def test_a_not_local_member(self):
        A = discrete(4, sig=K2)
        dsub, _ = induced(A, [0])
        with pytest.raises(PreconditionError):
            extend_with_witness(A, (0,), dsub, Embedding(dsub, dsub, (0,)), 2)

    def test_bad_embedding(self):
        A = discrete(3, sig=K2)
        dsub, _ = induced(A, [0])
        D = discrete(2, sig=K2)
        with pytest.raises(PreconditionError):
            extend_with_witness(A, (0,), D, Embedding(D, D, (0, 1)), 2)

    def test_k_mismatch(self):
        A = discrete(3, sig=K2)
        dsub, _ = induced(A, [0])
        with pytest.raises(SignatureMismatch):
            extend_with_witness(A, (0,), dsub, Embedding(dsub, dsub, (0,)), 3)
