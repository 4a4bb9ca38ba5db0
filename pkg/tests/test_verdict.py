import json

import numpy as np
import pytest

from superrec import generators as gen
from superrec import operators as ops
from superrec import recurrence as rec
from superrec import verdict as V


class TestSufficient:
    def test_diag_2i_2(self):
        assert V.sufficient_condition_check(ops.Diagonal([2j, 2]))

    def test_jordan(self):
        r = V.sufficient_condition_check(ops.Dense([[1, 1], [0, 1]]))
        assert not r and "diagonalizable" in r.note

    def test_unequal(self):
        assert not V.sufficient_condition_check(ops.Diagonal([1, 2]))

    def test_zero(self):
        assert not V.sufficient_condition_check(ops.Diagonal([0, 0]))


class TestClassify:
    def test_diag_2i_2(self):
        c = V.classify(ops.Diagonal([2j, 2]))
        assert c.final == V.SUPER_RECURRENT and c.witness is None
        assert c.dynamic_status["status"] == rec.CERTIFIED

    def test_rank_one_example(self):
        op = ops.Diagonal([1.5, 0, 0])
        c = V.classify(op)
        assert c.final == V.NOT_SUPER_RECURRENT
        assert c.witness["kind"] == "dense_range" and V.replay_witness(op, c.witness)
        # e1 is still a super-recurrent vector, and the report shows it
        assert c.dynamic_status["basis_certified"][0]
        assert c.dynamic_status["status"] == rec.REFUTED

    def test_unequal(self):
        op = ops.Diagonal([1, 2])
        c = V.classify(op)
        assert c.final == V.NOT_SUPER_RECURRENT and c.witness["kind"] == "circle"
        assert V.replay_witness(op, c.witness)

    def test_jordan(self):
        c = V.classify(ops.Dense([[1, 1], [0, 1]]))
        assert c.final == V.INCONCLUSIVE and not c.sufficient_pass

    def test_shift(self):
        c = V.classify(ops.WeightedBackwardShift([2, 2], 3))
        assert c.final == V.NOT_SUPER_RECURRENT and c.witness["kind"] == "dense_range"

    def test_tampered_witness_does_not_replay(self):
        op = ops.Diagonal([1, 1.0000001])
        bad = {"kind": "circle", "eigenvalues": [[1, 0], [2, 0]]}
        assert not V.replay_witness(op, bad)

    def test_json_serializable(self):
        c = V.classify(ops.Diagonal([1, 2]))
        json.dumps(c.to_json())

    @pytest.mark.parametrize("seed", range(4))
    def test_scaling_invariant(self, seed):
        r = np.random.default_rng(seed)
        p = gen.GENERATORS[("equal_modulus", "unequal_modulus", "jordan", "direct_sum")[seed]](r, 3)
        assert V.classify(p.op).final == V.classify(ops.Scaled(0.3 - 2j, p.op)).final

    @pytest.mark.parametrize("seed", range(4))
    def test_similarity_invariant(self, seed):
        r = np.random.default_rng(seed)
        p = gen.equal_modulus(r, 4, conjugated=False) if seed % 2 else gen.unequal_modulus(r, 4, conjugated=False)
        phi = gen.random_similarity(r, 4, 100.0)
        assert np.linalg.cond(phi) <= 100 + 1e-9
        assert V.classify(p.op).final == V.classify(gen.conjugate(p.op, phi)).final

    def test_threshold_configurable(self):
        # the Jordan block is not super-recurrent; its eigenvector e1 alone clears
        # a 1% threshold, which shows why the default stays at 90%
        op = ops.Dense([[1, 1], [0, 1]])
        assert V.classify(op).dynamic_status["status"] == rec.INCONCLUSIVE
        assert V.classify(op, threshold=0.01).dynamic_status["status"] == rec.CERTIFIED


class TestGenerators:
    def test_equal_modulus_planted(self, rng):
        p = gen.equal_modulus(rng, 5)
        assert np.ptp(np.abs(p.eigenvalues)) <= 1e-12
        assert len(set(np.round(p.eigenvalues, 9))) == 5

    def test_unequal_spread(self, rng):
        for _ in range(20):
            p = gen.unequal_modulus(rng, 4)
            m = np.abs(p.eigenvalues)
            assert (m.max() - m.min()) / m.max() >= 0.05

    def test_similarity_condition(self, rng):
        for _ in range(20):
            assert np.linalg.cond(gen.random_similarity(rng, 5, 100.0)) <= 100 + 1e-9

    def test_jordan_defective(self, rng):
        p = gen.jordan(rng, 4)
        assert not p.diagonalizable


class TestSuite:
    def test_small_run_passes_and_is_deterministic(self):
        a = V.property_suite(7, 4, 2)
        b = V.property_suite(7, 4, 2)
        assert a.to_jsonl() == b.to_jsonl() and a.to_csv() == b.to_csv()
        assert a.all_passed, [c.to_json() for c in a.cases if not c.passed]
        assert set(a.totals) == set(V.CHECKS)

    def test_csv_shape(self):
        r = V.property_suite(1, 3, 1, checks=("commutant_invariance",))
        lines = r.to_csv().splitlines()
        assert lines[0] == "index,generator,property,pass,witness_ref"
        assert len(lines) == 2

    def test_unequal_controls_vacuous(self, rng):
        for i in range(4):
            p = gen.unequal_modulus(rng, 3)
            c = V.classify(p.op)
            assert c.final == V.NOT_SUPER_RECURRENT and V.replay_witness(p.op, c.witness)

    def test_jordan_controls(self, rng):
        for _ in range(4):
            p = gen.jordan(rng, 3)
            c = V.classify(p.op)
            assert not c.sufficient_pass
            assert c.final in (V.INCONCLUSIVE, V.NOT_SUPER_RECURRENT)
            if c.final == V.NOT_SUPER_RECURRENT:
                assert c.witness is not None

    def test_failures_carry_operator(self):
        # a failing case from a deliberately broken polynomial check
        op = ops.Diagonal([1, 2])
        x = np.array([1.0, 1.0])
        s = ops.polynomial_of([0, 1], op)
        cert = rec.ReturnCertificate(1, 1.0, 0.0)
        res = V.commutant_inequality(op, s, x, cert, slack=-1.0)
        assert not res.passed and "operator" in res.witness
