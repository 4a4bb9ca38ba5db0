import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from superrec import generators as gen
from superrec import operators as ops
from superrec import recurrence as rec
from superrec.exceptions import InconclusiveError, RejectedInputError

DIAG_2I_2 = ops.Diagonal([2j, 2])


class TestParams:
    def test_invalid(self):
        with pytest.raises(RejectedInputError):
            rec.DetectionParams(0)
        with pytest.raises(RejectedInputError):
            rec.DetectionParams(0.1, n_max=3, n_min=5)

    def test_default_budget(self):
        assert rec.DetectionParams(0.01).resolve_n_max(2) == 10 ** 4
        assert rec.DetectionParams(0.001).resolve_n_max(2) == 10 ** 6

    def test_json(self):
        p = rec.DetectionParams(1e-3, 50, 2)
        assert rec.DetectionParams.from_json(p.to_json()) == p
        with pytest.raises(RejectedInputError):
            rec.DetectionParams.from_json({"eps": 1})


class TestRecurrence:
    def test_identity(self):
        v = rec.detect_recurrence(ops.identity(3), [1, 2, 3], rec.DetectionParams(1e-9))
        assert v.certified and v.certificates[0].n == 1 and v.certificates[0].residual == 0

    def test_fourth_roots(self):
        v = rec.detect_recurrence(ops.Diagonal([1j, -1]), [1, 1], rec.DetectionParams(1e-9))
        assert v.certified and v.certificates[0].n == 4 and v.certificates[0].lam == 1

    def test_growing_orbit_inconclusive(self):
        v = rec.detect_recurrence(DIAG_2I_2, [1, 1], rec.DetectionParams(0.1, 10 ** 4))
        assert v.status == rec.INCONCLUSIVE and not v.certificates

    def test_modulus_floor_skips_orbit_scan(self):
        v = rec.detect_recurrence(ops.Diagonal([2, 0.5j]), [1, 1], rec.DetectionParams(0.1, 10 ** 6))
        assert v.status == rec.INCONCLUSIVE and "for every n >= 1" in v.notes

    def test_modulus_near_one_still_scanned(self):
        v = rec.detect_recurrence(ops.Diagonal([1 + 1e-7, 1j]), [1, 1], rec.DetectionParams(0.1, 100))
        assert v.certified and v.certificates[0].n == 4

    def test_zero_vector(self):
        with pytest.raises(RejectedInputError):
            rec.detect_recurrence(DIAG_2I_2, [0, 0])

    def test_at_most_ten_certificates(self):
        v = rec.detect_recurrence(ops.identity(2), [1, 0], rec.DetectionParams(1e-6))
        assert len(v.certificates) == 10


class TestSuperRecurrence:
    def test_diag_2i_2(self):
        v = rec.detect_super_recurrence(DIAG_2I_2, [1, 1], rec.DetectionParams(1e-9))
        c = v.certificates[0]
        assert v.certified and c.n == 4 and c.lam == pytest.approx(2 ** -4)
        assert rec.verify_certificate(DIAG_2I_2, [1, 1], c) <= 1e-12

    def test_unequal_moduli_inconclusive(self):
        v = rec.detect_super_recurrence(ops.Diagonal([1, 2]), [1, 1], rec.DetectionParams(0.05, 10 ** 5))
        assert v.status == rec.INCONCLUSIVE

    def test_jordan_inconclusive(self):
        v = rec.detect_super_recurrence(ops.Dense([[1, 1], [0, 1]]), [1, 1], rec.DetectionParams(0.05, 10 ** 5))
        assert v.status == rec.INCONCLUSIVE

    def test_kernel_note(self):
        v = rec.detect_super_recurrence(ops.WeightedBackwardShift([1, 1], 3), [1, 1, 1], rec.DetectionParams(0.01, 100))
        assert v.status == rec.INCONCLUSIVE
        assert "reached kernel; not super-recurrent along this orbit" in v.notes
        assert "truncation artifact" in v.notes

    def test_orbit_route_agrees_with_eigen_route(self):
        p = rec.DetectionParams(1e-8, 200)
        a = rec.detect_super_recurrence(DIAG_2I_2, [1, 1], p, structure=False)
        b = rec.detect_super_recurrence(DIAG_2I_2, [1, 1], p)
        assert a.certificates[0].n == b.certificates[0].n == 4

    def test_recurrence_implies_super_recurrence(self):
        op, x, p = ops.Diagonal([1j, -1, np.exp(2j * np.pi / 3)]), [1, 2, 3], rec.DetectionParams(1e-8)
        assert rec.detect_recurrence(op, x, p).certified
        assert rec.detect_super_recurrence(op, x, p).certified

    def test_non_recurrent_super_recurrent_witness(self):
        p = rec.DetectionParams(0.1, 10 ** 4)
        assert rec.detect_super_recurrence(DIAG_2I_2, [1, 1], p).certified
        assert not rec.detect_recurrence(DIAG_2I_2, [1, 1], p).certified

    @given(st.integers(0, 2 ** 16))
    def test_certificate_replay(self, seed):
        r = np.random.default_rng(seed)
        planted = gen.equal_modulus(r, int(r.integers(2, 6)))
        x = gen.random_probe(r, planted.op.dim)
        p = rec.DetectionParams(1e-6)
        v = rec.detect_super_recurrence(planted.op, x, p)
        assert v.certified
        for c in v.certificates:
            replay = rec.verify_certificate(planted.op, x, c)
            assert abs(replay - c.residual) <= 1e-10 and replay <= p.epsilon + 1e-10

    @given(st.integers(0, 2 ** 16), st.complex_numbers(min_magnitude=0.1, max_magnitude=10,
                                                       allow_nan=False, allow_infinity=False))
    def test_scaling_invariance(self, seed, c):
        r = np.random.default_rng(seed)
        planted = gen.equal_modulus(r, 3)
        x = gen.random_probe(r, 3)
        p = rec.DetectionParams(1e-6)
        a = rec.detect_super_recurrence(planted.op, x, p)
        b = rec.detect_super_recurrence(ops.Scaled(c, planted.op), x, p)
        assert a.status == b.status
        ca, cb = a.certificates[0], b.certificates[0]
        assert ca.n == cb.n
        # lam -> lam / c^n, compared in log form since c^n may overflow
        assert cb.log_magnitude == pytest.approx(ca.log_magnitude - ca.n * np.log(abs(c)), abs=1e-6)
        phase = np.angle(cb.lam) - np.angle(ca.lam) + ca.n * np.angle(c)
        assert abs(np.exp(1j * phase) - 1) <= 1e-6


class TestVerify:
    def test_identity(self):
        assert rec.verify_certificate(ops.identity(2), [1, 1], rec.ReturnCertificate(1, 1, 0)) == 0

    def test_tampered(self):
        c = rec.detect_super_recurrence(DIAG_2I_2, [1, 1], rec.DetectionParams(1e-9)).certificates[0]
        bad = rec.ReturnCertificate(c.n, 2 * c.lam, c.residual)
        assert rec.verify_certificate(DIAG_2I_2, [1, 1], bad) == pytest.approx(1, abs=1e-12)

    def test_huge_exponents(self):
        op = ops.Diagonal([1e200, 1e200j])
        c = rec.make_certificate(op, [1, 1], 4)
        assert c.residual <= 1e-12 and c.log_scale != 0
        assert rec.verify_certificate(op, [1, 1], c) <= 1e-12

    def test_binary_powering_path(self):
        op = ops.Diagonal(2 * np.exp(2j * np.pi * np.array([0, 1 / 3, 1 / 5])))
        c = rec.make_certificate(op, [1, 1, 1], 300)
        assert c.residual <= 1e-10

    def test_json_roundtrip(self):
        c = rec.ReturnCertificate(4, 0.0625, 0.0)
        assert rec.ReturnCertificate.from_json(c.to_json()) == c


class TestPerturbed:
    def test_certified_implies_pass(self):
        r = rec.perturbed_characterization_check(DIAG_2I_2, [1, 0], rec.DetectionParams(1e-9))
        assert r and np.array_equal(r.z, [1, 0])

    def test_diag_2i_2_n4(self):
        r = rec.perturbed_characterization_check(DIAG_2I_2, [1, 1], rec.DetectionParams(1e-9))
        assert r and r.n == 4

    def test_unequal_fails(self):
        r = rec.perturbed_characterization_check(ops.Diagonal([1, 2]), [1, 1], rec.DetectionParams(0.05, 10 ** 5))
        assert not r


class TestNestedBalls:
    def test_diag_2i_2_depth5(self):
        t = rec.refine_srec_vector(DIAG_2I_2, np.array([1, 1]), 0.5, 5, rec.DetectionParams(1e-3))
        assert t.complete and len(t.certificates) == 5
        y = t.point
        for k, c in enumerate(t.certificates, start=1):
            assert c.residual * np.linalg.norm(y) <= 2.0 ** (1 - k)
            assert t.radii[k] < 2.0 ** -k * t.radii[0]
        assert all(a > b for a, b in zip(t.radii, t.radii[1:]))
        ns = [c.n for c in t.certificates]
        assert ns == sorted(set(ns))

    def test_centers_nested(self):
        t = rec.refine_srec_vector(DIAG_2I_2, np.array([1, 1]), 0.5, 4)
        for k in range(1, len(t.centers)):
            assert np.linalg.norm(t.centers[k] - t.centers[k - 1]) <= t.radii[k - 1]

    def test_identity_trivial(self):
        t = rec.refine_srec_vector(ops.identity(2), np.array([1, 0]), 0.5, 3)
        assert t.complete and all(c.residual == 0 for c in t.certificates)

    def test_unequal_fails_at_level_one(self):
        t = rec.refine_srec_vector(ops.Diagonal([1, 2]), np.array([1, 1]), 0.1, 3, rec.DetectionParams(0.01, 10 ** 4))
        assert not t.complete and "level 1" in t.note and not t.certificates


class TestHyperplane:
    def test_diagonal(self):
        h = rec.hyperplane_restriction(ops.Diagonal([2, 2j, -2]), 2)
        assert isinstance(h.compressed, ops.Diagonal)
        np.testing.assert_array_equal(h.compressed.entries, [2j, -2])
        v = rec.detect_recurrence(h.scaled_restriction(), [1, 1], rec.DetectionParams(1e-9))
        assert v.certified and v.certificates[0].n == 4

    def test_identity(self):
        h = rec.hyperplane_restriction(ops.identity(2), 1)
        np.testing.assert_array_equal(h.compressed.entries, [1])
        assert rec.detect_recurrence(h.scaled_restriction(), [1], rec.DetectionParams(1e-9)).certificates[0].n == 1

    def test_vacuous(self):
        h = rec.hyperplane_restriction(ops.Diagonal([1, 2]), 1)
        np.testing.assert_array_equal(h.compressed.entries, [2])
        assert not rec.detect_recurrence(h.scaled_restriction(), [1], rec.DetectionParams(0.1, 10 ** 4)).certified

    def test_not_an_eigenvalue(self):
        with pytest.raises(RejectedInputError):
            rec.hyperplane_restriction(ops.Diagonal([1, 2]), 3)

    def test_defective(self):
        with pytest.raises(InconclusiveError):
            rec.hyperplane_restriction(ops.Dense([[1, 1], [0, 1]]), 1)

    @pytest.mark.parametrize("seed", range(5))
    def test_dense_invariants(self, seed):
        r = np.random.default_rng(seed)
        planted = gen.equal_modulus(r, 4, max_cond=100.0)
        for mu in planted.eigenvalues:
            h = rec.hyperplane_restriction(planted.op, mu)
            assert np.linalg.norm(h.functional) == pytest.approx(1)
            assert np.abs(h.basis.conj().T @ h.functional).max() <= 1e-10
            np.testing.assert_allclose(h.basis.conj().T @ h.basis, np.eye(3), atol=1e-12)
            assert h.invariance_residual <= 1e-8
            assert h.compressed.dim == 3
