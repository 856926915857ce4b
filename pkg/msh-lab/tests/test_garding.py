"""Tests for elementary symmetric functions and the Garding cone test."""

import math

import numpy as np
import pytest

from lab.errors import ArgumentError
from lab.garding import (
    ConeStatus,
    EigenProfile,
    HermitianMatrix,
    elementary_symmetric,
    gamma_m_test,
    mixed_sigma_diag,
    sigma_minors,
    sigma_profile,
)


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return HermitianMatrix((a + a.conj().T) / 2.0)


class TestSigmaMinors:
    def test_identity(self):
        H = HermitianMatrix.identity(3)
        assert [sigma_minors(H, j) for j in (1, 2, 3)] == pytest.approx([3.0, 3.0, 1.0])

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_matches_eigenvalue_oracle(self, rng, n):
        H = random_hermitian(rng, n)
        eigenvalues = np.linalg.eigvalsh(H.entries)
        for j in range(1, n + 1):
            assert sigma_minors(H, j) == pytest.approx(
                float(elementary_symmetric(eigenvalues, j)), rel=1e-10, abs=1e-10
            )

    def test_unitary_invariance(self, rng):
        H = random_hermitian(rng, 4)
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        conjugated = H.conjugate_by(q)
        for j in range(1, 5):
            assert sigma_minors(conjugated, j) == pytest.approx(sigma_minors(H, j), abs=1e-10)

    def test_order_out_of_range(self):
        with pytest.raises(ArgumentError):
            sigma_minors(HermitianMatrix.identity(2), 3)

    def test_non_square_rejected(self):
        with pytest.raises(ArgumentError):
            HermitianMatrix(np.zeros((2, 3)))


class TestElementarySymmetric:
    def test_batched(self):
        values = np.array([[1.0, 2.0, 3.0], [1.0, 1.0, 1.0]])
        assert elementary_symmetric(values, 2) == pytest.approx([11.0, 3.0])

    def test_order_zero_is_one(self):
        assert float(elementary_symmetric(np.array([4.0, 5.0]), 0)) == 1.0

    def test_negative_order(self):
        with pytest.raises(ArgumentError):
            elementary_symmetric(np.ones(3), -1)


class TestConeTest:
    def test_identity_inside(self):
        verdict = gamma_m_test(HermitianMatrix.identity(3), 3)
        assert verdict.status == ConeStatus.STRICTLY_INSIDE
        assert verdict.in_cone

    def test_outside_at_second_order(self):
        H = HermitianMatrix.diagonal([1.0, -0.5, 0.0])
        assert gamma_m_test(H, 1).status == ConeStatus.STRICTLY_INSIDE
        verdict = gamma_m_test(H, 2)
        assert verdict.status == ConeStatus.OUTSIDE
        assert verdict.worst_index == 2

    def test_zero_matrix_is_boundary(self):
        verdict = gamma_m_test(HermitianMatrix(np.zeros((2, 2))), 2)
        assert verdict.status == ConeStatus.BOUNDARY

    def test_scale_invariant(self, rng):
        H = random_hermitian(rng, 3)
        a = gamma_m_test(H, 2)
        b = gamma_m_test(H.scaled(37.0), 2)
        assert a.status == b.status
        assert a.margin == pytest.approx(b.margin, rel=1e-10)

    def test_negative_tolerance(self):
        with pytest.raises(ArgumentError):
            gamma_m_test(HermitianMatrix.identity(2), 1, tolerance=-1.0)


class TestProfiles:
    def test_pole_profile_is_maximal(self):
        profile = EigenProfile(-0.25, 0.5, k=3, n=4)
        assert sigma_profile(profile, 2) == pytest.approx(0.0, abs=1e-15)
        assert sigma_profile(profile, 1) > 0

    def test_profile_matches_minors(self):
        profile = EigenProfile(-0.3, 0.7, k=3, n=5)
        for j in (1, 2, 3):
            assert sigma_profile(profile, j) == pytest.approx(sigma_minors(profile.to_matrix(), j), abs=1e-12)

    def test_invalid_profile(self):
        with pytest.raises(ArgumentError):
            EigenProfile(1.0, 1.0, k=4, n=3)


class TestMixedSigma:
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_polarization_of_equal_arguments(self, m):
        a = np.array([0.5, 1.5, 2.0, -0.25])
        expected = m * float(elementary_symmetric(a, m))
        assert mixed_sigma_diag(a, a, m) == pytest.approx(expected)

    def test_ones(self):
        assert mixed_sigma_diag(np.ones(4), np.ones(4), 2) == pytest.approx(2 * math.comb(4, 2))

    def test_batch_shape(self):
        a = np.ones((5, 3))
        b = np.ones(3)
        assert mixed_sigma_diag(a, b, 2).shape == (5,)

    def test_length_mismatch(self):
        with pytest.raises(ArgumentError):
            mixed_sigma_diag([1.0, 2.0], [1.0], 1)
