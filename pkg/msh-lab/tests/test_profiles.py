"""Tests for the flat model and closed-form radial weights."""

import math

import numpy as np
import pytest

from lab.errors import ArgumentError, ConstraintError, SingularityError
from lab.garding import sigma_profile
from lab.profiles import (
    ClampedProfile,
    FlatModel,
    PowerProfile,
    WeightFamily,
    WeightKind,
    admissible_delta_bound,
    eval_weight,
    profile_arrays,
    profile_ratio_check,
    radial_eigprofile,
)


class TestFlatModel:
    def test_defaults(self, model_322):
        assert model_322.torus_periods == (2.0 * math.pi,)
        assert model_322.exhaustion_shift == pytest.approx(0.25)
        assert model_322.v_volume == pytest.approx(4.0 * math.pi ** 2)

    def test_reference_order_is_min_of_m_and_k(self, model_siu):
        assert model_siu.reference_order == 1
        assert FlatModel(4, 3, 2).reference_order == 2

    def test_radius_of_level_inverts_log_reference(self, model_322):
        r = np.array([0.01, 0.1, 0.3])
        assert model_322.radius_of_level(model_322.psi_v(r)) == pytest.approx(r)

    def test_radius_of_level_inverts_power_reference(self):
        model = FlatModel(3, 2, 1)
        r = np.array([0.02, 0.2])
        assert model.radius_of_level(model.psi_v(r)) == pytest.approx(r)

    def test_power_reference_rejects_nonnegative_level(self, model_321):
        with pytest.raises(ArgumentError):
            model_321.radius_of_level(0.0)

    def test_wrong_period_count(self):
        with pytest.raises(ArgumentError):
            FlatModel(3, 2, 2, torus_periods=(1.0, 1.0))

    def test_invalid_dimensions(self):
        with pytest.raises(ArgumentError):
            FlatModel(2, 3, 1)

    def test_key_is_stable(self, model_322):
        assert model_322.key() == FlatModel(3, 2, 2).key()


class TestWeightFamily:
    def test_admissible_bound(self):
        assert admissible_delta_bound(2, 2) == 1.0
        assert admissible_delta_bound(3, 1) == 4.0

    def test_delta_at_bound_rejected(self):
        with pytest.raises(ConstraintError):
            WeightFamily(kind=WeightKind.G_SUB, k=2, m=1, delta=2.0)

    def test_nu_at_ceiling_rejected(self):
        with pytest.raises(ConstraintError):
            WeightFamily(kind=WeightKind.F_NU, k=2, m=2, nu=1.0)

    def test_m_above_k_rejected(self):
        with pytest.raises(ArgumentError):
            WeightFamily(kind=WeightKind.G_PURE, k=1, m=2)

    def test_default_signs(self):
        assert WeightFamily(kind=WeightKind.G_SUB, k=2, m=2, delta=2.0).A == 1.0
        assert WeightFamily(kind=WeightKind.G_SUPER, k=2, m=2, delta=2.0).A == -1.0
        assert WeightFamily(kind=WeightKind.G_PURE, k=2, m=2).A == 0.0

    def test_unregularized_pole_on_v(self):
        with pytest.raises(SingularityError):
            eval_weight(WeightFamily(kind=WeightKind.G_PURE, k=2, m=2), 0.0)

    def test_regularized_value_on_v(self):
        w = WeightFamily(kind=WeightKind.G_PURE, k=2, m=2, epsilon=1e-4)
        assert eval_weight(w, 0.0).value == pytest.approx(0.5 * math.log(1e-4))

    def test_negative_radius(self):
        with pytest.raises(ArgumentError):
            eval_weight(WeightFamily(kind=WeightKind.G_PURE, k=2, m=2), -0.1)


class TestDerivatives:
    @pytest.mark.parametrize(
        "family",
        [
            WeightFamily(kind=WeightKind.G_PURE, k=3, m=2),
            WeightFamily(kind=WeightKind.G_SUB, k=3, m=2, delta=2.0, epsilon=1e-3),
            WeightFamily(kind=WeightKind.G_SUPER, k=2, m=2, delta=2.0),
            WeightFamily(kind=WeightKind.F_NU, k=2, m=2, nu=0.75),
            WeightFamily(kind=WeightKind.MINIMAL_REAL, k=1, m=1, kappa=4),
        ],
    )
    def test_derivatives_match_differences(self, family):
        r, h = 0.1, 1e-5
        d = eval_weight(family, r)
        up, down = eval_weight(family, r + h).value, eval_weight(family, r - h).value
        assert d.d1 == pytest.approx((up - down) / (2 * h), rel=1e-6)
        assert d.d2 == pytest.approx((up - 2 * d.value + down) / h ** 2, rel=1e-4)

    def test_array_input_keeps_shape(self):
        w = WeightFamily(kind=WeightKind.G_PURE, k=2, m=1)
        d = eval_weight(w, np.array([0.1, 0.2, 0.3]))
        assert d.value.shape == (3,)


class TestHessianProfiles:
    def test_pure_pole_ratio(self):
        w = WeightFamily(kind=WeightKind.G_PURE, k=3, m=2)
        for r in (0.01, 0.1, 0.4):
            assert profile_ratio_check(w, r) == pytest.approx(-0.5, rel=1e-12)

    def test_log_pole_ratio(self):
        w = WeightFamily(kind=WeightKind.G_PURE, k=2, m=2)
        assert profile_ratio_check(w, 0.2) == pytest.approx(0.0, abs=1e-12)

    def test_pole_is_maximal(self):
        w = WeightFamily(kind=WeightKind.G_PURE, k=3, m=2)
        eig = radial_eigprofile(eval_weight(w, 0.3), 0.3, FlatModel(4, 3, 2))
        assert sigma_profile(eig, 2) == pytest.approx(0.0, abs=1e-10 * eig.lambda_tan ** 2)

    def test_r_squared_has_unit_profile(self):
        rad, tan = profile_arrays(PowerProfile().derivs(0.3), 0.3)
        assert float(rad) == pytest.approx(1.0)
        assert float(tan) == pytest.approx(1.0)

    def test_nonpositive_radius(self, model_322):
        with pytest.raises(ArgumentError):
            radial_eigprofile(PowerProfile().derivs(1.0), 0.0, model_322)


class TestClampedProfile:
    def test_floor_is_flat(self):
        base = WeightFamily(kind=WeightKind.G_PURE, k=2, m=2)
        clamped = ClampedProfile(base, -2.0)
        d = clamped.derivs(math.exp(-3.0))
        assert d.value == -2.0 and d.d1 == 0.0 and d.d2 == 0.0

    def test_above_floor_unchanged(self):
        base = WeightFamily(kind=WeightKind.G_PURE, k=2, m=2)
        d = ClampedProfile(base, -10.0).derivs(0.3)
        assert d.value == pytest.approx(math.log(0.3))
