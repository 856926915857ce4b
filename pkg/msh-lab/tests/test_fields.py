"""Tests for torus polynomials, fields, finite-difference Hessians and cone scans."""

import math

import numpy as np
import pytest

from lab.errors import ArgumentError, ConstraintError, GeometryError
from lab.fields import (
    AffineField,
    Point,
    RadialField,
    ScaledLogField,
    ThetaField,
    ThetaTerm,
    adapted_diagonal,
    eval_field,
    fd_hessian,
    gamma_m_scan,
    hessian_traces,
    make_localized,
    nu_range,
    scan_grid,
)
from lab.profiles import FlatModel, PowerProfile, WeightFamily, WeightKind

PERIODS = (2.0 * math.pi,)
WAVE = {"offset": 1.0, "terms": [{"frequencies": [1, 0], "amplitude": 1.0}], "normalize": True}


class TestThetaField:
    def test_normalized_minimum_is_zero(self):
        theta = ThetaField.from_json(WAVE, PERIODS)
        assert theta.minimum() == pytest.approx(0.0)
        assert theta.maximum() == pytest.approx(2.0)
        assert theta.mean == pytest.approx(1.0)

    def test_negative_polynomial_rejected(self):
        data = {"offset": 0.5, "terms": [{"frequencies": [1, 0], "amplitude": 1.0}]}
        with pytest.raises(ConstraintError):
            ThetaField.from_json(data, PERIODS)

    def test_schema_violation(self):
        with pytest.raises(ArgumentError):
            ThetaField.from_json({"terms": []}, PERIODS)

    def test_frequency_length_checked(self):
        with pytest.raises(ArgumentError):
            ThetaField(PERIODS, 2.0, (ThetaTerm((1, 0, 0, 1), 1.0),))

    def test_values_and_laplacian(self):
        theta = ThetaField.from_json(WAVE, PERIODS)
        z = np.array([[0.0], [math.pi / 2], [math.pi]], dtype=complex)
        assert theta.value(z) == pytest.approx([2.0, 1.0, 0.0], abs=1e-12)
        assert theta.laplacian(z) == pytest.approx([-1.0, 0.0, 1.0], abs=1e-12)

    def test_patch_mean_over_half_band(self):
        theta = ThetaField.from_json(WAVE, PERIODS)
        mean = theta.patch_mean([-math.pi / 2, 0.0], [math.pi / 2, 2 * math.pi])
        assert mean == pytest.approx(1.0 + 2.0 / math.pi)

    def test_patch_mean_full_torus_is_mean(self):
        theta = ThetaField.from_json(WAVE, PERIODS)
        assert theta.patch_mean([0.0, 0.0], [2 * math.pi, 2 * math.pi]) == pytest.approx(theta.mean, abs=1e-12)

    def test_constant(self):
        theta = ThetaField.constant(3.0, PERIODS)
        assert theta.is_constant
        assert theta.mean == 3.0

    def test_multi_term_extrema(self):
        data = {
            "offset": 2.0,
            "terms": [
                {"frequencies": [1, 0], "amplitude": 1.0},
                {"frequencies": [0, 1], "amplitude": 0.5},
            ],
        }
        theta = ThetaField.from_json(data, PERIODS)
        assert theta.minimum() == pytest.approx(0.5, abs=1e-6)
        assert theta.maximum() == pytest.approx(3.5, abs=1e-6)


class TestFields:
    def test_radial_value(self):
        F = RadialField(PowerProfile(), 2, coefficient=2.0, constant=1.0)
        assert eval_field(F, Point((0.3, 0.4), (1.0,))) == pytest.approx(1.5)

    def test_affine_combination(self, model_322):
        psi = RadialField(model_322.reference_weight(), 2)
        F = AffineField([(2.0, psi)], constant=3.0)
        p = Point((0.1, 0.0), (0.0,))
        assert eval_field(F, p) == pytest.approx(2.0 * math.log(0.1) + 3.0)

    def test_affine_codimension_mismatch(self):
        with pytest.raises(ArgumentError):
            AffineField([(1.0, RadialField(PowerProfile(), 1)), (1.0, RadialField(PowerProfile(), 2))])

    def test_traces_of_r_squared(self):
        F = RadialField(PowerProfile(), 2)
        tr_normal, tr_tangent = hessian_traces(F, Point((0.2, 0.1j), (0.5,)))
        assert tr_normal[0] == pytest.approx(2.0)
        assert tr_tangent[0] == pytest.approx(0.0)

    def test_adapted_diagonal_matches_fd(self):
        theta = ThetaField.from_json(WAVE, PERIODS)
        F = ScaledLogField(theta, 2)
        p = Point((0.2, 0.0), (0.7,))
        diagonal = adapted_diagonal(F, p, 3)[0]
        H = fd_hessian(F, p).entries
        assert diagonal[0] == pytest.approx(H[0, 0].real, abs=1e-3)
        assert diagonal[1] == pytest.approx(H[1, 1].real, rel=1e-3)
        assert diagonal[2] == pytest.approx(H[2, 2].real, abs=1e-5)


class TestFiniteDifferences:
    def test_r_squared(self, model_322):
        F = RadialField(PowerProfile(), 2)
        H = fd_hessian(F, Point((0.3, 0.0), (0.1,)), model=model_322)
        assert np.allclose(H.entries, np.diag([1.0, 1.0, 0.0]), atol=1e-6)

    def test_radial_pole(self):
        F = RadialField(WeightFamily(kind=WeightKind.G_PURE, k=3, m=2), 3)
        H = fd_hessian(F, Point((1.0, 0.0, 0.0), (0.0,)), step=1e-4)
        assert np.allclose(H.entries, np.diag([-0.25, 0.5, 0.5, 0.0]), atol=1e-6)

    def test_second_order_convergence(self):
        F = RadialField(WeightFamily(kind=WeightKind.G_PURE, k=3, m=2), 3)
        p = Point((1.0, 0.0, 0.0), (0.0,))
        exact = np.diag([-0.25, 0.5, 0.5, 0.0])
        errors = [np.abs(fd_hessian(F, p, step=h).entries - exact).max() for h in (4e-2, 2e-2, 1e-2)]
        assert 3.5 <= errors[0] / errors[1] <= 4.5
        assert 3.5 <= errors[1] / errors[2] <= 4.5

    def test_stencil_reaching_v(self, model_322):
        F = RadialField(model_322.reference_weight(), 2)
        with pytest.raises(GeometryError):
            fd_hessian(F, Point((0.01, 0.0), (0.0,)), step=0.01)

    def test_stencil_leaving_tube(self, model_322):
        F = RadialField(PowerProfile(), 2)
        with pytest.raises(GeometryError):
            fd_hessian(F, Point((0.499, 0.0), (0.0,)), model=model_322)

    def test_nonpositive_step(self):
        with pytest.raises(ArgumentError):
            fd_hessian(RadialField(PowerProfile(), 2), Point((0.3, 0.0), (0.0,)), step=-1.0)


class TestScans:
    def test_grid_shape(self, model_322):
        grid = scan_grid(model_322, [0.1, 0.2], torus_points=16, sphere_points=4)
        assert grid.shape == (2 * 16 * 4, 3)
        assert np.allclose(np.linalg.norm(grid[:64, :2], axis=1), 0.1)

    def test_reference_weight_passes(self, model_322, psi_field):
        grid = scan_grid(model_322, np.geomspace(0.01, 0.4, 6), torus_points=4, sphere_points=4)
        report = gamma_m_scan(psi_field(model_322), model_322, grid)
        assert report.passed
        assert report.geometry_errors == 0

    def test_negated_weight_fails(self, model_322):
        F = RadialField(model_322.reference_weight(), 2, coefficient=-1.0)
        grid = scan_grid(model_322, np.geomspace(0.01, 0.4, 6), torus_points=4, sphere_points=4)
        report = gamma_m_scan(F, model_322, grid)
        assert not report.passed
        assert report.first_violation.margin < 0

    def test_modulated_log_fails_when_k_below_m(self, model_siu):
        theta = ThetaField.from_json(
            {"offset": 1.0, "terms": [{"frequencies": [1, 0], "amplitude": 0.5}]}, PERIODS
        )
        grid = scan_grid(model_siu, [0.05, 0.1, 0.2], torus_points=16, sphere_points=4)
        report = gamma_m_scan(ScaledLogField(theta, 1), model_siu, grid)
        assert not report.passed

    def test_report_dict(self, model_322, psi_field):
        grid = scan_grid(model_322, [0.1], torus_points=1, sphere_points=2)
        data = gamma_m_scan(psi_field(model_322), model_322, grid).to_dict()
        assert data["grid"]["points"] == 2
        assert data["first_violation"] is None


class TestLocalized:
    def test_nu_range(self):
        assert nu_range(2, 1) == (1.0, 2.0)
        assert nu_range(2, 2) == (0.5, 1.0)

    def test_nu_outside_range(self, model_322):
        theta = ThetaField.from_json(WAVE, PERIODS)
        with pytest.raises(ConstraintError):
            make_localized(theta, 0.25, 2, 2, model_322)
        with pytest.raises(ConstraintError):
            make_localized(theta, 1.0, 2, 2, model_322)

    def test_model_mismatch(self, model_322):
        theta = ThetaField.from_json(WAVE, PERIODS)
        with pytest.raises(ArgumentError):
            make_localized(theta, 1.5, 2, 1, model_322)

    @pytest.mark.slow
    def test_construction_certifies(self, model_322):
        theta = ThetaField.from_json(WAVE, PERIODS)
        F = make_localized(
            theta, 0.75, 2, 2, model_322,
            scan_radii=np.geomspace(5e-4, 0.45, 10), torus_points=4, sphere_points=4,
        )
        assert F.certificate is not None and F.certificate.passed
        assert F.C >= 1.0
        assert F.to_dict()["arm"] == "localized"

    @pytest.mark.parametrize(
        "model_name,nu,rates",
        [("model_322", 0.75, [0.5, 2.0, 2.5]), ("model_321", 1.5, [1.0, 3.0, 4.0])],
    )
    def test_correction_rates(self, request, localized_field, model_name, nu, rates):
        model = request.getfixturevalue(model_name)
        F = localized_field(model, nu, 8.0)
        assert F.correction_rates() == pytest.approx(rates)
        assert (F + RadialField(PowerProfile(), model.k)).correction_rates() == pytest.approx(rates)

    def test_reference_weight_has_no_known_corrections(self, model_322, psi_field):
        assert psi_field(model_322).correction_rates() == []
