"""Tests for tube integrals, calibration and the Lelong series."""

import math

import numpy as np
import pytest

from lab.errors import ArgumentError
from lab.fields import AffineField, RadialField
from lab.measures import (
    CalibrationCache,
    ReweightMap,
    TubeParams,
    calibrate,
    closed_form_raw_limit,
    default_s_grid,
    sublevel_series,
    lelong_number,
    lelong_series,
    polar_density,
    sphere_area,
    tube_integral,
)
from lab.profiles import PowerProfile


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2 * math.pi)
    assert sphere_area(2) == pytest.approx(2 * math.pi ** 2)


class TestCalibration:
    def test_quadrature_matches_closed_form(self, model_322):
        calib = calibrate(model_322)
        assert calib.raw_limit == pytest.approx(calib.closed_form, rel=1e-6)
        assert calib.C_km == pytest.approx(1.0 / calib.raw_limit)
        assert calib.method == "radial-quadrature"

    def test_flux_matches_closed_form(self, model_321):
        calib = calibrate(model_321)
        assert calib.method == "flux"
        assert calib.raw_limit == pytest.approx(closed_form_raw_limit(model_321), rel=1e-9)

    def test_order_above_codimension_rejected(self, model_siu):
        with pytest.raises(ArgumentError):
            calibrate(model_siu)

    def test_cache_round_trip(self, model_322, tmp_path):
        cache = CalibrationCache(tmp_path / "cache.json")
        assert cache.get(model_322) is None
        first = calibrate(model_322, cache=cache)
        assert (tmp_path / "cache.json").exists()
        second = calibrate(model_322, cache=CalibrationCache(tmp_path / "cache.json"))
        assert second == first

    def test_unreadable_cache_is_ignored(self, model_322, tmp_path):
        path = tmp_path / "cache.json"
        path.write_text("{not json")
        assert CalibrationCache(path).get(model_322) is None


class TestTubeIntegral:
    def test_unknown_method(self, model_322, psi_field):
        with pytest.raises(ArgumentError):
            tube_integral(psi_field(model_322), model_322, 0.1, "simpson")

    def test_flux_needs_order_one(self, model_322, psi_field):
        with pytest.raises(ArgumentError):
            tube_integral(psi_field(model_322), model_322, 0.1, "flux")

    def test_monte_carlo_refused_at_order_one(self, model_321, psi_field):
        with pytest.raises(ArgumentError):
            tube_integral(psi_field(model_321), model_321, 0.1, "monte-carlo")

    def test_radius_outside_tube(self, model_322, psi_field):
        with pytest.raises(ArgumentError):
            tube_integral(psi_field(model_322), model_322, 0.6)

    def test_patch_needs_shell_or_flux(self, model_322, psi_field):
        patch = ([0.0, 0.0], [1.0, 1.0])
        with pytest.raises(ArgumentError):
            tube_integral(psi_field(model_322), model_322, 0.1, "radial-quadrature", patch=patch)

    def test_shell_agrees_with_radial(self, model_322, psi_field):
        F = psi_field(model_322)
        radial = tube_integral(F, model_322, 0.1, "radial-quadrature").value
        shell = tube_integral(F, model_322, 0.1, "shell-quadrature").value
        assert shell == pytest.approx(radial, rel=1e-8)

    def test_smooth_function_has_no_mass(self, model_322):
        F = RadialField(PowerProfile(), 2)
        small = tube_integral(F, model_322, 0.01).value
        assert small == pytest.approx(2.0 * sphere_area(2) * model_322.v_volume * 0.01 ** 4 / 4, rel=1e-8)


class TestLelongSeries:
    @pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
    def test_linearity(self, model_322, psi_field, gamma):
        calib = calibrate(model_322)
        ts = lelong_series(psi_field(model_322, gamma), model_322, calib=calib)
        assert lelong_number(ts) == pytest.approx(gamma, rel=0.02)
        assert ts.method == "radial-quadrature"

    def test_flux_for_order_one(self, model_321, psi_field):
        calib = calibrate(model_321)
        ts = lelong_series(psi_field(model_321, 2.0), model_321, calib=calib)
        assert ts.method == "flux"
        assert lelong_number(ts) == pytest.approx(2.0, rel=0.02)

    def test_smooth_perturbation_keeps_number(self, model_322):
        psi = RadialField(model_322.reference_weight(), 2)
        F = AffineField([(1.0, psi), (1.0, RadialField(PowerProfile(), 2))])
        ts = lelong_series(F, model_322, calib=calibrate(model_322))
        assert lelong_number(ts) == pytest.approx(1.0, rel=0.02)

    def test_short_grid_rejected(self, model_322, psi_field):
        with pytest.raises(ArgumentError):
            lelong_series(psi_field(model_322), model_322, s_grid=[0.2, 0.1, 0.05])

    def test_slow_grid_rejected(self, model_322, psi_field):
        with pytest.raises(ArgumentError):
            lelong_series(psi_field(model_322), model_322, s_grid=0.2 * 0.9 ** np.arange(8))

    def test_default_grid(self, model_322):
        grid = default_s_grid(model_322, 4)
        assert grid == pytest.approx([0.25, 0.125, 0.0625, 0.03125])


class TestMonteCarlo:
    def test_agrees_with_quadrature(self, model_322, psi_field):
        params = TubeParams(samples_per_stratum=2048, strata=8, seed=7)
        ts = lelong_series(psi_field(model_322), model_322, method="monte-carlo",
                           calib=calibrate(model_322), params=params)
        scaled = np.asarray(ts.scaled_values)
        errors = np.asarray(ts.standard_errors)
        assert np.all(np.abs(scaled - 1.0) <= 4.0 * errors + 0.02)

    def test_independent_of_threads(self, model_322, psi_field):
        F = psi_field(model_322)
        runs = [
            tube_integral(F, model_322, 0.2, "monte-carlo",
                          TubeParams(samples_per_stratum=256, strata=4, seed=11, threads=t)).value
            for t in (1, 3)
        ]
        assert runs[0] == runs[1]


class TestSublevelSeries:
    def test_reweight_map_inverts_reference(self):
        r = np.array([0.05, 0.1, 0.2])
        assert ReweightMap(2, 2).value(np.log(r)) == pytest.approx(r ** 2)
        assert ReweightMap(2, 1).value(-(r ** -2.0)) == pytest.approx(r ** 2)
        assert ReweightMap(3, 2).is_convex_increasing([-10.0, -2.0])

    def test_reweight_map_order(self):
        with pytest.raises(ArgumentError):
            ReweightMap(1, 2)

    def test_reference_series(self, model_322, psi_field):
        ts = sublevel_series(psi_field(model_322), model_322, calib=calibrate(model_322))
        assert ts.monotone
        assert ts.stokes_gap < 1e-6
        assert lelong_number(ts) == pytest.approx(1.0, rel=0.02)
        assert np.allclose(ts.reweighted, 1.0, rtol=0.02)


class TestPolarDensity:
    def test_uniform_density_of_reference(self, model_322, psi_field):
        patch = ([-math.pi / 2, 0.0], [math.pi / 2, 2 * math.pi])
        density = polar_density(psi_field(model_322), model_322, patch, calib=calibrate(model_322))
        assert density.patch_area == pytest.approx(2 * math.pi ** 2)
        assert density.value == pytest.approx(1.0, rel=0.02)



LOCALIZED_CASES = [("model_322", 0.75, 64.0), ("model_321", 1.5, 8.0)]


def half_patch(model):
    lower = [0.0] * (2 * len(model.torus_periods))
    upper = [p for p in model.torus_periods for _ in (0, 1)]
    lower[0], upper[0] = -model.torus_periods[0] / 4.0, model.torus_periods[0] / 4.0
    return lower, upper


@pytest.mark.slow
@pytest.mark.parametrize("model_name,nu,C", LOCALIZED_CASES)
class TestLocalizedMeasures:
    def test_lelong_number_is_mean_density(self, request, localized_field, model_name, nu, C):
        model = request.getfixturevalue(model_name)
        F = localized_field(model, nu, C)
        ts = lelong_series(F, model, calib=calibrate(model))
        assert ts.fit.converged
        assert ts.fit.known_rates == pytest.approx(F.correction_rates())
        assert lelong_number(ts) == pytest.approx(F.theta.mean, rel=0.05)

    def test_sublevel_series_matches_tube(self, request, localized_field, model_name, nu, C):
        model = request.getfixturevalue(model_name)
        F = localized_field(model, nu, C)
        calib = calibrate(model)
        ts = sublevel_series(F, model, calib=calib)
        assert ts.monotone
        assert all(a >= b for a, b in zip(ts.raw_integrals, ts.raw_integrals[1:]))
        assert lelong_number(ts) == pytest.approx(F.theta.mean, rel=0.05)

    def test_polar_density_is_patch_mean(self, request, localized_field, model_name, nu, C):
        model = request.getfixturevalue(model_name)
        F = localized_field(model, nu, C)
        lower, upper = half_patch(model)
        density = polar_density(F, model, (lower, upper), calib=calibrate(model))
        assert density.extrapolated
        assert density.value == pytest.approx(F.theta.patch_mean(lower, upper), rel=0.05)
