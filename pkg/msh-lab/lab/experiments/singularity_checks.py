"""
Singularity Checks Module

Experiments on relative types and pointwise ratios: convexity and slopes of
sublevel maxima, localized weights with a prescribed Lelong density, the
comparison sigma <= nu, and constancy along V in codimension below m.
"""

import logging
from typing import List, Tuple

import numpy as np

from ..config_loader import LocalizeCase
from ..errors import ConstructionError
from ..fields import AffineField, LocalizedField, RadialField, ScaledLogField, ThetaField, make_localized
from ..measures import default_s_grid, lelong_number, lelong_series, polar_density, sublevel_series
from ..output.report_writer import Provenance
from ..profiles import ClampedProfile, FlatModel, PowerProfile
from ..singularity import (
    ShellSampler,
    compare_bounds,
    default_levels,
    l_pointwise,
    min_relation_check,
    relative_type,
    siu_scan,
)
from .context import ExperimentContext, Outcome

logger = logging.getLogger(__name__)


def _sampler(ctx: ExperimentContext, label: str) -> ShellSampler:
    cfg = ctx.config.reltype
    return ShellSampler(cfg.torus_per_dim, cfg.sphere_points, seed=ctx.seed_for(label))


def _levels(ctx: ExperimentContext, model: FlatModel) -> np.ndarray:
    return default_levels(model, ctx.config.reltype.levels)


def _psi(model: FlatModel, gamma: float = 1.0) -> RadialField:
    return RadialField(model.reference_weight(), model.k, coefficient=gamma)


def _smooth_perturbation(model: FlatModel) -> AffineField:
    """psi_V + |z'|^2."""
    return AffineField([(1.0, _psi(model)), (1.0, RadialField(PowerProfile(), model.k))])


def run_reltype(ctx: ExperimentContext) -> None:
    """Convexity of sublevel maxima and the relative type of multiples of psi_V."""
    cfg = ctx.config.reltype
    tol = ctx.tol
    model = ctx.model()
    levels = _levels(ctx, model)
    rows: List[dict] = []

    for gamma in cfg.gammas:
        def slopes(gamma=gamma) -> Outcome:
            series = relative_type(_psi(model, gamma), model, levels, _sampler(ctx, "reltype"), threads=ctx.threads)
            rows.extend(
                {"gamma": gamma, "level": s, "M": M} for s, M in zip(series.s_values, series.M_values)
            )
            sigma = series.sigma_hat
            ok = (
                series.convexity_ok
                and series.secants_ok
                and sigma is not None
                and abs(sigma - gamma) <= tol.reltype * gamma
            )
            return Outcome(
                ok,
                {
                    "sigma_hat": sigma,
                    "min_second_difference": series.min_second_difference,
                    "secants_nonincreasing": series.secants_ok,
                },
                {"sigma": gamma, "convex": True},
            )

        ctx.check(
            f"reltype-gamma{gamma:g}",
            "sublevel maxima are convex in the level with slope gamma",
            Provenance.PAPER,
            slopes,
        )

    def equivariance() -> Outcome:
        base = _smooth_perturbation(model)
        a, c = cfg.affine_scale, cfg.affine_shift
        scaled = AffineField([(a, base)], constant=c)
        sigma = relative_type(base, model, levels, _sampler(ctx, "affine"), threads=ctx.threads).sigma_hat
        sigma_scaled = relative_type(scaled, model, levels, _sampler(ctx, "affine"), threads=ctx.threads).sigma_hat
        ok = sigma is not None and sigma_scaled is not None and abs(sigma_scaled - a * sigma) <= 0.01 * a * abs(sigma)
        return Outcome(ok, {"sigma": sigma, "sigma_scaled": sigma_scaled}, {"sigma_scaled": f"{a:g} * sigma"})

    ctx.check(
        "reltype-affine-equivariance",
        "relative type scales with positive multiples and ignores constants",
        Provenance.TRIVIAL,
        equivariance,
    )

    def exhaustion_correction() -> Outcome:
        F = _smooth_perturbation(model)
        plain = relative_type(F, model, levels, _sampler(ctx, "rho"), threads=ctx.threads).sigma_hat
        corrected = relative_type(F, model, levels, _sampler(ctx, "rho"), correction=1.0, threads=ctx.threads).sigma_hat
        ok = plain is not None and corrected is not None and abs(plain - corrected) <= tol.reltype
        return Outcome(ok, {"sigma": plain, "sigma_with_rho": corrected}, {"difference": 0.0})

    ctx.check(
        "reltype-rho-correction",
        "adding a bounded multiple of the exhaustion does not change the relative type",
        Provenance.DERIVED,
        exhaustion_correction,
        informational=True,
    )
    ctx.report.add_artifact("reltype_maxima", rows)


def _probe_points(ctx: ExperimentContext, model: FlatModel, count: int) -> np.ndarray:
    rng = np.random.default_rng(ctx.seed_for("probes"))
    periods = np.repeat(np.asarray(model.torus_periods), 2)
    x = rng.uniform(0.0, 1.0, (count, periods.size)) * periods
    return x[:, 0::2] + 1j * x[:, 1::2]


def _half_patch(model: FlatModel) -> Tuple[List[float], List[float]]:
    """Band of width half a period around x_1 = 0, full in every other real direction."""
    periods = np.repeat(np.asarray(model.torus_periods), 2)
    lower = [0.0] * periods.size
    upper = [float(p) for p in periods]
    lower[0], upper[0] = -periods[0] / 4.0, periods[0] / 4.0
    return lower, upper


def _localize_case(ctx: ExperimentContext, case: LocalizeCase) -> None:
    cfg = ctx.config.localize
    tol = ctx.tol
    model = ctx.model(case.n, case.k, case.m)
    theta = ctx.theta(cfg.theta, model)
    tag = f"k{case.k}_m{case.m}_nu{case.nu:g}"
    calib = ctx.calibration(model)
    s_grid = default_s_grid(model, cfg.s_count)
    params = ctx.tube_params()
    state = {}

    def construction() -> Outcome:
        F = ctx.localized(case)
        state["field"] = F
        ctx.report.add_artifact(f"localized_{tag}", F.to_dict())
        return Outcome(
            F.certificate is not None and F.certificate.passed,
            {"C": F.C, "min_margin": F.certificate.min_margin if F.certificate else None},
            {"certified": True},
        )

    ctx.check(
        f"localize-construction-{tag}",
        "some finite C makes theta*psi + C*F_nu m-subharmonic",
        Provenance.PAPER,
        construction,
    )
    F: LocalizedField = state.get("field")
    if F is None:
        logger.warning(f"⚠️  Skipping localized checks for {tag}: no certified field")
        return

    def sigma_check() -> Outcome:
        series = relative_type(F, model, _levels(ctx, model), _sampler(ctx, f"localized-{tag}"), threads=ctx.threads)
        state["sigma"] = series.sigma_hat
        ok = series.sigma_hat is not None and abs(series.sigma_hat - theta.minimum()) <= tol.reltype
        return Outcome(ok, {"sigma_hat": series.sigma_hat, "convex": series.convexity_ok}, {"sigma": theta.minimum()})

    ctx.check(f"localize-reltype-{tag}", "relative type equals min theta = 0", Provenance.PAPER, sigma_check)

    def nu_check() -> Outcome:
        ts = lelong_series(F, model, s_grid, calib=calib, params=params)
        nu = lelong_number(ts)
        state["nu"] = nu
        ok = nu is not None and abs(nu - theta.mean) <= tol.localized * theta.mean
        return Outcome(ok, {"nu_hat": nu, "method": ts.method}, {"nu": theta.mean})

    ctx.check(f"localize-lelong-{tag}", "Lelong number equals the mean of theta", Provenance.PAPER, nu_check)

    def sublevel_check() -> Outcome:
        ts = sublevel_series(F, model, s_grid, calib, params)
        nu_sub = lelong_number(ts)
        nu_tube = state.get("nu")
        ok = (
            ts.monotone
            and nu_sub is not None
            and nu_tube is not None
            and abs(nu_sub - nu_tube) <= tol.localized * theta.mean
        )
        ctx.report.add_artifact(f"sublevel_series_{tag}", ts.to_dict())
        return Outcome(
            ok,
            {"nu_sublevel": nu_sub, "monotone": ts.monotone, "stokes_gap": ts.stokes_gap},
            {"nu": nu_tube, "monotone": True},
        )

    ctx.check(
        f"localize-sublevel-{tag}",
        "sublevel integrals decrease to the same Lelong number as the tube integrals",
        Provenance.DERIVED,
        sublevel_check,
    )

    probes = _probe_points(ctx, model, cfg.probes)
    probe_rows: List[dict] = []

    def probe_check() -> Outcome:
        worst = 0.0
        for z0 in probes:
            probe = l_pointwise(F, model, z0, seed=ctx.seed_for("probe-directions"))
            expected = float(theta.value(z0[None, :])[0])
            worst = max(worst, abs(probe.liminf_estimate - expected) / max(1.0, expected))
            probe_rows.append({"z0": probe.base_point, "L_hat": probe.liminf_estimate, "theta": expected})
        ctx.report.add_artifact(f"probes_{tag}", probe_rows)
        return Outcome(worst <= tol.localized, {"max_relative_error": worst, "probes": len(probes)}, {"L": "theta(z0)"})

    ctx.check(f"localize-pointwise-{tag}", "pointwise ratio recovers theta along V", Provenance.PAPER, probe_check)

    def path_check() -> Outcome:
        # Straight path across one period of the first torus coordinate.
        period = model.torus_periods[0]
        ts = np.linspace(0.0, period, 13)
        path = np.zeros((len(ts), model.tangent_dim), dtype=complex)
        path[:, 0] = ts
        values = np.array([l_pointwise(F, model, z0).liminf_estimate for z0 in path])
        expected = theta.value(path)
        deficit = float(np.max(expected - values))
        return Outcome(deficit <= tol.localized * max(1.0, theta.maximum()), {"max_deficit": deficit}, {"L": ">= theta - tol"})

    ctx.check(
        f"localize-path-{tag}",
        "ratios along a torus path stay above theta",
        Provenance.DERIVED,
        path_check,
    )

    def polar_check() -> Outcome:
        lower, upper = _half_patch(model)
        density = polar_density(F, model, (lower, upper), s_grid, calib, params)
        expected = theta.patch_mean(lower, upper)
        ok = density.extrapolated and abs(density.value - expected) <= tol.localized * expected
        return Outcome(
            ok,
            {"density": density.value, "patch_area": density.patch_area, "extrapolated": density.extrapolated},
            {"density": expected},
        )

    ctx.check(
        f"localize-polar-density-{tag}",
        "the Lelong measure restricted to a patch of V has density theta",
        Provenance.DERIVED,
        polar_check,
    )

    def bound_check() -> Outcome:
        result = compare_bounds(F, model, calib, state.get("sigma"), state.get("nu"), tol.lelong, params, ctx.threads)
        return Outcome(result.passed, {"sigma_hat": result.sigma_hat, "nu_hat": result.nu_hat}, {"sigma": "<= nu"})

    ctx.check(f"localize-bound-{tag}", "relative type is bounded by the Lelong number", Provenance.PAPER, bound_check)

    def min_relation() -> Outcome:
        report = min_relation_check(
            F,
            model,
            per_dim=cfg.min_relation_per_dim,
            sigma_hat=state.get("sigma"),
            tolerance=tol.localized,
            lower_tolerance=tol.probe,
            threads=ctx.threads,
        )
        return Outcome(
            report.agreement and report.lower_bound_ok,
            {"min_L": report.min_L, "argmin": report.argmin, "grid_points": report.grid_points},
            {"min_L": report.sigma_hat},
        )

    ctx.check(
        f"localize-min-relation-{tag}",
        "minimum of the pointwise ratio over V equals the relative type",
        Provenance.PAPER,
        min_relation,
    )

    if cfg.explore_nu:
        lower = case.k / case.m - 0.5 if case.m > 1 else float(case.k - 1)
        nu = lower - cfg.explore_offset

        def explore() -> Outcome:
            radii = np.geomspace(1e-3 * model.tube_radius, 0.95 * model.tube_radius, cfg.scan_radii)
            try:
                G = make_localized(
                    theta, nu, case.k, case.m, model,
                    c_cap=cfg.explore_c_cap, scan_radii=radii,
                    torus_points=cfg.torus_points, sphere_points=cfg.sphere_points,
                    tol=tol.cone, seed=ctx.seed_for("explore"), threads=ctx.threads, exploratory=True,
                )
            except ConstructionError as e:
                return Outcome(False, {"nu": nu, "certified": False}, {}, note=str(e))
            return Outcome(True, {"nu": nu, "certified": True, "C": G.C}, {})

        ctx.check(
            f"localize-explore-{tag}",
            "behaviour of the construction below the admissible nu range",
            Provenance.DERIVED,
            explore,
            informational=True,
        )


def run_localize(ctx: ExperimentContext) -> None:
    """Localized weights with prescribed density theta along V."""
    for case in ctx.config.localize.cases:
        _localize_case(ctx, case)


def run_compare(ctx: ExperimentContext) -> None:
    """sigma <= nu on the equality case, a smooth perturbation and a localized weight."""
    tol = ctx.tol
    model = ctx.model()
    calib = ctx.calibration(model)
    params = ctx.tube_params()
    sampler = _sampler(ctx, "compare")
    levels = _levels(ctx, model)

    def pair(F) -> Tuple:
        sigma = relative_type(F, model, levels, sampler, threads=ctx.threads).sigma_hat
        nu = lelong_number(lelong_series(F, model, calib=calib, params=params))
        return sigma, nu

    def equality() -> Outcome:
        sigma, nu = pair(_psi(model))
        result = compare_bounds(_psi(model), model, calib, sigma, nu, tol.lelong)
        ok = result.passed and abs(sigma - 1.0) <= tol.reltype and abs(nu - 1.0) <= tol.lelong
        return Outcome(ok, {"sigma_hat": sigma, "nu_hat": nu}, {"sigma": 1.0, "nu": 1.0})

    ctx.check("compare-equality", "psi_V attains sigma = nu", Provenance.TRIVIAL, equality)

    def smooth() -> Outcome:
        sigma, nu = pair(_smooth_perturbation(model))
        ok = (
            sigma is not None and nu is not None
            and abs(sigma - 1.0) <= tol.reltype and abs(nu - 1.0) <= tol.lelong
        )
        return Outcome(ok, {"sigma_hat": sigma, "nu_hat": nu}, {"sigma": 1.0, "nu": 1.0})

    ctx.check("compare-smooth-perturbation", "smooth terms change neither sigma nor nu", Provenance.TRIVIAL, smooth)

    cases = [c for c in ctx.config.localize.cases if (c.n, c.k, c.m) == (model.n, model.k, model.m)]
    if not cases:
        lower = model.k / model.m - 0.5 if model.m > 1 else float(model.k - 1)
        cases = [LocalizeCase(n=model.n, k=model.k, m=model.m, nu=(lower + model.k / model.m) / 2.0)]

    def separation() -> Outcome:
        F = ctx.localized(cases[0])
        theta: ThetaField = F.theta
        sigma, nu = pair(F)
        ok = (
            sigma is not None and nu is not None
            and abs(sigma - theta.minimum()) <= tol.reltype
            and abs(nu - theta.mean) <= tol.localized * theta.mean
            and sigma < nu
        )
        return Outcome(ok, {"sigma_hat": sigma, "nu_hat": nu}, {"sigma": theta.minimum(), "nu": theta.mean})

    ctx.check(
        "compare-strict-separation",
        "a density vanishing somewhere gives sigma = 0 while nu > 0",
        Provenance.PAPER,
        separation,
    )


def run_siu(ctx: ExperimentContext) -> None:
    """Constancy of the pointwise ratio along V when k < m, and the falsifier."""
    cfg = ctx.config.siu
    tol = ctx.tol
    model = ctx.model(cfg.n, cfg.k, cfg.m)
    seed = ctx.seed_for("siu")

    def constant_field() -> Outcome:
        report = siu_scan(_psi(model, cfg.gamma), model, cfg.per_dim, tolerance=tol.siu, seed=seed, threads=ctx.threads)
        ctx.report.add_artifact("siu_L_table", report.L_table)
        ok = report.passed and report.mean_L is not None and abs(report.mean_L - cfg.gamma) <= tol.siu * cfg.gamma
        return Outcome(
            ok,
            {"spread": report.spread, "mean_L": report.mean_L, "sigma_hat": report.sigma_hat},
            {"L": cfg.gamma, "spread": f"<= {tol.siu:g}"},
        )

    ctx.check("siu-constant-multiple", "L is constant along V for gamma*log|z'|", Provenance.TRIVIAL, constant_field)

    def falsifier() -> Outcome:
        theta = ctx.theta(cfg.falsifier_theta, model)
        report = siu_scan(ScaledLogField(theta, model.k), model, cfg.per_dim, tolerance=tol.siu, seed=seed, threads=ctx.threads)
        ctx.report.add_artifact("siu_falsifier_scan", report.to_dict())
        violation = report.scan.first_violation if report.scan else None
        return Outcome(
            report.passed,
            {
                "violation_radius": violation.radius if violation else None,
                "violation_margin": violation.margin if violation else None,
            },
            {"violation": "located"},
        )

    ctx.check(
        "siu-falsifier",
        "nonconstant theta*log|z'| is not m-subharmonic when k < m",
        Provenance.DERIVED,
        falsifier,
    )

    def bounded() -> Outcome:
        clamped = RadialField(ClampedProfile(model.reference_weight(), cfg.clamp_floor), model.k)
        F = AffineField([(1.0, clamped), (1.0, RadialField(PowerProfile(), model.k))])
        report = siu_scan(F, model, cfg.per_dim, tolerance=tol.siu, seed=seed, threads=ctx.threads)
        ok = report.passed and report.mean_L is not None and abs(report.mean_L) <= tol.bounded
        return Outcome(ok, {"spread": report.spread, "mean_L": report.mean_L}, {"L": 0.0})

    ctx.check("siu-bounded", "bounded singularities have L = 0 along V", Provenance.TRIVIAL, bounded)
