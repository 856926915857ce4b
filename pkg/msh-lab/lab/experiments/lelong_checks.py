"""
Lelong Checks Module

Calibration of the tube integrals, linearity of the generalized Lelong
number on multiples of the reference weight, the sublevel-set series and
the cross-checks between integration methods.
"""

import logging
from typing import List

import numpy as np

from ..fields import RadialField
from ..measures import (
    TubeSeries,
    default_s_grid,
    sublevel_series,
    lelong_number,
    lelong_series,
)
from ..output.report_writer import Provenance
from ..profiles import FlatModel
from .context import ExperimentContext, Outcome

logger = logging.getLogger(__name__)


def series_rows(label: str, ts: TubeSeries) -> List[dict]:
    """Plot-ready rows of a tube series."""
    rows = []
    for i, (s, raw, scaled) in enumerate(zip(ts.s_values, ts.raw_integrals, ts.scaled_values)):
        row = {"series": label, "s": s, "raw": raw, "scaled": scaled}
        if ts.reweighted:
            row["reweighted"] = ts.reweighted[i]
            row["level"] = ts.levels[i]
        if ts.standard_errors:
            row["standard_error"] = ts.standard_errors[i]
        rows.append(row)
    return rows


def _lelong_models(ctx: ExperimentContext) -> List[FlatModel]:
    models = [ctx.model()]
    for n, k, m in ctx.config.lelong.extra_models:
        candidate = ctx.model(n, k, m)
        if candidate.key() != models[0].key():
            models.append(candidate)
    return [model for model in models if model.m <= model.k]


def run_lelong(ctx: ExperimentContext) -> None:
    """Calibrated Lelong numbers of multiples of psi_V and the sublevel series."""
    cfg = ctx.config.lelong
    tol = ctx.tol
    rows: List[dict] = []

    for model in _lelong_models(ctx):
        tag = f"n{model.n}_k{model.k}_m{model.m}"
        s_grid = default_s_grid(model, cfg.s_count)
        psi = RadialField(model.reference_weight(), model.k)
        params = ctx.tube_params()

        def calibration(model=model) -> Outcome:
            calib = ctx.calibration(model)
            gap = abs(calib.raw_limit - calib.closed_form) / calib.closed_form
            return Outcome(
                gap < 1e-6,
                {"raw_limit": calib.raw_limit, "C_km": calib.C_km, "C_def": calib.C_def, "method": calib.method},
                {"raw_limit": calib.closed_form},
            )

        ctx.check(f"calibration-{tag}", "psi_V tube mass has the closed-form limit", Provenance.DERIVED, calibration)

        for gamma in cfg.gammas:

            def linearity(gamma=gamma, model=model, tag=tag) -> Outcome:
                F = RadialField(model.reference_weight(), model.k, coefficient=gamma)
                ts = lelong_series(F, model, s_grid, calib=ctx.calibration(model), params=params)
                rows.extend(series_rows(f"{tag}-gamma{gamma:g}", ts))
                nu = lelong_number(ts)
                ok = nu is not None and abs(nu - gamma) <= tol.lelong * gamma
                return Outcome(
                    ok,
                    {"nu_hat": nu, "method": ts.method, "monotone": ts.monotone},
                    {"nu": gamma},
                )

            ctx.check(
                f"lelong-linearity-{tag}-gamma{gamma:g}",
                "Lelong number of gamma * psi_V is gamma",
                Provenance.PAPER,
                linearity,
            )

        def sublevel(model=model, tag=tag) -> Outcome:
            calib = ctx.calibration(model)
            ts = sublevel_series(psi, model, s_grid, calib, params)
            rows.extend(series_rows(f"{tag}-sublevel", ts))
            tube = lelong_number(lelong_series(psi, model, s_grid, calib=calib, params=params))
            limit = lelong_number(ts)
            agree = limit is not None and tube is not None and abs(limit - tube) <= tol.lelong * max(abs(tube), 1e-12)
            return Outcome(
                ts.monotone and agree,
                {"monotone": ts.monotone, "sublevel_limit": limit, "tube_limit": tube, "stokes_gap": ts.stokes_gap},
                {"monotone": True, "sublevel_limit": tube},
            )

        ctx.check(
            f"sublevel-series-{tag}",
            "sublevel integrals decrease to the same limit as the tube integrals",
            Provenance.PAPER,
            sublevel,
        )

        def reweighted(model=model) -> Outcome:
            ts = sublevel_series(psi, model, s_grid, ctx.calibration(model), params)
            values = np.asarray(ts.reweighted)
            spread = float(np.max(np.abs(values - 1.0)))
            return Outcome(
                spread <= tol.lelong and ts.stokes_gap < 1e-6,
                {"max_deviation": spread, "stokes_gap": ts.stokes_gap},
                {"reweighted": 1.0},
            )

        ctx.check(
            f"reweighted-series-{tag}",
            "reweighting by the convex map H_m reproduces the tube normalization",
            Provenance.DERIVED,
            reweighted,
            informational=True,
        )

        if model.m == 1:

            def flux_vs_quadrature(model=model) -> Outcome:
                calib = ctx.calibration(model)
                flux = lelong_series(psi, model, s_grid, "flux", calib, params)
                quad = lelong_series(psi, model, s_grid, "radial-quadrature", calib, params)
                a, b = lelong_number(flux), lelong_number(quad)
                ok = a is not None and b is not None and abs(a - b) <= tol.lelong
                return Outcome(ok, {"flux": a, "radial_quadrature": b}, {"agreement": tol.lelong})

            ctx.check(
                f"flux-vs-quadrature-{tag}",
                "the boundary flux carries the mass on V when m = 1",
                Provenance.DERIVED,
                flux_vs_quadrature,
            )
        else:

            def monte_carlo(model=model) -> Outcome:
                calib = ctx.calibration(model)
                ts = lelong_series(psi, model, s_grid, "monte-carlo", calib, params)
                scaled = np.asarray(ts.scaled_values)
                errors = np.asarray(ts.standard_errors)
                bound = tol.mc_sigmas * errors + tol.lelong
                ok = bool(np.all(np.abs(scaled - 1.0) <= bound))
                return Outcome(
                    ok,
                    {"scaled": ts.scaled_values, "standard_errors": ts.standard_errors, "warnings": ts.warnings},
                    {"scaled": 1.0},
                )

            ctx.check(
                f"monte-carlo-{tag}",
                "stratified sampling agrees with quadrature within its error bars",
                Provenance.DERIVED,
                monte_carlo,
            )

    ctx.report.add_artifact("lelong_series", rows)
