"""
Weight Checks Module

Experiments on the radial weight families: maximality of the pole,
sub/superweight certification, the expansion residual, the harmonic weight
along real submanifolds, and the numerical infrastructure checks.
"""

import logging
from typing import List

import numpy as np

from ..fields import Point, RadialField, fd_hessian
from ..garding import HermitianMatrix, elementary_symmetric, sigma_minors
from ..measures import lelong_series
from ..output.report_writer import Provenance
from ..profiles import PowerProfile, WeightFamily, WeightKind, eval_weight, profile_arrays
from ..weights import (
    epsilon_monotone,
    integrate_maximal_ode,
    laplacian_residual,
    make_weight,
    maximal_radial_profile,
    minimal_real_weight,
    ode_residual,
    singularity_type_gap,
    verify_expansion,
)
from .context import ExperimentContext, Outcome

logger = logging.getLogger(__name__)


def _tag(k: int, m: int, delta: float) -> str:
    return f"k{k}_m{m}_d{delta:g}"


def run_verify_weights(ctx: ExperimentContext) -> None:
    """Maximal pole, certified sub/superweights, regularization and the radial ODE."""
    cfg = ctx.config.weights
    tol = ctx.tol

    for k, m in cfg.maximal_pairs:
        model = ctx.model(max(ctx.config.model.n, k), k, m)
        radii = np.geomspace(model.tube_radius / 1000.0, model.tube_radius, cfg.maximal_points)

        def maximality(k=k, m=m, radii=radii) -> Outcome:
            worst = 0.0
            for a, b in ((1.0, 0.0), (cfg.maximal_a, cfg.maximal_b)):
                profile = maximal_radial_profile(k, m, a, b)
                for r in radii:
                    _, lam_tan = profile_arrays(profile.derivs(float(r)), float(r))
                    scale = float(lam_tan) ** m
                    worst = max(worst, abs(ode_residual(profile, float(r))) / scale)
            return Outcome(
                worst < tol.sigma_m,
                {"max_relative_sigma_m": worst, "radii": len(radii)},
                {"max_relative_sigma_m": f"< {tol.sigma_m:g}"},
            )

        ctx.check(
            f"maximal-pole-{k}-{m}",
            "sigma_m of the pole's Hessian vanishes off V",
            Provenance.PAPER,
            maximality,
        )

        def ode(k=k, m=m, model=model) -> Outcome:
            result = integrate_maximal_ode(k, m, model.tube_radius, a=cfg.maximal_a, span=cfg.ode_span)
            ctx.report.add_artifact(
                f"maximal_ode_k{k}_m{m}",
                [
                    {"r": r, "numerical": u, "closed_form": v}
                    for r, u, v in zip(result.radii, result.numerical, result.closed_form)
                ],
            )
            return Outcome(
                result.success and result.max_relative_error < tol.ode,
                {"sup_error": result.max_relative_error, "solver": result.solver_message},
                {"sup_error": f"< {tol.ode:g}"},
            )

        ctx.check(
            f"maximal-ode-{k}-{m}",
            "radial sigma_m = 0 reduces to an ODE solved by a*G_m + b",
            Provenance.DERIVED,
            ode,
        )

    for k, m, delta in cfg.tuples:
        model = ctx.model(max(ctx.config.model.n, k), k, m)
        tag = _tag(k, m, delta)

        def subweight(k=k, m=m, delta=delta, model=model, tag=tag) -> Outcome:
            weight = make_weight(WeightKind.G_SUB, k, m, delta, 0.0, model, cfg.per_decade, cfg.decades, tol.cone)
            cert = weight.certificate
            ctx.report.add_artifact(f"certificate_sub_{tag}", weight.to_dict())
            exponent = cert.fit.exponent if cert.fit else float("nan")
            expected = cert.expected_coefficient
            coefficient_ok = expected > 0 and abs(cert.normalized_coefficient - expected) <= tol.coefficient * expected
            exponent_ok = abs(exponent - delta) <= tol.exponent * delta
            covered = len(cert.radii) > cfg.per_decade
            return Outcome(
                bool(exponent_ok and coefficient_ok and covered and cert.sigma_m_sign > 0),
                {
                    "certified_radius": weight.certified_radius,
                    "grid_points": len(cert.radii),
                    "sigma_m_exponent": exponent,
                    "normalized_coefficient": cert.normalized_coefficient,
                    "min_margin": float(np.min(cert.margins)),
                },
                {"sigma_m_exponent": delta, "normalized_coefficient": expected},
            )

        ctx.check(
            f"subweight-{tag}",
            "perturbed pole is m-subharmonic with sigma_m ~ r^delta",
            Provenance.PAPER,
            subweight,
        )

        def superweight(k=k, m=m, delta=delta, model=model, tag=tag) -> Outcome:
            weight = make_weight(WeightKind.G_SUPER, k, m, delta, 0.0, model, cfg.per_decade, cfg.decades, tol.cone)
            cert = weight.certificate
            ctx.report.add_artifact(f"certificate_super_{tag}", weight.to_dict())
            margins = np.asarray(cert.margins)
            lower_ok = bool(np.all(margins[:, : m - 1] > 0)) if m > 1 else True
            negative = bool(np.all(np.asarray(cert.sigma_m) < 0))
            return Outcome(
                negative and lower_ok and len(cert.radii) > cfg.per_decade,
                {
                    "certified_radius": weight.certified_radius,
                    "max_sigma_m": float(np.max(cert.sigma_m)),
                    "lower_sigmas_positive": lower_ok,
                },
                {"sigma_m": "< 0", "sigma_j (j < m)": "> 0"},
            )

        ctx.check(
            f"superweight-{tag}",
            "opposite perturbation has sigma_m < 0 and lower sigma_j > 0",
            Provenance.PAPER,
            superweight,
        )

        def regularization(k=k, m=m, delta=delta, model=model) -> Outcome:
            family = WeightFamily(WeightKind.G_SUB, k, m, delta=delta)
            radii = np.geomspace(model.tube_radius / 1000.0, model.tube_radius / 2.0, 32)
            monotone = epsilon_monotone(family, [0.0] + list(cfg.epsilons), radii)
            gap_sub = singularity_type_gap(family.with_changes(epsilon=min(cfg.epsilons)), radii)
            gap_super = singularity_type_gap(family.with_changes(kind=WeightKind.G_SUPER, A=-1.0), radii)
            bounded = bool(np.isfinite(gap_sub) and np.isfinite(gap_super))
            return Outcome(
                monotone and bounded,
                {"epsilon_monotone": monotone, "gap_sub": gap_sub, "gap_super": gap_super},
                {"epsilon_monotone": True, "gaps": "finite"},
            )

        ctx.check(
            f"regularization-{tag}",
            "regularized subweights decrease to the weight and keep its singularity type",
            Provenance.DERIVED,
            regularization,
        )


def run_expansion(ctx: ExperimentContext) -> None:
    """Residual of the scaled Hessian after the r^delta expansion terms."""
    cfg = ctx.config.expansion
    grid = np.geomspace(cfg.r_min, cfg.r_max, cfg.points)
    rows: List[dict] = []

    for k, m, delta in cfg.tuples:
        for epsilon in cfg.epsilons:
            for sign in cfg.signs:
                name = f"expansion-{_tag(k, m, delta)}-e{epsilon:g}-A{sign:+d}"

                def expansion(k=k, m=m, delta=delta, epsilon=epsilon, sign=sign) -> Outcome:
                    report = verify_expansion(k, m, delta, epsilon, grid, float(sign))
                    rows.extend(
                        {"k": k, "m": m, "delta": delta, "epsilon": epsilon, "A": sign, "r": r, "residual": v}
                        for r, v in zip(report.radii, report.residual)
                    )
                    return Outcome(
                        report.passed,
                        {"residual_exponent": report.residual_exponent, "fitted_points": report.fitted_points},
                        {"residual_exponent": f"> {delta:g}"},
                    )

                ctx.check(name, "scaled Hessian expands to first order in r^delta", Provenance.PAPER, expansion)

    ctx.report.add_artifact("expansion_residuals", rows)


def run_minimal(ctx: ExperimentContext) -> None:
    """Harmonic pole -r^(2-kappa) along linear real submanifolds, with a control."""
    cfg = ctx.config.minimal
    tol = ctx.tol.minimal
    radii = np.geomspace(cfg.r_min, cfg.r_max, cfg.points)

    for kappa in cfg.kappas:

        def harmonic(kappa=kappa) -> Outcome:
            residual = laplacian_residual(eval_weight(minimal_real_weight(kappa), radii), radii, kappa)
            worst = float(np.max(np.abs(residual)))
            return Outcome(worst < tol, {"max_residual": worst}, {"max_residual": f"< {tol:g}"})

        ctx.check(
            f"minimal-harmonic-kappa{kappa}",
            "-r^(2-kappa) is harmonic off a linear submanifold of real codimension kappa",
            Provenance.PAPER,
            harmonic,
        )

    def control() -> Outcome:
        kappa = 3
        d = eval_weight(minimal_real_weight(kappa), radii) + PowerProfile(1.0, 1.0).derivs(radii)
        residual = laplacian_residual(d, radii, kappa)
        worst = float(np.max(np.abs(residual - 2.0 / radii)))
        return Outcome(worst < tol, {"max_deviation_from_2_over_r": worst}, {"residual": "2/r"})

    ctx.check(
        "minimal-perturbed-control",
        "adding r to the pole leaves the Laplacian residual 2/r",
        Provenance.TRIVIAL,
        control,
    )


def run_infrastructure(ctx: ExperimentContext) -> None:
    """Minors against eigenvalues, finite-difference order, reproducibility across threads."""
    tol = ctx.tol

    def minors() -> Outcome:
        rng = np.random.default_rng(ctx.seed_for("minors"))
        worst = 0.0
        for n in (2, 3, 4, 5):
            for _ in range(8):
                a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                H = HermitianMatrix((a + a.conj().T) / 2.0)
                eigenvalues = np.linalg.eigvalsh(H.entries)
                for j in range(1, n + 1):
                    oracle = float(elementary_symmetric(eigenvalues, j))
                    worst = max(worst, abs(sigma_minors(H, j) - oracle) / max(1.0, abs(oracle)))
        return Outcome(worst < tol.minors, {"max_relative_error": worst}, {"max_relative_error": f"< {tol.minors:g}"})

    ctx.check("sigma-minors-oracle", "sigma_j from principal minors matches eigenvalues", Provenance.TRIVIAL, minors)

    pole = RadialField(WeightFamily(WeightKind.G_PURE, 3, 2), 3)
    point = Point((1.0 + 0j, 0j, 0j), (0j,))
    exact = np.diag([-0.25, 0.5, 0.5, 0.0]).astype(complex)

    def fd_example() -> Outcome:
        error = float(np.max(np.abs(fd_hessian(pole, point, 1e-4).entries - exact)))
        return Outcome(error < 1e-6, {"max_entry_error": error}, {"profile": [-0.25, 0.5, 0.5, 0.0]})

    ctx.check("fd-hessian-radial-pole", "finite differences recover the radial profile", Provenance.TRIVIAL, fd_example)

    def fd_order() -> Outcome:
        errors = [float(np.max(np.abs(fd_hessian(pole, point, h).entries - exact))) for h in (4e-3, 2e-3, 1e-3)]
        ratios = [errors[0] / errors[1], errors[1] / errors[2]]
        ok = all(3.5 <= r <= 4.5 for r in ratios)
        return Outcome(ok, {"errors": errors, "ratios": ratios}, {"ratios": "[3.5, 4.5]"})

    ctx.check("fd-hessian-order", "central differences converge at order 2", Provenance.DERIVED, fd_order)

    def reproducible() -> Outcome:
        model = ctx.model()
        if model.m == 1:
            model = ctx.model(max(model.n, 2), max(model.k, 2), 2)
        psi = RadialField(model.reference_weight(), model.k)
        runs = []
        for threads in (1, 2, 4):
            params = ctx.tube_params(samples_per_stratum=256, threads=threads)
            runs.append(lelong_series(psi, model, method="monte-carlo", params=params).raw_integrals)
        identical = runs[0] == runs[1] == runs[2]
        return Outcome(identical, {"identical": identical, "values": runs[0]}, {"identical": True})

    ctx.check(
        "thread-reproducibility",
        "seeded integrals are bit-identical for 1, 2 and 4 threads",
        Provenance.TRIVIAL,
        reproducible,
    )
