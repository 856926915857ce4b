"""
Singularity Module

Relative types from sublevel maxima, pointwise ratios L_psi along V, the
min-relation between them, the comparison with Lelong numbers, and the
constancy scan along V for codimension below the Hessian order.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ArgumentError, GeometryError
from .fields import ScalarField, ScaledLogField, ScanReport, gamma_m_scan, scan_grid
from .measures import Calibration, TubeParams, lelong_number, lelong_series
from .numerics import (
    LimitFit,
    extrapolate_limit,
    halving_grid,
    parallel_map,
    second_divided_differences,
    sphere_directions,
    torus_grid,
)
from .profiles import FlatModel

logger = logging.getLogger(__name__)

CONVEXITY_TOLERANCE = 1e-6
SECANT_TOLERANCE = 1e-9
NEGATIVE_SLACK = 1e-3


def _tail(values: np.ndarray) -> slice:
    """The deepest half of a sequence (at least three entries)."""
    count = max(3, math.ceil(len(values) / 2))
    return slice(len(values) - count, len(values))


class ShellSampler:
    """
    Samples the shell {psi_V = s} on a torus grid times a set of normal directions.

    The best torus point is polished with a local optimizer and a small share of
    interior points is checked against the shell maximum.
    """

    def __init__(
        self,
        torus_per_dim: int = 32,
        sphere_points: int = 32,
        seed: int = 0,
        refine: bool = True,
        interior_share: float = 0.01,
        max_torus_points: int = 4096,
    ):
        self.torus_per_dim = torus_per_dim
        self.sphere_points = sphere_points
        self.seed = seed
        self.refine = refine
        self.interior_share = interior_share
        self.max_torus_points = max_torus_points
        self.interior_excess = 0.0

    def torus(self, model: FlatModel) -> np.ndarray:
        d = model.tangent_dim
        if d == 0:
            return np.zeros((1, 0), dtype=complex)
        per_dim = min(self.torus_per_dim, max(2, int(self.max_torus_points ** (1.0 / (2 * d)))))
        return torus_grid(model.torus_periods, per_dim)

    def shell_points(self, model: FlatModel, radius: float) -> np.ndarray:
        dirs = sphere_directions(model.k, self.sphere_points, self.seed)
        torus = self.torus(model)
        normal = np.repeat(radius * dirs, len(torus), axis=0)
        tangent = np.tile(torus, (len(dirs), 1))
        return np.hstack([normal, tangent])

    def maximum(self, F: ScalarField, model: FlatModel, radius: float, correction: float = 0.0) -> float:
        rho_shift = correction * float(model.rho(radius))
        points = self.shell_points(model, radius)
        values = F.evaluate(points)
        best = int(np.argmax(values))
        top = float(values[best])

        if self.refine and model.tangent_dim:
            normal = points[best, : model.k]

            def negative(x: np.ndarray) -> float:
                tangent = x[0::2] + 1j * x[1::2]
                return -float(F.evaluate(np.concatenate([normal, tangent])[None, :])[0])

            start = np.stack([points[best, model.k:].real, points[best, model.k:].imag], axis=-1).reshape(-1)
            result = minimize(negative, start, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
            top = max(top, -float(result.fun))

        count = max(1, int(self.interior_share * len(points)))
        rng = np.random.default_rng(self.seed)
        picks = rng.integers(0, len(points), count)
        scales = np.geomspace(1e-3, 1.0, count + 1)[:-1]
        interior = points[picks].copy()
        interior[:, : model.k] *= scales[:, None]
        interior_values = F.evaluate(interior) + correction * model.rho(radius * scales)
        excess = float(np.max(interior_values) - (top + rho_shift))
        self.interior_excess = max(self.interior_excess, excess)
        if excess > 1e-9 * max(1.0, abs(top)):
            logger.warning(f"⚠️ Interior sample exceeds shell maximum by {excess:.3g} at r={radius:.3g}")
        return max(top + rho_shift, float(np.max(interior_values)))


def sublevel_max(
    F: ScalarField,
    model: FlatModel,
    s: float,
    sampler: Optional[ShellSampler] = None,
    correction: float = 0.0,
) -> float:
    """
    Maximum of F + correction * rho over the sublevel set {psi_V < s}.

    Args:
        F: Field
        model: Flat model
        s: Level of psi_V, below its value at the tube radius
        sampler: Shell sampler (default 32 x 32 sampling)
        correction: Multiple A of the exhaustion rho added to F

    Returns:
        Estimated maximum
    """
    sampler = sampler or ShellSampler()
    radius = model.radius_of_level(s)
    if not 0 < radius < model.tube_radius:
        raise GeometryError(f"level {s} gives radius {radius:.4g} outside the tube")
    return sampler.maximum(F, model, float(radius), correction)


@dataclass
class SlopeSeries:
    """Sublevel maxima along decreasing levels and their slopes."""
    s_values: List[float]
    M_values: List[float]
    secants: List[float]
    sigma_hat: Optional[float]
    convexity_ok: bool
    monotone_ok: bool
    secants_ok: bool
    fit: Optional[LimitFit] = None
    min_second_difference: float = 0.0
    level_slopes: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def default_levels(model: FlatModel, count: int = 12, first: int = 0) -> np.ndarray:
    radii = halving_grid(model.tube_radius / 2.0, first + count)[first:]
    return np.asarray(model.psi_v(radii), dtype=float)


def relative_type(
    F: ScalarField,
    model: FlatModel,
    s_grid: Optional[Sequence[float]] = None,
    sampler: Optional[ShellSampler] = None,
    correction: float = 0.0,
    threads: int = 1,
) -> SlopeSeries:
    """
    Relative type of F with respect to psi_V from the slopes of M_s.

    Convexity of s -> M_s is checked on second divided differences, and the
    anchored secants (M_{s0} - M_s)/(s0 - s) are reported for monotonicity.
    The estimate extrapolates the slopes between consecutive levels as a
    power of the radius of the deeper shell.
    A relative type is never negative: estimates slightly below zero are
    clamped to 0 and clearly negative ones are reported as not converged.

    Returns:
        SlopeSeries; sigma_hat is None when the extrapolation fails
    """
    s = np.asarray(default_levels(model) if s_grid is None else s_grid, dtype=float)
    if s.size < 6 or np.any(np.diff(s) >= 0):
        raise ArgumentError("relative type needs at least 6 strictly decreasing levels")
    sampler = sampler or ShellSampler()
    M = np.array(parallel_map(lambda level: sublevel_max(F, model, level, sampler, correction), s, threads))

    scale = max(float(np.max(np.abs(M))), 1.0)
    ascending = slice(None, None, -1)
    second = second_divided_differences(s[ascending], M[ascending])
    min_second = float(second.min()) if second.size else 0.0
    convex = min_second >= -CONVEXITY_TOLERANCE * scale
    monotone = bool(np.all(np.diff(M) <= CONVEXITY_TOLERANCE * scale))

    secants = (M[0] - M[1:]) / (s[0] - s[1:])
    secants_ok = bool(np.all(np.diff(secants) <= SECANT_TOLERANCE * max(1.0, float(np.max(np.abs(secants))))))
    slopes = (M[:-1] - M[1:]) / (s[:-1] - s[1:])
    radii = np.asarray(model.radius_of_level(s[1:]), dtype=float)
    tail = _tail(slopes)
    fit = extrapolate_limit(radii[tail], slopes[tail])
    sigma = fit.limit if fit.converged else None
    if sigma is not None and sigma < 0.0:
        if sigma >= -NEGATIVE_SLACK * max(1.0, float(np.max(np.abs(slopes)))):
            sigma = 0.0
        else:
            logger.warning(f"⚠️ Relative type extrapolated to {sigma:.4g} < 0, treating as not converged")
            sigma = None
    if not convex:
        logger.warning(f"⚠️ Sublevel maxima fail convexity (min second difference {min_second:.3g})")

    return SlopeSeries(
        s_values=[float(v) for v in s],
        M_values=[float(v) for v in M],
        secants=[float(v) for v in secants],
        sigma_hat=sigma,
        convexity_ok=bool(convex),
        monotone_ok=monotone,
        secants_ok=secants_ok,
        fit=fit,
        min_second_difference=min_second,
        level_slopes=[float(v) for v in slopes],
    )


@dataclass
class LProbe:
    """Ratios F / psi_V approaching a point of V."""
    base_point: List[List[float]]
    approach_radii: List[float]
    ratios: List[float]
    running_minima: List[float]
    liminf_estimate: float
    extrapolated: bool
    fit: Optional[LimitFit] = None

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def default_probe_radii(model: FlatModel, count: int = 16) -> np.ndarray:
    return np.geomspace(1e-2 * model.tube_radius, 1e-8 * model.tube_radius, count)


def l_pointwise(
    F: ScalarField,
    model: FlatModel,
    z0: Sequence[complex],
    radii: Optional[Sequence[float]] = None,
    directions: int = 16,
    window: int = 4,
    seed: int = 0,
) -> LProbe:
    """
    liminf of F / psi_V at the point z0 of V.

    At each radius the ratio is minimized over a sample of normal directions;
    running minima over the last ``window`` radii are extrapolated in 1/|psi_V|.

    Args:
        F: Field
        model: Flat model
        z0: Torus coordinates of the base point
        radii: Decreasing approach radii (default 16 from 1e-2 to 1e-8 tube radii)
        directions: Normal directions per radius
        window: Running-minimum window
        seed: Seed of the direction sample

    Returns:
        LProbe
    """
    radii = np.asarray(default_probe_radii(model) if radii is None else radii, dtype=float)
    if radii.size < 8 or np.any(np.diff(radii) >= 0):
        raise ArgumentError("pointwise probes need at least 8 decreasing radii")
    z0 = np.asarray(z0, dtype=complex).reshape(-1)
    if z0.size != model.tangent_dim:
        raise ArgumentError(f"base point needs {model.tangent_dim} torus coordinates")

    dirs = sphere_directions(model.k, directions, seed)
    normal = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, model.k)
    tangent = np.tile(z0, (len(normal), 1))
    values = F.evaluate(np.hstack([normal, tangent])).reshape(len(radii), len(dirs))
    psi = np.asarray(model.psi_v(radii), dtype=float)
    ratios = np.min(values / psi[:, None], axis=1)

    running = np.array([ratios[max(0, i - window + 1): i + 1].min() for i in range(len(ratios))])
    x = 1.0 / np.abs(psi)
    tail = _tail(running)
    fit = extrapolate_limit(x[tail], running[tail])
    if fit.converged:
        estimate, extrapolated = fit.limit, True
    else:
        estimate, extrapolated = float(running[-window:].min()), False
    return LProbe(
        base_point=[[float(z.real), float(z.imag)] for z in z0],
        approach_radii=[float(r) for r in radii],
        ratios=[float(v) for v in ratios],
        running_minima=[float(v) for v in running],
        liminf_estimate=float(estimate),
        extrapolated=extrapolated,
        fit=fit,
    )


@dataclass
class MinRelationReport:
    grid_points: int
    min_L: float
    argmin: List[List[float]]
    sigma_hat: Optional[float]
    agreement: bool
    lower_bound_ok: bool
    L_values: List[float] = field(default_factory=list)


def min_relation_check(
    F: ScalarField,
    model: FlatModel,
    per_dim: int = 16,
    sigma_hat: Optional[float] = None,
    radii: Optional[Sequence[float]] = None,
    tolerance: float = 0.05,
    lower_tolerance: float = 0.01,
    threads: int = 1,
) -> MinRelationReport:
    """
    Compare min over a torus grid of L_psi(F) with the relative type.

    Returns:
        MinRelationReport with the agreement and lower-bound verdicts
    """
    if per_dim < 1:
        raise ArgumentError("torus grid needs at least one point per dimension")
    grid = torus_grid(model.torus_periods, per_dim)
    probes = parallel_map(lambda z0: l_pointwise(F, model, z0, radii), list(grid), threads)
    values = np.array([p.liminf_estimate for p in probes])
    if sigma_hat is None:
        sigma_hat = relative_type(F, model, threads=threads).sigma_hat
    best = int(np.argmin(values))
    min_L = float(values[best])
    if sigma_hat is None:
        agreement, lower_ok = False, False
    else:
        scale = max(1.0, abs(sigma_hat))
        agreement = abs(min_L - sigma_hat) <= tolerance * scale
        lower_ok = bool(np.all(values >= sigma_hat - lower_tolerance * scale))
    return MinRelationReport(
        grid_points=len(grid),
        min_L=min_L,
        argmin=[[float(z.real), float(z.imag)] for z in grid[best]],
        sigma_hat=sigma_hat,
        agreement=bool(agreement),
        lower_bound_ok=bool(lower_ok),
        L_values=[float(v) for v in values],
    )


@dataclass
class BoundComparison:
    sigma_hat: Optional[float]
    nu_hat: Optional[float]
    tolerance: float
    passed: bool


def compare_bounds(
    F: ScalarField,
    model: FlatModel,
    calib: Calibration,
    sigma_hat: Optional[float] = None,
    nu_hat: Optional[float] = None,
    tolerance: float = 0.02,
    params: Optional[TubeParams] = None,
    threads: int = 1,
) -> BoundComparison:
    """Check the relative type against the calibrated Lelong number: sigma <= nu + tol."""
    if sigma_hat is None:
        sigma_hat = relative_type(F, model, threads=threads).sigma_hat
    if nu_hat is None:
        nu_hat = lelong_number(lelong_series(F, model, calib=calib, params=params))
    passed = sigma_hat is not None and nu_hat is not None and sigma_hat <= nu_hat + tolerance
    return BoundComparison(sigma_hat, nu_hat, tolerance, bool(passed))


@dataclass
class SiuReport:
    """Constancy of L along V, or a located cone violation for a falsifier."""
    falsifier: bool
    passed: bool
    spread: Optional[float] = None
    mean_L: Optional[float] = None
    sigma_hat: Optional[float] = None
    L_table: List[Dict[str, object]] = field(default_factory=list)
    scan: Optional[ScanReport] = None

    def to_dict(self) -> Dict[str, object]:
        data = {k: v for k, v in asdict(self).items() if k != "scan"}
        data["scan"] = self.scan.to_dict() if self.scan is not None else None
        return data


def siu_levels(model: FlatModel) -> np.ndarray:
    """Levels reaching far below any bounded truncation used by the test fields."""
    radii = (model.tube_radius / 2.0) * 2.0 ** -np.arange(8, 42, 2, dtype=float)
    return np.asarray(model.psi_v(radii), dtype=float)


def siu_scan(
    F: ScalarField,
    model: FlatModel,
    per_dim: int = 16,
    radii: Optional[Sequence[float]] = None,
    tolerance: float = 0.03,
    scan_radii: Optional[Sequence[float]] = None,
    levels: Optional[Sequence[float]] = None,
    seed: int = 0,
    threads: int = 1,
) -> SiuReport:
    """
    Check that L_psi(F) is constant along V when k < m, or locate a violation.

    Scaled-log fields with nonconstant theta are falsifiers: the scan passes
    when gamma_m_scan finds a point outside Gamma^m. Other fields must pass the
    cone scan and show an L-spread within tolerance around their relative type.

    Returns:
        SiuReport
    """
    if model.k >= model.m:
        raise ArgumentError(f"constancy along V needs k < m, got k={model.k}, m={model.m}")
    if scan_radii is None:
        scan_radii = np.geomspace(1e-3 * model.tube_radius, 0.95 * model.tube_radius, 20)
    grid = scan_grid(model, scan_radii, seed=seed)
    scan = gamma_m_scan(F, model, grid, threads=threads)

    falsifier = isinstance(F, ScaledLogField) and not F.theta.is_constant
    if falsifier:
        found = not scan.passed
        if found:
            logger.info("✅ Falsifier located outside the cone")
        else:
            logger.error("❌ Falsifier not detected by the cone scan")
        return SiuReport(falsifier=True, passed=found, scan=scan)

    torus = torus_grid(model.torus_periods, per_dim)
    probes = parallel_map(lambda z0: l_pointwise(F, model, z0, radii, seed=seed), list(torus), threads)
    values = np.array([p.liminf_estimate for p in probes])
    sigma = relative_type(F, model, levels if levels is not None else siu_levels(model), threads=threads).sigma_hat
    spread = float(values.max() - values.min())
    mean = float(values.mean())
    scale = max(1.0, abs(sigma)) if sigma is not None else 1.0
    passed = (
        scan.passed
        and sigma is not None
        and spread <= tolerance * scale
        and abs(mean - sigma) <= tolerance * scale
    )
    if scan.passed and spread > tolerance * scale:
        logger.error(f"❌ L spread {spread:.4g} along V for an m-subharmonic field")
    table = [
        {"z0": p.base_point, "L": p.liminf_estimate, "extrapolated": p.extrapolated} for p in probes
    ]
    return SiuReport(False, bool(passed), spread, mean, sigma, table, scan)
