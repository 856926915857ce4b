"""
Measures Module

Tube integrals of mixed Hessian densities around V, the generalized Lelong
number as a scaled limit of those integrals, its calibration, the sublevel
series over {psi_V < level} with its reweighting, and polar densities of
localized weights along V.
"""

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from .errors import ArgumentError, CalibrationError
from .fields import RadialField, ScalarField, adapted_diagonal, hessian_traces
from .garding import mixed_sigma_diag
from .numerics import LimitFit, extrapolate_limit, halving_grid, parallel_map, torus_grid
from .profiles import FlatModel, eval_weight, profile_arrays

logger = logging.getLogger(__name__)

METHODS = ("radial-quadrature", "flux", "monte-carlo", "shell-quadrature")

# Relative depth below which tube integrals are truncated.
INNER_DEPTH = 1e-12
MONOTONE_TOLERANCE = 1e-9

Patch = Tuple[Sequence[float], Sequence[float]]


def sphere_area(k: int) -> float:
    """Area of the unit sphere S^{2k-1} in C^k."""
    return 2.0 * math.pi ** k / math.gamma(k)


def exponent_gap(model: FlatModel) -> float:
    """2k - 2k/m: the power of s by which tube integrals are scaled."""
    return 2.0 * model.k - 2.0 * model.k / model.m


def point_density(F: ScalarField, model: FlatModel, points: np.ndarray) -> np.ndarray:
    """C(k-1, m-1) tr_{z'} H + C(k, m-1) tr_{z''} H at each point."""
    k, m = model.k, model.m
    tr_normal, tr_tangent = hessian_traces(F, points)
    return math.comb(k - 1, m - 1) * tr_normal + math.comb(k, m - 1) * tr_tangent


@dataclass
class TubeParams:
    """Numerical parameters of tube integrals."""
    samples_per_stratum: int = 4096
    strata: int = 8
    seed: int = 20240601
    mc_depth: float = 1e-6
    mc_warning: float = 0.05
    torus_per_dim: int = 32
    patch_nodes: int = 16
    epsrel: float = 1e-10
    threads: int = 1


@dataclass
class TubeIntegral:
    value: float
    standard_error: float = 0.0
    warning: bool = False
    method: str = ""


class TorusAverager:
    """Quadrature nodes on the torus or on a patch of it, with weights summing to 1."""

    def __init__(self, model: FlatModel, params: TubeParams, patch: Optional[Patch] = None):
        self.model = model
        d = model.tangent_dim
        if patch is None:
            per_dim = max(2, min(params.torus_per_dim, int(4096 ** (1.0 / (2 * d))))) if d else 1
            self.nodes = torus_grid(model.torus_periods, per_dim)
            self.weights = np.full(len(self.nodes), 1.0 / len(self.nodes))
            self.area = model.v_volume
        else:
            lower, upper = (np.asarray(b, dtype=float) for b in patch)
            if lower.shape != (2 * d,) or upper.shape != lower.shape or np.any(upper <= lower):
                raise ArgumentError(f"patch needs {2 * d} increasing real bounds")
            x, w = np.polynomial.legendre.leggauss(params.patch_nodes)
            axes = [0.5 * (b - a) * x + 0.5 * (b + a) for a, b in zip(lower, upper)]
            weights = [0.5 * w for _ in axes]
            mesh = np.meshgrid(*axes, indexing="ij")
            wmesh = np.meshgrid(*weights, indexing="ij")
            coords = np.column_stack([g.reshape(-1) for g in mesh])
            self.weights = np.prod(np.column_stack([g.reshape(-1) for g in wmesh]), axis=1)
            self.nodes = coords[:, 0::2] + 1j * coords[:, 1::2]
            self.area = float(np.prod(upper - lower))

    def points(self, r: float) -> np.ndarray:
        normal = np.zeros((len(self.nodes), self.model.k), dtype=complex)
        normal[:, 0] = r
        return np.hstack([normal, self.nodes])

    def average(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def _log_radial_integral(
    integrand: Callable[[float], float], lo: float, hi: float, k: int, epsrel: float
) -> float:
    """int_lo^hi integrand(r) r^(2k-1) dr, computed in t = log r."""
    if hi <= lo:
        return 0.0
    value, _ = quad(
        lambda t: integrand(math.exp(t)) * math.exp(2 * k * t),
        math.log(lo), math.log(hi), epsabs=0.0, epsrel=epsrel, limit=200,
    )
    return value


def _radial_quadrature(F: ScalarField, model: FlatModel, s: float, params: TubeParams) -> float:
    if not F.is_radial:
        raise ArgumentError("radial-quadrature needs a radial field")
    base = np.zeros((1, model.n), dtype=complex)

    def density(r: float) -> float:
        base[0, 0] = r
        return float(point_density(F, model, base)[0])

    total = _log_radial_integral(density, s * INNER_DEPTH, s, model.k, params.epsrel)
    return sphere_area(model.k) * model.v_volume * total


def _flux(F: ScalarField, model: FlatModel, s: float, averager: TorusAverager) -> float:
    """Quarter of the outward normal derivative integrated over {r = s}."""
    pts = averager.points(s)
    r, z_t = F.split(pts)
    slope = np.zeros(len(pts))
    for term in F.terms():
        slope = slope + term.coefficient * term.modulation(z_t) * term.radial(r).d1
    return 0.25 * sphere_area(model.k) * s ** (2 * model.k - 1) * averager.area * averager.average(slope)


def _shell_quadrature(
    F: ScalarField,
    model: FlatModel,
    lo: float,
    hi: float,
    averager: TorusAverager,
    params: TubeParams,
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> float:
    density = density or (lambda pts: point_density(F, model, pts))
    total = _log_radial_integral(
        lambda r: averager.average(density(averager.points(r))), lo, hi, model.k, params.epsrel
    )
    return sphere_area(model.k) * averager.area * total


def _tangent_trace_density(F: ScalarField, model: FlatModel) -> Callable[[np.ndarray], np.ndarray]:
    k, m = model.k, model.m
    return lambda pts: math.comb(k, m - 1) * hessian_traces(F, pts)[1]


def _monte_carlo(F: ScalarField, model: FlatModel, s: float, params: TubeParams) -> TubeIntegral:
    k = model.k
    edges = s * np.geomspace(params.mc_depth, 1.0, params.strata + 1)
    children = np.random.SeedSequence(params.seed).spawn(params.strata)
    periods = np.asarray(model.torus_periods)

    def stratum(i: int) -> Tuple[float, float]:
        rng = np.random.default_rng(children[i])
        a, b = edges[i], edges[i + 1]
        n = params.samples_per_stratum
        u = rng.random(n)
        r = (a ** (2 * k) + u * (b ** (2 * k) - a ** (2 * k))) ** (1.0 / (2 * k))
        g = rng.standard_normal((n, 2 * k))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        normal = r[:, None] * (g[:, :k] + 1j * g[:, k:])
        if periods.size:
            x = rng.random((n, periods.size)) * periods
            y = rng.random((n, periods.size)) * periods
            tangent = x + 1j * y
        else:
            tangent = np.zeros((n, 0), dtype=complex)
        values = point_density(F, model, np.hstack([normal, tangent]))
        volume = sphere_area(k) * (b ** (2 * k) - a ** (2 * k)) / (2 * k) * model.v_volume
        return volume * float(values.mean()), volume ** 2 * float(values.var(ddof=1)) / n

    parts = parallel_map(stratum, range(params.strata), params.threads)
    value = float(sum(p[0] for p in parts))
    error = math.sqrt(sum(p[1] for p in parts))
    warning = error > params.mc_warning * max(abs(value), 1e-300)
    if warning:
        logger.warning(f"⚠️ Monte-carlo standard error {error:.3g} is large for value {value:.3g}")
    return TubeIntegral(value, error, warning, "monte-carlo")


def tube_integral(
    F: ScalarField,
    model: FlatModel,
    s: float,
    method: str = "radial-quadrature",
    params: Optional[TubeParams] = None,
    patch: Optional[Patch] = None,
) -> TubeIntegral:
    """
    Integral of the mixed density of F over the tube {r < s}.

    Args:
        F: Field
        model: Flat model
        s: Tube radius, at most the model's tube radius
        method: radial-quadrature, flux (m = 1), monte-carlo or shell-quadrature
        params: Numerical parameters
        patch: Optional box of real torus coordinates restricting the integral

    Returns:
        TubeIntegral (with a standard error for monte-carlo)
    """
    params = params or TubeParams()
    if method not in METHODS:
        raise ArgumentError(f"unknown tube integral method {method!r}")
    if not 0 < s <= model.tube_radius:
        raise ArgumentError(f"tube radius s={s} outside (0, {model.tube_radius}]")
    if patch is not None and method not in ("shell-quadrature", "flux"):
        raise ArgumentError(f"{method} does not support torus patches")

    if method == "radial-quadrature":
        return TubeIntegral(_radial_quadrature(F, model, s, params), method=method)
    if method == "flux":
        if model.m != 1:
            raise ArgumentError("flux integrals need m = 1")
        averager = TorusAverager(model, params, patch)
        value = _flux(F, model, s, averager)
        if patch is not None:
            value += _shell_quadrature(
                F, model, s * INNER_DEPTH, s, averager, params, _tangent_trace_density(F, model)
            )
        return TubeIntegral(value, method=method)
    if method == "monte-carlo":
        if model.m == 1:
            raise ArgumentError("monte-carlo misses the mass on V when m = 1; use flux")
        return _monte_carlo(F, model, s, params)
    averager = TorusAverager(model, params, patch)
    return TubeIntegral(
        _shell_quadrature(F, model, s * INNER_DEPTH, s, averager, params), method=method
    )


@dataclass
class Calibration:
    """Normalization constants making psi_V carry unit mass."""
    k: int
    m: int
    C_km: float
    V_volume: float
    C_def: float = 1.0
    raw_limit: float = 0.0
    closed_form: float = 0.0
    method: str = ""


@dataclass(frozen=True)
class ReweightMap:
    """H_m with H_m(psi_V) = r^2: (-t)^(-m/(k-m)) when m < k, e^(2t) when m = k."""
    k: int
    m: int

    def __post_init__(self):
        if self.m > self.k:
            raise ArgumentError(f"reweighting needs m <= k, got k={self.k}, m={self.m}")

    @property
    def exponent(self) -> float:
        return -self.m / (self.k - self.m)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.k == self.m:
            return np.exp(2.0 * t)
        return (-t) ** self.exponent

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.k == self.m:
            return 2.0 * np.exp(2.0 * t)
        return -self.exponent * (-t) ** (self.exponent - 1.0)

    def second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.k == self.m:
            return 4.0 * np.exp(2.0 * t)
        return self.exponent * (self.exponent - 1.0) * (-t) ** (self.exponent - 2.0)

    def is_convex_increasing(self, levels: Sequence[float]) -> bool:
        return bool(
            np.all(self.derivative(levels) > 0) and np.all(self.second_derivative(levels) > 0)
        )


@dataclass
class TubeSeries:
    """Tube integrals along a decreasing sequence of radii and their scaled limit."""
    s_values: List[float]
    raw_integrals: List[float]
    scaled_values: List[float]
    method: str
    fit: Optional[LimitFit] = None
    monotone: bool = True
    standard_errors: List[float] = field(default_factory=list)
    warnings: List[bool] = field(default_factory=list)
    levels: List[float] = field(default_factory=list)
    reweighted: List[float] = field(default_factory=list)
    stokes_gap: float = 0.0

    @property
    def extrapolated_limit(self) -> Optional[float]:
        if self.fit is None or not self.fit.converged:
            return None
        return self.fit.limit

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        data["extrapolated_limit"] = self.extrapolated_limit
        return data

    def to_csv(self, path: Path) -> None:
        residuals = self.fit.residuals if self.fit and len(self.fit.residuals) == len(self.s_values) else []
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["s", "raw", "scaled", "fit_residual"])
            for i, (s, raw, scaled) in enumerate(zip(self.s_values, self.raw_integrals, self.scaled_values)):
                writer.writerow([repr(s), repr(raw), repr(scaled), repr(residuals[i]) if residuals else ""])


def default_s_grid(model: FlatModel, count: int = 10) -> np.ndarray:
    return halving_grid(model.tube_radius / 2.0, count)


def _check_grid(s_grid: Sequence[float], model: FlatModel) -> np.ndarray:
    s = np.asarray(s_grid, dtype=float)
    if s.size < 6:
        raise ArgumentError(f"series need at least 6 radii, got {s.size}")
    ratios = s[1:] / s[:-1]
    if np.any(ratios > 0.5 + 1e-12):
        raise ArgumentError("series radii must decrease by at least a factor of 2 per step")
    if s[0] > model.tube_radius:
        raise ArgumentError(f"largest radius {s[0]} exceeds the tube radius")
    return s


def default_method(F: ScalarField, model: FlatModel) -> str:
    if model.m == 1:
        return "flux"
    return "radial-quadrature" if F.is_radial else "shell-quadrature"


def lelong_series(
    F: ScalarField,
    model: FlatModel,
    s_grid: Optional[Sequence[float]] = None,
    method: Optional[str] = None,
    calib: Optional[Calibration] = None,
    params: Optional[TubeParams] = None,
    patch: Optional[Patch] = None,
) -> TubeSeries:
    """
    Scaled tube integrals raw * C_km / s^(2k - 2k/m) along s_grid with their extrapolated limit.

    Args:
        F: Field
        model: Flat model with m <= k
        s_grid: Decreasing radii (default tube_radius/2 halved 10 times)
        method: Tube integral method (default flux for m = 1, quadrature otherwise)
        calib: Calibration (C_km = 1 when omitted)
        params: Numerical parameters
        patch: Optional torus patch

    Returns:
        TubeSeries with the fitted limit
    """
    if model.m > model.k:
        raise ArgumentError("Lelong series need m <= k")
    params = params or TubeParams()
    s = _check_grid(default_s_grid(model) if s_grid is None else s_grid, model)
    method = method or default_method(F, model)
    c_km = calib.C_km if calib else 1.0

    results = parallel_map(
        lambda radius: tube_integral(F, model, float(radius), method, params, patch),
        s,
        1 if method == "monte-carlo" else params.threads,
    )
    raw = np.array([r.value for r in results])
    scaled = raw * c_km / s ** exponent_gap(model)
    fit = extrapolate_limit(s, scaled, known_rates=F.correction_rates())
    series = TubeSeries(
        s_values=[float(x) for x in s],
        raw_integrals=[float(x) for x in raw],
        scaled_values=[float(x) for x in scaled],
        method=method,
        fit=fit,
        monotone=bool(np.all(np.diff(raw) <= MONOTONE_TOLERANCE * np.abs(raw[:-1]))),
        standard_errors=[r.standard_error * c_km / x ** exponent_gap(model) for r, x in zip(results, s)],
        warnings=[r.warning for r in results],
    )
    logger.debug(f"Lelong series ({method}): limit {fit.limit:.6g}, converged={fit.converged}")
    return series


def lelong_number(ts: TubeSeries, tolerance: float = 1e-3) -> Optional[float]:
    """The extrapolated limit, or None when the fit failed or the limit is negative."""
    limit = ts.extrapolated_limit
    if limit is None:
        logger.warning(f"⚠️ Lelong extrapolation did not converge: {ts.fit.reason if ts.fit else ''}")
        return None
    if limit < -tolerance:
        logger.warning(f"⚠️ Negative Lelong estimate {limit:.4g} rejected")
        return None
    return limit


def closed_form_raw_limit(model: FlatModel) -> float:
    """C(k-1, m-1)/4 * |S^{2k-1}| * Vol(V) * (2k/m - 2, or 1 when m = k)."""
    k, m = model.k, model.m
    q = k / m
    factor = 1.0 if k == m else 2.0 * q - 2.0
    return math.comb(k - 1, m - 1) / 4.0 * sphere_area(k) * model.v_volume * factor


def _sublevel_factor(model: FlatModel) -> float:
    """b_t(rho)^(m-1) * rho^(2k - 2k/m) for psi_V; independent of rho."""
    d1 = eval_weight(model.reference_weight(), 1.0).d1
    return (d1 / 2.0) ** (model.m - 1)


class CalibrationCache:
    """JSON file of calibrations keyed by the model geometry."""

    def __init__(self, path: Path):
        self.path = Path(path)

    def _load(self) -> Dict[str, Dict[str, object]]:
        if not self.path.exists():
            return {}
        try:
            with open(self.path) as handle:
                return json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            logger.warning(f"⚠️ Ignoring unreadable calibration cache {self.path}: {e}")
            return {}

    @staticmethod
    def key(model: FlatModel) -> str:
        return json.dumps(model.key(), sort_keys=True)

    def get(self, model: FlatModel) -> Optional[Calibration]:
        entry = self._load().get(self.key(model))
        return Calibration(**entry) if entry else None

    def put(self, model: FlatModel, calib: Calibration) -> None:
        data = self._load()
        data[self.key(model)] = asdict(calib)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w") as handle:
            json.dump(data, handle, indent=2, sort_keys=True)


def calibrate(
    model: FlatModel,
    params: Optional[TubeParams] = None,
    cache: Optional[CalibrationCache] = None,
) -> Calibration:
    """
    Fix C_km so that psi_V has Lelong number 1.

    The raw limit is measured by flux (m = 1) or radial quadrature and
    compared with its closed form.

    Raises:
        CalibrationError: if the measured raw limit is not positive
    """
    if model.m > model.k:
        raise ArgumentError("calibration needs m <= k")
    if cache is not None:
        cached = cache.get(model)
        if cached is not None:
            logger.debug(f"📋 Calibration for {model.key()} loaded from cache")
            return cached

    params = params or TubeParams()
    psi = RadialField(model.reference_weight(), model.k)
    method = "flux" if model.m == 1 else "radial-quadrature"
    radii = default_s_grid(model, 3)
    values = [
        tube_integral(psi, model, float(s), method, params).value / s ** exponent_gap(model)
        for s in radii
    ]
    limit = float(np.mean(values))
    if not limit > 0 or not math.isfinite(limit):
        raise CalibrationError(f"degenerate raw limit {limit} for psi_V")
    closed = closed_form_raw_limit(model)
    if abs(limit - closed) > 1e-6 * closed:
        logger.warning(f"⚠️ Calibration {limit:.10g} differs from closed form {closed:.10g}")

    calib = Calibration(
        k=model.k,
        m=model.m,
        C_km=1.0 / limit,
        V_volume=model.v_volume,
        C_def=1.0 / (limit * _sublevel_factor(model)),
        raw_limit=limit,
        closed_form=closed,
        method=method,
    )
    if cache is not None:
        cache.put(model, calib)
    logger.info(f"✅ Calibrated k={model.k} m={model.m}: C_km={calib.C_km:.6g}")
    return calib


def _psi_diagonal(model: FlatModel, r: float) -> np.ndarray:
    lam_rad, lam_tan = profile_arrays(eval_weight(model.reference_weight(), r), r)
    b = np.zeros(model.n)
    b[0] = float(lam_rad)
    b[1:model.k] = float(lam_tan)
    return b


def _boundary_form(F: ScalarField, model: FlatModel, rho: float, averager: TorusAverager) -> float:
    """Stokes form of the sublevel integral, Vol |S| C(k-1,m-1)/2 rho^2k a_t b_t^(m-1)."""
    pts = averager.points(rho)
    r, z_t = F.split(pts)
    slope = np.zeros(len(pts))
    for term in F.terms():
        slope = slope + term.coefficient * term.modulation(z_t) * term.radial(r).d1
    a_t = averager.average(slope) / (2.0 * rho)
    b_t = eval_weight(model.reference_weight(), rho).d1 / (2.0 * rho)
    k, m = model.k, model.m
    return (
        averager.area * sphere_area(k) * math.comb(k - 1, m - 1) / 2.0
        * rho ** (2 * k) * a_t * b_t ** (m - 1)
    )


def sublevel_series(
    F: ScalarField,
    model: FlatModel,
    s_grid: Optional[Sequence[float]] = None,
    calib: Optional[Calibration] = None,
    params: Optional[TubeParams] = None,
) -> TubeSeries:
    """
    Integrals of ddc F ^ (ddc psi_V)^(m-1) ^ omega^(n-m) over {psi_V < psi_V(s)}.

    The deepest value is the Stokes boundary form, which includes the mass on V;
    each shallower value adds the adapted-frame mixed density over one shell.
    The reweighted column multiplies by H_m'(level)^(m-1) and rescales like the
    tube series, so it tends to the same limit.

    Args:
        F: Radial or localized field
        model: Flat model with m <= k
        s_grid: Decreasing radii of the sublevel sets
        calib: Calibration (unit constants when omitted)
        params: Numerical parameters

    Returns:
        TubeSeries with levels, reweighted values and the Stokes cross-check gap
    """
    if model.m > model.k:
        raise ArgumentError("sublevel series need m <= k")
    params = params or TubeParams()
    s = _check_grid(default_s_grid(model) if s_grid is None else s_grid, model)
    averager = TorusAverager(model, params)
    k, m, n = model.k, model.m, model.n

    def mixed(pts: np.ndarray) -> np.ndarray:
        r = abs(pts[0, 0])
        return mixed_sigma_diag(adapted_diagonal(F, pts, n), _psi_diagonal(model, r), m)

    shells = parallel_map(
        lambda i: _shell_quadrature(F, model, s[i + 1], s[i], averager, params, mixed),
        range(len(s) - 1),
        params.threads,
    )
    raw = np.zeros(len(s))
    raw[-1] = _boundary_form(F, model, float(s[-1]), averager)
    for i in range(len(s) - 2, -1, -1):
        raw[i] = raw[i + 1] + shells[i]
    boundary = np.array([_boundary_form(F, model, float(x), averager) for x in s])
    gap = float(np.max(np.abs(raw - boundary)) / max(np.max(np.abs(boundary)), 1e-300))

    hmap = ReweightMap(k, m)
    levels = np.asarray(model.psi_v(s), dtype=float)
    c_km = calib.C_km if calib else 1.0
    c_def = calib.C_def if calib else 1.0
    reweighted = raw * hmap.derivative(levels) ** (m - 1) * c_km / s ** exponent_gap(model)
    normalized = raw * c_def
    monotone = bool(np.all(np.diff(raw) <= MONOTONE_TOLERANCE * np.abs(raw[:-1])))
    if not monotone:
        logger.warning("⚠️ Sublevel series is not monotone decreasing")
    return TubeSeries(
        s_values=[float(x) for x in s],
        raw_integrals=[float(x) for x in raw],
        scaled_values=[float(x) for x in normalized],
        method="sublevel",
        fit=extrapolate_limit(s, normalized, known_rates=F.correction_rates()),
        monotone=monotone,
        levels=[float(x) for x in levels],
        reweighted=[float(x) for x in reweighted],
        stokes_gap=gap,
    )


@dataclass
class PolarDensity:
    value: float
    patch_area: float
    series: TubeSeries
    extrapolated: bool = True


def polar_density(
    F: ScalarField,
    model: FlatModel,
    patch: Patch,
    s_grid: Optional[Sequence[float]] = None,
    calib: Optional[Calibration] = None,
    params: Optional[TubeParams] = None,
) -> PolarDensity:
    """
    Density along V of the Lelong measure of F, averaged over a torus patch.

    The tube mass is restricted to the patch before scaling. When the limit
    cannot be extrapolated, the deepest scaled value stands in for it and
    ``extrapolated`` is False.

    Returns:
        PolarDensity whose value compares with the patch mean of theta
    """
    method = "flux" if model.m == 1 else "shell-quadrature"
    series = lelong_series(F, model, s_grid, method, calib, params, patch)
    lower, upper = (np.asarray(b, dtype=float) for b in patch)
    area = float(np.prod(upper - lower))
    limit = lelong_number(series)
    extrapolated = limit is not None
    if limit is None:
        deepest = int(np.argmin(series.s_values))
        limit = series.scaled_values[deepest]
        logger.warning(
            f"⚠️ Polar density falls back to the restricted tube mass at s={series.s_values[deepest]:.3g}"
        )
    return PolarDensity(limit * model.v_volume / area, area, series, extrapolated)
