"""
Numerics Module

Shared numerical plumbing: geometric grids, deterministic parallel maps,
power-law fits, limit extrapolation, sampling of spheres and tori, and the
smooth radial cutoff used by localized weights.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Sequence, Tuple, TypeVar

import numpy as np
from scipy.optimize import least_squares

from .errors import ArgumentError

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """
    Map a function over items, optionally on a thread pool.

    Results are returned in input order, so any reduction done by the caller
    is independent of the thread count.

    Args:
        fn: Function applied to each item
        items: Items to process
        threads: Number of worker threads (1 runs inline)

    Returns:
        List of results in input order
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def geometric_grid(top: float, decades: float, per_decade: int) -> np.ndarray:
    """Ascending geometric grid ending at ``top`` and spanning ``decades`` decades."""
    if top <= 0 or decades <= 0 or per_decade < 1:
        raise ArgumentError("geometric grid needs top > 0, decades > 0, per_decade >= 1")
    count = int(round(decades * per_decade)) + 1
    return top * np.logspace(-decades, 0.0, count)


def halving_grid(top: float, count: int) -> np.ndarray:
    """Decreasing grid top, top/2, top/4, ..."""
    if count < 1 or top <= 0:
        raise ArgumentError("halving grid needs top > 0 and count >= 1")
    return top * 0.5 ** np.arange(count)


def second_divided_differences(x: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """Second divided differences of y over a non-uniform grid x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        return np.zeros(0)
    first = np.diff(y) / np.diff(x)
    return 2.0 * np.diff(first) / (x[2:] - x[:-2])


@dataclass
class PowerLawFit:
    """Least-squares fit of |y| = c * x**exponent on log-log axes."""
    exponent: float
    coefficient: float
    log_residual: float
    points: int


def fit_power_law(x: Sequence[float], y: Sequence[float]) -> PowerLawFit:
    """
    Fit a power law to strictly signed data.

    Args:
        x: Positive abscissae
        y: Data of constant sign

    Returns:
        PowerLawFit with the sign of y carried by the coefficient
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = (x > 0) & (y != 0) & np.isfinite(y)
    if mask.sum() < 2:
        return PowerLawFit(float("nan"), float("nan"), float("inf"), int(mask.sum()))
    lx = np.log(x[mask])
    ly = np.log(np.abs(y[mask]))
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    sign = float(np.sign(np.median(y[mask])))
    return PowerLawFit(float(slope), sign * math.exp(intercept), residual, int(mask.sum()))


def coefficient_at_exponent(x: Sequence[float], y: Sequence[float], exponent: float) -> float:
    """Geometric-mean estimate of c in y = c * x**exponent with the exponent held fixed."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = (x > 0) & (y != 0)
    if not mask.any():
        return 0.0
    sign = float(np.sign(np.median(y[mask])))
    return sign * float(np.exp(np.mean(np.log(np.abs(y[mask])) - exponent * np.log(x[mask]))))


@dataclass
class LimitFit:
    """Result of fitting y = limit + amplitude * x**rate (+ known corrections) as x -> 0."""
    limit: float
    amplitude: float
    rate: float
    residual: float
    converged: bool
    reason: str = ""
    residuals: List[float] = field(default_factory=list)
    known_rates: List[float] = field(default_factory=list)
    known_amplitudes: List[float] = field(default_factory=list)


_RATE_SCAN = np.geomspace(0.05, 8.0, 160)
_KNOWN_RATE_GAP = 0.1


def _linear_solve(
    x: np.ndarray, y: np.ndarray, rate: float, known: Sequence[float] = ()
) -> Tuple[np.ndarray, np.ndarray]:
    """Least squares on the columns [1, x**e for e in known, x**rate]; returns (coef, residual)."""
    columns = [np.ones_like(x)] + [x ** e for e in known] + [x ** rate]
    design = np.column_stack(columns)
    norms = np.max(np.abs(design), axis=0)
    norms[norms == 0] = 1.0
    coef, *_ = np.linalg.lstsq(design / norms, y, rcond=None)
    coef = coef / norms
    return coef, y - design @ coef


def _scan_rates(known: Sequence[float]) -> np.ndarray:
    if not known:
        return _RATE_SCAN
    gap = np.min(np.abs(_RATE_SCAN[:, None] - np.asarray(known)[None, :]), axis=1)
    return _RATE_SCAN[gap >= _KNOWN_RATE_GAP]


def extrapolate_limit(
    x: Sequence[float],
    y: Sequence[float],
    residual_threshold: float = 1e-3,
    flat_tolerance: float = 1e-10,
    known_rates: Sequence[float] = (),
) -> LimitFit:
    """
    Extrapolate the x -> 0 limit of a sequence with the model L + b*x**alpha.

    The rate alpha is free: it is located on a log-spaced scan with the linear
    parameters solved exactly, then polished by bounded least squares.

    When the correction exponents of the sequence are known in advance, pass
    them as ``known_rates``: each adds a term c_e * x**e to the model and the
    free rate is scanned away from them. The nonlinear polish is skipped in
    that case and the scan is refined locally instead.

    Args:
        x: Positive small parameters (any order)
        y: Sequence values
        residual_threshold: Maximum RMS residual relative to the data scale
        flat_tolerance: Spread below which the sequence is treated as constant
        known_rates: Positive correction exponents present in the sequence

    Returns:
        LimitFit; ``converged`` is False when the fit is not trustworthy
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 3:
        raise ArgumentError("limit extrapolation needs at least 3 matching points")
    if any(e <= 0 for e in known_rates):
        raise ArgumentError(f"known correction rates must be positive, got {list(known_rates)}")
    if np.any(x <= 0) or not np.all(np.isfinite(y)):
        return LimitFit(float("nan"), 0.0, 0.0, float("inf"), False, "non-finite input")

    scale = max(float(np.max(np.abs(y))), 1e-300)
    closest = int(np.argmin(x))
    if float(np.ptp(y)) <= flat_tolerance * max(scale, 1.0):
        return LimitFit(float(y[closest]), 0.0, float("inf"), 0.0, True, "flat")

    known = sorted({float(e) for e in known_rates})
    if len(known) > x.size - 4:
        logger.debug(f"Only {x.size} points, keeping the leading {max(x.size - 4, 0)} known rates")
        known = known[: max(x.size - 4, 0)]

    best = None
    for rate in _scan_rates(known):
        coef, res = _linear_solve(x, y, float(rate), known)
        cost = float(np.sum(res ** 2))
        if best is None or cost < best[0]:
            best = (cost, coef, float(rate))
    _, coef0, rate0 = best

    if known:
        for rate in np.linspace(rate0 / 1.03, rate0 * 1.03, 41):
            if min(abs(rate - e) for e in known) < _KNOWN_RATE_GAP:
                continue
            coef, res = _linear_solve(x, y, float(rate), known)
            cost = float(np.sum(res ** 2))
            if cost < best[0]:
                best = (cost, coef, float(rate))
        _, coef, rate = best
        limit, amplitude = float(coef[0]), float(coef[-1])
        _, res = _linear_solve(x, y, rate, known)
        residuals = -res / scale
    else:
        limit0, amplitude0 = float(coef0[0]), float(coef0[-1])

        def model_residual(params: np.ndarray) -> np.ndarray:
            return (params[0] + params[1] * x ** params[2] - y) / scale

        try:
            solution = least_squares(
                model_residual,
                x0=np.array([limit0, amplitude0, rate0]),
                bounds=([-np.inf, -np.inf, 1e-3], [np.inf, np.inf, 20.0]),
                xtol=1e-14,
                ftol=1e-14,
                gtol=1e-14,
            )
            limit, amplitude, rate = (float(v) for v in solution.x)
            residuals = solution.fun
        except (ValueError, FloatingPointError) as e:
            logger.debug(f"Polishing failed, keeping scan estimate: {e}")
            limit, amplitude, rate = limit0, amplitude0, rate0
            residuals = model_residual(np.array([limit, amplitude, rate]))
        coef = np.array([limit, amplitude])

    rms = float(np.sqrt(np.mean(residuals ** 2)))
    converged = rate > 0 and rms <= residual_threshold and math.isfinite(limit)
    reason = "" if converged else f"rate={rate:.3g}, residual={rms:.3g}"
    return LimitFit(
        limit,
        amplitude,
        rate,
        rms,
        converged,
        reason,
        [float(r) for r in residuals],
        known_rates=list(known),
        known_amplitudes=[float(c) for c in coef[1:-1]],
    )


def sphere_directions(k: int, count: int, seed: int = 0) -> np.ndarray:
    """
    Unit vectors on the sphere S^{2k-1} of C^k.

    The first direction is always the first coordinate axis; the rest are
    drawn from a seeded Gaussian stream.

    Returns:
        Complex array of shape (count, k)
    """
    if k < 1 or count < 1:
        raise ArgumentError("sphere sampling needs k >= 1 and count >= 1")
    rng = np.random.default_rng(seed)
    real = rng.standard_normal((count, 2 * k))
    real[0] = 0.0
    real[0, 0] = 1.0
    real /= np.linalg.norm(real, axis=1, keepdims=True)
    return real[:, :k] + 1j * real[:, k:]


def torus_grid(periods: Sequence[float], per_dim: int) -> np.ndarray:
    """
    Uniform grid on the flat torus (C / L Z[i])^{d}.

    Each complex coordinate contributes two real axes of period L.

    Returns:
        Complex array of shape (per_dim ** (2d), d); a single empty point when d = 0
    """
    periods = list(periods)
    if not periods:
        return np.zeros((1, 0), dtype=complex)
    axes = []
    for period in periods:
        ticks = period * np.arange(per_dim) / per_dim
        axes.extend([ticks, ticks])
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = [m.reshape(-1) for m in mesh]
    columns = [flat[2 * j] + 1j * flat[2 * j + 1] for j in range(len(periods))]
    return np.column_stack(columns)


def smootherstep_cutoff(r: np.ndarray, inner: float, outer: float) -> Tuple[np.ndarray, ...]:
    """
    Quintic cutoff equal to 1 for r <= inner and 0 for r >= outer.

    Returns:
        (chi, chi', chi'') as arrays shaped like r
    """
    r = np.asarray(r, dtype=float)
    width = outer - inner
    t = np.clip((r - inner) / width, 0.0, 1.0)
    step = t ** 3 * (10.0 - 15.0 * t + 6.0 * t ** 2)
    d1 = 30.0 * t ** 2 * (1.0 - t) ** 2
    d2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
    return 1.0 - step, -d1 / width, -d2 / width ** 2
