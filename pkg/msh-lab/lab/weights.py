"""
Weights Module

Construction and certification of the radial weight families: perturbed
sub- and superweights of the extremal pole G_m, the expansion constants of
their scaled Hessian, the maximal radial profile and its ODE, and the
harmonic weight along linear real submanifolds.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ArgumentError, ConstraintError, ConstructionError
from .garding import DEFAULT_CONE_TOLERANCE, EigenProfile, sigma_profile
from .numerics import (
    PowerLawFit,
    coefficient_at_exponent,
    fit_power_law,
    geometric_grid,
)
from .profiles import (
    DerivTriple,
    FlatModel,
    Real,
    WeightFamily,
    WeightKind,
    admissible_delta_bound,
    eval_weight,
    perturbation,
    profile_arrays,
)

logger = logging.getLogger(__name__)

# Unitary-frame Hessians are twice the coordinate ones in every slot.
FRAME_FACTOR = 2.0

# Residuals below this level are floating-point noise and are not fitted.
RESIDUAL_NOISE_FLOOR = 1e-13


@dataclass(frozen=True)
class ExpansionConstants:
    """Constants of the small-r expansion of the scaled subweight Hessian."""
    D_km: float
    B1: float
    B2: float
    B3: float


def _check_delta(k: int, m: int, delta: float) -> None:
    bound = admissible_delta_bound(k, m)
    if delta <= bound:
        raise ConstraintError(f"delta={delta} must exceed max{{1, 2(k/m-1)}}={bound:.6g}")


def expansion_constants(k: int, m: int, delta: float) -> ExpansionConstants:
    """
    Direct formulas for D_km, B1, B2 and B3.

    Args:
        k: Codimension
        m: Hessian order, m <= k
        delta: Perturbation exponent, delta > max{1, 2(k/m - 1)}

    Returns:
        ExpansionConstants
    """
    if not 1 <= m <= k:
        raise ArgumentError(f"expansion constants need 1 <= m <= k, got k={k}, m={m}")
    _check_delta(k, m, delta)
    q = k / m
    d_km = 1.0 if k == m else 1.0 / (2.0 * q - 2.0)
    b1 = 2.0 * (1.0 - q + (1.0 - q) * delta + delta ** 2 / 4.0)
    b2 = 2.0 + delta
    b3 = 2.0 * (q + delta * (q - 0.5) - delta ** 2 / 4.0)
    return ExpansionConstants(d_km, b1, b2, b3)


def sigma_m_leading(k: int, m: int, delta: float) -> float:
    """Coefficient delta*(delta/2 - (k/m - 1)) of r^delta in the normalized scaled sigma_m."""
    if m > k:
        raise ArgumentError(f"leading coefficient needs m <= k, got k={k}, m={m}")
    return delta * (delta / 2.0 - (k / m - 1.0))


def scale_factor(w: WeightFamily, r: Real) -> np.ndarray:
    """FRAME_FACTOR * D_km * h(r_eps)^(2k/m), the normalization of the Hessian profile."""
    q = w.k / w.m
    d_km = 1.0 if w.k == w.m else 1.0 / (2.0 * q - 2.0)
    s = np.sqrt(np.asarray(r, dtype=float) ** 2 + w.epsilon)
    h, _, _ = perturbation(w, s)
    return FRAME_FACTOR * d_km * h ** (2.0 * q) / w.gamma


def scaled_profile(w: WeightFamily, r: Real) -> Tuple[np.ndarray, np.ndarray]:
    """Scaled (radial, tangential) slots from the exact derivatives of G_m(h(r_eps))."""
    r = np.asarray(r, dtype=float)
    lam_rad, lam_tan = profile_arrays(eval_weight(w, r), r)
    factor = scale_factor(w, r)
    return factor * lam_rad, factor * lam_tan


def scaled_profile_stable(w: WeightFamily, r: Real) -> Tuple[np.ndarray, ...]:
    """
    Scaled slots in closed form, with the maximality defect free of cancellation.

    The defect is lambda_rad + (k/m - 1) * lambda_tan, which is identically zero
    for the unperturbed pole; it is assembled from terms proportional to
    u = A * r_eps^delta so that it stays accurate at tiny radii.

    Returns:
        (radial slot, tangential slot, defect)
    """
    r = np.asarray(r, dtype=float)
    q = w.k / w.m
    s = np.sqrt(r ** 2 + w.epsilon)
    e = w.epsilon / s ** 2
    d = w.delta
    u = w.A * s ** d if w.A != 0.0 else np.zeros_like(s)

    hh2 = d * (1.0 + d) * u * (1.0 + u)
    d_tan = (2.0 + d) * u + (1.0 + d) * u ** 2
    h1_sq_minus_one = (1.0 + d) * u * (2.0 + (1.0 + d) * u)
    d_rad = 0.5 * ((1.0 - e) * ((1.0 - 2.0 * q) * h1_sq_minus_one + hh2) + (1.0 + e) * d_tan)

    rad = (1.0 - q) + e * q + d_rad
    tan = 1.0 + d_tan
    defect = e * q + d_rad + (q - 1.0) * d_tan
    return rad, tan, defect


def _profile_sigma(rad: np.ndarray, tan: np.ndarray, k: int, j: int) -> np.ndarray:
    return rad * math.comb(k - 1, j - 1) * tan ** (j - 1) + math.comb(k - 1, j) * tan ** j


def scaled_sigmas(w: WeightFamily, r: Real) -> np.ndarray:
    """
    sigma_1..sigma_m of the scaled profile; sigma_m uses the stable defect.

    Returns:
        Array of shape (len(r), m)
    """
    rad, tan, defect = scaled_profile_stable(w, np.atleast_1d(r))
    columns = [_profile_sigma(rad, tan, w.k, j) for j in range(1, w.m)]
    columns.append(math.comb(w.k - 1, w.m - 1) * tan ** (w.m - 1) * defect)
    return np.column_stack(columns)


@dataclass
class Certificate:
    """Grid evidence behind a certified radius."""
    radii: List[float]
    margins: List[List[float]]
    sigma_m: List[float]
    sigma_m_sign: int
    fit_window: Tuple[float, float]
    fit: Optional[PowerLawFit]
    normalized_coefficient: float
    expected_coefficient: float


@dataclass
class CertifiedWeight:
    """A sub- or superweight together with the radius on which it is certified."""
    family: WeightFamily
    certified_radius: float
    certificate: Certificate

    def derivs(self, r: Real) -> DerivTriple:
        return eval_weight(self.family, r)

    def to_dict(self) -> Dict[str, object]:
        cert = asdict(self.certificate)
        return {
            "family": self.family.to_dict(),
            "certified_radius": self.certified_radius,
            "certificate": cert,
        }


def _middle_decade(radii: np.ndarray) -> np.ndarray:
    span = math.log10(radii[-1] / radii[0])
    if span <= 1.0:
        return np.ones_like(radii, dtype=bool)
    lo = radii[0] * 10 ** ((span - 1.0) / 2.0)
    hi = lo * 10.0
    return (radii >= lo * (1 - 1e-12)) & (radii <= hi * (1 + 1e-12))


def make_weight(
    kind: WeightKind,
    k: int,
    m: int,
    delta: float,
    epsilon: float,
    model: FlatModel,
    per_decade: int = 64,
    decades: int = 3,
    tolerance: float = DEFAULT_CONE_TOLERANCE,
) -> CertifiedWeight:
    """
    Build a perturbed weight and certify the largest radius where its sign conditions hold.

    Subweights must stay in Gamma^m; superweights need sigma_m < 0 with
    sigma_j > 0 for j < m. The grid is geometric below tube_radius/2.

    Args:
        kind: g-sub or g-super
        k: Codimension
        m: Hessian order
        delta: Perturbation exponent
        epsilon: Regularization (must be 0 for superweights)
        model: Flat model providing the tube radius
        per_decade: Grid density
        decades: Number of decades below tube_radius/2
        tolerance: Tolerance on normalized sigma_j

    Returns:
        CertifiedWeight with its grid certificate
    """
    kind = WeightKind(kind)
    if kind not in (WeightKind.G_SUB, WeightKind.G_SUPER):
        raise ArgumentError(f"make_weight builds g-sub or g-super, got {kind.value}")
    if m > k:
        raise ArgumentError(f"weights need m <= k, got k={k}, m={m}")
    if kind == WeightKind.G_SUPER and epsilon != 0.0:
        raise ArgumentError("superweights are built without regularization (epsilon = 0)")
    family = WeightFamily(kind=kind, k=k, m=m, delta=delta, epsilon=epsilon)
    logger.debug(f"🔍 Certifying {kind.value} k={k} m={m} delta={delta} eps={epsilon}")

    radii = geometric_grid(model.tube_radius / 2.0, decades, per_decade)
    sigmas = scaled_sigmas(family, radii)
    rad, tan, _ = scaled_profile_stable(family, radii)
    scale = np.maximum(np.abs(rad), np.abs(tan))
    powers = np.arange(1, m + 1)
    margins = sigmas / scale[:, None] ** powers[None, :]

    if kind == WeightKind.G_SUB:
        ok = np.all(margins >= -tolerance, axis=1)
    else:
        # sigma_m carries no cancellation, so its sign is exact down to tiny radii
        ok = margins[:, m - 1] < 0.0
        if m > 1:
            ok &= np.all(margins[:, : m - 1] > tolerance, axis=1)

    failures = np.flatnonzero(~ok)
    cutoff = int(failures[0]) if failures.size else radii.size
    if cutoff == 0:
        raise ConstructionError(
            f"{kind.value} k={k} m={m} delta={delta}: sign conditions fail at every radius"
        )
    certified = radii[:cutoff]
    window = _middle_decade(certified)
    sig_m = sigmas[:cutoff, m - 1]
    fit = fit_power_law(certified[window], sig_m[window]) if window.sum() >= 2 else None
    coefficient = coefficient_at_exponent(certified[window], sig_m[window], delta)
    normalized = coefficient / math.comb(k - 1, m - 1)
    sign = int(np.sign(np.median(sig_m))) if sig_m.size else 0

    certificate = Certificate(
        radii=[float(x) for x in certified],
        margins=[[float(v) for v in row] for row in margins[:cutoff]],
        sigma_m=[float(v) for v in sig_m],
        sigma_m_sign=sign,
        fit_window=(float(certified[window][0]), float(certified[window][-1])),
        fit=fit,
        normalized_coefficient=float(normalized),
        expected_coefficient=sigma_m_leading(k, m, delta) * (1.0 if kind == WeightKind.G_SUB else -1.0),
    )
    logger.info(
        f"✅ Certified {kind.value} (k={k}, m={m}, delta={delta}) up to r={certified[-1]:.4g}"
    )
    return CertifiedWeight(family, float(certified[-1]), certificate)


@dataclass
class ExpansionReport:
    """Residual of the exact scaled profile against its r^delta expansion."""
    k: int
    m: int
    delta: float
    epsilon: float
    A: float
    radii: List[float]
    regularized_radii: List[float]
    residual_radial: List[float]
    residual_tangent: List[float]
    residual: List[float]
    fitted_points: int
    residual_exponent: float
    fit_residual: float

    @property
    def passed(self) -> bool:
        return self.fitted_points >= 3 and self.residual_exponent > self.delta


def verify_expansion(
    k: int,
    m: int,
    delta: float,
    epsilon: float,
    r_grid: Sequence[float],
    sign: float = 1.0,
) -> ExpansionReport:
    """
    Compare the exact scaled Hessian profile of G_m(h(r_eps)) with its expansion.

    The expansion is 1 - k/m + A*B1*s^delta + (eps/s^2)(k/m + A*B3*s^delta) in the
    radial slot and 1 + A*B2*s^delta in the tangential slots, with s = r_eps.

    Args:
        k: Codimension
        m: Hessian order
        delta: Perturbation exponent
        epsilon: Regularization
        r_grid: Radii inside the tube
        sign: Perturbation sign A (+1 subweight, -1 superweight)

    Returns:
        ExpansionReport with the fitted residual exponent
    """
    consts = expansion_constants(k, m, delta)
    kind = WeightKind.G_SUB if sign > 0 else WeightKind.G_SUPER
    family = WeightFamily(kind=kind, k=k, m=m, delta=delta, epsilon=epsilon)
    A = family.A
    q = k / m

    r = np.asarray(r_grid, dtype=float)
    if np.any(r <= 0):
        raise ArgumentError("expansion grid must be positive")
    s = np.sqrt(r ** 2 + epsilon)
    e = epsilon / s ** 2
    rad, tan = scaled_profile(family, r)
    rad_model = 1.0 - q + A * consts.B1 * s ** delta + e * (q + A * consts.B3 * s ** delta)
    tan_model = 1.0 + A * consts.B2 * s ** delta
    res_rad = rad - rad_model
    res_tan = tan - tan_model
    residual = np.maximum(np.abs(res_rad), np.abs(res_tan))

    resolved = residual > RESIDUAL_NOISE_FLOOR
    fit = fit_power_law(s[resolved], residual[resolved])
    report = ExpansionReport(
        k=k, m=m, delta=delta, epsilon=epsilon, A=A,
        radii=[float(x) for x in r],
        regularized_radii=[float(x) for x in s],
        residual_radial=[float(x) for x in res_rad],
        residual_tangent=[float(x) for x in res_tan],
        residual=[float(x) for x in residual],
        fitted_points=int(resolved.sum()),
        residual_exponent=fit.exponent,
        fit_residual=fit.log_residual,
    )
    logger.debug(
        f"Expansion k={k} m={m} delta={delta} eps={epsilon} A={A}: "
        f"residual exponent {fit.exponent:.3f}"
    )
    return report


def singularity_type_gap(family: WeightFamily, radii: Sequence[float]) -> float:
    """sup |G(h(r_eps)) - G(r)|: bounded exactly when both have the same singularity type."""
    pure = family.with_changes(kind=WeightKind.G_PURE, A=0.0, delta=0.0, epsilon=0.0)
    r = np.asarray(radii, dtype=float)
    return float(np.max(np.abs(eval_weight(family, r).value - eval_weight(pure, r).value)))


def epsilon_monotone(
    family: WeightFamily, epsilons: Sequence[float], radii: Sequence[float]
) -> bool:
    """True when G(h(r_eps)) decreases pointwise along the given decreasing epsilons."""
    eps = sorted(set(float(e) for e in epsilons), reverse=True)
    r = np.asarray(radii, dtype=float)
    values = [eval_weight(family.with_changes(epsilon=e), r).value for e in eps]
    return all(np.all(later <= earlier) for earlier, later in zip(values, values[1:]))


@dataclass(frozen=True)
class MaximalProfile:
    """The general radial maximal weight a * G_m + b."""
    k: int
    m: int
    a: float
    b: float

    @property
    def pole(self) -> WeightFamily:
        return WeightFamily(kind=WeightKind.G_PURE, k=self.k, m=self.m)

    def derivs(self, r: Real) -> DerivTriple:
        base = eval_weight(self.pole, r)
        return (base * self.a).shifted(self.b)


def maximal_radial_profile(k: int, m: int, a: float, b: float) -> MaximalProfile:
    """Two-parameter family a * G_m + b of radial solutions of sigma_m = 0."""
    if a < 0:
        raise ArgumentError(f"a={a} < 0 gives a function that is not m-subharmonic")
    if not 1 <= m <= k:
        raise ArgumentError(f"maximal profile needs 1 <= m <= k, got k={k}, m={m}")
    return MaximalProfile(k, m, a, b)


def ode_residual(profile: MaximalProfile, r: float) -> float:
    """sigma_m of the exact Hessian profile of the maximal weight at r."""
    d = profile.derivs(r)
    lam_rad, lam_tan = profile_arrays(d, r)
    eig = EigenProfile(float(lam_rad), float(lam_tan), profile.k, profile.k)
    return sigma_profile(eig, profile.m)


@dataclass
class ODECheck:
    """Numerical solution of the radial maximal ODE against the closed form."""
    k: int
    m: int
    radii: List[float]
    numerical: List[float]
    closed_form: List[float]
    max_relative_error: float
    solver_message: str
    success: bool = field(default=True)


def integrate_maximal_ode(
    k: int,
    m: int,
    boundary_radius: float,
    a: float = 1.0,
    span: float = 100.0,
    points: int = 64,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> ODECheck:
    """
    Solve t * g''(t) / g'(t) = -k/m in t = r^2 inward from the tube boundary.

    Boundary data g = 0 and dg/dr = a * G_m'(boundary_radius) select the
    solution a * (G_m(r) - G_m(boundary_radius)).

    Args:
        k: Codimension
        m: Hessian order
        boundary_radius: Radius where boundary data are imposed
        a: Multiplier of the pole
        span: Ratio between the outer and inner radius
        points: Number of comparison radii
        rtol: Relative tolerance of the integrator
        atol: Absolute tolerance of the integrator

    Returns:
        ODECheck with the sup of the relative error on the comparison radii
    """
    profile = maximal_radial_profile(k, m, a, 0.0)
    q = k / m
    outer = eval_weight(profile.pole, boundary_radius)
    t0 = boundary_radius ** 2
    radii = np.geomspace(boundary_radius, boundary_radius / span, points)
    t_eval = radii ** 2

    def rhs(t: float, state: np.ndarray) -> np.ndarray:
        return np.array([state[1], -q * state[1] / t])

    y0 = np.array([0.0, a * outer.d1 / (2.0 * boundary_radius)])
    solution = solve_ivp(
        rhs, (t0, t_eval[-1]), y0, method="DOP853", t_eval=t_eval, rtol=rtol, atol=atol
    )
    exact = a * (eval_weight(profile.pole, radii).value - outer.value)
    numerical = solution.y[0] if solution.success else np.full_like(exact, np.nan)
    error = np.abs(numerical - exact) / np.maximum(1.0, np.abs(exact))
    return ODECheck(
        k=k,
        m=m,
        radii=[float(x) for x in radii],
        numerical=[float(x) for x in numerical],
        closed_form=[float(x) for x in exact],
        max_relative_error=float(np.max(error)),
        solver_message=str(solution.message),
        success=bool(solution.success),
    )


def minimal_real_weight(kappa: int, gamma: float = 1.0) -> WeightFamily:
    """-r^(2-kappa): the harmonic pole along a linear submanifold of real codimension kappa."""
    if kappa < 3:
        raise ArgumentError(f"real codimension must be >= 3, got {kappa}")
    return WeightFamily(kind=WeightKind.MINIMAL_REAL, k=1, m=1, kappa=kappa, gamma=gamma)


def laplacian_residual(d: DerivTriple, r: Real, kappa: int) -> Real:
    """Radial real Laplacian f'' + (kappa - 1) f'/r in kappa normal dimensions."""
    return d.d2 + (kappa - 1) * d.d1 / np.asarray(r, dtype=float)
