"""
Profiles Module

Exact radial calculus in the flat model: closed-form weight families with
hand-derived first and second radial derivatives, and the conversion of
radial derivative data into complex Hessian eigenvalue profiles.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Protocol, Tuple, Union

import numpy as np

from .errors import ArgumentError, ConstraintError, DegenerateProfileError, SingularityError
from .garding import EigenProfile

logger = logging.getLogger(__name__)

Real = Union[float, np.ndarray]


@dataclass(frozen=True)
class FlatModel:
    """
    The exact local model C^k x (flat torus)^(n-k) with V = {z' = 0}.

    The metric is flat, so curvature corrections vanish identically and the
    adapted-frame computations are exact.
    """
    n: int
    k: int
    m: int
    tube_radius: float = 0.5
    torus_periods: Optional[Tuple[float, ...]] = None
    exhaustion_shift: Optional[float] = None

    def __post_init__(self):
        if not (1 <= self.k <= self.n and 1 <= self.m <= self.n):
            raise ArgumentError(
                f"flat model needs 1 <= k, m <= n, got n={self.n}, k={self.k}, m={self.m}"
            )
        if self.tube_radius <= 0:
            raise ArgumentError(f"tube_radius must be positive, got {self.tube_radius}")
        periods = self.torus_periods
        if periods is None:
            periods = (2.0 * math.pi,) * (self.n - self.k)
        periods = tuple(float(p) for p in periods)
        if len(periods) != self.n - self.k:
            raise ArgumentError(f"expected {self.n - self.k} torus periods, got {len(periods)}")
        if any(p <= 0 for p in periods):
            raise ArgumentError("torus periods must be positive")
        object.__setattr__(self, "torus_periods", periods)
        if self.exhaustion_shift is None:
            object.__setattr__(self, "exhaustion_shift", self.tube_radius ** 2)

    @property
    def tangent_dim(self) -> int:
        return self.n - self.k

    @property
    def v_volume(self) -> float:
        """Volume of the torus V; each complex direction contributes period**2."""
        return float(np.prod([p ** 2 for p in self.torus_periods])) if self.torus_periods else 1.0

    @property
    def reference_order(self) -> int:
        """Order of the reference weight psi_V: m below codimension, k otherwise."""
        return min(self.m, self.k)

    def reference_weight(self) -> "WeightFamily":
        return WeightFamily(kind=WeightKind.G_PURE, k=self.k, m=self.reference_order)

    def psi_v(self, r: Real) -> Real:
        """Value of the reference weight at distance r from V."""
        return eval_weight(self.reference_weight(), r).value

    def radius_of_level(self, level: Real) -> Real:
        """Inverse of psi_V: the radius of the shell {psi_V = level}."""
        level = np.asarray(level, dtype=float)
        if self.reference_order == self.k:
            radius = np.exp(level)
        else:
            if np.any(level >= 0):
                raise ArgumentError("power-type reference weight only takes negative levels")
            power = 2.0 - 2.0 * self.k / self.reference_order
            radius = (-level) ** (1.0 / power)
        return float(radius) if radius.ndim == 0 else radius

    def rho(self, r: Real) -> Real:
        """Exhaustion surrogate r^2 - shift, strictly psh in the normal directions."""
        return np.asarray(r, dtype=float) ** 2 - self.exhaustion_shift

    def key(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "k": self.k,
            "m": self.m,
            "periods": [round(p, 12) for p in self.torus_periods],
            "tube_radius": round(self.tube_radius, 12),
        }


class WeightKind(str, Enum):
    G_SUB = "g-sub"
    G_SUPER = "g-super"
    G_PURE = "g-pure"
    F_NU = "f-nu"
    MINIMAL_REAL = "minimal-real"


_DEFAULT_SIGN = {
    WeightKind.G_SUB: 1.0,
    WeightKind.G_SUPER: -1.0,
    WeightKind.G_PURE: 0.0,
    WeightKind.MINIMAL_REAL: 0.0,
}


def admissible_delta_bound(k: int, m: int) -> float:
    """Lower bound max{1, 2(k/m - 1)} on the perturbation exponent."""
    return max(1.0, 2.0 * (k / m - 1.0))


@dataclass(frozen=True)
class DerivTriple:
    """Value and first two radial derivatives of a radial function."""
    value: Real
    d1: Real
    d2: Real

    def __add__(self, other: "DerivTriple") -> "DerivTriple":
        return DerivTriple(self.value + other.value, self.d1 + other.d1, self.d2 + other.d2)

    def __mul__(self, factor: float) -> "DerivTriple":
        return DerivTriple(factor * self.value, factor * self.d1, factor * self.d2)

    __rmul__ = __mul__

    def shifted(self, constant: float) -> "DerivTriple":
        return DerivTriple(self.value + constant, self.d1, self.d2)


class RadialProfile(Protocol):
    """Anything that yields exact radial derivatives."""

    def derivs(self, r: Real) -> DerivTriple:
        ...


@dataclass(frozen=True)
class WeightFamily:
    """
    A closed-form radial weight gamma * G(h(r_eps)).

    h(s) = s + A * s**(1 + delta) with r_eps = sqrt(r**2 + epsilon). The sign A
    defaults from the kind: +1 for subweights, -1 for superweights, 0 otherwise.
    """
    kind: WeightKind
    k: int
    m: int
    delta: float = 0.0
    A: Optional[float] = None
    nu: float = 0.0
    epsilon: float = 0.0
    gamma: float = 1.0
    kappa: int = 0

    def __post_init__(self):
        kind = WeightKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.A is None:
            sign = _DEFAULT_SIGN.get(kind, 1.0 if self.delta > 0 else 0.0)
            object.__setattr__(self, "A", sign)
        if self.A not in (-1.0, 0.0, 1.0):
            raise ArgumentError(f"perturbation sign A must be -1, 0 or +1, got {self.A}")
        if self.epsilon < 0:
            raise ArgumentError(f"epsilon must be non-negative, got {self.epsilon}")
        if self.gamma <= 0:
            raise ArgumentError(f"gamma must be positive, got {self.gamma}")

        if kind == WeightKind.MINIMAL_REAL:
            if self.kappa < 3:
                raise ArgumentError(
                    f"real codimension must be >= 3, got {self.kappa} (2 is the log case)"
                )
            return
        if self.k < 1 or self.m < 1:
            raise ArgumentError(f"k and m must be positive, got k={self.k}, m={self.m}")
        if kind in (WeightKind.G_SUB, WeightKind.G_SUPER, WeightKind.G_PURE) and self.m > self.k:
            raise ArgumentError(f"G-weights need m <= k, got k={self.k}, m={self.m}")
        if kind == WeightKind.F_NU and self.nu >= self.k / self.m:
            raise ConstraintError(f"nu={self.nu} must be below k/m={self.k / self.m:.6g}")
        if self.A != 0.0:
            bound = admissible_delta_bound(self.k, self.m)
            if self.delta <= bound:
                raise ConstraintError(
                    f"delta={self.delta} must exceed max{{1, 2(k/m-1)}}={bound:.6g}"
                )

    def derivs(self, r: Real) -> DerivTriple:
        return eval_weight(self, r)

    def with_changes(self, **changes) -> "WeightFamily":
        values = {
            "kind": self.kind, "k": self.k, "m": self.m, "delta": self.delta, "A": self.A,
            "nu": self.nu, "epsilon": self.epsilon, "gamma": self.gamma, "kappa": self.kappa,
        }
        values.update(changes)
        return WeightFamily(**values)

    def to_dict(self) -> Dict[str, object]:
        return {
            "kind": self.kind.value, "k": self.k, "m": self.m, "delta": self.delta,
            "A": self.A, "nu": self.nu, "epsilon": self.epsilon, "gamma": self.gamma,
            "kappa": self.kappa,
        }


def _power_outer(t: np.ndarray, power: float, sign: float) -> Tuple[np.ndarray, ...]:
    return (
        sign * t ** power,
        sign * power * t ** (power - 1.0),
        sign * power * (power - 1.0) * t ** (power - 2.0),
    )


def _log_outer(t: np.ndarray) -> Tuple[np.ndarray, ...]:
    return np.log(t), 1.0 / t, -1.0 / t ** 2


def outer_function(w: WeightFamily, t: np.ndarray) -> Tuple[np.ndarray, ...]:
    """The one-variable function G_m, F_nu or -t^(2-kappa) with two derivatives."""
    if w.kind == WeightKind.MINIMAL_REAL:
        return _power_outer(t, 2.0 - w.kappa, -1.0)
    if w.kind == WeightKind.F_NU:
        if w.nu == 1.0:
            return _log_outer(t)
        power = 2.0 - 2.0 * w.nu
        return _power_outer(t, power, 1.0 if w.nu < 1.0 else -1.0)
    if w.m == w.k:
        return _log_outer(t)
    return _power_outer(t, 2.0 - 2.0 * w.k / w.m, -1.0)


def perturbation(w: WeightFamily, s: np.ndarray) -> Tuple[np.ndarray, ...]:
    """h(s) = s + A s^(1+delta) and its first two derivatives."""
    if w.A == 0.0:
        return s, np.ones_like(s), np.zeros_like(s)
    d = w.delta
    h = s + w.A * s ** (1.0 + d)
    h1 = 1.0 + w.A * (1.0 + d) * s ** d
    h2 = w.A * (1.0 + d) * d * s ** (d - 1.0)
    return h, h1, h2


def eval_weight(w: WeightFamily, r: Real) -> DerivTriple:
    """
    Evaluate gamma * G(h(r_eps)) with exact first and second r-derivatives.

    Args:
        w: Weight family
        r: Distance to V (scalar or array)

    Returns:
        DerivTriple matching the input shape
    """
    scalar = np.ndim(r) == 0
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ArgumentError("radial distance must be non-negative")
    if w.epsilon == 0.0 and np.any(r == 0):
        raise SingularityError(f"{w.kind.value} weight evaluated on V without regularization")

    s = np.sqrt(r ** 2 + w.epsilon)
    s1 = r / s
    s2 = w.epsilon / s ** 3
    h, h1, h2 = perturbation(w, s)
    if np.any(h <= 0):
        raise ArgumentError("perturbed radius h(r_eps) left (0, infinity); shrink the radius")
    g0, g1, g2 = outer_function(w, h)

    value = w.gamma * g0
    d1 = w.gamma * g1 * h1 * s1
    d2 = w.gamma * (g2 * (h1 * s1) ** 2 + g1 * (h2 * s1 ** 2 + h1 * s2))
    if scalar:
        return DerivTriple(float(value), float(d1), float(d2))
    return DerivTriple(value, d1, d2)


@dataclass(frozen=True)
class PowerProfile:
    """c * r**exponent + offset; r**2 is the model smooth psh function."""
    coefficient: float = 1.0
    exponent: float = 2.0
    offset: float = 0.0

    def derivs(self, r: Real) -> DerivTriple:
        r = np.asarray(r, dtype=float)
        c, p = self.coefficient, self.exponent
        triple = DerivTriple(
            c * r ** p + self.offset,
            c * p * r ** (p - 1.0),
            c * p * (p - 1.0) * r ** (p - 2.0),
        )
        if triple.value.ndim == 0:
            return DerivTriple(float(triple.value), float(triple.d1), float(triple.d2))
        return triple


@dataclass(frozen=True)
class ClampedProfile:
    """max(base, floor): a bounded truncation of a singular profile."""
    base: RadialProfile
    floor: float

    def derivs(self, r: Real) -> DerivTriple:
        inner = self.base.derivs(r)
        active = np.asarray(inner.value) > self.floor
        value = np.where(active, inner.value, self.floor)
        d1 = np.where(active, inner.d1, 0.0)
        d2 = np.where(active, inner.d2, 0.0)
        if np.ndim(value) == 0:
            return DerivTriple(float(value), float(d1), float(d2))
        return DerivTriple(value, d1, d2)


def profile_arrays(d: DerivTriple, r: Real) -> Tuple[np.ndarray, np.ndarray]:
    """(lambda_rad, lambda_tan) of the coordinate complex Hessian, vectorized."""
    r = np.asarray(r, dtype=float)
    lam_tan = np.asarray(d.d1) / (2.0 * r)
    lam_rad = (np.asarray(d.d2) + np.asarray(d.d1) / r) / 4.0
    return lam_rad, lam_tan


def radial_eigprofile(d: DerivTriple, r: float, model: FlatModel) -> EigenProfile:
    """
    Exact eigenvalues of the coordinate complex Hessian of a radial function.

    lambda_tan = f'/(2r) with multiplicity k-1, lambda_rad = (f'' + f'/r)/4,
    and n-k zero eigenvalues along V.
    """
    if r <= 0:
        raise ArgumentError(f"profile radius must be positive, got {r}")
    lam_rad, lam_tan = profile_arrays(d, r)
    return EigenProfile(float(lam_rad), float(lam_tan), model.k, model.n)


def profile_ratio_check(w: WeightFamily, r: float) -> float:
    """
    Ratio lambda_rad / lambda_tan of the Hessian profile of w at r.

    For the unperturbed G_m this is 1 - k/m exactly.
    """
    if r <= 0:
        raise ArgumentError(f"profile radius must be positive, got {r}")
    lam_rad, lam_tan = profile_arrays(eval_weight(w, r), r)
    if lam_tan == 0.0:
        raise DegenerateProfileError(f"vanishing tangential eigenvalue at r={r}")
    return float(lam_rad / lam_tan)
