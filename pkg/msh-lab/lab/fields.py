"""
Fields Module

Non-radial scalar fields on the flat tube. Every field is a finite sum of
modulated radial terms c * theta(z'') * chi(r) * f(r) plus a constant, which
gives exact block traces for the measures module, while cone scans run on
finite-difference complex Hessians.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import jsonschema
import numpy as np
from scipy.optimize import minimize

from .errors import ArgumentError, ConstraintError, ConstructionError, GeometryError
from .garding import DEFAULT_CONE_TOLERANCE, ConeStatus, ConeVerdict, HermitianMatrix, gamma_m_test
from .numerics import parallel_map, smootherstep_cutoff, sphere_directions, torus_grid
from .profiles import (
    DerivTriple,
    FlatModel,
    RadialProfile,
    WeightFamily,
    WeightKind,
    admissible_delta_bound,
)

logger = logging.getLogger(__name__)

THETA_SCHEMA = {
    "type": "object",
    "properties": {
        "offset": {"type": "number"},
        "normalize": {"type": "boolean"},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "frequencies": {"type": "array", "items": {"type": "integer"}},
                    "amplitude": {"type": "number"},
                    "phase": {"type": "number"},
                },
                "required": ["frequencies", "amplitude"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["offset"],
    "additionalProperties": False,
}

THETA_SIGN_TOLERANCE = 1e-12
DEFAULT_C_CAP = 2.0 ** 20


@dataclass(frozen=True)
class Point:
    """A point (z', z'') of the tube."""
    z_normal: Tuple[complex, ...]
    z_tangent: Tuple[complex, ...] = ()

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(np.asarray(self.z_normal, dtype=complex)))

    def as_array(self) -> np.ndarray:
        return np.asarray(tuple(self.z_normal) + tuple(self.z_tangent), dtype=complex)

    @classmethod
    def from_array(cls, coords: Sequence[complex], k: int) -> "Point":
        coords = [complex(c) for c in coords]
        return cls(tuple(coords[:k]), tuple(coords[k:]))


PointLike = Union[Point, Sequence[Point], np.ndarray]


def as_batch(points: PointLike) -> np.ndarray:
    """Normalize a point, a list of points or an array into a complex (N, n) array."""
    if isinstance(points, Point):
        return points.as_array()[None, :]
    if isinstance(points, np.ndarray):
        batch = np.asarray(points, dtype=complex)
        return batch[None, :] if batch.ndim == 1 else batch
    return np.stack([p.as_array() for p in points])


@dataclass(frozen=True)
class ThetaTerm:
    frequencies: Tuple[int, ...]
    amplitude: float
    phase: float = 0.0


@dataclass(frozen=True)
class ThetaField:
    """
    Nonnegative trigonometric polynomial on the torus V.

    theta = offset + sum amplitude * cos(sum_i f_i * 2 pi x_i / L_i + phase), where
    x interleaves the real and imaginary parts of each z''_j and L_i is the
    period of the corresponding complex coordinate.
    """
    periods: Tuple[float, ...]
    offset: float
    terms: Tuple[ThetaTerm, ...] = ()
    check_sign: bool = field(default=True, compare=False, repr=False)
    minimum_value: float = field(init=False, compare=False, repr=False)
    maximum_value: float = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "periods", tuple(float(p) for p in self.periods))
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if len(term.frequencies) != 2 * len(self.periods):
                raise ArgumentError(
                    f"frequency vector {term.frequencies} needs {2 * len(self.periods)} entries"
                )
        lo, hi = self._extrema()
        object.__setattr__(self, "minimum_value", lo)
        object.__setattr__(self, "maximum_value", hi)
        if self.check_sign and lo < -THETA_SIGN_TOLERANCE:
            raise ConstraintError(f"theta must be nonnegative on the torus, minimum is {lo:.6g}")

    @classmethod
    def constant(cls, value: float, periods: Sequence[float]) -> "ThetaField":
        return cls(tuple(periods), float(value))

    @property
    def dimension(self) -> int:
        return len(self.periods)

    @property
    def is_constant(self) -> bool:
        return all(t.amplitude == 0 or not any(t.frequencies) for t in self.terms)

    @property
    def mean(self) -> float:
        """Torus mean; nonzero frequencies average out."""
        return self.offset + sum(
            t.amplitude * math.cos(t.phase) for t in self.terms if not any(t.frequencies)
        )

    def minimum(self) -> float:
        return self.minimum_value

    def maximum(self) -> float:
        return self.maximum_value

    def _wave_vectors(self) -> np.ndarray:
        scale = np.repeat(2.0 * math.pi / np.asarray(self.periods), 2)
        return np.array([np.asarray(t.frequencies, dtype=float) * scale for t in self.terms])

    @staticmethod
    def real_coordinates(z_tangent: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z_tangent, dtype=complex))
        return np.stack([z.real, z.imag], axis=-1).reshape(z.shape[0], -1)

    def _value_real(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if not self.terms:
            return np.full(x.shape[0], self.offset)
        waves = self._wave_vectors()
        amps = np.array([t.amplitude for t in self.terms])
        phases = np.array([t.phase for t in self.terms])
        return self.offset + np.cos(x @ waves.T + phases) @ amps

    def value(self, z_tangent: np.ndarray) -> np.ndarray:
        return self._value_real(self.real_coordinates(z_tangent))

    def laplacian(self, z_tangent: np.ndarray) -> np.ndarray:
        """Real Laplacian in the torus variables; the complex trace is a quarter of it."""
        x = self.real_coordinates(z_tangent)
        if not self.terms:
            return np.zeros(x.shape[0])
        waves = self._wave_vectors()
        weights = np.array([t.amplitude for t in self.terms]) * np.sum(waves ** 2, axis=1)
        phases = np.array([t.phase for t in self.terms])
        return -np.cos(x @ waves.T + phases) @ weights

    def _extrema(self) -> Tuple[float, float]:
        active = [t for t in self.terms if t.amplitude != 0]
        constant = self.offset + sum(
            t.amplitude * math.cos(t.phase) for t in active if not any(t.frequencies)
        )
        waves = [t for t in active if any(t.frequencies)]
        if not waves:
            return constant, constant
        if len(waves) == 1:
            return constant - abs(waves[0].amplitude), constant + abs(waves[0].amplitude)
        return self._sampled_extremum(1.0), self._sampled_extremum(-1.0)

    def _sampled_extremum(self, sign: float) -> float:
        per_dim = max(4, int(4096 ** (1.0 / (2 * self.dimension))))
        grid = self.real_coordinates(torus_grid(self.periods, per_dim))
        values = sign * self._value_real(grid)
        best = float(values.min())
        for start in grid[np.argsort(values)[:3]]:
            result = minimize(lambda x: sign * float(self._value_real(x)[0]), start, method="BFGS")
            best = min(best, float(result.fun))
        return sign * best

    def normalized(self) -> "ThetaField":
        """The same polynomial shifted so that its minimum over the torus is 0."""
        return ThetaField(self.periods, self.offset - self.minimum_value, self.terms)

    def shifted(self, amount: float) -> "ThetaField":
        return ThetaField(self.periods, self.offset + amount, self.terms)

    def patch_mean(self, lower: Sequence[float], upper: Sequence[float]) -> float:
        """Exact mean over a box of real torus coordinates [lower_i, upper_i]."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.shape != (2 * self.dimension,) or upper.shape != lower.shape:
            raise ArgumentError(f"patch bounds need {2 * self.dimension} real coordinates")
        total = self.offset
        waves = self._wave_vectors() if self.terms else np.zeros((0, lower.size))
        for term, w in zip(self.terms, waves):
            factor = complex(math.cos(term.phase), math.sin(term.phase))
            for wi, a, b in zip(w, lower, upper):
                if wi == 0.0 or b == a:
                    factor *= np.exp(1j * wi * a)
                else:
                    factor *= (np.exp(1j * wi * b) - np.exp(1j * wi * a)) / (1j * wi * (b - a))
            total += term.amplitude * factor.real
        return float(total)

    @classmethod
    def from_json(cls, data: Dict[str, object], periods: Sequence[float]) -> "ThetaField":
        """
        Parse a coefficient list validated against THETA_SCHEMA.

        Args:
            data: {"offset": ..., "terms": [{"frequencies": [...], "amplitude": ..., "phase": ...}]}
            periods: Torus periods of the model

        Returns:
            ThetaField (shifted to minimum 0 when "normalize" is true)
        """
        try:
            jsonschema.validate(instance=data, schema=THETA_SCHEMA)
        except jsonschema.ValidationError as e:
            raise ArgumentError(f"invalid theta specification: {e.message}") from e
        terms = tuple(
            ThetaTerm(tuple(t["frequencies"]), float(t["amplitude"]), float(t.get("phase", 0.0)))
            for t in data.get("terms", [])
        )
        theta = cls(tuple(periods), float(data["offset"]), terms, check_sign=False)
        if data.get("normalize", False):
            return theta.normalized()
        return cls(theta.periods, theta.offset, theta.terms)

    def to_dict(self) -> Dict[str, object]:
        return {
            "offset": self.offset,
            "terms": [
                {"frequencies": list(t.frequencies), "amplitude": t.amplitude, "phase": t.phase}
                for t in self.terms
            ],
        }


@dataclass(frozen=True)
class LogProfile:
    """log r."""

    def derivs(self, r) -> DerivTriple:
        r = np.asarray(r, dtype=float)
        return DerivTriple(np.log(r), 1.0 / r, -1.0 / r ** 2)


@dataclass(frozen=True)
class ModulatedTerm:
    """c * theta(z'') * chi(r) * f(r); theta and chi default to 1."""
    coefficient: float
    profile: RadialProfile
    theta: Optional[ThetaField] = None
    cutoff: Optional[Tuple[float, float]] = None

    def radial(self, r: np.ndarray) -> DerivTriple:
        d = self.profile.derivs(r)
        f0, f1, f2 = (np.asarray(v, dtype=float) for v in (d.value, d.d1, d.d2))
        if self.cutoff is None:
            return DerivTriple(f0, f1, f2)
        chi, chi1, chi2 = smootherstep_cutoff(r, *self.cutoff)
        return DerivTriple(chi * f0, chi1 * f0 + chi * f1, chi2 * f0 + 2 * chi1 * f1 + chi * f2)

    def modulation(self, z_tangent: np.ndarray) -> np.ndarray:
        if self.theta is None:
            return np.ones(z_tangent.shape[0])
        return self.theta.value(z_tangent)

    def modulation_laplacian(self, z_tangent: np.ndarray) -> np.ndarray:
        if self.theta is None:
            return np.zeros(z_tangent.shape[0])
        return self.theta.laplacian(z_tangent)


def _f_nu_rates(family: WeightFamily) -> List[float]:
    # C * F_nu(h) approaches its tube limit like s**(2(k/m - nu)), then s**delta further
    leading = 2.0 * (family.k / family.m - family.nu)
    rates = [leading]
    if family.delta > 0 and family.A != 0:
        rates += [float(family.delta), leading + family.delta]
    return sorted(set(rates))


class ScalarField(ABC):
    """A field on the tube given as modulated radial terms plus a constant."""

    arm: str = "field"

    def __init__(self, k: int, constant: float = 0.0):
        self.k = k
        self.constant = constant

    @abstractmethod
    def terms(self) -> List[ModulatedTerm]:
        """The modulated radial terms of the field."""

    @property
    def is_radial(self) -> bool:
        return all(t.theta is None or t.theta.is_constant for t in self.terms())

    def split(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        points = as_batch(points)
        return np.linalg.norm(points[:, : self.k], axis=1), points[:, self.k:]

    def evaluate(self, points: PointLike) -> np.ndarray:
        r, z_t = self.split(as_batch(points))
        total = np.full(r.shape, float(self.constant))
        for term in self.terms():
            total = total + term.coefficient * term.modulation(z_t) * term.radial(r).value
        return total

    def correction_rates(self) -> List[float]:
        """Exponents of the known corrections in the scaled tube and sublevel series."""
        return []

    def __add__(self, other: "ScalarField") -> "AffineField":
        return AffineField([(1.0, self), (1.0, other)])

    def to_dict(self) -> Dict[str, object]:
        return {"arm": self.arm, "k": self.k, "constant": self.constant}


class RadialField(ScalarField):
    """c * f(|z'|) for a closed-form radial profile."""

    arm = "radial"

    def __init__(self, profile: RadialProfile, k: int, coefficient: float = 1.0, constant: float = 0.0):
        super().__init__(k, constant)
        self.profile = profile
        self.coefficient = coefficient

    def terms(self) -> List[ModulatedTerm]:
        return [ModulatedTerm(self.coefficient, self.profile)]

    def correction_rates(self) -> List[float]:
        if isinstance(self.profile, WeightFamily) and self.profile.kind == WeightKind.F_NU:
            return _f_nu_rates(self.profile)
        return []

    def to_dict(self) -> Dict[str, object]:
        data = super().to_dict()
        data["coefficient"] = self.coefficient
        if hasattr(self.profile, "to_dict"):
            data["profile"] = self.profile.to_dict()
        else:
            data["profile"] = repr(self.profile)
        return data


class LocalizedField(ScalarField):
    """
    theta_ext(z) * G_m(h(r)) + C * F_nu(h(r)).

    theta_ext is theta extended constantly in the normal directions and cut
    off smoothly between tube_radius/2 and tube_radius.
    """

    arm = "localized"

    def __init__(
        self,
        theta: ThetaField,
        psi: WeightFamily,
        f_nu: WeightFamily,
        C: float,
        model: FlatModel,
        certificate: Optional["ScanReport"] = None,
    ):
        super().__init__(model.k)
        if C <= 0:
            raise ArgumentError(f"C must be positive, got {C}")
        self.theta = theta
        self.psi = psi
        self.f_nu = f_nu
        self.C = C
        self.model = model
        self.cutoff = (model.tube_radius / 2.0, model.tube_radius)
        self.certificate = certificate

    @property
    def nu(self) -> float:
        return self.f_nu.nu

    def terms(self) -> List[ModulatedTerm]:
        return [
            ModulatedTerm(1.0, self.psi, self.theta, self.cutoff),
            ModulatedTerm(self.C, self.f_nu),
        ]

    def correction_rates(self) -> List[float]:
        rates = set(_f_nu_rates(self.f_nu))
        if self.psi.delta > 0:
            rates.add(float(self.psi.delta))
        return sorted(rates)

    def with_constant(self, C: float) -> "LocalizedField":
        return LocalizedField(self.theta, self.psi, self.f_nu, C, self.model)

    def to_dict(self) -> Dict[str, object]:
        data = super().to_dict()
        data.update(
            theta=self.theta.to_dict(),
            psi=self.psi.to_dict(),
            f_nu=self.f_nu.to_dict(),
            C=self.C,
            cutoff=list(self.cutoff),
        )
        if self.certificate is not None:
            data["certificate"] = self.certificate.to_dict()
        return data


class ScaledLogField(ScalarField):
    """theta(z'') * log|z'|: maximal along V only when theta is constant."""

    arm = "scaled-log"

    def __init__(self, theta: ThetaField, k: int):
        super().__init__(k)
        self.theta = theta

    def terms(self) -> List[ModulatedTerm]:
        return [ModulatedTerm(1.0, LogProfile(), self.theta)]

    def to_dict(self) -> Dict[str, object]:
        data = super().to_dict()
        data["theta"] = self.theta.to_dict()
        return data


class AffineField(ScalarField):
    """sum a_i * F_i + constant."""

    arm = "affine"

    def __init__(self, parts: Sequence[Tuple[float, ScalarField]], constant: float = 0.0):
        if not parts:
            raise ArgumentError("affine field needs at least one part")
        ks = {f.k for _, f in parts}
        if len(ks) != 1:
            raise ArgumentError(f"affine parts disagree on codimension: {sorted(ks)}")
        super().__init__(ks.pop(), constant + sum(a * f.constant for a, f in parts))
        self.parts = list(parts)

    def terms(self) -> List[ModulatedTerm]:
        out = []
        for a, f in self.parts:
            for t in f.terms():
                out.append(ModulatedTerm(a * t.coefficient, t.profile, t.theta, t.cutoff))
        return out

    def correction_rates(self) -> List[float]:
        return sorted({rate for _, f in self.parts for rate in f.correction_rates()})

    def to_dict(self) -> Dict[str, object]:
        data = super().to_dict()
        data["parts"] = [{"weight": a, "field": f.to_dict()} for a, f in self.parts]
        return data


def eval_field(F: ScalarField, p: PointLike) -> Union[float, np.ndarray]:
    """Value of F at a point (float) or at a batch of points (array)."""
    values = F.evaluate(p)
    return float(values[0]) if isinstance(p, Point) else values


def hessian_traces(F: ScalarField, points: PointLike) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact traces of the complex Hessian over the z' and z'' blocks.

    For g = chi * f, tr_{z'} = c theta (g'' + (2k-1) g'/r) / 4 and
    tr_{z''} = c g (Laplacian theta) / 4.
    """
    r, z_t = F.split(as_batch(points))
    k = F.k
    tr_normal = np.zeros_like(r)
    tr_tangent = np.zeros_like(r)
    for term in F.terms():
        g = term.radial(r)
        theta = term.modulation(z_t)
        tr_normal = tr_normal + term.coefficient * theta * (g.d2 + (2 * k - 1) * g.d1 / r) / 4.0
        tr_tangent = tr_tangent + term.coefficient * g.value * term.modulation_laplacian(z_t) / 4.0
    return tr_normal, tr_tangent


def adapted_diagonal(F: ScalarField, points: PointLike, n: int) -> np.ndarray:
    """
    Diagonal of the complex Hessian in the adapted frame at each point.

    Slots: radial direction, the k-1 remaining normal directions, then the
    n-k directions along V sharing the tangential trace equally.

    Returns:
        Array of shape (N, n)
    """
    r, z_t = F.split(as_batch(points))
    k = F.k
    a_rad = np.zeros_like(r)
    a_tan = np.zeros_like(r)
    tr_tangent = np.zeros_like(r)
    for term in F.terms():
        g = term.radial(r)
        theta = term.modulation(z_t)
        a_rad = a_rad + term.coefficient * theta * (g.d2 + g.d1 / r) / 4.0
        a_tan = a_tan + term.coefficient * theta * g.d1 / (2.0 * r)
        tr_tangent = tr_tangent + term.coefficient * g.value * term.modulation_laplacian(z_t) / 4.0
    columns = [a_rad] + [a_tan] * (k - 1)
    if n > k:
        columns += [tr_tangent / (n - k)] * (n - k)
    return np.column_stack(columns)


def default_step(r: float) -> float:
    return min(1e-3, r / 50.0)


def _stencil(n: int) -> Tuple[np.ndarray, List[Tuple[int, int, int]]]:
    """Real offsets of the central-difference stencil and their roles."""
    dim = 2 * n
    offsets = [np.zeros(dim)]
    for a in range(dim):
        for sign in (1.0, -1.0):
            e = np.zeros(dim)
            e[a] = sign
            offsets.append(e)
    pairs = []
    for a in range(dim):
        for b in range(a + 1, dim):
            start = len(offsets)
            for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                e = np.zeros(dim)
                e[a], e[b] = sa, sb
                offsets.append(e)
            pairs.append((a, b, start))
    return np.array(offsets), pairs


def _real_to_complex_offsets(offsets: np.ndarray) -> np.ndarray:
    return offsets[:, 0::2] + 1j * offsets[:, 1::2]


def fd_hessians(F: ScalarField, points: np.ndarray, steps: np.ndarray) -> np.ndarray:
    """Batched central-difference complex Hessians; shape (N, n, n)."""
    points = as_batch(points)
    N, n = points.shape
    offsets, pairs = _stencil(n)
    shifts = _real_to_complex_offsets(offsets)
    samples = points[:, None, :] + steps[:, None, None] * shifts[None, :, :]
    values = F.evaluate(samples.reshape(-1, n)).reshape(N, -1)

    dim = 2 * n
    real_hess = np.zeros((N, dim, dim))
    h2 = steps ** 2
    for a in range(dim):
        real_hess[:, a, a] = (values[:, 1 + 2 * a] - 2 * values[:, 0] + values[:, 2 + 2 * a]) / h2
    for a, b, start in pairs:
        pp, pm, mp, mm = (values[:, start + i] for i in range(4))
        real_hess[:, a, b] = real_hess[:, b, a] = (pp - pm - mp + mm) / (4 * h2)

    xx = real_hess[:, 0::2, 0::2]
    yy = real_hess[:, 1::2, 1::2]
    xy = real_hess[:, 0::2, 1::2]
    complex_hess = 0.25 * ((xx + yy) + 1j * (xy - np.swapaxes(xy, 1, 2)))
    return 0.5 * (complex_hess + np.conj(np.swapaxes(complex_hess, 1, 2)))


def _check_stencil(r: float, step: float, model: Optional[FlatModel], singular: bool = True) -> None:
    if singular and r - 2.0 * step <= 0:
        raise GeometryError(f"stencil of step {step:.3g} at r={r:.3g} reaches V")
    if model is not None and r + 2.0 * step > model.tube_radius:
        raise GeometryError(f"stencil of step {step:.3g} at r={r:.3g} leaves the tube")


def fd_hessian(
    F: ScalarField,
    p: Point,
    step: Optional[float] = None,
    model: Optional[FlatModel] = None,
) -> HermitianMatrix:
    """
    Coordinate complex Hessian of F at p by central differences.

    Args:
        F: Field
        p: Point off V
        step: Stencil step (default min(1e-3, r/50))
        model: When given, the stencil must stay inside its tube

    Returns:
        HermitianMatrix with entries d^2 F / dz_i dzbar_j
    """
    r = p.radius
    h = default_step(r) if step is None else step
    if h <= 0:
        raise ArgumentError(f"step must be positive, got {h}")
    _check_stencil(r, h, model)
    return HermitianMatrix(fd_hessians(F, p.as_array(), np.array([h]))[0])


@dataclass
class ScanViolation:
    index: int
    point: List[Tuple[float, float]]
    radius: float
    worst_index: int
    margin: float


@dataclass
class ScanReport:
    """Aggregated Gamma^m verdicts over a scan grid."""
    m: int
    grid: Dict[str, object]
    counts: Dict[str, int]
    min_margin: float
    first_violation: Optional[ScanViolation] = None
    geometry_errors: int = 0

    @property
    def passed(self) -> bool:
        return self.first_violation is None

    def to_dict(self) -> Dict[str, object]:
        data = {
            "m": self.m,
            "grid": self.grid,
            "counts": self.counts,
            "min_margin": self.min_margin,
            "geometry_errors": self.geometry_errors,
            "first_violation": None,
        }
        if self.first_violation is not None:
            v = self.first_violation
            data["first_violation"] = {
                "index": v.index, "point": v.point, "radius": v.radius,
                "worst_index": v.worst_index, "margin": v.margin,
            }
        return data


def scan_grid(
    model: FlatModel,
    radii: Sequence[float],
    torus_points: int = 16,
    sphere_points: int = 16,
    seed: int = 0,
) -> np.ndarray:
    """
    Product grid of radii, torus points and normal directions.

    Returns:
        Complex array (len(radii) * torus * sphere, n) in radius-major order
    """
    d = model.tangent_dim
    per_dim = max(1, int(round(torus_points ** (1.0 / (2 * d))))) if d else 1
    torus = torus_grid(model.torus_periods, per_dim)
    dirs = sphere_directions(model.k, sphere_points, seed)
    blocks = []
    for r in radii:
        normal = np.repeat(r * dirs, torus.shape[0], axis=0)
        tangent = np.tile(torus, (dirs.shape[0], 1))
        blocks.append(np.hstack([normal, tangent]))
    return np.vstack(blocks)


class HessianScanner:
    """Runs Gamma^m tests on finite-difference Hessians with a stencil error estimate."""

    def __init__(
        self,
        model: FlatModel,
        tolerance: float = DEFAULT_CONE_TOLERANCE,
        step: Optional[float] = None,
        threads: int = 1,
        chunk: int = 256,
    ):
        self.model = model
        self.tolerance = tolerance
        self.step = step
        self.threads = threads
        self.chunk = chunk
        logger.debug(f"Initialized HessianScanner for m={model.m}, tol={tolerance}")

    def _verdicts(self, F: ScalarField, points: np.ndarray) -> List[Optional[ConeVerdict]]:
        radii = np.linalg.norm(points[:, : self.model.k], axis=1)
        steps = np.array([self.step if self.step else default_step(r) for r in radii])
        admissible = np.ones(len(points), dtype=bool)
        for i, (r, h) in enumerate(zip(radii, steps)):
            try:
                _check_stencil(r, h, self.model)
            except GeometryError:
                admissible[i] = False
        out: List[Optional[ConeVerdict]] = [None] * len(points)
        idx = np.flatnonzero(admissible)
        if idx.size == 0:
            return out
        coarse = fd_hessians(F, points[idx], steps[idx])
        fine = fd_hessians(F, points[idx], steps[idx] / 2.0)
        m = self.model.m
        for j, i in enumerate(idx):
            H = HermitianMatrix(fine[j])
            error = float(np.linalg.norm(coarse[j] - fine[j])) / 3.0
            norm = max(H.operator_norm(), 10.0 * error, 1e-300)
            tol = max(self.tolerance, 10.0 * m * error / norm)
            out[i] = gamma_m_test(H, m, tolerance=tol, norm_floor=10.0 * error)
        return out

    def scan(self, F: ScalarField, grid: PointLike) -> ScanReport:
        points = as_batch(grid)
        chunks = [points[i:i + self.chunk] for i in range(0, len(points), self.chunk)]
        results = parallel_map(lambda c: self._verdicts(F, c), chunks, self.threads)
        verdicts = [v for block in results for v in block]

        counts = {status.value: 0 for status in ConeStatus}
        min_margin = math.inf
        first: Optional[ScanViolation] = None
        errors = 0
        for i, verdict in enumerate(verdicts):
            if verdict is None:
                errors += 1
                continue
            counts[verdict.status.value] += 1
            min_margin = min(min_margin, verdict.margin)
            if first is None and verdict.status == ConeStatus.OUTSIDE:
                first = ScanViolation(
                    index=i,
                    point=[(float(z.real), float(z.imag)) for z in points[i]],
                    radius=float(np.linalg.norm(points[i, : self.model.k])),
                    worst_index=verdict.worst_index,
                    margin=verdict.margin,
                )
        radii = np.linalg.norm(points[:, : self.model.k], axis=1)
        grid_info = {
            "points": int(len(points)),
            "r_min": float(radii.min()) if len(points) else 0.0,
            "r_max": float(radii.max()) if len(points) else 0.0,
        }
        if first is not None:
            logger.info(f"⚠️ Gamma^{self.model.m} violation at r={first.radius:.4g} (margin {first.margin:.3g})")
        return ScanReport(self.model.m, grid_info, counts, float(min_margin), first, errors)


def gamma_m_scan(
    F: ScalarField,
    model: FlatModel,
    grid: PointLike,
    step: Optional[float] = None,
    tol: float = DEFAULT_CONE_TOLERANCE,
    threads: int = 1,
) -> ScanReport:
    """
    Apply the Gamma^m test to finite-difference Hessians at every grid point.

    Points whose stencil leaves the domain are counted as geometry errors.

    Returns:
        ScanReport in grid order
    """
    return HessianScanner(model, tol, step, threads).scan(F, grid)


def nu_range(k: int, m: int) -> Tuple[float, float]:
    """Admissible [lower, upper) range of nu for the localized construction."""
    if m == 1:
        return float(k - 1), float(k)
    return k / m - 0.5, k / m


def make_localized(
    theta: ThetaField,
    nu: float,
    k: int,
    m: int,
    model: FlatModel,
    delta: Optional[float] = None,
    c_start: float = 1.0,
    c_cap: float = DEFAULT_C_CAP,
    scan_radii: Optional[Sequence[float]] = None,
    torus_points: int = 16,
    sphere_points: int = 16,
    tol: float = DEFAULT_CONE_TOLERANCE,
    seed: int = 0,
    threads: int = 1,
    exploratory: bool = False,
) -> LocalizedField:
    """
    Find C such that theta * G_m(h(r)) + C * F_nu(h(r)) passes a Gamma^m scan.

    C doubles from c_start until the scan passes or c_cap is exceeded.

    Args:
        theta: Nonnegative torus polynomial
        nu: Exponent of the correcting weight
        k: Codimension
        m: Hessian order
        model: Flat model
        delta: Perturbation exponent of h (default max{1, 2(k/m-1)} + 1)
        c_start: First trial constant
        c_cap: Largest trial constant
        scan_radii: Certification radii (default 20 log-spaced up to 0.95 tube_radius)
        torus_points: Torus samples per radius
        sphere_points: Normal directions per radius
        tol: Cone tolerance
        seed: Seed of the direction sample
        threads: Worker threads
        exploratory: Skip the lower bound on nu (the upper bound always applies)

    Returns:
        LocalizedField carrying its certificate
    """
    if m > k:
        raise ArgumentError(f"localized weights need m <= k, got k={k}, m={m}")
    if (model.k, model.m) != (k, m):
        raise ArgumentError(f"model has (k, m)=({model.k}, {model.m}), requested ({k}, {m})")
    if theta.dimension != model.tangent_dim:
        raise ArgumentError(f"theta lives on {theta.dimension} torus dims, model has {model.tangent_dim}")
    lower, upper = nu_range(k, m)
    if nu >= upper or (nu < lower and not exploratory):
        raise ConstraintError(f"nu={nu} outside the admissible range [{lower:.6g}, {upper:.6g})")

    delta = admissible_delta_bound(k, m) + 1.0 if delta is None else delta
    psi = WeightFamily(kind=WeightKind.G_SUB, k=k, m=m, delta=delta)
    f_nu = WeightFamily(kind=WeightKind.F_NU, k=k, m=m, delta=delta, nu=nu, A=1.0)
    if scan_radii is None:
        scan_radii = np.geomspace(1e-3 * model.tube_radius, 0.95 * model.tube_radius, 20)
    grid = scan_grid(model, scan_radii, torus_points, sphere_points, seed)
    scanner = HessianScanner(model, tol, threads=threads)

    C = c_start
    while C <= c_cap:
        field_ = LocalizedField(theta, psi, f_nu, C, model)
        report = scanner.scan(field_, grid)
        logger.debug(f"🔍 C={C:g}: min margin {report.min_margin:.3g}, passed={report.passed}")
        if report.passed:
            field_.certificate = report
            logger.info(f"✅ Localized weight (k={k}, m={m}, nu={nu}) certified with C={C:g}")
            return field_
        C *= 2.0
    raise ConstructionError(f"no C <= {c_cap:g} certifies the localized weight with nu={nu}")
