"""
Garding Module

Elementary symmetric functions of Hermitian matrices and of radial
eigenvalue profiles, and membership tests for the Garding cone Gamma^m.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from itertools import combinations
from typing import Sequence, Union

import numpy as np

from .errors import ArgumentError

logger = logging.getLogger(__name__)

DEFAULT_CONE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class HermitianMatrix:
    """Coefficient matrix of a real (1,1)-form at a point."""
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        array = np.asarray(self.entries, dtype=complex)
        if array.ndim != 2 or array.shape[0] != array.shape[1] or array.shape[0] == 0:
            raise ArgumentError(f"Hermitian matrix must be square, got shape {array.shape}")
        symmetric = 0.5 * (array + array.conj().T)
        symmetric.setflags(write=False)
        object.__setattr__(self, "entries", symmetric)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, n: int) -> "HermitianMatrix":
        return cls(np.eye(n))

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> "HermitianMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    def conjugate_by(self, unitary: np.ndarray) -> "HermitianMatrix":
        """Return U^* H U."""
        return HermitianMatrix(unitary.conj().T @ self.entries @ unitary)

    def scaled(self, factor: float) -> "HermitianMatrix":
        return HermitianMatrix(factor * self.entries)

    def operator_norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))


@dataclass(frozen=True)
class EigenProfile:
    """
    Eigenvalues of a radial complex Hessian in the flat model.

    lambda_rad has multiplicity 1, lambda_tan multiplicity k-1 and the
    remaining n-k eigenvalues vanish.
    """
    lambda_rad: float
    lambda_tan: float
    k: int
    n: int

    def __post_init__(self):
        if self.k < 1 or self.k > self.n:
            raise ArgumentError(f"profile needs 1 <= k <= n, got k={self.k}, n={self.n}")

    def as_diagonal(self) -> np.ndarray:
        values = np.zeros(self.n)
        values[0] = self.lambda_rad
        values[1:self.k] = self.lambda_tan
        return values

    def to_matrix(self) -> HermitianMatrix:
        return HermitianMatrix.diagonal(self.as_diagonal())


class ConeStatus(str, Enum):
    STRICTLY_INSIDE = "strictly-inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


@dataclass
class ConeVerdict:
    """Outcome of a Gamma^m membership test."""
    status: ConeStatus
    worst_index: int
    margin: float

    @property
    def in_cone(self) -> bool:
        return self.status != ConeStatus.OUTSIDE


@lru_cache(maxsize=None)
def _minor_indices(n: int, j: int) -> np.ndarray:
    return np.array(list(combinations(range(n), j)), dtype=int)


def sigma_minors(H: HermitianMatrix, j: int) -> float:
    """
    j-th elementary symmetric function of the eigenvalues of H.

    Computed as the sum of all j x j principal minors, so no eigenvalue
    routine is involved and diagonal inputs are handled exactly.

    Args:
        H: Hermitian matrix
        j: Order, 1 <= j <= dim

    Returns:
        sigma_j(H)
    """
    n = H.dim
    if not 1 <= j <= n:
        raise ArgumentError(f"sigma order j={j} outside 1..{n}")
    idx = _minor_indices(n, j)
    blocks = H.entries[idx[:, :, None], idx[:, None, :]]
    return float(np.sum(np.linalg.det(blocks)).real)


def elementary_symmetric(values: np.ndarray, j: int) -> np.ndarray:
    """
    sigma_j of the entries along the last axis, by the product recursion.

    Works on batches: the result has the shape of ``values`` without its last axis.
    """
    values = np.asarray(values, dtype=float)
    if j < 0:
        raise ArgumentError(f"negative sigma order {j}")
    batch = values.shape[:-1]
    table = [np.ones(batch)] + [np.zeros(batch) for _ in range(j)]
    for i in range(values.shape[-1]):
        x = values[..., i]
        for level in range(min(j, i + 1), 0, -1):
            table[level] = table[level] + x * table[level - 1]
    return table[j]


def sigma_profile(p: EigenProfile, j: int) -> float:
    """
    sigma_j of a radial profile from the closed combinatorial formula.

    sigma_j = lambda_rad * C(k-1, j-1) * lambda_tan**(j-1) + C(k-1, j) * lambda_tan**j
    """
    if not 1 <= j <= p.k:
        raise ArgumentError(f"profile sigma order j={j} outside 1..{p.k}")
    k = p.k
    return (
        p.lambda_rad * math.comb(k - 1, j - 1) * p.lambda_tan ** (j - 1)
        + math.comb(k - 1, j) * p.lambda_tan ** j
    )


def gamma_m_test(
    H: HermitianMatrix,
    m: int,
    tolerance: float = DEFAULT_CONE_TOLERANCE,
    norm_floor: float = 0.0,
) -> ConeVerdict:
    """
    Classify H against the cone Gamma^m = {sigma_1, ..., sigma_m >= 0}.

    Each sigma_j is normalized by the j-th power of the operator norm, so the
    verdict is invariant under positive rescaling and unitary conjugation.

    Args:
        H: Hermitian matrix
        m: Cone order
        tolerance: Absolute tolerance on the normalized sigma_j
        norm_floor: Lower bound for the normalizing norm (resolution of noisy inputs)

    Returns:
        ConeVerdict with the index of the worst normalized sigma_j
    """
    if not 1 <= m <= H.dim:
        raise ArgumentError(f"cone order m={m} outside 1..{H.dim}")
    if tolerance < 0:
        raise ArgumentError("cone tolerance must be non-negative")

    norm = max(H.operator_norm(), norm_floor)
    if norm == 0.0:
        return ConeVerdict(ConeStatus.BOUNDARY, 1, 0.0)

    margins = [sigma_minors(H, j) / norm ** j for j in range(1, m + 1)]
    worst = int(np.argmin(margins))
    margin = float(margins[worst])
    if margin < -tolerance:
        status = ConeStatus.OUTSIDE
    elif abs(margin) <= tolerance:
        status = ConeStatus.BOUNDARY
    else:
        status = ConeStatus.STRICTLY_INSIDE
    return ConeVerdict(status, worst + 1, margin)


def mixed_sigma_diag(
    a: Union[Sequence[float], np.ndarray],
    b: Union[Sequence[float], np.ndarray],
    m: int,
) -> Union[float, np.ndarray]:
    """
    Polarized symmetric function sum_i a_i * sigma_{m-1}(b without i).

    This is the density of ddc(phi) ^ ddc(psi)^(m-1) ^ omega^(n-m) when both
    Hessians are diagonal in a common frame. Leading axes are treated as a batch.

    Args:
        a: Diagonal of the first Hessian
        b: Diagonal of the repeated Hessian
        m: Total degree

    Returns:
        The mixed density (scalar for 1-D inputs)
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise ArgumentError(f"length mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    n = a.shape[-1]
    if not 1 <= m <= n:
        raise ArgumentError(f"mixed order m={m} outside 1..{n}")
    a, b = np.broadcast_arrays(a, b)
    total = np.zeros(a.shape[:-1])
    for i in range(n):
        rest = np.delete(b, i, axis=-1)
        total = total + a[..., i] * elementary_symmetric(rest, m - 1)
    if total.ndim == 0:
        return float(total)
    return total
