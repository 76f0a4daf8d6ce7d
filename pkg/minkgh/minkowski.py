"""Minkowski linear algebra: the form, causal characters and affine isometries."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from .config import DEFAULT_TOLERANCES
from .errors import (
    DimensionMismatchError,
    InputValidationError,
    NotLorentzError,
    OrientationReversingError,
    TimeReversingError,
)

LOGGER = logging.getLogger("minkgh.minkowski")

MIN_DIMENSION = 3


def eta(n: int) -> np.ndarray:
    diagonal = np.ones(n)
    diagonal[0] = -1.0
    return np.diag(diagonal)


def as_vector(data: Any, dim: Optional[int] = None) -> np.ndarray:
    vector = np.asarray(data, dtype=float)
    if vector.ndim != 1:
        raise DimensionMismatchError(f"expected a vector, got array of shape {vector.shape}")
    if vector.shape[0] < MIN_DIMENSION:
        raise DimensionMismatchError(f"dimension {vector.shape[0]} is below the minimum {MIN_DIMENSION}")
    if dim is not None and vector.shape[0] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {vector.shape[0]}")
    if not np.all(np.isfinite(vector)):
        raise InputValidationError("vector has non-finite entries")
    return vector


def as_matrix(data: Any, dim: Optional[int] = None) -> np.ndarray:
    matrix = np.asarray(data, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {matrix.shape}")
    if dim is not None and matrix.shape[0] != dim:
        raise DimensionMismatchError(f"expected a {dim}x{dim} matrix, got {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InputValidationError("matrix has non-finite entries")
    return matrix


def _check_same_dim(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise DimensionMismatchError(f"dimension mismatch: {x.shape} vs {y.shape}")


def mink_product(x: Sequence[float], y: Sequence[float]) -> float:
    """Return -x0*y0 + sum_i x_i*y_i."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_same_dim(x, y)
    return float(-x[0] * y[0] + np.dot(x[1:], y[1:]))


def mink_norm2(x: Sequence[float]) -> float:
    return mink_product(x, x)


def euclid_norm(x: Sequence[float]) -> float:
    """The auxiliary Euclidean norm N."""
    return float(np.linalg.norm(np.asarray(x, dtype=float)))


def lower(x: np.ndarray) -> np.ndarray:
    """Covector eta @ x, so that ``lower(x) @ y == mink_product(x, y)``."""
    out = np.array(x, dtype=float, copy=True)
    out[..., 0] *= -1.0
    return out


class CausalKind(str, Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"
    ZERO = "zero"


class Orientation(str, Enum):
    FUTURE = "future"
    PAST = "past"
    NONE = "none"


@dataclass(frozen=True)
class CausalCharacter:
    kind: CausalKind
    orientation: Orientation = Orientation.NONE

    @property
    def is_causal(self) -> bool:
        return self.kind in (CausalKind.TIMELIKE, CausalKind.LIGHTLIKE)

    def to_dict(self) -> Dict[str, str]:
        return {"kind": self.kind.value, "orientation": self.orientation.value}


def causal_character(x: Sequence[float], tol: float = DEFAULT_TOLERANCES.causal, zero_tol: float = DEFAULT_TOLERANCES.zero) -> CausalCharacter:
    x = np.asarray(x, dtype=float)
    size = euclid_norm(x)
    if size <= zero_tol:
        return CausalCharacter(CausalKind.ZERO)
    q = mink_norm2(x)
    band = tol * size * size
    if q > band:
        return CausalCharacter(CausalKind.SPACELIKE)
    kind = CausalKind.TIMELIKE if q < -band else CausalKind.LIGHTLIKE
    orientation = Orientation.FUTURE if x[0] > 0 else Orientation.PAST
    return CausalCharacter(kind, orientation)


@dataclass(frozen=True, eq=False)
class Isometry:
    """Affine map x -> L x + tau.

    The constructor only freezes the arrays; use :func:`validate_isometry`
    for inputs that are not known to lie in SO0(1, n-1).
    """

    L: np.ndarray
    tau: np.ndarray
    _cache: Dict[Any, Any] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        L = np.array(self.L, dtype=float, copy=True)
        tau = np.array(self.tau, dtype=float, copy=True)
        if L.ndim != 2 or L.shape[0] != L.shape[1] or tau.shape != (L.shape[0],):
            raise DimensionMismatchError(f"linear part {L.shape} and translation {tau.shape} do not match")
        L.setflags(write=False)
        tau.setflags(write=False)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "tau", tau)

    @property
    def dim(self) -> int:
        return self.L.shape[0]

    @property
    def is_linear(self) -> bool:
        return not np.any(self.tau)

    def __call__(self, x: Sequence[float]) -> np.ndarray:
        return act(self, x)

    def cached(self, key: Any, factory):
        """Write-once cache used for classification data."""
        if key not in self._cache:
            self._cache[key] = factory()
        return self._cache[key]

    def as_affine(self) -> np.ndarray:
        n = self.dim
        out = np.eye(n + 1)
        out[:n, :n] = self.L
        out[:n, n] = self.tau
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {"L": self.L.tolist(), "tau": self.tau.tolist()}


def lorentz_inverse(L: np.ndarray) -> np.ndarray:
    n = L.shape[0]
    e = eta(n)
    return e @ L.T @ e


def validate_isometry(L: Any, tau: Any, tol: float = DEFAULT_TOLERANCES.rel) -> Isometry:
    L = as_matrix(L)
    n = L.shape[0]
    if n < MIN_DIMENSION:
        raise DimensionMismatchError(f"dimension {n} is below the minimum {MIN_DIMENSION}")
    tau = as_vector(tau, n)
    e = eta(n)
    scale = max(1.0, float(np.max(np.abs(L))) ** 2)
    residual = float(np.max(np.abs(L.T @ e @ L - e)))
    if residual > tol * scale:
        raise NotLorentzError(f"linear part does not preserve the Minkowski form (residual {residual:.3e})")
    if L[0, 0] <= 0:
        raise TimeReversingError(f"linear part reverses time orientation (L00 = {L[0, 0]:.6g})")
    det = float(np.linalg.det(L))
    if det < 0:
        raise OrientationReversingError(f"linear part reverses orientation (det = {det:.6g})")
    return Isometry(L, tau)


def compose(g: Isometry, h: Isometry) -> Isometry:
    """(g o h)(x) = g(h(x))."""
    if g.dim != h.dim:
        raise DimensionMismatchError(f"cannot compose isometries of dimensions {g.dim} and {h.dim}")
    return Isometry(g.L @ h.L, g.L @ h.tau + g.tau)


def inverse(g: Isometry) -> Isometry:
    L_inv = lorentz_inverse(g.L)
    return Isometry(L_inv, -(L_inv @ g.tau))


def act(g: Isometry, x: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != g.dim:
        raise DimensionMismatchError(f"point of dimension {x.shape[-1]} for isometry of dimension {g.dim}")
    return x @ g.L.T + g.tau


def power(g: Isometry, k: int) -> Isometry:
    base = g if k >= 0 else inverse(g)
    result = identity_isometry(g.dim)
    for _ in range(abs(k)):
        result = compose(result, base)
    return result


def matrix_distance(g: Isometry, h: Isometry) -> float:
    return float(max(np.max(np.abs(g.L - h.L)), np.max(np.abs(g.tau - h.tau))))


def is_identity(g: Isometry, tol: float = DEFAULT_TOLERANCES.rel) -> bool:
    scale = max(1.0, float(np.max(np.abs(g.L))))
    return matrix_distance(g, identity_isometry(g.dim)) <= tol * scale


def identity_isometry(n: int) -> Isometry:
    return Isometry(np.eye(n), np.zeros(n))


def translation(tau: Sequence[float]) -> Isometry:
    tau = np.asarray(tau, dtype=float)
    return Isometry(np.eye(tau.shape[0]), tau)


def boost_matrix(n: int, zeta: float, axis: int = 1) -> np.ndarray:
    L = np.eye(n)
    L[0, 0] = L[axis, axis] = np.cosh(zeta)
    L[0, axis] = L[axis, 0] = np.sinh(zeta)
    return L


def rotation_matrix(n: int, angle: float, plane: Tuple[int, int] = (1, 2)) -> np.ndarray:
    i, j = plane
    if 0 in plane or i == j:
        raise InputValidationError(f"rotation plane {plane} must use two distinct spatial axes")
    L = np.eye(n)
    c, s = np.cos(angle), np.sin(angle)
    L[i, i] = L[j, j] = c
    L[i, j] = -s
    L[j, i] = s
    return L


def boost(n: int, zeta: float, axis: int = 1, tau: Optional[Sequence[float]] = None) -> Isometry:
    return Isometry(boost_matrix(n, zeta, axis), np.zeros(n) if tau is None else tau)


def rotation(n: int, angle: float, plane: Tuple[int, int] = (1, 2), tau: Optional[Sequence[float]] = None) -> Isometry:
    return Isometry(rotation_matrix(n, angle, plane), np.zeros(n) if tau is None else tau)


def time_reflection(n: int) -> np.ndarray:
    return eta(n)


def random_lorentz(n: int, rng: np.random.Generator, max_rapidity: float = 1.0) -> np.ndarray:
    """Random element of SO0(1, n-1) as a product of spatial rotations and boosts."""
    L = np.eye(n)
    for _ in range(2):
        for i in range(1, n):
            for j in range(i + 1, n):
                L = rotation_matrix(n, rng.uniform(0.0, 2.0 * np.pi), (i, j)) @ L
        for axis in range(1, n):
            L = boost_matrix(n, rng.uniform(-max_rapidity, max_rapidity), axis) @ L
    return L


def random_isometry(n: int, rng: np.random.Generator, max_rapidity: float = 1.0, tau_scale: float = 1.0) -> Isometry:
    return Isometry(random_lorentz(n, rng, max_rapidity), rng.normal(scale=tau_scale, size=n))


def conjugate(h: Isometry, g: Isometry) -> Isometry:
    """h g h^-1."""
    return compose(compose(h, g), inverse(h))


def check_common_dimension(items: Iterable[Isometry]) -> int:
    dims = {item.dim for item in items}
    if len(dims) > 1:
        raise DimensionMismatchError(f"mixed dimensions in one computation: {sorted(dims)}")
    if not dims:
        raise InputValidationError("no isometries supplied")
    return dims.pop()


def eta_orthogonal_complement(basis: np.ndarray, n: int, tol: float = DEFAULT_TOLERANCES.rank) -> np.ndarray:
    """Basis of {w : <w|b> = 0 for every column b of ``basis``}."""
    if basis.size == 0:
        return np.eye(n)
    return null_space(lower(basis.T), rcond=tol)
