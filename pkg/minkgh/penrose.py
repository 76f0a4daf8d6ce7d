"""Lightlike hyperplanes: the space J+ parametrized by S+ x R and its isometry action."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ClassificationMismatchError, NotLightlikeError
from .minkowski import Isometry, as_vector, euclid_norm, lower, mink_product

LOGGER = logging.getLogger("minkgh.penrose")

SPHERE_RADIUS = 1.0 / np.sqrt(2.0)
EXPANSION_STEP = 1e-5


def normalize_direction(w: Sequence[float], tol: float = DEFAULT_TOLERANCES.causal) -> np.ndarray:
    w = as_vector(w)
    size = euclid_norm(w)
    if size == 0.0:
        raise NotLightlikeError("zero vector has no lightlike direction")
    if abs(mink_product(w, w)) > tol * size * size * 1e3:
        raise NotLightlikeError(f"vector {w.tolist()} is not lightlike (self-product {mink_product(w, w):.3e})")
    v = w / size
    return -v if v[0] < 0 else v


@dataclass(frozen=True, eq=False)
class LightPlane:
    """Lightlike affine hyperplane {x : <x|v> = s}, with v future, N(v) = 1."""

    v: np.ndarray
    s: float

    def __post_init__(self) -> None:
        v = np.array(self.v, dtype=float, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "s", float(self.s))

    @classmethod
    def from_direction(cls, w: Sequence[float], s: float, tol: float = DEFAULT_TOLERANCES.causal) -> "LightPlane":
        return cls(normalize_direction(w, tol), s)

    @property
    def dim(self) -> int:
        return self.v.shape[0]

    def level(self, x: Sequence[float]) -> float:
        """<x|v> - s; negative on the future half-space."""
        return mink_product(x, self.v) - self.s

    def validate(self, tol: float = 1e-8) -> None:
        if abs(mink_product(self.v, self.v)) > tol or abs(euclid_norm(self.v) - 1.0) > tol or self.v[0] <= 0:
            raise NotLightlikeError(f"plane direction {self.v.tolist()} is not a unit future lightlike vector")

    def key(self) -> np.ndarray:
        return np.append(self.v, self.s)

    def to_dict(self) -> Dict[str, Any]:
        return {"v": self.v.tolist(), "s": self.s}


def sphere_coordinates(plane: LightPlane) -> np.ndarray:
    """Spatial part of v (on the sphere of radius 1/sqrt 2) followed by s."""
    return np.append(plane.v[1:], plane.s)


def past_chart(plane: LightPlane) -> Tuple[np.ndarray, float]:
    """The same hyperplane seen from J-: past direction -v and level -s."""
    return -plane.v, -plane.s


def expansion_factor(g: Isometry, v: Sequence[float]) -> float:
    """a(g, v) = 1 / N(L v)."""
    return 1.0 / euclid_norm(g.L @ np.asarray(v, dtype=float))


def translation_factor(g: Isometry, v: Sequence[float]) -> float:
    """b(g, v) = <tau | L v> / N(L v)."""
    image = g.L @ np.asarray(v, dtype=float)
    return mink_product(g.tau, image) / euclid_norm(image)


def act_on_J(g: Isometry, plane: LightPlane) -> LightPlane:
    image = g.L @ plane.v
    size = euclid_norm(image)
    return LightPlane(image / size, plane.s / size + mink_product(g.tau, image) / size)


def _conformal_map(L: np.ndarray, v: np.ndarray) -> np.ndarray:
    image = L @ v
    return image / euclid_norm(image)


def _sphere_tangent_basis(v: np.ndarray) -> np.ndarray:
    """Orthonormal tangent vectors to S+ at v: orthogonal to v for both forms."""
    constraints = np.vstack([v, lower(v)])
    return null_space(constraints)


def _project_to_sphere(u: np.ndarray) -> np.ndarray:
    """Nearest point of S+ (fixed time component, spatial radius 1/sqrt 2)."""
    spatial = u[1:]
    out = np.empty_like(u)
    out[0] = SPHERE_RADIUS
    out[1:] = SPHERE_RADIUS * spatial / np.linalg.norm(spatial)
    return out


def conformal_expansion(g: Isometry, v: Sequence[float], step: float = EXPANSION_STEP) -> float:
    """Operator norm of the differential of v -> [L].v on S+, by central differences."""
    v = normalize_direction(v)
    tangents = _sphere_tangent_basis(v)
    image = _conformal_map(g.L, v)
    image_tangents = _sphere_tangent_basis(image)
    jacobian = np.zeros((image_tangents.shape[1], tangents.shape[1]))
    for column in range(tangents.shape[1]):
        forward = _conformal_map(g.L, _project_to_sphere(v + step * tangents[:, column]))
        backward = _conformal_map(g.L, _project_to_sphere(v - step * tangents[:, column]))
        jacobian[:, column] = image_tangents.T @ ((forward - backward) / (2.0 * step))
    return float(np.linalg.norm(jacobian, 2))


def is_expanding_at(g: Isometry, v: Sequence[float], tol: Tolerances = DEFAULT_TOLERANCES, step: float = EXPANSION_STEP) -> bool:
    if not g.is_linear:
        raise ClassificationMismatchError("expansion on the sphere is defined for linear isometries")
    return conformal_expansion(g, v, step) > 1.0 + max(tol.loxodromic, step)


def expansion_on_J(g: Isometry, plane: LightPlane, step: float = EXPANSION_STEP) -> float:
    """Expansion of g on J+ in the product metric S+ x R."""
    return max(conformal_expansion(g, plane.v, step), expansion_factor(g, plane.v))
