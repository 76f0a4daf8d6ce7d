"""Twisted first cohomology of a group with fixed linear part.

A cocycle is stored by its values on the generators, flattened to coordinates
(tau_1, ..., tau_k) in R^(n k). Relations become linear conditions on these
coordinates through tau(g h) = tau(g) + L(g) tau(h) and
tau(g^-1) = -L(g)^-1 tau(g).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np
from scipy.linalg import null_space, orth

from .achronal import AchronalKindName, achronal_kind
from .config import DEFAULT_TOLERANCES, Tolerances
from .convex_domain import DomainOrientation
from .errors import ConstructionFailure, DimensionMismatchError, RelationResidualError
from .kleinian import AdmissibilityResult, AdmissibilityStatus, GroupSpec, admissibility, evaluate_word, format_word
from .minkowski import Isometry, identity_isometry, lorentz_inverse, lower, mink_product, rotation_matrix

LOGGER = logging.getLogger("minkgh.cohomology")

RANK_THRESHOLD = 1e-8
TRI_PROBE_DEPTH = 4


def _linear_spec(spec: GroupSpec) -> GroupSpec:
    return GroupSpec(tuple(Isometry(g.L, np.zeros(g.dim)) for g in spec.generators), spec.relations, spec.name, spec.tol)


def _check_linear_relations(spec: GroupSpec) -> None:
    linear = _linear_spec(spec)
    for relation, residual in zip(linear.relations, linear.relation_residuals()):
        if residual > max(spec.tol.rel, RANK_THRESHOLD):
            raise RelationResidualError(f"linear parts violate relation {format_word(relation)} (residual {residual:.3e})")


def relation_matrix(spec: GroupSpec) -> np.ndarray:
    """Rows: the value tau(w) of each relation w, linear in the generator values."""
    n, k = spec.dim, spec.rank
    inverses = [lorentz_inverse(g.L) for g in spec.generators]
    blocks = []
    for relation in spec.relations:
        block = np.zeros((n, n * k))
        prefix = np.eye(n)
        for letter in relation:
            index = abs(letter) - 1
            columns = slice(n * index, n * (index + 1))
            if letter > 0:
                block[:, columns] += prefix
                prefix = prefix @ spec.generators[index].L
            else:
                block[:, columns] -= prefix @ inverses[index]
                prefix = prefix @ inverses[index]
        blocks.append(block)
    if not blocks:
        return np.zeros((0, n * k))
    return np.vstack(blocks)


def coboundary_matrix(spec: GroupSpec) -> np.ndarray:
    """v -> (g_1 v - v, ..., g_k v - v)."""
    n = spec.dim
    return np.vstack([g.L - np.eye(n) for g in spec.generators])


@dataclass(frozen=True)
class Cocycle:
    values: np.ndarray
    base_spec: GroupSpec

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float, copy=True).reshape(self.base_spec.rank, self.base_spec.dim)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def coordinates(self) -> np.ndarray:
        return self.values.ravel()

    def residual(self) -> float:
        matrix = relation_matrix(self.base_spec)
        if matrix.shape[0] == 0:
            return 0.0
        return float(np.max(np.abs(matrix @ self.coordinates)))

    def representation(self, name: Optional[str] = None) -> GroupSpec:
        generators = tuple(Isometry(g.L, tau) for g, tau in zip(self.base_spec.generators, self.values))
        return GroupSpec(generators, self.base_spec.relations, name or f"{self.base_spec.name} (cocycle)", self.base_spec.tol)

    def scaled(self, factor: float) -> "Cocycle":
        return Cocycle(factor * self.values, self.base_spec)

    def __add__(self, other: "Cocycle") -> "Cocycle":
        if other.values.shape != self.values.shape:
            raise DimensionMismatchError("cocycles over different groups")
        return Cocycle(self.values + other.values, self.base_spec)

    def value_on(self, word: Sequence[int]) -> np.ndarray:
        return evaluate_word(self.representation(), word).tau

    def to_dict(self) -> Dict[str, Any]:
        return {"values": self.values.tolist(), "residual": self.residual()}


def cocycle_from_coordinates(spec: GroupSpec, coordinates: Sequence[float], tol: Optional[Tolerances] = None) -> Cocycle:
    tol = tol or spec.tol
    coordinates = np.asarray(coordinates, dtype=float)
    if coordinates.size != spec.rank * spec.dim:
        raise DimensionMismatchError(f"expected {spec.rank * spec.dim} coordinates, got {coordinates.size}")
    cocycle = Cocycle(coordinates, _linear_spec(spec))
    scale = max(1.0, float(np.max(np.abs(coordinates))))
    if cocycle.residual() > max(tol.rel, RANK_THRESHOLD) * scale * 1e2:
        raise RelationResidualError(f"values violate the cocycle relations (residual {cocycle.residual():.3e})")
    return cocycle


def coboundary_of(spec: GroupSpec, v: Sequence[float]) -> Cocycle:
    v = np.asarray(v, dtype=float)
    return Cocycle(coboundary_matrix(spec) @ v, _linear_spec(spec))


def _rank(singular_values: np.ndarray) -> int:
    if singular_values.size == 0 or singular_values[0] == 0.0:
        return 0
    return int(np.sum(singular_values > RANK_THRESHOLD * singular_values[0]))


def _rank_gap(singular_values: np.ndarray, rank: int) -> Optional[float]:
    """sigma_r / sigma_(r+1); infinite-like when the trailing value is at rounding level."""
    if singular_values.size == 0 or rank == 0:
        return None
    floor = np.finfo(float).eps * singular_values[0]
    following = singular_values[rank] if rank < singular_values.size else 0.0
    return float(singular_values[rank - 1] / max(following, floor))


def cocycle_space(spec: GroupSpec) -> np.ndarray:
    """Orthonormal basis of Z^1 as columns in R^(n k)."""
    _check_linear_relations(spec)
    matrix = relation_matrix(spec)
    if matrix.shape[0] == 0:
        return np.eye(spec.rank * spec.dim)
    return null_space(matrix, rcond=RANK_THRESHOLD)


def coboundary_space(spec: GroupSpec) -> np.ndarray:
    """Orthonormal basis of B^1 as columns in R^(n k)."""
    matrix = coboundary_matrix(spec)
    if not np.any(matrix):
        return np.zeros((matrix.shape[0], 0))
    return orth(matrix, rcond=RANK_THRESHOLD)


def h1_dim(spec: GroupSpec) -> int:
    return cocycle_space(spec).shape[1] - coboundary_space(spec).shape[1]


def cohomology_complement(spec: GroupSpec) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of B^1 inside Z^1."""
    Z = cocycle_space(spec)
    B = coboundary_space(spec)
    if B.shape[1] == 0:
        return Z
    inside = null_space(B.T @ Z, rcond=RANK_THRESHOLD)
    return Z @ inside


@dataclass(frozen=True)
class CohomologyReport:
    z1: int
    b1: int
    z1_gap: Optional[float]
    b1_gap: Optional[float]
    coboundaries_are_cocycles: float

    @property
    def h1(self) -> int:
        return self.z1 - self.b1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "z1": self.z1,
            "b1": self.b1,
            "h1": self.h1,
            "z1_gap": self.z1_gap,
            "b1_gap": self.b1_gap,
            "coboundary_residual": self.coboundaries_are_cocycles,
        }


def cohomology_report(spec: GroupSpec) -> CohomologyReport:
    _check_linear_relations(spec)
    relations = relation_matrix(spec)
    coboundaries = coboundary_matrix(spec)
    B = coboundary_space(spec)
    z_singular = np.linalg.svd(relations, compute_uv=False) if relations.shape[0] else np.zeros(0)
    b_singular = np.linalg.svd(coboundaries, compute_uv=False)
    z_rank = _rank(z_singular)
    b_rank = _rank(b_singular)
    residual = float(np.max(np.abs(relations @ B))) if relations.shape[0] and B.shape[1] else 0.0
    return CohomologyReport(
        spec.rank * spec.dim - z_rank,
        b_rank,
        _rank_gap(z_singular, z_rank),
        _rank_gap(b_singular, b_rank),
        residual,
    )


def cone_probe(
    spec: GroupSpec,
    tau: Cocycle,
    maxlen: int,
    tol: Optional[Tolerances] = None,
    orientation: DomainOrientation = DomainOrientation.FUTURE,
) -> AdmissibilityResult:
    return admissibility(tau.representation(), maxlen, tol or spec.tol, orientation)


def first_infeasible_depth(spec: GroupSpec, tau: Cocycle, max_depth: int, tol: Optional[Tolerances] = None) -> Optional[int]:
    for depth in range(1, max_depth + 1):
        if cone_probe(spec, tau, depth, tol).status is AdmissibilityStatus.INFEASIBLE:
            return depth
    return None


def trivial_group(n: int, tol: Tolerances = DEFAULT_TOLERANCES) -> GroupSpec:
    return GroupSpec((identity_isometry(n),), ((1,),), "trivial", tol)


def ideal_vertices() -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(3) / 3.0
    return np.column_stack([np.ones(3), np.cos(angles), np.sin(angles)])


def _reflection(normal: np.ndarray) -> np.ndarray:
    return np.eye(3) - 2.0 * np.outer(normal, lower(normal)) / mink_product(normal, normal)


def three_punctured_sphere(tol: Tolerances = DEFAULT_TOLERANCES) -> GroupSpec:
    """Parabolics a, b, c with abc = id from the ideal triangle on the vertices above.

    Reflection k is in the side opposite vertex k; a fixes the first vertex,
    b the second and c the third.
    """
    vertices = ideal_vertices()
    reflections = []
    for k in range(3):
        i, j = [index for index in range(3) if index != k]
        normal = lower(np.cross(vertices[i], vertices[j]))
        reflections.append(_reflection(normal))
    r0, r1, r2 = reflections
    a, b, c = r1 @ r2, r2 @ r0, r0 @ r1
    zero = np.zeros(3)
    spec = GroupSpec((Isometry(a, zero), Isometry(b, zero), Isometry(c, zero)), ((1, 2, 3),), "three-punctured sphere", tol)
    spec.check_relations()
    return spec


def _permutation_action(R: np.ndarray) -> np.ndarray:
    """tau -> (R tau(c), R tau(a), R tau(b)) on cocycle coordinates."""
    action = np.zeros((9, 9))
    action[0:3, 6:9] = R
    action[3:6, 0:3] = R
    action[6:9, 3:6] = R
    return action


def tri_experiment(tol: Tolerances = DEFAULT_TOLERANCES, probe_depth: int = TRI_PROBE_DEPTH) -> Dict[str, Any]:
    """Classes of the three-punctured sphere group whose values are orthogonal to the cusps."""
    spec = three_punctured_sphere(tol)
    a, b, c = (g.L for g in spec.generators)
    alpha, beta, kappa = ideal_vertices()
    R = rotation_matrix(3, 2.0 * np.pi / 3.0)
    check_limit = max(tol.rel, RANK_THRESHOLD) * 1e2

    residuals = {
        "relation": spec.relation_residuals()[0],
        "permutation": float(max(np.max(np.abs(R @ a @ R.T - b)), np.max(np.abs(R @ b @ R.T - c)), np.max(np.abs(R @ c @ R.T - a)))),
        "aR_order_3": float(np.max(np.abs(np.linalg.matrix_power(a @ R, 3) - np.eye(3)))),
        "fixed_vectors": float(max(np.max(np.abs(a @ alpha - alpha)), np.max(np.abs(b @ beta - beta)), np.max(np.abs(c @ kappa - kappa)))),
        "rotated_vertices": float(max(np.max(np.abs(R @ beta - kappa)), np.max(np.abs(R @ R @ alpha - kappa)))),
    }
    failed = {key: value for key, value in residuals.items() if value > check_limit}
    if failed:
        raise ConstructionFailure(f"three-punctured sphere construction failed validation: {failed}")

    report = cohomology_report(spec)
    C = cohomology_complement(spec)
    action = _permutation_action(R)
    induced = C.T @ action @ C
    fixed_line = null_space(induced - np.eye(C.shape[1]), rcond=1e-7)

    functionals = np.zeros((3, 9))
    functionals[0, 0:3] = lower(alpha)
    functionals[1, 3:6] = lower(beta)
    functionals[2, 6:9] = lower(kappa)
    on_classes = functionals @ C
    singular = np.linalg.svd(on_classes, compute_uv=False)
    rank = _rank(singular)
    dim_E = C.shape[1] - rank
    meet = fixed_line.shape[1] - _rank(np.linalg.svd(on_classes @ fixed_line, compute_uv=False)) if fixed_line.shape[1] else 0

    # the elliptic aR fixes a timelike axis; P0 is its orthogonal plane
    axis = null_space(a @ R - np.eye(3), rcond=1e-7)[:, 0]
    axis = axis if axis[0] > 0 else -axis
    center = coboundary_of(spec, np.array([1.0, 0.0, 0.0]))
    fixed_coboundary = {
        "alpha_residual": abs(mink_product(center.values[0], alpha)),
        "axis_residual": abs(mink_product(center.values[0], axis)),
    }

    sample = cocycle_from_coordinates(spec, C @ np.ones(C.shape[1]) / np.sqrt(C.shape[1]), tol)
    depth = first_infeasible_depth(spec, sample, probe_depth, tol)
    obstruction = next(
        (format_word((index + 1,)) for index, g in enumerate(sample.representation().generators) if achronal_kind(g, tol).kind is AchronalKindName.EMPTY),
        None,
    )
    LOGGER.info("tri experiment: dim H1=%d dim E=%d first infeasible depth=%s", report.h1, dim_E, depth)
    return {
        "group": spec.to_dict(),
        "construction_residuals": residuals,
        "cohomology": report.to_dict(),
        "dim_E": dim_E,
        "functional_singular_values": singular.tolist(),
        "dim_fixed_line": int(fixed_line.shape[1]),
        "dim_E_meet_fixed_line": int(meet),
        "aR_axis": axis.tolist(),
        "R_fixed_coboundary": fixed_coboundary,
        "sample_class": sample.to_dict(),
        "first_infeasible_depth": depth,
        "sample_obstruction": obstruction,
    }
