"""Achronal domains of single isometries and the causality sets U(g)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from .classify import Family, ParabolicKind, classify, decompose
from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ClassificationMismatchError, WitnessNotFoundError
from .minkowski import (
    CausalKind,
    Isometry,
    act,
    causal_character,
    euclid_norm,
    inverse,
    mink_product,
)

LOGGER = logging.getLogger("minkgh.achronal")

OVERFLOW_NORM = 1e12
WITNESS_ITERATES = 100


class Verdict(str, Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary"
    INDETERMINATE = "indeterminate"

    def __bool__(self) -> bool:
        return self is Verdict.INSIDE

    @property
    def is_decided(self) -> bool:
        return self in (Verdict.INSIDE, Verdict.OUTSIDE)


class AchronalKindName(str, Enum):
    EMPTY = "empty"
    ALL = "all"
    COMPLEMENT_OF_FIXED_SET = "complement_of_fixed_set"
    WEDGE = "wedge"
    COMPLEMENT_OF_DEGENERATE_HYPERPLANE = "complement_of_degenerate_hyperplane"


@dataclass(frozen=True)
class AchronalKind:
    """Closed form of Omega_g with the witnesses needed for membership.

    ``fixed_basis`` spans the linear part of the excluded affine set through
    ``base_point``; ``hyperplane_normal`` is v0 when the excluded set lies in
    the degenerate hyperplane J^perp.
    """

    kind: AchronalKindName
    family: Family
    base_point: np.ndarray
    wedge_plus: Optional[np.ndarray] = None
    wedge_minus: Optional[np.ndarray] = None
    fixed_basis: Optional[np.ndarray] = None
    hyperplane_normal: Optional[np.ndarray] = None
    rotation_order: Optional[int] = None

    @property
    def irrational_rotation(self) -> bool:
        return self.kind == AchronalKindName.COMPLEMENT_OF_FIXED_SET and self.rotation_order is None

    def hyperplane_level(self) -> Optional[float]:
        if self.hyperplane_normal is None:
            return None
        return mink_product(self.base_point, self.hyperplane_normal)

    def to_dict(self) -> Dict[str, Any]:
        def _maybe(value: Optional[np.ndarray]) -> Optional[list]:
            return None if value is None else np.asarray(value).tolist()

        return {
            "kind": self.kind.value,
            "family": self.family.value,
            "base_point": self.base_point.tolist(),
            "wedge_plus": _maybe(self.wedge_plus),
            "wedge_minus": _maybe(self.wedge_minus),
            "fixed_basis": _maybe(self.fixed_basis),
            "hyperplane_normal": _maybe(self.hyperplane_normal),
            "hyperplane_level": self.hyperplane_level(),
            "rotation_order": self.rotation_order,
            "irrational_rotation": self.irrational_rotation,
        }


def _periodic_subspace(rotation: np.ndarray, order: Optional[int], tol: Tolerances) -> np.ndarray:
    n = rotation.shape[0]
    if order is None:
        return null_space(rotation - np.eye(n), rcond=tol.rank)
    return null_space(np.linalg.matrix_power(rotation, order) - np.eye(n), rcond=tol.rank)


def achronal_kind(g: Isometry, tol: Tolerances = DEFAULT_TOLERANCES) -> AchronalKind:
    return g.cached(("achronal_kind", tol), lambda: _achronal_kind(g, tol))


def _achronal_kind(g: Isometry, tol: Tolerances) -> AchronalKind:
    info = classify(g, tol)
    data = decompose(g, tol)
    n = g.dim
    c = data.base_point
    if info.family == Family.ELLIPTIC:
        character = info.elliptic_tau_character
        if character.kind == CausalKind.TIMELIKE:
            return AchronalKind(AchronalKindName.EMPTY, info.family, c)
        if character.kind == CausalKind.SPACELIKE:
            return AchronalKind(AchronalKindName.ALL, info.family, c)
        periodic = _periodic_subspace(data.rotation, data.rotation_order, tol)
        if character.kind == CausalKind.LIGHTLIKE and periodic.shape[1] == n:
            # g^m is a lightlike translation
            return AchronalKind(AchronalKindName.EMPTY, info.family, c, rotation_order=data.rotation_order)
        return AchronalKind(
            AchronalKindName.COMPLEMENT_OF_FIXED_SET,
            info.family,
            c,
            fixed_basis=periodic,
            rotation_order=data.rotation_order,
        )
    if info.family in (Family.HYPERBOLIC, Family.LOXODROMIC):
        pairing = mink_product(data.v_plus, data.v_minus)
        return AchronalKind(
            AchronalKindName.WEDGE,
            info.family,
            c,
            wedge_plus=data.v_plus,
            wedge_minus=data.v_minus / pairing,
            rotation_order=data.rotation_order,
        )
    kind = info.parabolic_kind
    if kind == ParabolicKind.TANGENT:
        return AchronalKind(AchronalKindName.ALL, info.family, c)
    if kind == ParabolicKind.TRANSVERSE:
        return AchronalKind(AchronalKindName.EMPTY, info.family, c)
    periodic = _periodic_subspace(data.rotation, data.rotation_order, tol)
    return AchronalKind(
        AchronalKindName.COMPLEMENT_OF_FIXED_SET,
        info.family,
        c,
        fixed_basis=periodic,
        hyperplane_normal=info.witnesses.v0,
        rotation_order=data.rotation_order,
    )


def _distance_to_subspace(x: np.ndarray, basis: np.ndarray) -> float:
    if basis.shape[1] == 0:
        return euclid_norm(x)
    coeffs = np.linalg.lstsq(basis, x, rcond=None)[0]
    return euclid_norm(x - basis @ coeffs)


def in_achronal(g: Isometry, x: Sequence[float], tol: Tolerances = DEFAULT_TOLERANCES) -> Verdict:
    """Membership of x in Omega_g through the closed form.

    Points within ``tol.boundary`` of the boundary (relative to the size of
    x - base_point) are reported as ``Verdict.BOUNDARY``.
    """
    shape = achronal_kind(g, tol)
    x = np.asarray(x, dtype=float)
    offset = x - shape.base_point
    size = max(1.0, euclid_norm(offset))
    if shape.kind == AchronalKindName.EMPTY:
        return Verdict.OUTSIDE
    if shape.kind == AchronalKindName.ALL:
        return Verdict.INSIDE
    if shape.kind == AchronalKindName.WEDGE:
        product = mink_product(offset, shape.wedge_minus) * mink_product(offset, shape.wedge_plus)
        if abs(product) <= tol.boundary * size * size:
            return Verdict.BOUNDARY
        return Verdict.INSIDE if product < 0 else Verdict.OUTSIDE
    if shape.hyperplane_normal is not None:
        height = mink_product(offset, shape.hyperplane_normal)
        if abs(height) > tol.boundary * size:
            return Verdict.INSIDE
    if _distance_to_subspace(offset, shape.fixed_basis) <= tol.boundary * size:
        return Verdict.BOUNDARY
    return Verdict.INSIDE


def in_U(g: Isometry, x: Sequence[float], tol: Tolerances = DEFAULT_TOLERANCES) -> Verdict:
    info = classify(g, tol)
    if info.family == Family.ELLIPTIC:
        if info.elliptic_tau_character.kind != CausalKind.SPACELIKE:
            return Verdict.OUTSIDE
        return in_achronal(g, x, tol)
    if info.family in (Family.UNIPOTENT, Family.PARABOLIC) and info.parabolic_kind == ParabolicKind.LINEAR:
        shape = achronal_kind(g, tol)
        offset = np.asarray(x, dtype=float) - shape.base_point
        height = mink_product(offset, shape.hyperplane_normal)
        if abs(height) <= tol.boundary * max(1.0, euclid_norm(offset)):
            return Verdict.BOUNDARY
        return Verdict.INSIDE
    return in_achronal(g, x, tol)


def _separation_verdict(d: np.ndarray, tol: Tolerances) -> Verdict:
    character = causal_character(d, tol.causal, tol.zero)
    if character.kind == CausalKind.TIMELIKE:
        return Verdict.OUTSIDE
    if character.kind == CausalKind.SPACELIKE:
        return Verdict.INSIDE
    return Verdict.BOUNDARY


def iterate_oracle(g: Isometry, x: Sequence[float], qmax: int, tol: Tolerances = DEFAULT_TOLERANCES) -> Verdict:
    """Brute-force membership: inspect g^q x - x for 0 < |q| <= qmax."""
    if qmax < 1:
        raise ValueError(f"qmax must be at least 1, got {qmax}")
    x = np.asarray(x, dtype=float)
    verdict = Verdict.INSIDE
    overflow = False
    for step in (g, inverse(g)):
        current = x
        for q in range(1, qmax + 1):
            current = act(step, current)
            if euclid_norm(current) > OVERFLOW_NORM:
                overflow = True
                break
            outcome = _separation_verdict(current - x, tol)
            if outcome == Verdict.OUTSIDE:
                return Verdict.OUTSIDE
            if outcome == Verdict.BOUNDARY:
                verdict = Verdict.BOUNDARY
    if overflow:
        LOGGER.warning("iterate oracle stopped on overflow before reaching q=%d", qmax)
        return Verdict.INDETERMINATE
    return verdict


def _is_causal(d: np.ndarray, tol: Tolerances) -> bool:
    return causal_character(d, tol.causal, tol.zero).kind in (CausalKind.TIMELIKE, CausalKind.LIGHTLIKE, CausalKind.ZERO)


def causal_tail(g: Isometry, x: np.ndarray, x0: np.ndarray, iterates: int = WITNESS_ITERATES, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """True when the last quarter of forward or backward iterates of x are causally related to x0."""
    start = iterates - iterates // 4
    for step in (g, inverse(g)):
        current = np.asarray(x, dtype=float)
        related = True
        for q in range(1, iterates + 1):
            current = act(step, current)
            if q >= start and not _is_causal(current - x0, tol):
                related = False
                break
        if related:
            return True
    return False


def _witness_candidates(g: Isometry, x0: np.ndarray, tol: Tolerances) -> List[np.ndarray]:
    info = classify(g, tol)
    frame = info.witnesses
    p = decompose(g, tol).nilpotent
    n = g.dim
    directions: List[np.ndarray] = [frame.vn, -frame.vn]
    for i in range(n):
        unit = np.zeros(n)
        unit[i] = 1.0
        directions.extend([unit, -unit])
    candidates: List[np.ndarray] = []
    for scale in (1.0, 10.0, 100.0):
        for direction in directions:
            candidates.append(x0 + scale * direction)
    tau = g.tau
    if info.parabolic_kind == ParabolicKind.TRANSVERSE:
        lead = p @ p @ tau
        return sorted(candidates, key=lambda x: -mink_product(lead, x))
    return sorted(candidates, key=lambda x: -mink_product(p @ p @ x + p @ tau, x0))


def visibility_witness(g: Isometry, x0: Sequence[float], tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Point x with infinitely many g-iterates causally related to x0.

    Candidates are ordered by the sign of the leading coefficient of
    |g^q x - x0|^2 and accepted after an empirical check over 100 iterates.
    """
    info = classify(g, tol)
    if info.family not in (Family.UNIPOTENT, Family.PARABOLIC):
        raise ClassificationMismatchError(f"visibility witness needs a parabolic isometry, got {info.family.value}")
    x0 = np.asarray(x0, dtype=float)
    for candidate in _witness_candidates(g, x0, tol):
        if causal_tail(g, candidate, x0, WITNESS_ITERATES, tol):
            return candidate
    raise WitnessNotFoundError(f"no visibility witness found for base point {x0.tolist()}")


def membership_report(g: Isometry, points: Iterable[Sequence[float]], qmax: int = 0, tol: Tolerances = DEFAULT_TOLERANCES) -> List[Dict[str, Any]]:
    rows: List[Dict[str, Any]] = []
    for point in points:
        row: Dict[str, Any] = {
            "point": list(map(float, point)),
            "in_achronal": in_achronal(g, point, tol).value,
            "in_U": in_U(g, point, tol).value,
        }
        if qmax > 0:
            row["oracle"] = iterate_oracle(g, point, qmax, tol).value
        rows.append(row)
    return rows
