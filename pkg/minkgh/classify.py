"""Spectral classification of Minkowski isometries.

Every isometry is split into a rotation part R, a nilpotent part p and a
translation reduced modulo the image of L - id. The split is computed from the
generalized 1-eigenspace ker (L - id)^3 rather than from eigenvalues alone,
since defective eigenvalue 1 is perturbed by roughly eps^(1/3) in floating point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
from scipy.linalg import null_space, orth

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ClassificationMismatchError, ConstructionFailure
from .minkowski import (
    CausalCharacter,
    Isometry,
    causal_character,
    eta_orthogonal_complement,
    euclid_norm,
    lorentz_inverse,
    lower,
    mink_product,
    validate_isometry,
)

LOGGER = logging.getLogger("minkgh.classify")

MAX_ROTATION_ORDER = 64


class Family(str, Enum):
    ELLIPTIC = "elliptic"
    HYPERBOLIC = "hyperbolic"
    UNIPOTENT = "unipotent"
    LOXODROMIC = "loxodromic"
    PARABOLIC = "parabolic"


class ParabolicKind(str, Enum):
    LINEAR = "linear"
    TANGENT = "tangent"
    TRANSVERSE = "transverse"


@dataclass(frozen=True)
class UnipotentFrame:
    v0: np.ndarray
    v1: np.ndarray
    vn: np.ndarray
    tau_normalized: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "v0": self.v0.tolist(),
            "v1": self.v1.tolist(),
            "vn": self.vn.tolist(),
            "tau_normalized": self.tau_normalized.tolist(),
        }


@dataclass(frozen=True)
class Decomposition:
    """Adapted data of an isometry.

    In the coordinates x' = x - base_point the isometry reads
    x' -> L x' + fixed_translation, with L = R (id + nilpotent).
    """

    family: Family
    rotation: np.ndarray
    nilpotent: np.ndarray
    fixed_translation: np.ndarray
    base_point: np.ndarray
    rotation_order: Optional[int]
    boost_strength: Optional[float] = None
    v_plus: Optional[np.ndarray] = None
    v_minus: Optional[np.ndarray] = None

    @property
    def rotation_trivial(self) -> bool:
        return self.rotation_order == 1


@dataclass(frozen=True)
class IsoClass:
    family: Family
    parabolic_kind: Optional[ParabolicKind] = None
    witnesses: Optional[UnipotentFrame] = None
    boost_strength: Optional[float] = None
    elliptic_tau_character: Optional[CausalCharacter] = None
    pure_translation: bool = False
    rotation_order: Optional[int] = None

    @property
    def label(self) -> str:
        if self.pure_translation:
            return f"{self.family.value} (pure translation)"
        if self.parabolic_kind is not None:
            return f"{self.family.value} ({self.parabolic_kind.value})"
        return self.family.value

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family.value,
            "label": self.label,
            "parabolic_kind": self.parabolic_kind.value if self.parabolic_kind else None,
            "witnesses": self.witnesses.to_dict() if self.witnesses else None,
            "boost_strength": self.boost_strength,
            "elliptic_tau_character": self.elliptic_tau_character.to_dict() if self.elliptic_tau_character else None,
            "pure_translation": self.pure_translation,
            "rotation_order": self.rotation_order,
        }


def _future_unit(v: np.ndarray) -> np.ndarray:
    v = np.real(np.asarray(v))
    v = v / euclid_norm(v)
    return -v if v[0] < 0 else v


def rotation_order_from_eigenvalues(eigenvalues: np.ndarray, tol: float, max_order: int = MAX_ROTATION_ORDER) -> Optional[int]:
    """Smallest m <= max_order with every eigenvalue an m-th root of unity."""
    for m in range(1, max_order + 1):
        if np.max(np.abs(eigenvalues ** m - 1.0)) <= tol * m:
            return m
    return None


def _projector(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Projector onto span(first) along span(second)."""
    basis = np.hstack([first, second])
    k = first.shape[1]
    selector = np.zeros(basis.shape[1])
    selector[:k] = 1.0
    return basis @ np.diag(selector) @ np.linalg.inv(basis)


def _split_semisimple_translation(L: np.ndarray, tau: np.ndarray, tol: Tolerances):
    n = L.shape[0]
    p = L - np.eye(n)
    image = orth(p, rcond=tol.rank)
    kernel = null_space(p, rcond=tol.rank)
    if kernel.shape[1] == 0:
        c = np.linalg.solve(p, -tau)
        return np.zeros(n), c
    coeffs = np.linalg.lstsq(np.hstack([image, kernel]), tau, rcond=None)[0]
    image_part = image @ coeffs[: image.shape[1]]
    fixed = kernel @ coeffs[image.shape[1]:]
    c = np.linalg.lstsq(p, -image_part, rcond=tol.rank)[0]
    return fixed, c


def _decompose(g: Isometry, tol: Tolerances) -> Decomposition:
    L = g.L
    tau = g.tau
    n = g.dim
    identity = np.eye(n)
    p_full = L - identity
    scale = max(1.0, float(np.max(np.abs(L))))

    if np.max(np.abs(p_full)) <= tol.rel * scale:
        return Decomposition(Family.ELLIPTIC, identity, np.zeros((n, n)), tau.copy(), np.zeros(n), rotation_order=1)

    cube = p_full @ p_full @ p_full
    _, singular, vt = np.linalg.svd(cube)
    threshold = tol.rank * max(1.0, singular[0])
    generalized = vt[singular <= threshold].T
    if generalized.shape[1] == n:
        rotation = identity.copy()
        nilpotent = p_full.copy()
    elif generalized.shape[1] == 0:
        rotation = L.copy()
        nilpotent = np.zeros((n, n))
    else:
        complement = eta_orthogonal_complement(generalized, n, tol.rank)
        proj = _projector(generalized, complement)
        nilpotent = p_full @ proj
        rotation = L @ (identity - proj) + proj

    nil_size = float(np.max(np.abs(nilpotent)))
    if nil_size > tol.nilpotent * scale:
        nil_power = np.linalg.matrix_power(nilpotent / nil_size, n)
        if np.max(np.abs(nil_power)) <= tol.nilpotent:
            trivial_rotation = np.max(np.abs(rotation - identity)) <= tol.nilpotent * scale
            family = Family.UNIPOTENT if trivial_rotation else Family.PARABOLIC
            c_ls = np.linalg.lstsq(p_full, tau, rcond=tol.rank)[0]
            reduced = tau - p_full @ c_ls
            order = 1 if trivial_rotation else rotation_order_from_eigenvalues(np.linalg.eigvals(rotation), tol.unit_circle)
            LOGGER.debug("decomposed %s with nilpotent size %.3e", family.value, nil_size)
            return Decomposition(family, rotation, nilpotent, reduced, -c_ls, rotation_order=order)

    eigenvalues = np.linalg.eigvals(L)
    rho = float(np.max(np.abs(eigenvalues)))
    fixed, c = _split_semisimple_translation(L, tau, tol)
    if rho > 1.0 + tol.loxodromic:
        v_plus = _dominant_eigenvector(L)
        v_minus = _dominant_eigenvector(lorentz_inverse(L))
        plane = np.column_stack([v_plus, v_minus])
        transverse = eta_orthogonal_complement(plane, n, tol.rank)
        proj_transverse = _projector(transverse, plane)
        rotation = L @ proj_transverse + (identity - proj_transverse)
        others = eigenvalues[np.argsort(np.abs(eigenvalues))][1:-1]
        order = rotation_order_from_eigenvalues(others, tol.unit_circle) if others.size else 1
        trivial_rotation = np.max(np.abs(rotation - identity)) <= tol.nilpotent * scale
        family = Family.HYPERBOLIC if trivial_rotation else Family.LOXODROMIC
        return Decomposition(
            family,
            rotation,
            np.zeros((n, n)),
            fixed,
            c,
            rotation_order=1 if trivial_rotation else order,
            boost_strength=float(np.log(rho)),
            v_plus=v_plus,
            v_minus=v_minus,
        )

    order = rotation_order_from_eigenvalues(eigenvalues, tol.unit_circle)
    return Decomposition(Family.ELLIPTIC, L.copy(), np.zeros((n, n)), fixed, c, rotation_order=order)


def _dominant_eigenvector(L: np.ndarray) -> np.ndarray:
    eigenvalues, vectors = np.linalg.eig(L)
    index = int(np.argmax(np.abs(eigenvalues)))
    return _future_unit(vectors[:, index])


def decompose(g: Isometry, tol: Tolerances = DEFAULT_TOLERANCES) -> Decomposition:
    return g.cached(("decompose", tol), lambda: _decompose(g, tol))


def unipotent_frame(g: Isometry, tol: Tolerances = DEFAULT_TOLERANCES) -> UnipotentFrame:
    return g.cached(("frame", tol), lambda: _unipotent_frame(g, tol))


def _unipotent_frame(g: Isometry, tol: Tolerances) -> UnipotentFrame:
    data = decompose(g, tol)
    if data.family not in (Family.UNIPOTENT, Family.PARABOLIC):
        raise ClassificationMismatchError(f"unipotent frame requested for a {data.family.value} isometry")
    n = g.dim
    p = data.nilpotent
    p2 = p @ p
    scale = max(1.0, float(np.max(np.abs(p))))
    if np.max(np.abs(p2)) > tol.nilpotent * scale * scale:
        column_norms = np.linalg.norm(p2, axis=0)
        index = int(np.argmax(column_norms))
        image = p2[:, index]
        sign = -1.0 if image[0] < 0 else 1.0
        v0 = sign * image / column_norms[index]
    else:
        kernel = null_space(p, rcond=tol.rank)
        image_space = orth(p, rcond=tol.rank)
        meet = null_space(np.hstack([kernel, -image_space]), rcond=tol.rank)
        if meet.shape[1] == 0:
            raise ConstructionFailure("Im p and ker p do not intersect")
        v0 = _future_unit(kernel @ meet[: kernel.shape[1], 0])
        pairings = np.abs(lower(v0))
        index = int(np.argmax(pairings))
        sign = 1.0
    basis_vector = np.zeros(n)
    basis_vector[index] = sign
    # move e_i along v0 until it is lightlike; p and p^2 are unchanged since p(v0) = 0
    alpha = -mink_product(basis_vector, basis_vector) / (2.0 * mink_product(basis_vector, v0))
    vn = basis_vector + alpha * v0
    v1 = p @ vn
    frame = UnipotentFrame(v0=v0, v1=v1, vn=vn, tau_normalized=data.fixed_translation.copy())
    _check_frame(frame, p, tol)
    return frame


def _check_frame(frame: UnipotentFrame, p: np.ndarray, tol: Tolerances) -> None:
    scale = max(1.0, float(np.max(np.abs(p)))) * max(1.0, euclid_norm(frame.vn))
    residuals = {
        "p(v0)": euclid_norm(p @ frame.v0),
        "<v0|v0>": abs(mink_product(frame.v0, frame.v0)),
        "<vn|vn>": abs(mink_product(frame.vn, frame.vn)) / max(1.0, euclid_norm(frame.vn) ** 2),
    }
    for name, value in residuals.items():
        if value > tol.nilpotent * scale:
            raise ConstructionFailure(f"unipotent frame invariant {name} violated (residual {value:.3e})")
    if mink_product(frame.v1, frame.v1) <= 0:
        raise ConstructionFailure("unipotent frame vector v1 is not spacelike")


def parabolic_kind(g: Isometry, tol: Tolerances = DEFAULT_TOLERANCES) -> ParabolicKind:
    data = decompose(g, tol)
    if data.family not in (Family.UNIPOTENT, Family.PARABOLIC):
        raise ClassificationMismatchError(f"parabolic kind requested for a {data.family.value} isometry")
    frame = unipotent_frame(g, tol)
    reduced = data.fixed_translation
    threshold = tol.rank * max(1.0, euclid_norm(g.tau)) * max(1.0, float(np.max(np.abs(g.L))))
    if abs(mink_product(reduced, frame.v0)) > threshold:
        return ParabolicKind.TRANSVERSE
    if euclid_norm(reduced) > threshold:
        return ParabolicKind.TANGENT
    return ParabolicKind.LINEAR


def classify(g: Isometry, tol: Tolerances = DEFAULT_TOLERANCES) -> IsoClass:
    return g.cached(("classify", tol), lambda: _classify(g, tol))


def _classify(g: Isometry, tol: Tolerances) -> IsoClass:
    validate_isometry(g.L, g.tau, tol.rel)
    data = decompose(g, tol)
    if data.family in (Family.UNIPOTENT, Family.PARABOLIC):
        return IsoClass(
            family=data.family,
            parabolic_kind=parabolic_kind(g, tol),
            witnesses=unipotent_frame(g, tol),
            rotation_order=data.rotation_order,
        )
    if data.family in (Family.HYPERBOLIC, Family.LOXODROMIC):
        return IsoClass(family=data.family, boost_strength=data.boost_strength, rotation_order=data.rotation_order)
    pure = data.rotation_order == 1 and bool(np.any(g.tau)) and np.allclose(g.L, np.eye(g.dim), atol=tol.rel)
    return IsoClass(
        family=Family.ELLIPTIC,
        elliptic_tau_character=causal_character(data.fixed_translation, tol.causal, tol.zero),
        pure_translation=pure,
        rotation_order=data.rotation_order,
    )


@dataclass(frozen=True)
class StarIdentityReport:
    samples: int
    max_residual: float
    mean_residual: float

    def to_dict(self) -> Dict[str, Any]:
        return {"samples": self.samples, "max_residual": self.max_residual, "mean_residual": self.mean_residual}


def verify_star_identity(g: Isometry, samples: int = 100, rng: Optional[np.random.Generator] = None) -> StarIdentityReport:
    """Evaluate <x|p y> + <p x|y> + <p x|p y> on random unit pairs."""
    rng = rng if rng is not None else np.random.default_rng(0)
    p = g.L - np.eye(g.dim)
    xs = rng.normal(size=(samples, g.dim))
    ys = rng.normal(size=(samples, g.dim))
    xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    ys /= np.linalg.norm(ys, axis=1, keepdims=True)
    pxs = xs @ p.T
    pys = ys @ p.T
    residuals = np.abs(
        np.einsum("ij,ij->i", lower(xs), pys)
        + np.einsum("ij,ij->i", lower(pxs), ys)
        + np.einsum("ij,ij->i", lower(pxs), pys)
    )
    return StarIdentityReport(samples=samples, max_residual=float(residuals.max()), mean_residual=float(residuals.mean()))
