"""Discrete groups of Minkowski isometries given by generators.

Words are tuples of nonzero integers: ``k`` stands for generator k - 1 and
``-k`` for its inverse, so ``(1, -2)`` is g_0 g_1^-1. Enumeration walks reduced
words breadth first and deduplicates numerically; relations are only checked.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space
from scipy.spatial import cKDTree

from .achronal import AchronalKindName, achronal_kind
from .config import DEFAULT_TOLERANCES, SOLVER_CONFIG, Tolerances
from .convex_domain import BOX_FACTOR, DomainOrientation, LambdaSet, max_margin_witness
from .errors import (
    ClassificationMismatchError,
    EnumerationLimitError,
    InputValidationError,
    RelationResidualError,
)
from .minkowski import (
    Isometry,
    boost,
    check_common_dimension,
    compose,
    conjugate,
    euclid_norm,
    identity_isometry,
    inverse,
    lorentz_inverse,
    lower,
    mink_product,
    time_reflection,
    validate_isometry,
)
from .penrose import LightPlane, act_on_J

LOGGER = logging.getLogger("minkgh.kleinian")

Word = Tuple[int, ...]

_KEY_SEED = 20240611
SCHOTTKY_RAPIDITY = 2.5


def format_word(word: Word) -> str:
    if not word:
        return "id"
    return " ".join(f"g{abs(letter) - 1}" + ("^-1" if letter < 0 else "") for letter in word)


@dataclass(frozen=True)
class GroupSpec:
    generators: Tuple[Isometry, ...]
    relations: Tuple[Word, ...] = ()
    name: str = "group"
    tol: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self) -> None:
        generators = tuple(self.generators)
        check_common_dimension(generators)
        relations = tuple(tuple(int(letter) for letter in relation) for relation in self.relations)
        for relation in relations:
            for letter in relation:
                if letter == 0 or abs(letter) > len(generators):
                    raise InputValidationError(f"relation {relation} uses unknown generator {letter}")
        object.__setattr__(self, "generators", generators)
        object.__setattr__(self, "relations", relations)

    @classmethod
    def from_records(
        cls,
        generators: Iterable[Dict[str, Any]],
        relations: Iterable[Sequence[int]] = (),
        name: str = "group",
        tol: Tolerances = DEFAULT_TOLERANCES,
    ) -> "GroupSpec":
        items = tuple(validate_isometry(item["L"], item["tau"], tol.rel) for item in generators)
        spec = cls(items, tuple(tuple(relation) for relation in relations), name, tol)
        spec.check_relations()
        return spec

    @property
    def dim(self) -> int:
        return self.generators[0].dim

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def is_linear(self) -> bool:
        return all(g.is_linear for g in self.generators)

    def letters(self) -> List[int]:
        out: List[int] = []
        for index in range(1, self.rank + 1):
            out.extend([index, -index])
        return out

    def letter(self, letter: int) -> Isometry:
        g = self.generators[abs(letter) - 1]
        if letter > 0:
            return g
        return g.cached("inverse", lambda: inverse(g))

    def relation_residuals(self) -> List[float]:
        out = []
        for relation in self.relations:
            g = evaluate_word(self, relation)
            scale = max(1.0, float(np.max(np.abs(g.L))))
            out.append(float(max(np.max(np.abs(g.L - np.eye(self.dim))), np.max(np.abs(g.tau)))) / scale)
        return out

    def check_relations(self) -> None:
        for relation, residual in zip(self.relations, self.relation_residuals()):
            if residual > max(self.tol.rel, 1e-8):
                raise RelationResidualError(f"relation {format_word(relation)} is off the identity by {residual:.3e}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "dimension": self.dim,
            "generators": [g.to_dict() for g in self.generators],
            "relations": [list(relation) for relation in self.relations],
        }


def evaluate_word(spec: GroupSpec, word: Sequence[int]) -> Isometry:
    result = identity_isometry(spec.dim)
    for letter in word:
        if letter == 0 or abs(letter) > spec.rank:
            raise InputValidationError(f"word {tuple(word)} uses unknown generator {letter}")
        result = compose(result, spec.letter(letter))
    return result


@dataclass(frozen=True)
class WordElement:
    word: Word
    element: Isometry

    def to_dict(self) -> Dict[str, Any]:
        return {"word": list(self.word), "label": format_word(self.word), **self.element.to_dict()}


class _ElementStore:
    """Numerical set of affine maps keyed by a random linear functional."""

    def __init__(self, n: int, tol: float):
        rng = np.random.default_rng(_KEY_SEED)
        self.functional = rng.normal(size=n * n + n)
        self.weight = float(np.sum(np.abs(self.functional)))
        self.tol = tol
        self.keys: List[float] = []
        self.flat: List[np.ndarray] = []

    def _flatten(self, L: np.ndarray, tau: np.ndarray) -> np.ndarray:
        return np.concatenate([L.ravel(), tau])

    def add(self, L: np.ndarray, tau: np.ndarray) -> bool:
        """Insert unless a numerically equal map is present; True if inserted."""
        flat = self._flatten(L, tau)
        scale = max(1.0, float(np.max(np.abs(flat))))
        threshold = self.tol * scale
        key = float(self.functional @ flat)
        window = threshold * self.weight
        lo = bisect.bisect_left(self.keys, key - window)
        hi = bisect.bisect_right(self.keys, key + window)
        for position in range(lo, hi):
            if np.max(np.abs(self.flat[position] - flat)) <= threshold:
                return False
        position = bisect.bisect_left(self.keys, key)
        self.keys.insert(position, key)
        self.flat.insert(position, flat)
        return True


def enumerate_words(
    spec: GroupSpec,
    maxlen: int,
    tol: Optional[Tolerances] = None,
    max_elements: Optional[int] = None,
) -> List[WordElement]:
    """Nontrivial group elements of word length <= maxlen, shortest word first."""
    if maxlen < 1:
        raise InputValidationError(f"maxlen must be at least 1, got {maxlen}")
    tol = tol or spec.tol
    cap = int(SOLVER_CONFIG["max_elements"]) if max_elements is None else max_elements
    n = spec.dim
    store = _ElementStore(n, tol.dedup)
    store.add(np.eye(n), np.zeros(n))
    letters = spec.letters()
    letter_L = np.array([spec.letter(letter).L for letter in letters])
    letter_tau = np.array([spec.letter(letter).tau for letter in letters])

    out: List[WordElement] = []
    frontier_words: List[Word] = [()]
    frontier_L = np.eye(n)[None, :, :]
    frontier_tau = np.zeros((1, n))
    for length in range(1, maxlen + 1):
        # compose every frontier element with every letter at once
        L_all = np.einsum("aij,bjk->abik", frontier_L, letter_L)
        tau_all = np.einsum("aij,bj->abi", frontier_L, letter_tau) + frontier_tau[:, None, :]
        next_words: List[Word] = []
        next_L: List[np.ndarray] = []
        next_tau: List[np.ndarray] = []
        for a, prefix in enumerate(frontier_words):
            for b, letter in enumerate(letters):
                if prefix and prefix[-1] == -letter:
                    continue
                if not store.add(L_all[a, b], tau_all[a, b]):
                    continue
                word = prefix + (letter,)
                next_words.append(word)
                next_L.append(L_all[a, b])
                next_tau.append(tau_all[a, b])
                out.append(WordElement(word, Isometry(L_all[a, b], tau_all[a, b])))
                if len(out) > cap:
                    raise EnumerationLimitError(f"more than {cap} distinct elements up to length {length}")
        LOGGER.debug("length %d: %d new elements", length, len(next_words))
        if not next_words:
            break
        frontier_words = next_words
        frontier_L = np.array(next_L)
        frontier_tau = np.array(next_tau)
    LOGGER.info("enumerated %d elements of %s up to length %d", len(out), spec.name, maxlen)
    return out


def spectral_radii(elements: Sequence[WordElement]) -> np.ndarray:
    if not elements:
        return np.zeros(0)
    stack = np.array([item.element.L for item in elements])
    return np.max(np.abs(np.linalg.eigvals(stack)), axis=1)


@dataclass(frozen=True)
class LoxodromicDatum:
    word: Word
    contraction: float
    plane: LightPlane

    def to_dict(self) -> Dict[str, Any]:
        return {"word": list(self.word), "contraction": self.contraction, "plane": self.plane.to_dict()}


def repulsive_fixed_plane(g: Isometry, tol: Tolerances = DEFAULT_TOLERANCES, word: Word = ()) -> LoxodromicDatum:
    """Fixed plane of g in J+ whose direction has the contracting eigenvalue."""
    inverse_linear = lorentz_inverse(g.L)
    eigenvalues, vectors = np.linalg.eig(inverse_linear)
    index = int(np.argmax(eigenvalues.real))
    rho = float(eigenvalues[index].real)
    if rho <= 1.0 + tol.loxodromic:
        raise ClassificationMismatchError(f"isometry is not loxodromic (spectral radius {rho:.9g})")
    v = vectors[:, index].real
    v = v / euclid_norm(v)
    if v[0] < 0:
        v = -v
    s = -mink_product(g.tau, v) / (rho - 1.0)
    return LoxodromicDatum(tuple(word), 1.0 / rho, LightPlane(v, s))


def plane_fixed_residual(g: Isometry, plane: LightPlane) -> float:
    image = act_on_J(g, plane)
    return float(max(np.max(np.abs(image.v - plane.v)), abs(image.s - plane.s) / max(1.0, abs(plane.s))))


@dataclass(frozen=True)
class LimitSetApprox:
    data: Tuple[LoxodromicDatum, ...]
    depth: int
    elements: int

    @property
    def nonloxodromic(self) -> bool:
        return not self.data

    @property
    def lambda_set(self) -> Optional[LambdaSet]:
        if not self.data:
            return None
        return LambdaSet(tuple(item.plane for item in self.data), DomainOrientation.FUTURE)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "depth": self.depth,
            "elements": self.elements,
            "nonloxodromic": self.nonloxodromic,
            "planes": [item.to_dict() for item in self.data],
        }


def _dedup_planes(data: Iterable[LoxodromicDatum], tol: float) -> List[LoxodromicDatum]:
    """Keep the first plane of every cluster whose keys agree within tol relative to max(1, |s|)."""
    data = list(data)
    if len(data) < 2:
        return data
    keys = np.array([item.plane.key() for item in data])
    scales = np.maximum(1.0, np.abs(keys[:, -1]))
    # candidate pairs in the max norm, then the exact relative test
    earlier: Dict[int, List[int]] = {}
    for i, j in cKDTree(keys).query_pairs(tol * float(np.max(scales)), p=np.inf):
        earlier.setdefault(max(i, j), []).append(min(i, j))
    kept_mask = np.ones(len(data), dtype=bool)
    for index in range(len(data)):
        for other in earlier.get(index, ()):
            if kept_mask[other] and np.max(np.abs(keys[other] - keys[index])) <= tol * scales[other]:
                kept_mask[index] = False
                break
    return [item for item, keep in zip(data, kept_mask) if keep]


def limit_set_approx(
    spec: GroupSpec,
    maxlen: int,
    tol: Optional[Tolerances] = None,
    elements: Optional[Sequence[WordElement]] = None,
) -> LimitSetApprox:
    tol = tol or spec.tol
    if elements is None:
        elements = enumerate_words(spec, maxlen, tol)
    elements = [item for item in elements if len(item.word) <= maxlen]
    radii = spectral_radii(elements)
    data = [
        repulsive_fixed_plane(item.element, tol, item.word)
        for item, radius in zip(elements, radii)
        if radius > 1.0 + tol.loxodromic
    ]
    kept = _dedup_planes(data, tol.dedup)
    if not kept:
        LOGGER.info("no loxodromic element up to length %d", maxlen)
    else:
        LOGGER.info("limit set approximation: %d planes from %d loxodromic words", len(kept), len(data))
    return LimitSetApprox(tuple(kept), maxlen, len(elements))


class AdmissibilityStatus(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    NONLOXODROMIC = "nonloxodromic"


@dataclass(frozen=True)
class AdmissibilityResult:
    status: AdmissibilityStatus
    witness: Optional[np.ndarray]
    margin: float
    depth: int
    planes: int
    orientation: DomainOrientation = DomainOrientation.FUTURE
    obstruction: Optional[Word] = None
    limit_set: Optional[LimitSetApprox] = field(default=None, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "witness": None if self.witness is None else self.witness.tolist(),
            "margin": self.margin,
            "depth": self.depth,
            "planes": self.planes,
            "orientation": self.orientation.value,
            "obstruction": None if self.obstruction is None else format_word(self.obstruction),
        }


def find_obstruction(elements: Sequence[WordElement], tol: Tolerances) -> Optional[Word]:
    """First enumerated element whose achronal domain is empty."""
    radii = spectral_radii(elements)
    for item, radius in zip(elements, radii):
        if radius > 1.0 + tol.loxodromic:
            continue
        if achronal_kind(item.element, tol).kind is AchronalKindName.EMPTY:
            LOGGER.info("word %s has an empty achronal domain", format_word(item.word))
            return item.word
    return None


def _group_box(spec: GroupSpec) -> float:
    return BOX_FACTOR * max(1.0, max(euclid_norm(g.tau) for g in spec.generators))


def time_reflected_spec(spec: GroupSpec) -> GroupSpec:
    theta = Isometry(time_reflection(spec.dim), np.zeros(spec.dim))
    return conjugate_spec(spec, theta, name=f"{spec.name} (time reflected)")


def admissibility(
    spec: GroupSpec,
    maxlen: int,
    tol: Optional[Tolerances] = None,
    orientation: DomainOrientation = DomainOrientation.FUTURE,
    elements: Optional[Sequence[WordElement]] = None,
) -> AdmissibilityResult:
    """Strict feasibility of the half-spaces bounded by the enumerated limit planes.

    Past admissibility is future admissibility of the time-reflected group;
    ``elements`` then belong to that group and the witness is mapped back.
    """
    tol = tol or spec.tol
    orientation = DomainOrientation(orientation)
    working = spec if orientation is DomainOrientation.FUTURE else time_reflected_spec(spec)
    if elements is None:
        elements = enumerate_words(working, maxlen, tol)
    elements = [item for item in elements if len(item.word) <= maxlen]

    obstruction = find_obstruction(elements, tol)
    limit = limit_set_approx(working, maxlen, tol, elements)
    if obstruction is not None:
        return AdmissibilityResult(AdmissibilityStatus.INFEASIBLE, None, -np.inf, maxlen, len(limit.data), orientation, obstruction, limit)
    lam = limit.lambda_set
    if lam is None:
        return AdmissibilityResult(AdmissibilityStatus.NONLOXODROMIC, None, 0.0, maxlen, 0, orientation, None, limit)

    witness, margin = max_margin_witness(lam.directions, lam.levels, _group_box(spec))
    feasible = margin > tol.rel
    LOGGER.info("%s admissibility at depth %d: margin %.6g over %d planes", orientation.value, maxlen, margin, len(lam))
    if orientation is DomainOrientation.PAST:
        witness = time_reflection(spec.dim) @ witness
    status = AdmissibilityStatus.FEASIBLE if feasible else AdmissibilityStatus.INFEASIBLE
    return AdmissibilityResult(status, witness if feasible else None, margin, maxlen, len(lam), orientation, None, limit)


def refinement_curve(
    spec: GroupSpec,
    depths: Sequence[int],
    tol: Optional[Tolerances] = None,
    orientation: DomainOrientation = DomainOrientation.FUTURE,
) -> List[Dict[str, Any]]:
    """Admissibility at increasing depths from a single enumeration."""
    tol = tol or spec.tol
    depths = sorted(set(int(depth) for depth in depths))
    if not depths:
        raise InputValidationError("refinement curve needs at least one depth")
    working = spec if DomainOrientation(orientation) is DomainOrientation.FUTURE else time_reflected_spec(spec)
    elements = enumerate_words(working, depths[-1], tol)
    curve = []
    for depth in depths:
        result = admissibility(spec, depth, tol, orientation, elements)
        curve.append({"depth": depth, "status": result.status.value, "margin": result.margin, "planes": result.planes})
    return curve


class ElementaryKind(str, Enum):
    FIXED_POINT_INTERIOR = "fixed_point_interior"
    FIXED_ISOTROPIC_DIRECTION = "fixed_isotropic_direction"


@dataclass(frozen=True)
class ElementaryResult:
    elementary: bool
    kind: Optional[ElementaryKind]
    direction: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "elementary": self.elementary,
            "kind": None if self.kind is None else self.kind.value,
            "direction": None if self.direction is None else self.direction.tolist(),
        }


def _causal_vectors_in(basis: np.ndarray, tol: float) -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
    """A timelike vector and a lightlike vector in the span of ``basis`` if any."""
    if basis.shape[1] == 0:
        return None, None
    gram = basis.T @ lower(basis.T).T
    eigenvalues, vectors = np.linalg.eigh(gram)
    if eigenvalues[0] < -tol:
        return basis @ vectors[:, 0], None
    null = np.abs(eigenvalues) <= tol
    if np.any(null):
        w = basis @ vectors[:, int(np.argmax(null))]
        if euclid_norm(w) > tol:
            return None, w
    return None, None


def _null_eigendirections(L: np.ndarray, tol: Tolerances) -> List[np.ndarray]:
    candidates: List[np.ndarray] = []
    eigenvalues, vectors = np.linalg.eig(L)
    for index in range(len(eigenvalues)):
        if abs(eigenvalues[index].imag) > tol.unit_circle:
            continue
        w = vectors[:, index].real
        w = w / euclid_norm(w)
        if abs(mink_product(w, w)) <= 1e3 * tol.rank:
            candidates.append(w)
    _, null_vector = _causal_vectors_in(null_space(L - np.eye(L.shape[0]), rcond=1e-7), 1e-6)
    if null_vector is not None:
        candidates.append(null_vector / euclid_norm(null_vector))
    return candidates


def _preserves_direction(L: np.ndarray, w: np.ndarray, tol: float) -> bool:
    image = L @ w
    along = float(image @ w) / float(w @ w)
    return euclid_norm(image - along * w) <= tol * max(1.0, euclid_norm(image))


def is_elementary(spec: GroupSpec, tol: Optional[Tolerances] = None) -> ElementaryResult:
    """Look for a common fixed point in hyperbolic space or a common null eigendirection."""
    tol = tol or spec.tol
    n = spec.dim
    stacked = np.vstack([g.L - np.eye(n) for g in spec.generators])
    fixed = null_space(stacked, rcond=1e-7)
    timelike, lightlike = _causal_vectors_in(fixed, 1e-6)
    if timelike is not None:
        return ElementaryResult(True, ElementaryKind.FIXED_POINT_INTERIOR, timelike if timelike[0] > 0 else -timelike)
    if lightlike is not None:
        return ElementaryResult(True, ElementaryKind.FIXED_ISOTROPIC_DIRECTION, lightlike if lightlike[0] > 0 else -lightlike)
    for g in spec.generators:
        for w in _null_eigendirections(g.L, tol):
            if all(_preserves_direction(h.L, w, 1e-6) for h in spec.generators):
                return ElementaryResult(True, ElementaryKind.FIXED_ISOTROPIC_DIRECTION, w if w[0] > 0 else -w)
    return ElementaryResult(False, None)


def conjugate_spec(spec: GroupSpec, h: Isometry, name: Optional[str] = None) -> GroupSpec:
    return GroupSpec(tuple(conjugate(h, g) for g in spec.generators), spec.relations, name or f"{spec.name} (conjugated)", spec.tol)


def schottky_spec(
    n: int = 3,
    zeta: float = SCHOTTKY_RAPIDITY,
    taus: Optional[Sequence[Sequence[float]]] = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> GroupSpec:
    """Free group on two boosts along the first two spatial axes."""
    taus = taus if taus is not None else [np.zeros(n), np.zeros(n)]
    generators = (boost(n, zeta, 1, taus[0]), boost(n, zeta, 2, taus[1]))
    return GroupSpec(generators, (), f"schottky(zeta={zeta})", tol)
