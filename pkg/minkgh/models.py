"""Model spacetimes: translation, Misner, unipotent and radiant standard.

Null coordinates (x, y, z) use the frame col_x = (e0 + e1)/sqrt 2,
col_y = (e1 - e0)/sqrt 2 and the remaining spatial axes, so that
<p|p> = 2 x y + |z|^2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.linalg import null_space, orth

from .achronal import Verdict, iterate_oracle
from .config import DEFAULT_TOLERANCES, Tolerances
from .convex_domain import LambdaSet, hyperboloid_directions, misner_lambda
from .errors import ConstructionFailure, ModelParameterError, OutsideDomainError, SymExtInputError
from .kleinian import GroupSpec, admissibility, is_elementary, limit_set_approx
from .minkowski import Isometry, act, compose, eta, lower, mink_norm2, mink_product

LOGGER = logging.getLogger("minkgh.models")

DIVERGENCE_LENGTH = 1e3
DECADES = 8
SHRINK_STEPS = 64
UNIT_EIGENVALUE_TOL = 1e-9
EXTENSION_TOL = 1e-8
LIMIT_ACCEPT_TOL = 1e-8
RESTRICTION_TOL = 1e-10


def null_frame(n: int) -> np.ndarray:
    """Columns col_x, col_y, e2, ..., e_(n-1)."""
    frame = np.eye(n)
    root = 1.0 / np.sqrt(2.0)
    frame[:2, :2] = [[root, -root], [root, root]]
    return frame


def to_null(p: Sequence[float]) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return p @ null_frame(p.shape[-1])


def from_null(coords: Sequence[float]) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    return coords @ null_frame(coords.shape[-1]).T


def _spacelike_displacement(g: Isometry, p: np.ndarray, tol: float) -> bool:
    d = act(g, p) - p
    return mink_norm2(d) > tol * float(d @ d)


# Translation spacetimes


@dataclass(frozen=True)
class TranslationModel:
    """Quotient of M^n by a lattice of spacelike translations."""

    translations: np.ndarray

    @property
    def dim(self) -> int:
        return self.translations.shape[1]

    def generators(self) -> List[Isometry]:
        return [Isometry(np.eye(self.dim), t) for t in self.translations]

    def group(self) -> GroupSpec:
        return GroupSpec(tuple(self.generators()), (), "translation")

    def time_direction(self) -> np.ndarray:
        """Unit future timelike vector orthogonal to every translation."""
        complement = null_space(lower(self.translations), rcond=1e-12)
        gram = complement.T @ eta(self.dim) @ complement
        eigenvalues, vectors = np.linalg.eigh(gram)
        u = complement @ vectors[:, 0]
        u = u / np.sqrt(-mink_norm2(u))
        return u if u[0] > 0 else -u

    def leaf_contains(self, t: float, p: Sequence[float], tol: float = 1e-9) -> bool:
        """Orbit leaves are the spacelike hyperplanes <p|u> = -t."""
        return abs(mink_product(p, self.time_direction()) + t) <= tol * max(1.0, abs(t))

    def to_dict(self) -> Dict[str, Any]:
        return {"family": "translation", "dimension": self.dim, "translations": self.translations.tolist(), "time_direction": self.time_direction().tolist()}


def build_translation(translations: Sequence[Sequence[float]], tol: Tolerances = DEFAULT_TOLERANCES) -> TranslationModel:
    vectors = np.atleast_2d(np.asarray(translations, dtype=float))
    if vectors.shape[1] < 3:
        raise ModelParameterError(f"translation spacetimes need dimension >= 3, got {vectors.shape[1]}")
    if np.linalg.matrix_rank(vectors, tol=tol.rank * max(1.0, float(np.max(np.abs(vectors))))) != vectors.shape[0]:
        raise ModelParameterError("translation vectors are linearly dependent")
    gram = vectors @ lower(vectors).T
    if np.min(np.linalg.eigvalsh(gram)) <= tol.causal * max(1.0, float(np.max(np.abs(gram)))):
        raise ModelParameterError("translation vectors do not span a spacelike subspace")
    if vectors.shape[0] >= vectors.shape[1]:
        raise ModelParameterError("a spacelike lattice has rank at most n - 1")
    return TranslationModel(vectors)


# Misner spacetimes


@dataclass(frozen=True)
class MisnerElement:
    """x -> e^boost x, y -> e^-boost y, z -> z + shift."""

    boost: float
    shift: np.ndarray

    def isometry(self, n: int) -> Isometry:
        frame = null_frame(n)
        scale = np.ones(n)
        scale[0], scale[1] = np.exp(self.boost), np.exp(-self.boost)
        L = frame @ np.diag(scale) @ frame.T
        tau = np.zeros(n)
        tau[2:] = self.shift
        return Isometry(L, frame @ tau)

    def to_dict(self) -> Dict[str, Any]:
        return {"boost": self.boost, "shift": self.shift.tolist()}


@dataclass(frozen=True)
class MisnerModel:
    n: int
    t0: float
    lattice: Tuple[MisnerElement, ...]

    def elements(self) -> List[MisnerElement]:
        return [MisnerElement(self.t0, np.zeros(self.n - 2))] + list(self.lattice)

    def generators(self) -> List[Isometry]:
        return [item.isometry(self.n) for item in self.elements()]

    def group(self) -> GroupSpec:
        return GroupSpec(tuple(self.generators()), (), f"misner(t0={self.t0})")

    def lambda_set(self) -> LambdaSet:
        return misner_lambda(self.n)

    def in_omega(self, p: Sequence[float]) -> bool:
        x, y = to_null(p)[:2]
        return bool(x > 0 and y < 0)

    def chart(self, p: Sequence[float]) -> np.ndarray:
        """(eta, nu, z) with x = e^(eta + nu) and y = -e^(eta - nu)."""
        coords = to_null(p)
        x, y = coords[:2]
        if not (x > 0 and y < 0):
            raise OutsideDomainError(f"point {list(p)} is outside the Misner wedge")
        return np.concatenate([[0.5 * np.log(-x * y), 0.5 * np.log(-x / y)], coords[2:]])

    def from_chart(self, chart: Sequence[float]) -> np.ndarray:
        eta_, nu = chart[0], chart[1]
        coords = np.concatenate([[np.exp(eta_ + nu), -np.exp(eta_ - nu)], np.asarray(chart[2:], dtype=float)])
        return from_null(coords)

    def metric(self, eta_value: float) -> np.ndarray:
        """Metric components in (eta, nu, z)."""
        weight = np.exp(2.0 * eta_value)
        diagonal = np.ones(self.n)
        diagonal[0], diagonal[1] = -2.0 * weight, 2.0 * weight
        return np.diag(diagonal)

    def cosmological_time(self, p: Sequence[float]) -> float:
        x, y = to_null(p)[:2]
        if not (x > 0 and y < 0):
            raise OutsideDomainError(f"point {list(p)} is outside the Misner wedge")
        return float(np.sqrt(-2.0 * x * y))

    def chart_action(self, element: MisnerElement, chart: Sequence[float]) -> np.ndarray:
        """Lattice elements translate nu by the boost and z by the shift."""
        out = np.array(chart, dtype=float, copy=True)
        out[1] += element.boost
        out[2:] += element.shift
        return out

    def sample_points(self, count: int, rng: np.random.Generator, spread: float = 1.0) -> np.ndarray:
        charts = np.column_stack([
            rng.uniform(-spread, spread, size=count),
            rng.uniform(-spread, spread, size=count),
            rng.uniform(-spread, spread, size=(count, self.n - 2)),
        ])
        return np.array([self.from_chart(chart) for chart in charts])

    def commutator_residual(self) -> float:
        generators = self.generators()
        worst = 0.0
        for i, g in enumerate(generators):
            for h in generators[i + 1:]:
                gh, hg = compose(g, h), compose(h, g)
                worst = max(worst, float(np.max(np.abs(gh.L - hg.L))), float(np.max(np.abs(gh.tau - hg.tau))))
        return worst

    def achronality_check(self, points: Sequence[Sequence[float]], qmax: int = 50, tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, Any]:
        verdicts = [iterate_oracle(g, p, qmax, tol) for g in self.generators() for p in points]
        return {
            "checked": len(verdicts),
            "outside": sum(1 for verdict in verdicts if verdict is Verdict.OUTSIDE),
            "indeterminate": sum(1 for verdict in verdicts if verdict is Verdict.INDETERMINATE),
        }

    def to_dict(self) -> Dict[str, Any]:
        return {"family": "misner", "dimension": self.n, "t0": self.t0, "lattice": [item.to_dict() for item in self.lattice]}


def build_misner(
    t0: float,
    lattice: Sequence[Tuple[float, Sequence[float]]] = (),
    n: int = 3,
    samples: int = 16,
    rng: Optional[np.random.Generator] = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> MisnerModel:
    if n < 3:
        raise ModelParameterError(f"Misner spacetimes need dimension >= 3, got {n}")
    if t0 == 0:
        raise ModelParameterError("the boost parameter t0 must be nonzero")
    elements = []
    for boost_value, shift in lattice:
        shift = np.asarray(shift, dtype=float).reshape(n - 2)
        if boost_value == 0 and not np.any(shift):
            raise ModelParameterError("lattice elements must be nontrivial")
        elements.append(MisnerElement(float(boost_value), shift))
    model = MisnerModel(n, float(t0), tuple(elements))
    rng = rng or np.random.default_rng(0)
    for p in model.sample_points(samples, rng):
        for item, g in zip(model.elements(), model.generators()):
            if not _spacelike_displacement(g, p, tol.causal):
                raise ModelParameterError(f"lattice element {item.to_dict()} moves {p.tolist()} along a causal vector")
    residual = model.commutator_residual()
    if residual > 1e-9 * max(1.0, np.exp(abs(t0))):
        raise ConstructionFailure(f"Misner generators do not commute (residual {residual:.3e})")
    return model


# Unipotent spacetimes


def unipotent_isometry(u: Sequence[float], v: Sequence[float], mu: float) -> Isometry:
    """g_(u, v, mu) in standard coordinates."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = u.shape[0] + 2
    M = np.eye(n)
    M[0, 1] = -0.5 * float(v @ v)
    M[0, 2:] = -v
    M[2:, 1] = v
    frame = null_frame(n)
    translation = np.concatenate([[mu, 0.0], u])
    return Isometry(frame @ M @ frame.T, frame @ translation)


def _default_profile(lower_end: float, upper_end: float) -> Callable[[float], float]:
    if np.isfinite(lower_end) and np.isfinite(upper_end):
        return lambda y: 1.0 + 1.0 / (y - lower_end) + 1.0 / (upper_end - y)
    if np.isfinite(lower_end):
        return lambda y: 1.0 + 1.0 / (y - lower_end)
    if np.isfinite(upper_end):
        return lambda y: 1.0 + 1.0 / (upper_end - y)
    return lambda y: 2.0


def _base_height(lower_end: float, upper_end: float) -> float:
    if np.isfinite(lower_end) and np.isfinite(upper_end):
        return 0.5 * (lower_end + upper_end)
    if np.isfinite(lower_end):
        return lower_end + 1.0
    if np.isfinite(upper_end):
        return upper_end - 1.0
    return 0.0


@dataclass(frozen=True)
class UnipotentModel:
    lambdas: np.ndarray
    basis: np.ndarray
    component_index: int
    lattice: np.ndarray
    a_profile: Callable[[float], float] = field(repr=False)

    @property
    def n(self) -> int:
        return self.lambdas.shape[0] + 2

    @property
    def poles(self) -> np.ndarray:
        """y_i = -1/lambda_i, infinite where lambda_i = 0."""
        with np.errstate(divide="ignore"):
            return np.where(self.lambdas != 0, -1.0 / np.where(self.lambdas != 0, self.lambdas, 1.0), np.inf)

    @property
    def interval(self) -> Tuple[float, float]:
        finite = np.sort(self.poles[np.isfinite(self.poles)])
        ends = np.concatenate([[-np.inf], finite, [np.inf]])
        return float(ends[self.component_index]), float(ends[self.component_index + 1])

    @property
    def base_height(self) -> float:
        return _base_height(*self.interval)

    def morphism(self, t: Sequence[float]) -> Isometry:
        t = np.asarray(t, dtype=float)
        u = self.basis @ t
        v = self.basis @ (self.lambdas * t)
        mu = -0.5 * float(np.sum(self.lambdas * t * t))
        return unipotent_isometry(u, v, mu)

    def generators(self) -> List[Isometry]:
        return [self.morphism(t) for t in self.lattice]

    def group(self) -> GroupSpec:
        return GroupSpec(tuple(self.generators()), (), "unipotent")

    def in_omega(self, p: Sequence[float]) -> bool:
        y = to_null(p)[1]
        low, high = self.interval
        return bool(low < y < high)

    def _local(self, z: np.ndarray) -> np.ndarray:
        return self.basis.T @ z

    def f(self, y: float) -> float:
        value, _ = quad(lambda s: self.a_profile(s) ** 2, self.base_height, y, limit=200)
        return float(value)

    def f_prime(self, y: float) -> float:
        return float(self.a_profile(y) ** 2)

    def _inverse_gaps(self, y: float) -> np.ndarray:
        """1 / (y_i - y), zero where y_i is infinite."""
        poles = self.poles
        out = np.zeros_like(poles)
        finite = np.isfinite(poles)
        out[finite] = 1.0 / (poles[finite] - y)
        return out

    def cauchy_height(self, y: float, z: Sequence[float]) -> float:
        """Phi(y, z) = f(y) + 1/2 sum z_i^2 / (y_i - y)."""
        zeta = self._local(np.asarray(z, dtype=float))
        return self.f(y) + 0.5 * float(np.sum(zeta * zeta * self._inverse_gaps(y)))

    def surface_point(self, y: float, z: Sequence[float]) -> np.ndarray:
        low, high = self.interval
        if not low < y < high:
            raise OutsideDomainError(f"height {y} is outside the component ({low}, {high})")
        z = np.asarray(z, dtype=float)
        return from_null(np.concatenate([[self.cauchy_height(y, z), y], z]))

    def on_surface(self, p: Sequence[float], tol: float = 1e-10) -> float:
        """Residual x - Phi(y, z) of a point in standard coordinates."""
        coords = to_null(p)
        return float(coords[0] - self.cauchy_height(coords[1], coords[2:]))

    def induced_metric(self, y: float, z: Sequence[float]) -> np.ndarray:
        """Metric of S_f in the (y, z) chart, z in the adapted basis."""
        zeta = self._local(np.asarray(z, dtype=float))
        inverse = -self._inverse_gaps(y)
        k = zeta.shape[0]
        g = np.eye(k + 1)
        g[0, 0] = 2.0 * self.f_prime(y) + float(np.sum((zeta * inverse) ** 2))
        g[0, 1:] = g[1:, 0] = -zeta * inverse
        return g

    def to_zeta(self, y: float, z: Sequence[float]) -> np.ndarray:
        zeta = self._local(np.asarray(z, dtype=float))
        gaps = y - self.poles
        return np.where(np.isfinite(gaps), zeta / np.where(np.isfinite(gaps), gaps, 1.0), zeta)

    def from_zeta(self, y: float, zeta: Sequence[float]) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=float)
        gaps = y - self.poles
        local = np.where(np.isfinite(gaps), zeta * np.where(np.isfinite(gaps), gaps, 1.0), zeta)
        return self.basis @ local

    def zeta_metric(self, y: float) -> np.ndarray:
        gaps = y - self.poles
        weights = np.where(np.isfinite(gaps), np.where(np.isfinite(gaps), gaps, 1.0) ** 2, 1.0)
        return np.diag(np.concatenate([[2.0 * self.f_prime(y)], weights]))

    def group_law_residual(self, t: Sequence[float], t_other: Sequence[float]) -> float:
        composed = compose(self.morphism(t), self.morphism(t_other))
        direct = self.morphism(np.asarray(t, dtype=float) + np.asarray(t_other, dtype=float))
        return float(max(np.max(np.abs(composed.L - direct.L)), np.max(np.abs(composed.tau - direct.tau))))

    def invariance_residual(self, y: float, z: Sequence[float], t: Sequence[float]) -> float:
        image = act(self.morphism(t), self.surface_point(y, z))
        return abs(self.on_surface(image))

    def free_action_gap(self, points: Sequence[Sequence[float]]) -> float:
        """Smallest displacement of a sample point by a lattice generator."""
        gaps = [float(np.linalg.norm(act(g, p) - np.asarray(p))) for g in self.generators() for p in points]
        return min(gaps) if gaps else np.inf

    def to_dict(self) -> Dict[str, Any]:
        low, high = self.interval
        return {
            "family": "unipotent",
            "dimension": self.n,
            "lambdas": self.lambdas.tolist(),
            "component_index": self.component_index,
            "interval": [low, high],
            "lattice": self.lattice.tolist(),
        }


def build_unipotent(
    lambdas: Sequence[float],
    component_index: int = 0,
    lattice: Optional[Sequence[Sequence[float]]] = None,
    a_profile: Optional[Callable[[float], float]] = None,
    basis: Optional[np.ndarray] = None,
    check_profile: bool = True,
) -> UnipotentModel:
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.shape[0] < 1:
        raise ModelParameterError("unipotent models need at least one lambda")
    if np.any(np.diff(lambdas) < 0):
        raise ModelParameterError(f"lambdas must be nondecreasing, got {lambdas.tolist()}")
    k = lambdas.shape[0]
    basis = np.eye(k) if basis is None else np.asarray(basis, dtype=float)
    if basis.shape != (k, k) or np.max(np.abs(basis.T @ basis - np.eye(k))) > 1e-10:
        raise ModelParameterError("basis must be an orthonormal k x k matrix")
    lattice_array = np.eye(k) if lattice is None else np.atleast_2d(np.asarray(lattice, dtype=float))
    if lattice_array.shape[1] != k:
        raise ModelParameterError(f"lattice vectors must have {k} entries")
    if np.linalg.matrix_rank(lattice_array) != lattice_array.shape[0]:
        raise ModelParameterError("lattice vectors are linearly dependent")

    finite = np.sort(-1.0 / lambdas[lambdas != 0])
    if not 0 <= component_index <= finite.shape[0]:
        raise ModelParameterError(f"component index {component_index} out of range 0..{finite.shape[0]}")
    ends = np.concatenate([[-np.inf], finite, [np.inf]])
    low, high = ends[component_index], ends[component_index + 1]
    if not low < high:
        raise ModelParameterError(f"component {component_index} is empty: ({low}, {high})")
    profile = a_profile or _default_profile(low, high)
    model = UnipotentModel(lambdas, basis, component_index, lattice_array, profile)
    if check_profile:
        _check_profile(model)
    return model


def _check_profile(model: UnipotentModel) -> None:
    low, high = model.interval
    samples = _interior_samples(low, high)
    if any(model.a_profile(y) <= 1.0 for y in samples):
        raise ModelParameterError("the profile a(y) must exceed 1 on the component")
    for end in (low, high):
        # arc length along z = 0 is sqrt(2) times the integral of a
        report = _decade_lengths(model.a_profile, model.base_height, end)
        if not report["divergent"]:
            raise ModelParameterError(f"the integral of a converges toward {end}; S_f would be incomplete")


def _interior_samples(low: float, high: float, count: int = 9) -> np.ndarray:
    if np.isfinite(low) and np.isfinite(high):
        return np.linspace(low, high, count + 2)[1:-1]
    if np.isfinite(low):
        return low + np.logspace(-3, 3, count)
    if np.isfinite(high):
        return high - np.logspace(-3, 3, count)
    return np.linspace(-10.0, 10.0, count)


def _checkpoints(start: float, end: float) -> np.ndarray:
    if np.isfinite(end):
        gap = end - start
        return np.array([end - gap * 10.0 ** (-k) for k in range(DECADES + 1)])
    sign = 1.0 if end > 0 else -1.0
    return np.array([start] + [start + sign * 10.0 ** k for k in range(DECADES + 1)])


def _decade_lengths(density: Callable[[float], float], start: float, end: float) -> Dict[str, Any]:
    """Integrate ``density`` from start toward end decade by decade."""
    points = _checkpoints(start, end)
    increments = []
    for left, right in zip(points[:-1], points[1:]):
        value, _ = quad(density, left, right, limit=200)
        increments.append(abs(value))
    length = float(sum(increments))
    last, previous = increments[-1], increments[-2]
    divergent = length >= DIVERGENCE_LENGTH or last >= 0.5 * previous
    return {"length": length, "last_increment": last, "previous_increment": previous, "divergent": bool(divergent)}


@dataclass(frozen=True)
class EscapePath:
    """Path y: start -> end at fixed z; ``end`` may be an end of the component."""

    start: float
    end: float
    z: np.ndarray


def surface_completeness_probe(model: UnipotentModel, paths: Optional[Sequence[EscapePath]] = None) -> List[Dict[str, Any]]:
    low, high = model.interval
    if paths is None:
        zero = np.zeros(model.n - 2)
        paths = [EscapePath(model.base_height, low, zero), EscapePath(model.base_height, high, zero)]
    reports = []
    for path in paths:
        z = np.asarray(path.z, dtype=float)

        def speed(y: float) -> float:
            return float(np.sqrt(model.induced_metric(y, z)[0, 0]))

        if path.end in (low, high):
            report = _decade_lengths(speed, path.start, path.end)
        else:
            if not (low < path.start < high and low < path.end < high):
                raise OutsideDomainError(f"path ({path.start}, {path.end}) leaves the component")
            value, _ = quad(speed, path.start, path.end, limit=200)
            report = {"length": abs(float(value)), "divergent": False}
        report.update({"start": path.start, "end": path.end})
        LOGGER.debug("escape path %s -> %s: length %.6g divergent=%s", path.start, path.end, report["length"], report["divergent"])
        reports.append(report)
    return reports


# Symmetric extension


class ExtensionCase(str, Enum):
    BOUNDED = "bounded"
    FUTURE_INFINITE = "future_infinite"
    PAST_INFINITE = "past_infinite"


@dataclass(frozen=True)
class SymExtProblem:
    """T: E -> R^m given by its values on an orthonormal basis of E.

    ``bound`` is y+ for the bounded and past_infinite cases and y- for future_infinite.
    """

    basis: np.ndarray
    T: np.ndarray
    case: ExtensionCase
    bound: float

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def compression(self) -> np.ndarray:
        return self.basis.T @ self.T


def _psd_floor(matrix: np.ndarray) -> float:
    return float(np.min(np.linalg.eigvalsh(0.5 * (matrix + matrix.T)))) if matrix.size else 0.0


def case_bound_margin(T_values: np.ndarray, compression: np.ndarray, case: ExtensionCase, bound: float) -> float:
    """Nonnegative iff the case inequality holds on the domain; scale-free in the bounded case."""
    gram = T_values.T @ T_values
    if case is ExtensionCase.BOUNDED:
        if not T_values.size:
            return 1.0
        return 1.0 - float(np.linalg.norm(bound * T_values, 2))
    if case is ExtensionCase.FUTURE_INFINITE:
        return _psd_floor(compression + bound * gram)
    return _psd_floor(-compression - bound * gram)


def check_case_bound(problem: SymExtProblem, tol: float = EXTENSION_TOL) -> bool:
    return case_bound_margin(problem.T, problem.compression, problem.case, problem.bound) >= -tol


def validate_problem(problem: SymExtProblem, tol: float = 1e-10) -> None:
    basis = problem.basis
    if basis.ndim != 2 or basis.shape[1] > basis.shape[0]:
        raise SymExtInputError(f"basis shape {basis.shape} does not describe a subspace")
    if np.max(np.abs(basis.T @ basis - np.eye(basis.shape[1]))) > tol:
        raise SymExtInputError("basis of E is not orthonormal")
    if problem.T.shape != basis.shape:
        raise SymExtInputError(f"T has shape {problem.T.shape}, expected {basis.shape}")
    compression = problem.compression
    asymmetry = float(np.max(np.abs(compression - compression.T))) if compression.size else 0.0
    if asymmetry > tol * max(1.0, float(np.max(np.abs(problem.T)))):
        raise SymExtInputError(f"T is not symmetric on E (residual {asymmetry:.3e})")
    if problem.case is ExtensionCase.FUTURE_INFINITE and not problem.bound < 0:
        raise SymExtInputError("future_infinite needs a finite y- < 0")
    if problem.case in (ExtensionCase.BOUNDED, ExtensionCase.PAST_INFINITE) and not problem.bound > 0:
        raise SymExtInputError(f"{problem.case.value} needs a finite y+ > 0")
    if not check_case_bound(problem):
        raise SymExtInputError(f"T violates the {problem.case.value} bound on E")


def limits_allowed(problem: SymExtProblem, y_minus: float, y_plus: float) -> bool:
    """Whether the orbit leading terms stay spacelike for heights in (y_minus, y_plus).

    Checks |u|^2 + (y + y')<u|T u> + y y' |T u|^2 >= 0 at the corners, using the
    leading coefficient at infinite ends; both ends infinite fails unless T = 0.
    """
    compression = problem.compression
    gram = problem.T.T @ problem.T
    identity = np.eye(compression.shape[0])

    def corner(y: float, y_other: float) -> np.ndarray:
        if np.isfinite(y) and np.isfinite(y_other):
            return identity + (y + y_other) * compression + y * y_other * gram
        if np.isfinite(y_other):
            return np.sign(y) * (compression + y_other * gram)
        if np.isfinite(y):
            return np.sign(y_other) * (compression + y * gram)
        return np.sign(y) * np.sign(y_other) * gram

    ends = (y_minus, y_plus)
    return all(_psd_floor(corner(y, y_other)) >= -EXTENSION_TOL for y in ends for y_other in ends)


@dataclass(frozen=True)
class ExtensionResult:
    operator: np.ndarray
    branch: str
    symmetry_residual: float
    restriction_residual: float
    bound_margin: float
    limit_gap: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "operator": self.operator.tolist(),
            "branch": self.branch,
            "symmetry_residual": self.symmetry_residual,
            "restriction_residual": self.restriction_residual,
            "bound_margin": self.bound_margin,
            "limit_gap": self.limit_gap,
        }


def _bounded_block(T0: np.ndarray, B: np.ndarray) -> Tuple[np.ndarray, Optional[float], str]:
    """Z block of the extension for a normalized T (y+ = 1)."""
    k = T0.shape[0]
    mu, W = np.linalg.eigh(T0)
    if np.max(np.abs(mu), initial=0.0) < 1.0 - UNIT_EIGENVALUE_TOL:
        Z = -B @ T0 @ np.linalg.solve(np.eye(k) - T0 @ T0, B.T)
        return Z, None, "direct"
    columns = B @ W
    keep = np.abs(mu) < 1.0 - UNIT_EIGENVALUE_TOL
    weights = np.zeros_like(mu)
    weights[keep] = mu[keep] / (1.0 - mu[keep] ** 2)
    limit = -(columns * weights) @ columns.T

    # Z blocks of (1 - 1/k) T for k = 2, 4, ..., 64, extrapolated to k = inf
    shrunk_blocks = []
    steps = 2
    while steps <= SHRINK_STEPS:
        s = 1.0 - 1.0 / steps
        weights_k = np.zeros_like(mu)
        weights_k[keep] = s ** 3 * mu[keep] / (1.0 - (s * mu[keep]) ** 2)
        shrunk_blocks.append(-(columns * weights_k) @ columns.T)
        steps *= 2
    extrapolated = richardson_limit(shrunk_blocks)
    gap = float(np.max(np.abs(extrapolated - limit), initial=0.0))
    if gap > LIMIT_ACCEPT_TOL * max(1.0, float(np.max(np.abs(limit), initial=0.0))):
        raise ConstructionFailure(f"shrunk extensions do not converge to the limit candidate (gap {gap:.3e})")
    return limit, gap, "shrink_limit"


def richardson_limit(values: Sequence[np.ndarray]) -> np.ndarray:
    """Romberg extrapolation to h = 0 of samples taken at h, h/2, h/4, ..."""
    current = [np.asarray(value, dtype=float) for value in values]
    for level in range(1, len(current)):
        factor = 2.0 ** level
        current = [(factor * fine - coarse) / (factor - 1.0) for coarse, fine in zip(current[:-1], current[1:])]
    return current[-1]


def symmetric_extension(problem: SymExtProblem) -> ExtensionResult:
    validate_problem(problem)
    Q_E = problem.basis
    m = problem.ambient_dim
    Q_perp = null_space(Q_E.T) if Q_E.shape[1] else np.eye(m)
    limit_gap = None

    if problem.case is ExtensionCase.BOUNDED:
        scaled = problem.bound * problem.T
        T0 = Q_E.T @ scaled
        T0 = 0.5 * (T0 + T0.T)
        B = Q_perp.T @ scaled
        Z, limit_gap, branch = _bounded_block(T0, B) if Q_perp.shape[1] else (np.zeros((0, 0)), None, "direct")
        block = np.block([[T0, B.T], [B, Z]])
        frame = np.hstack([Q_E, Q_perp])
        operator = frame @ block @ frame.T / problem.bound
    else:
        kernel = null_space(problem.T, rcond=1e-10) if problem.T.size else np.zeros((Q_E.shape[1], 0))
        image = orth(problem.T, rcond=1e-10) if np.any(problem.T) else np.zeros((m, 0))
        image_perp = null_space(image.T) if image.shape[1] else np.eye(m)
        kernel_in_space = Q_E @ kernel
        if kernel_in_space.shape[1] and np.max(np.abs(image.T @ kernel_in_space), initial=0.0) > 1e-8:
            raise SymExtInputError("kernel of T is not orthogonal to its image")
        coimage = null_space(kernel.T) if kernel.shape[1] else np.eye(Q_E.shape[1])
        A = Q_E @ coimage
        domain = np.hstack([A, image_perp])
        if domain.shape[1] != m or np.linalg.matrix_rank(domain) != m:
            raise ConstructionFailure("coimage and image complement do not span the ambient space")
        values = np.hstack([problem.T @ coimage, np.zeros((m, image_perp.shape[1]))])
        operator = values @ np.linalg.inv(domain)
        asymmetry = float(np.max(np.abs(operator - operator.T), initial=0.0))
        if asymmetry > 1e-12:
            LOGGER.debug("symmetrizing extension (asymmetry %.3e)", asymmetry)
        operator = 0.5 * (operator + operator.T)
        branch = "kernel_image"

    symmetry = float(np.max(np.abs(operator - operator.T), initial=0.0))
    restriction = float(np.max(np.abs(operator @ Q_E - problem.T), initial=0.0))
    if restriction > RESTRICTION_TOL * max(1.0, float(np.max(np.abs(problem.T), initial=0.0))):
        raise ConstructionFailure(f"extension does not restrict to T on E (residual {restriction:.3e})")
    margin = case_bound_margin(operator, operator, problem.case, problem.bound)
    if margin < -EXTENSION_TOL:
        raise ConstructionFailure(f"extension violates the {problem.case.value} bound (margin {margin:.3e})")
    return ExtensionResult(operator, branch, symmetry, restriction, margin, limit_gap)


# Radiant standard spacetimes


@dataclass(frozen=True)
class RadiantModel:
    spec: GroupSpec

    @property
    def dim(self) -> int:
        return self.spec.dim

    def cosmological_time(self, p: Sequence[float]) -> float:
        p = np.asarray(p, dtype=float)
        square = mink_norm2(p)
        if square >= 0 or p[0] <= 0:
            raise OutsideDomainError(f"point {p.tolist()} is not in the future cone of the origin")
        return float(np.sqrt(-square))

    def level_sample(self, t: float, count: int, rng: np.random.Generator, spread: float = 1.0) -> np.ndarray:
        return t * hyperboloid_directions(self.dim, count, rng, spread)

    def invariance_residual(self, points: Sequence[Sequence[float]]) -> float:
        worst = 0.0
        for g in self.spec.generators:
            for p in points:
                worst = max(worst, abs(self.cosmological_time(act(g, p)) - self.cosmological_time(p)))
        return worst

    def level_distance_ratio(self, pairs: Sequence[Tuple[Sequence[float], Sequence[float]]], t: float, t_other: float) -> float:
        """Mean ratio of chordal distances after rescaling the level t to t_other."""
        ratios = []
        for p, q in pairs:
            p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
            base = np.sqrt(max(mink_norm2(p - q), 0.0))
            scaled = np.sqrt(max(mink_norm2((p - q) * t_other / t), 0.0))
            if base > 0:
                ratios.append(scaled / base)
        return float(np.mean(ratios)) if ratios else float("nan")

    def limit_set(self, maxlen: int):
        return limit_set_approx(self.spec, maxlen)

    def admissibility(self, maxlen: int):
        return admissibility(self.spec, maxlen)

    def to_dict(self) -> Dict[str, Any]:
        return {"family": "radiant", "dimension": self.dim, "group": self.spec.to_dict()}


def radiant_standard(spec: GroupSpec) -> RadiantModel:
    if not spec.is_linear:
        raise ModelParameterError("radiant models need linear holonomy; use the convex-domain path for tau != 0")
    if is_elementary(spec).elementary:
        raise ModelParameterError("radiant standard models need a nonelementary linear holonomy")
    return RadiantModel(spec)


# Twisted products


@dataclass(frozen=True)
class FiberIsometry:
    rotation: np.ndarray
    translation: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {"rotation": self.rotation.tolist(), "translation": self.translation.tolist()}


@dataclass(frozen=True)
class TwistedProduct:
    base_label: str
    base_generators: Tuple[Isometry, ...]
    fiber_rank: int
    monodromy: Tuple[FiberIsometry, ...]

    @property
    def base_dim(self) -> int:
        return self.base_generators[0].dim

    @property
    def dim(self) -> int:
        return self.base_dim + self.fiber_rank

    @property
    def linear(self) -> bool:
        return all(not np.any(item.translation) for item in self.monodromy)

    def holonomy(self) -> GroupSpec:
        n, k = self.base_dim, self.fiber_rank
        generators = []
        for g, item in zip(self.base_generators, self.monodromy):
            L = np.eye(n + k)
            L[:n, :n] = g.L
            L[n:, n:] = item.rotation
            generators.append(Isometry(L, np.concatenate([g.tau, item.translation])))
        return GroupSpec(tuple(generators), (), f"{self.base_label} x R^{k}")

    def descriptor(self) -> Dict[str, Any]:
        return {
            "base": self.base_label,
            "base_dimension": self.base_dim,
            "fiber_rank": self.fiber_rank,
            "dimension": self.dim,
            "metric": f"g_{self.base_label} + euclidean(R^{self.fiber_rank})",
            "linear": self.linear,
            "monodromy": [item.to_dict() for item in self.monodromy],
        }


def twisted_product(
    base_label: str,
    base_generators: Sequence[Isometry],
    fiber_rank: int,
    monodromy: Sequence[Tuple[Sequence[Sequence[float]], Sequence[float]]],
    tol: float = 1e-10,
) -> TwistedProduct:
    if fiber_rank < 1:
        raise ModelParameterError(f"fiber rank must be positive, got {fiber_rank}")
    if len(monodromy) != len(base_generators):
        raise ModelParameterError(f"{len(monodromy)} monodromy elements for {len(base_generators)} base generators")
    items = []
    for rotation, translation in monodromy:
        rotation = np.asarray(rotation, dtype=float).reshape(fiber_rank, fiber_rank)
        translation = np.asarray(translation, dtype=float).reshape(fiber_rank)
        if np.max(np.abs(rotation.T @ rotation - np.eye(fiber_rank))) > tol:
            raise ModelParameterError("monodromy linear part is not orthogonal")
        items.append(FiberIsometry(rotation, translation))
    return TwistedProduct(base_label, tuple(base_generators), fiber_rank, tuple(items))


@dataclass(frozen=True)
class AmbientPresentation:
    """A group in M^N with an invariant timelike subspace U and a domain Omega."""

    spec: GroupSpec
    timelike_basis: np.ndarray
    omega: Callable[[np.ndarray], bool] = field(repr=False)
    samples: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)), repr=False)
    fiber_basis: Optional[np.ndarray] = None


def validate_presentation(
    presentation: AmbientPresentation,
    product: TwistedProduct,
    rng: Optional[np.random.Generator] = None,
    tol: float = 1e-9,
) -> Dict[str, Any]:
    """Check the hypotheses under which Gamma \\ Omega is the twisted product."""
    rng = rng or np.random.default_rng(0)
    N = presentation.spec.dim
    U = orth(presentation.timelike_basis)
    gram = U.T @ eta(N) @ U
    timelike = bool(np.min(np.linalg.eigvalsh(gram)) < -tol)

    fiber = null_space(lower(U.T), rcond=1e-12) if presentation.fiber_basis is None else np.asarray(presentation.fiber_basis, dtype=float)
    fiber_gram = fiber.T @ eta(N) @ fiber
    values, vectors = np.linalg.eigh(fiber_gram)
    if np.min(values) <= 0:
        raise ModelParameterError("the orthogonal of U is not spacelike")
    fiber = fiber @ vectors @ np.diag(1.0 / np.sqrt(values))

    projector = U @ U.T
    invariant = max(float(np.max(np.abs(g.L @ U - projector @ g.L @ U))) for g in presentation.spec.generators)
    monodromy_gap = 0.0
    for g, item in zip(presentation.spec.generators, product.monodromy):
        restricted = fiber.T @ eta(N) @ g.L @ fiber
        shift = fiber.T @ eta(N) @ g.tau
        monodromy_gap = max(monodromy_gap, float(np.max(np.abs(restricted - item.rotation))), float(np.max(np.abs(shift - item.translation))))

    translated_ok = True
    for p in presentation.samples:
        if not presentation.omega(p):
            continue
        for _ in range(4):
            w = fiber @ rng.normal(scale=10.0, size=fiber.shape[1])
            if not presentation.omega(p + w):
                translated_ok = False
    report = {
        "U_timelike": timelike,
        "U_invariance_residual": invariant,
        "monodromy_residual": monodromy_gap,
        "omega_translation_invariant": translated_ok,
        "linear": product.linear,
    }
    report["valid"] = bool(timelike and invariant <= tol and monodromy_gap <= tol and translated_ok)
    return report
