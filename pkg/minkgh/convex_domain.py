"""Regular convex domains cut out by finitely many lightlike half-spaces.

Omega+(Lambda) is the intersection of the future half-spaces <x|v_i> < s_i.
The cosmological time T, the retraction pi and the Gauss map n are computed
face by face: on the hyperplane <q|v_i> = s_i the Lorentzian square of p - q is
a degenerate quadratic in (alpha, gamma), solved by the active-set kernel.
Past domains are reduced to future ones by the time reflection.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import bisect, linprog

from .config import DEFAULT_TOLERANCES, Tolerances, thread_count
from .errors import (
    ConstructionFailure,
    DimensionMismatchError,
    EmptyLambdaError,
    InputValidationError,
    LevelSetBracketError,
    OutsideDomainError,
    UnboundedFaceError,
)
from .minkowski import Isometry, as_vector, lower, mink_norm2, mink_product, time_reflection
from .penrose import SPHERE_RADIUS, LightPlane, act_on_J
from .qp import ActiveSetQP
from .reporting import compare_refinement

LOGGER = logging.getLogger("minkgh.convex_domain")

BOX_FACTOR = 1e3
LEVEL_BRACKET_MAX = 1e3
LEVEL_MAX_ITER = 80
PARALLEL_TOL = 1e-12


class DomainOrientation(str, Enum):
    FUTURE = "future"
    PAST = "past"


@dataclass(frozen=True)
class LambdaSet:
    planes: Tuple[LightPlane, ...]
    orientation: DomainOrientation = DomainOrientation.FUTURE

    def __post_init__(self) -> None:
        planes = tuple(self.planes)
        if not planes:
            raise EmptyLambdaError("a lambda set needs at least one lightlike plane")
        dims = {plane.dim for plane in planes}
        if len(dims) != 1:
            raise DimensionMismatchError(f"planes of mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "planes", planes)
        object.__setattr__(self, "orientation", DomainOrientation(self.orientation))

    @classmethod
    def from_records(cls, records: Iterable[Dict[str, Any]], orientation: str = "future") -> "LambdaSet":
        return cls(tuple(LightPlane.from_direction(as_vector(item["v"]), float(item["s"])) for item in records), DomainOrientation(orientation))

    @property
    def dim(self) -> int:
        return self.planes[0].dim

    def __len__(self) -> int:
        return len(self.planes)

    @property
    def directions(self) -> np.ndarray:
        return np.array([plane.v for plane in self.planes])

    @property
    def levels(self) -> np.ndarray:
        return np.array([plane.s for plane in self.planes])

    def distinct_directions(self, tol: float = DEFAULT_TOLERANCES.dedup) -> int:
        kept: List[np.ndarray] = []
        for v in self.directions:
            if not any(np.max(np.abs(v - other)) <= tol for other in kept):
                kept.append(v)
        return len(kept)

    def reflected(self) -> "LambdaSet":
        """The time-reflected set: Omega-(Lambda) = theta Omega+(reflected)."""
        theta = time_reflection(self.dim)
        flipped = DomainOrientation.FUTURE if self.orientation is DomainOrientation.PAST else DomainOrientation.PAST
        return LambdaSet(tuple(LightPlane(-(theta @ plane.v), -plane.s) for plane in self.planes), flipped)

    def with_orientation(self, orientation: DomainOrientation) -> "LambdaSet":
        return LambdaSet(self.planes, orientation)

    def to_dict(self) -> Dict[str, Any]:
        return {"orientation": self.orientation.value, "planes": [plane.to_dict() for plane in self.planes]}


@dataclass(frozen=True)
class RegularityResult:
    regular: bool
    witness: Optional[np.ndarray]
    margin: float
    distinct_directions: int
    box: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "regular": self.regular,
            "witness": None if self.witness is None else self.witness.tolist(),
            "margin": self.margin,
            "distinct_directions": self.distinct_directions,
            "box": self.box,
        }


@dataclass(frozen=True)
class CTResult:
    T: float
    retraction: np.ndarray
    gauss: np.ndarray
    active_plane: int
    face_values: Dict[int, float] = field(default_factory=dict)

    def residuals(self, lam: LambdaSet, p: Sequence[float]) -> Dict[str, float]:
        p = np.asarray(p, dtype=float)
        levels = lam.directions @ lower(self.retraction) - lam.levels
        if lam.orientation is DomainOrientation.PAST:
            levels = -levels
        return {
            "gauss_norm": abs(mink_norm2(self.gauss) + 1.0),
            "segment": float(np.max(np.abs(p - self.retraction - self.T * self.gauss))),
            "boundary": abs(float(np.max(levels))),
            "active": abs(float(levels[self.active_plane])),
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "T": self.T,
            "retraction": self.retraction.tolist(),
            "gauss": self.gauss.tolist(),
            "active_plane": self.active_plane,
        }


def _future_view(lam: LambdaSet) -> Tuple[LambdaSet, Optional[np.ndarray]]:
    if lam.orientation is DomainOrientation.FUTURE:
        return lam, None
    return lam.reflected(), time_reflection(lam.dim)


def max_margin_witness(directions: np.ndarray, levels: np.ndarray, box: float) -> Tuple[np.ndarray, float]:
    """Maximize m subject to <p|v_i> - s_i + m <= 0 and |p_j| <= box."""
    count, n = directions.shape
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    A_ub = np.hstack([lower(directions), np.ones((count, 1))])
    bounds = [(-box, box)] * n + [(None, None)]
    result = linprog(cost, A_ub=A_ub, b_ub=levels, bounds=bounds, method="highs")
    if not result.success:
        raise ConstructionFailure(f"margin linear program failed: {result.message}")
    LOGGER.debug("margin LP over %d planes: status=%s margin=%.6g", count, result.status, -result.fun)
    return result.x[:n], float(-result.fun)


def is_future_regular(lam: LambdaSet, tol: Tolerances = DEFAULT_TOLERANCES, box: Optional[float] = None) -> RegularityResult:
    distinct = lam.distinct_directions(tol.dedup)
    R = box if box is not None else BOX_FACTOR * max(1.0, float(np.max(np.abs(lam.levels))))
    witness, margin = max_margin_witness(lam.directions, lam.levels, R)
    if distinct < 2:
        LOGGER.info("lambda set has %d distinct direction(s): not regular", distinct)
        return RegularityResult(False, None, margin, distinct, R)
    regular = margin > tol.rel
    return RegularityResult(regular, witness if regular else None, margin, distinct, R)


def is_past_regular(lam: LambdaSet, tol: Tolerances = DEFAULT_TOLERANCES, box: Optional[float] = None) -> RegularityResult:
    """Regularity of Omega-(Lambda); the witness is returned in original coordinates."""
    result = is_future_regular(lam.reflected(), tol, box)
    if result.witness is None:
        return result
    return RegularityResult(result.regular, time_reflection(lam.dim) @ result.witness, result.margin, result.distinct_directions, result.box)


def is_compact(lam: LambdaSet, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    return is_future_regular(lam, tol).regular and is_past_regular(lam, tol).regular


def omega_membership(lam: LambdaSet, x: Sequence[float], tol: float = DEFAULT_TOLERANCES.rel) -> bool:
    x = as_vector(x, lam.dim)
    levels = lam.directions @ lower(x) - lam.levels
    if lam.orientation is DomainOrientation.PAST:
        return bool(np.all(levels > tol))
    return bool(np.all(levels < -tol))


def _null_partner(v: np.ndarray) -> np.ndarray:
    """Lightlike u with <u|v> = -1."""
    a = v[0]
    out = np.empty_like(v)
    out[0] = a
    out[1:] = -v[1:]
    return out / (2.0 * a * a)


def _spatial_frame(v: np.ndarray) -> np.ndarray:
    """Unit spacelike vectors orthogonal to v and to its partner, as columns."""
    n = v.shape[0]
    spatial = null_space(v[1:].reshape(1, -1))
    frame = np.zeros((n, spatial.shape[1]))
    frame[1:, :] = spatial
    return frame


def _solve_face(lam: LambdaSet, p: np.ndarray, index: int, solver: ActiveSetQP) -> Optional[Tuple[float, np.ndarray]]:
    """Maximal Lorentzian square -<p - q|p - q> over q in face ``index``; None if the face is empty."""
    v = lam.planes[index].v
    s = lam.planes[index].s
    u = _null_partner(v)
    frame = _spatial_frame(v)
    beta = mink_product(p, v) - s
    c = -beta
    others = [j for j in range(len(lam)) if j != index]
    rows: List[np.ndarray] = []
    rhs: List[float] = []
    for j in others:
        vj = lam.planes[j].v
        d_j = mink_product(v, vj)
        residual = lam.planes[j].s - mink_product(p, vj) - beta * mink_product(u, vj)
        if abs(d_j) <= PARALLEL_TOL:
            if residual < -PARALLEL_TOL * max(1.0, abs(lam.planes[j].s)):
                LOGGER.debug("face %d is cut away by parallel plane %d", index, j)
                return None
            continue
        rows.append(np.concatenate([[d_j], frame.T @ lower(vj)]))
        rhs.append(residual)
    if not rows:
        raise UnboundedFaceError(f"face {index} is unbounded: no transverse plane limits it")
    A = np.array(rows)
    b = np.array(rhs)
    k = frame.shape[1]
    H = np.zeros((k + 1, k + 1))
    H[1:, 1:] = 2.0 * np.eye(k)
    g = np.zeros(k + 1)
    g[0] = 2.0 * c
    x0 = np.zeros(k + 1)
    x0[0] = float(np.max(b / A[:, 0]))
    result = solver.solve(H, g, A, b, x0)
    if not result.bounded:
        raise UnboundedFaceError(f"face {index} problem is unbounded; the domain is not regular")
    alpha = result.x[0]
    gamma = result.x[1:]
    q = p + alpha * v + beta * u + frame @ gamma
    return -result.value, q


def cosmological_time(
    lam: LambdaSet,
    p: Sequence[float],
    tol: Tolerances = DEFAULT_TOLERANCES,
    threads: Optional[int] = None,
    solver: Optional[ActiveSetQP] = None,
) -> CTResult:
    p = as_vector(p, lam.dim)
    future, theta = _future_view(lam)
    q_point = p if theta is None else theta @ p
    if not omega_membership(future, q_point, tol.rel):
        raise OutsideDomainError(f"point {p.tolist()} is not in the {lam.orientation.value} domain")
    solver = solver or ActiveSetQP()
    workers = thread_count() if threads is None else threads
    indices = list(range(len(future)))
    if workers > 1 and len(indices) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            faces = list(pool.map(lambda i: _solve_face(future, q_point, i, solver), indices))
    else:
        faces = [_solve_face(future, q_point, i, solver) for i in indices]

    values = {i: face[0] for i, face in zip(indices, faces) if face is not None}
    if not values:
        raise UnboundedFaceError("every face problem is empty")
    best = max(values, key=lambda i: (values[i], -i))
    square = values[best]
    if square <= 0.0:
        raise OutsideDomainError(f"non-positive proper time {square:.3e} at {p.tolist()}")
    T = float(np.sqrt(square))
    retraction = faces[best][1]
    gauss = (q_point - retraction) / T
    if theta is not None:
        retraction = theta @ retraction
        gauss = theta @ gauss
    LOGGER.debug("T=%.9g at face %d of %d", T, best, len(indices))
    return CTResult(T, retraction, gauss, best, values)


def unit_timelike(direction: Sequence[float]) -> np.ndarray:
    d = np.asarray(direction, dtype=float)
    square = mink_norm2(d)
    if square >= 0.0:
        raise InputValidationError(f"direction {d.tolist()} is not timelike")
    d = d / np.sqrt(-square)
    return d if d[0] > 0 else -d


def hyperboloid_directions(n: int, count: int, rng: np.random.Generator, spread: float = 1.0) -> np.ndarray:
    """Random unit future timelike vectors with rapidity up to ``spread``."""
    spatial = rng.normal(size=(count, n - 1))
    spatial /= np.linalg.norm(spatial, axis=1, keepdims=True)
    rapidity = rng.uniform(0.0, spread, size=(count, 1))
    return np.hstack([np.cosh(rapidity), np.sinh(rapidity) * spatial])


@dataclass(frozen=True)
class LevelSetSample:
    points: np.ndarray
    gauss: np.ndarray
    failures: List[Dict[str, Any]]
    base: np.ndarray

    def rows(self) -> List[List[float]]:
        return [list(point) + list(normal) for point, normal in zip(self.points, self.gauss)]


def level_set_base(lam: LambdaSet, t: float, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """A point of the domain with cosmological time well below t."""
    regularity = is_past_regular(lam, tol) if lam.orientation is DomainOrientation.PAST else is_future_regular(lam, tol)
    if not regularity.regular:
        raise InputValidationError("level sets need a regular domain")
    ct = cosmological_time(lam, regularity.witness, tol)
    delta = 1e-3 * min(t, 1.0)
    return ct.retraction + delta * ct.gauss


def level_set_sample(
    lam: LambdaSet,
    t: float,
    seed_directions: Sequence[Sequence[float]],
    tol: Tolerances = DEFAULT_TOLERANCES,
    base: Optional[Sequence[float]] = None,
) -> LevelSetSample:
    if t <= 0:
        raise InputValidationError(f"level t must be positive, got {t}")
    start = level_set_base(lam, t, tol) if base is None else as_vector(base, lam.dim)
    sign = -1.0 if lam.orientation is DomainOrientation.PAST else 1.0
    points: List[np.ndarray] = []
    normals: List[np.ndarray] = []
    failures: List[Dict[str, Any]] = []
    for index, direction in enumerate(seed_directions):
        ray = sign * unit_timelike(direction)

        def excess(step: float) -> float:
            return cosmological_time(lam, start + step * ray, tol).T - t

        low, high = tol.rel, LEVEL_BRACKET_MAX
        try:
            if excess(low) > 0 or excess(high) < 0:
                raise LevelSetBracketError(f"ray {index} does not cross level {t} within [{low}, {high}]")
            step = bisect(excess, low, high, xtol=1e-12, rtol=1e-14, maxiter=LEVEL_MAX_ITER)
        except (LevelSetBracketError, RuntimeError) as exc:
            LOGGER.warning("level-set ray %d failed: %s", index, exc)
            failures.append({"ray": index, "error": str(exc)})
            continue
        point = start + step * ray
        points.append(point)
        normals.append(cosmological_time(lam, point, tol).gauss)
    n = lam.dim
    return LevelSetSample(
        np.array(points).reshape(-1, n),
        np.array(normals).reshape(-1, n),
        failures,
        start,
    )


def hyperbolic_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Distance on the hyperboloid model, arccosh(-<a|b>)."""
    return float(np.arccosh(max(1.0, -mink_product(a, b))))


def nearest_pairs(points: np.ndarray) -> List[Tuple[int, int]]:
    pairs = []
    for i, point in enumerate(points):
        distances = np.linalg.norm(points - point, axis=1)
        distances[i] = np.inf
        j = int(np.argmin(distances))
        if np.isfinite(distances[j]):
            pairs.append((i, j))
    return pairs


@dataclass(frozen=True)
class GaussLipschitzReport:
    t: float
    bound: float
    max_ratio: float
    pairs: int
    slack: float

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.bound * (1.0 + self.slack)

    def to_dict(self) -> Dict[str, Any]:
        return {"t": self.t, "bound": self.bound, "max_ratio": self.max_ratio, "pairs": self.pairs, "slack": self.slack, "passed": self.passed}


def gauss_lipschitz_check(
    lam: LambdaSet,
    t: float,
    pairs: Iterable[Tuple[Sequence[float], Sequence[float]]],
    tol: Tolerances = DEFAULT_TOLERANCES,
    slack: float = 1e-3,
) -> GaussLipschitzReport:
    """Compare hyperbolic distances of Gauss vectors with chordal distances on S_t."""
    worst = 0.0
    used = 0
    for p, p_other in pairs:
        p = np.asarray(p, dtype=float)
        p_other = np.asarray(p_other, dtype=float)
        chord = mink_norm2(p - p_other)
        if chord <= tol.zero:
            continue
        n_first = cosmological_time(lam, p, tol).gauss
        n_second = cosmological_time(lam, p_other, tol).gauss
        worst = max(worst, hyperbolic_distance(n_first, n_second) / np.sqrt(chord))
        used += 1
    LOGGER.info("gauss map check at t=%.4g: max ratio %.6g over %d pairs", t, worst, used)
    return GaussLipschitzReport(t, 1.0 / t, worst, used, slack)


def refinement_report(coarse: LambdaSet, fine: LambdaSet, points: Sequence[Sequence[float]], tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, Any]:
    """Cosmological time of the same points under two sampling densities."""
    coarse_times = [cosmological_time(coarse, point, tol).T for point in points]
    fine_times = [cosmological_time(fine, point, tol).T for point in points]
    report = compare_refinement(coarse_times, fine_times)
    report.update({"coarse_planes": len(coarse), "fine_planes": len(fine)})
    return report


def radiant_lambda(n: int, count: int, seed: int = 0) -> LambdaSet:
    """Lightlike planes through the origin tangent to the light cone.

    In dimension 3 the directions are equally spaced, so doubling ``count``
    refines the set.
    """
    if count < 2:
        raise InputValidationError("a radiant lambda set needs at least two directions")
    if n == 3:
        angles = 2.0 * np.pi * np.arange(count) / count
        spatial = np.column_stack([np.cos(angles), np.sin(angles)])
    else:
        rng = np.random.default_rng(seed)
        axes = np.vstack([np.eye(n - 1), -np.eye(n - 1)])
        extra = rng.normal(size=(max(0, count - axes.shape[0]), n - 1))
        spatial = np.vstack([axes, extra])[:max(count, axes.shape[0])]
        spatial /= np.linalg.norm(spatial, axis=1, keepdims=True)
    directions = SPHERE_RADIUS * np.hstack([np.ones((spatial.shape[0], 1)), spatial])
    return LambdaSet(tuple(LightPlane(v, 0.0) for v in directions))


def misner_lambda(n: int) -> LambdaSet:
    """The wedge {x > 0, y < 0} in the null coordinates of the (e0, e1) plane."""
    plus = np.zeros(n)
    plus[:2] = SPHERE_RADIUS
    minus = np.zeros(n)
    minus[0], minus[1] = SPHERE_RADIUS, -SPHERE_RADIUS
    return LambdaSet((LightPlane(plus, 0.0), LightPlane(minus, 0.0)))


def transform_lambda(g: Isometry, lam: LambdaSet) -> LambdaSet:
    if g.dim != lam.dim:
        raise DimensionMismatchError(f"isometry of dimension {g.dim} on planes of dimension {lam.dim}")
    return LambdaSet(tuple(act_on_J(g, plane) for plane in lam.planes), lam.orientation)
