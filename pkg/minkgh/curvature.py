"""Mean curvature of spacelike graphs x0 = phi(x) by central differences.

Sign convention: H is the divergence of the future unit normal divided by
n - 1, so expanding levels (hyperboloids) have H > 0 and a level t of the
radiant model has H = 1/t.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .config import thread_count
from .errors import ConstructionFailure, InputValidationError, ModelParameterError, NotSpacelikeError, OutsideDomainError
from .models import TranslationModel
from .reporting import read_csv_grid

LOGGER = logging.getLogger("minkgh.curvature")

BASE_STEP = 1e-4
RADIUS_PROBE_STEP = 1e-3
MIN_CMC_POINTS = 10
SIGN_CONVENTION = "divergence of the future unit normal over n-1; expanding > 0"


@dataclass(frozen=True)
class GraphSurface:
    evaluator: Callable[[np.ndarray], float] = field(repr=False)
    lower: np.ndarray
    upper: np.ndarray
    lipschitz: float
    label: str = "graph"

    @property
    def dim(self) -> int:
        """Dimension of the ambient Minkowski space."""
        return self.lower.shape[0] + 1

    def __call__(self, x: Sequence[float]) -> float:
        return float(self.evaluator(np.asarray(x, dtype=float)))

    def contains(self, x: Sequence[float]) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x > self.lower) and np.all(x < self.upper))

    def lift(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.concatenate([[self(x)], x])

    def sample_points(self, count: int, rng: np.random.Generator, margin: float = 0.1) -> np.ndarray:
        width = self.upper - self.lower
        return rng.uniform(self.lower + margin * width, self.upper - margin * width, size=(count, self.lower.shape[0]))

    def validate(self, samples: Sequence[Sequence[float]], step: float = BASE_STEP) -> float:
        """Largest sampled gradient norm; raises when the graph is not spacelike there."""
        worst = 0.0
        for x in samples:
            gradient, _ = gradient_hessian(self, x, step)
            worst = max(worst, float(np.linalg.norm(gradient)))
        if worst >= 1.0:
            raise NotSpacelikeError(f"{self.label}: sampled gradient norm {worst:.6g} >= 1")
        return worst

    def to_dict(self) -> Dict[str, Any]:
        return {"label": self.label, "lower": self.lower.tolist(), "upper": self.upper.tolist(), "lipschitz": self.lipschitz}


def gradient_hessian(surface: GraphSurface, x: Sequence[float], step: float) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    k = x.shape[0]
    center = surface(x)
    basis = np.eye(k) * step
    gradient = np.zeros(k)
    hessian = np.zeros((k, k))
    for i in range(k):
        forward, backward = surface(x + basis[i]), surface(x - basis[i])
        gradient[i] = (forward - backward) / (2.0 * step)
        hessian[i, i] = (forward - 2.0 * center + backward) / step ** 2
        for j in range(i + 1, k):
            mixed = (
                surface(x + basis[i] + basis[j])
                - surface(x + basis[i] - basis[j])
                - surface(x - basis[i] + basis[j])
                + surface(x - basis[i] - basis[j])
            ) / (4.0 * step ** 2)
            hessian[i, j] = hessian[j, i] = mixed
    return gradient, hessian


def default_step(surface: GraphSurface, x: Sequence[float]) -> float:
    """BASE_STEP scaled by a local curvature radius estimate."""
    _, hessian = gradient_hessian(surface, x, RADIUS_PROBE_STEP)
    largest = float(np.max(np.abs(np.linalg.eigvalsh(hessian)), initial=0.0))
    radius = 1.0 / largest if largest > 0 else np.inf
    return BASE_STEP * float(np.clip(radius, 1e-2, 1e2))


def mean_curvature(surface: GraphSurface, point: Sequence[float], step: Optional[float] = None) -> float:
    point = np.asarray(point, dtype=float)
    if point.shape != surface.lower.shape:
        raise InputValidationError(f"point has {point.shape[0]} coordinates, graph domain has {surface.lower.shape[0]}")
    if not surface.contains(point):
        raise OutsideDomainError(f"{point.tolist()} is outside the domain of {surface.label}")
    step = default_step(surface, point) if step is None else step
    if step <= 0:
        raise InputValidationError(f"step must be positive, got {step}")
    gradient, hessian = gradient_hessian(surface, point, step)
    slope = float(gradient @ gradient)
    if slope >= 1.0:
        raise NotSpacelikeError(f"{surface.label}: gradient norm {np.sqrt(slope):.6g} >= 1 at {point.tolist()}")
    w = np.sqrt(1.0 - slope)
    divergence = np.trace(hessian) / w + float(gradient @ hessian @ gradient) / w ** 3
    return float(divergence / point.shape[0])


@dataclass(frozen=True)
class CMCReport:
    is_cmc: bool
    value: float
    spread: float
    estimates: List[float]
    tol: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "is_cmc": self.is_cmc,
            "value": self.value,
            "spread": self.spread,
            "points": len(self.estimates),
            "estimates": self.estimates,
            "tol": self.tol,
            "sign_convention": SIGN_CONVENTION,
        }


def cmc_check(
    surface: GraphSurface,
    points: Sequence[Sequence[float]],
    tol: float = 1e-4,
    step: Optional[float] = None,
    threads: Optional[int] = None,
) -> CMCReport:
    points = [np.asarray(point, dtype=float) for point in points]
    if len(points) < MIN_CMC_POINTS:
        raise InputValidationError(f"cmc_check needs at least {MIN_CMC_POINTS} points, got {len(points)}")
    workers = thread_count() if threads is None else threads
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            estimates = list(pool.map(lambda x: mean_curvature(surface, x, step), points))
    else:
        estimates = [mean_curvature(surface, x, step) for x in points]
    bad = [i for i, value in enumerate(estimates) if not np.isfinite(value)]
    if bad:
        raise ConstructionFailure(f"mean curvature estimate is not finite at points {bad}")
    value = float(np.mean(estimates))
    spread = float(np.max(estimates) - np.min(estimates))
    is_cmc = spread <= tol * (1.0 + abs(value))
    LOGGER.info("%s: H=%.9g spread=%.3e over %d points (cmc=%s)", surface.label, value, spread, len(points), is_cmc)
    return CMCReport(bool(is_cmc), value, spread, [float(item) for item in estimates], tol)


def _box(n: int, half_width: float) -> Tuple[np.ndarray, np.ndarray]:
    return -half_width * np.ones(n - 1), half_width * np.ones(n - 1)


def hyperboloid_graph(t: float = 1.0, n: int = 3, half_width: float = 2.0) -> GraphSurface:
    """Level t of the radiant model, x0 = sqrt(t^2 + |x|^2)."""
    if t <= 0:
        raise ModelParameterError(f"level t must be positive, got {t}")
    lower, upper = _box(n, half_width)
    corner = half_width * np.sqrt(n - 1)
    return GraphSurface(
        lambda x: np.sqrt(t * t + float(x @ x)),
        lower,
        upper,
        corner / np.sqrt(t * t + corner * corner),
        f"hyperboloid(t={t})",
    )


def plane_graph(offset: float = 0.0, slope: Optional[Sequence[float]] = None, n: int = 3, half_width: float = 2.0) -> GraphSurface:
    slope = np.zeros(n - 1) if slope is None else np.asarray(slope, dtype=float)
    norm = float(np.linalg.norm(slope))
    if norm >= 1.0:
        raise NotSpacelikeError(f"hyperplane slope {norm:.6g} >= 1 is not spacelike")
    lower, upper = _box(n, half_width)
    return GraphSurface(lambda x: offset + float(slope @ x), lower, upper, norm, "hyperplane")


def translation_leaf_graph(model: TranslationModel, t: float, half_width: float = 2.0) -> GraphSurface:
    """Orbit leaf <p|u> = -t of a translation spacetime as a graph."""
    u = model.time_direction()
    surface = plane_graph(t / u[0], u[1:] / u[0], model.dim, half_width)
    return GraphSurface(surface.evaluator, surface.lower, surface.upper, surface.lipschitz, f"translation leaf(t={t})")


def misner_level_graph(t: float = 1.0, n: int = 3, half_width: float = 2.0) -> GraphSurface:
    """Level t of the Misner cosmological time: x0 = sqrt(t^2 + x1^2)."""
    if t <= 0:
        raise ModelParameterError(f"level t must be positive, got {t}")
    lower, upper = _box(n, half_width)
    return GraphSurface(
        lambda x: np.sqrt(t * t + x[0] * x[0]),
        lower,
        upper,
        half_width / np.sqrt(t * t + half_width * half_width),
        f"misner level(t={t})",
    )


def bumpy_graph(n: int = 3, amplitude: float = 0.2, modes: int = 3, seed: int = 0, half_width: float = 2.0) -> GraphSurface:
    rng = np.random.default_rng(seed)
    frequencies = rng.uniform(-1.0, 1.0, size=(modes, n - 1))
    weights = rng.uniform(0.5, 1.0, size=modes)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=modes)
    lipschitz = amplitude * float(np.sum(weights * np.linalg.norm(frequencies, axis=1)))
    if lipschitz >= 1.0:
        raise NotSpacelikeError(f"bump amplitude {amplitude} gives slope bound {lipschitz:.6g} >= 1")
    lower, upper = _box(n, half_width)
    return GraphSurface(
        lambda x: 1.0 + amplitude * float(weights @ np.sin(frequencies @ x + phases)),
        lower,
        upper,
        lipschitz,
        f"bumpy(seed={seed})",
    )


def tabulated_graph(path: str) -> GraphSurface:
    """Bicubic spline through a CSV grid of rows x1, x2, phi (n = 3)."""
    table = read_csv_grid(path)
    if table.ndim != 2 or table.shape[1] != 3:
        raise ModelParameterError(f"{path}: expected rows x1,x2,phi")
    xs, ys = np.unique(table[:, 0]), np.unique(table[:, 1])
    if xs.shape[0] * ys.shape[0] != table.shape[0]:
        raise ModelParameterError(f"{path}: rows do not form a full rectangular grid")
    if min(xs.shape[0], ys.shape[0]) < 4:
        raise ModelParameterError(f"{path}: bicubic interpolation needs at least 4 nodes per axis")
    order = np.lexsort((table[:, 1], table[:, 0]))
    values = table[order, 2].reshape(xs.shape[0], ys.shape[0])
    spline = RectBivariateSpline(xs, ys, values)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    slope = np.hypot(spline.ev(gx, gy, dx=1), spline.ev(gx, gy, dy=1))
    LOGGER.info("loaded %dx%d graph from %s (max grid slope %.4g)", xs.shape[0], ys.shape[0], path, float(np.max(slope)))
    return GraphSurface(
        lambda x: float(spline.ev(x[0], x[1])),
        np.array([xs[0], ys[0]]),
        np.array([xs[-1], ys[-1]]),
        float(np.max(slope)),
        f"tabulated({path})",
    )
