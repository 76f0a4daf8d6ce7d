"""Small dense convex quadratic programs by a primal active-set method.

Solves  min 1/2 x^T H x + g^T x  s.t.  A x <= b  from a feasible start, with H
positive semidefinite. Zero-curvature descent directions are followed as rays,
which is how an unbounded problem is detected.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.linalg import null_space

from .errors import QPFailure

LOGGER = logging.getLogger("minkgh.qp")


@dataclass
class QPResult:
    x: np.ndarray
    value: float
    status: str
    iterations: int
    active: List[int] = field(default_factory=list)

    @property
    def bounded(self) -> bool:
        return self.status == "optimal"


class ActiveSetQP:
    def __init__(self, max_iter: int = 200, tol: float = 1e-11):
        self.max_iter = max_iter
        self.tol = tol

    def solve(
        self,
        H: np.ndarray,
        g: np.ndarray,
        A: np.ndarray,
        b: np.ndarray,
        x0: np.ndarray,
        working: Optional[List[int]] = None,
    ) -> QPResult:
        n = H.shape[0]
        x = np.array(x0, dtype=float, copy=True)
        scale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0, float(np.max(np.abs(x))))
        feas_tol = self.tol * scale
        if A.shape[0] and np.max(A @ x - b) > 1e3 * feas_tol:
            raise QPFailure(f"starting point violates constraints by {np.max(A @ x - b):.3e}")
        active = self._initial_working_set(A, b, x, feas_tol, working)

        for iteration in range(1, self.max_iter + 1):
            grad = H @ x + g
            Z = null_space(A[active]) if active else np.eye(n)
            if Z.shape[1] == 0:
                direction = np.zeros(n)
                ray = False
            else:
                direction, ray = self._subspace_step(H, grad, Z)

            if not ray and np.linalg.norm(direction) <= self.tol * max(1.0, np.linalg.norm(x)):
                if not active:
                    return QPResult(x, self._value(H, g, x), "optimal", iteration, [])
                multipliers = np.linalg.lstsq(A[active].T, -grad, rcond=None)[0]
                worst = int(np.argmin(multipliers))
                if multipliers[worst] >= -self.tol * max(1.0, np.linalg.norm(grad)):
                    return QPResult(x, self._value(H, g, x), "optimal", iteration, list(active))
                LOGGER.debug("dropping constraint %d (multiplier %.3e)", active[worst], multipliers[worst])
                active.pop(worst)
                continue

            step, blocking = self._ratio_test(A, b, x, direction, active, feas_tol)
            if ray and blocking is None:
                return QPResult(x, -np.inf, "unbounded", iteration, list(active))
            if not ray:
                step = min(step, 1.0)
                if step >= 1.0:
                    blocking = None if self._step_clear(A, b, x, direction, active, feas_tol) else blocking
            x = x + step * direction
            if blocking is not None:
                active.append(blocking)
        raise QPFailure(f"active-set iteration limit {self.max_iter} reached")

    @staticmethod
    def _value(H: np.ndarray, g: np.ndarray, x: np.ndarray) -> float:
        return float(0.5 * x @ H @ x + g @ x)

    def _initial_working_set(self, A, b, x, feas_tol, working) -> List[int]:
        candidates = working if working is not None else [int(i) for i in np.flatnonzero(np.abs(A @ x - b) <= 1e3 * feas_tol)]
        chosen: List[int] = []
        for index in candidates:
            trial = chosen + [index]
            if np.linalg.matrix_rank(A[trial]) == len(trial):
                chosen = trial
        return chosen

    def _subspace_step(self, H: np.ndarray, grad: np.ndarray, Z: np.ndarray):
        reduced_h = Z.T @ H @ Z
        reduced_g = Z.T @ grad
        eigenvalues, vectors = np.linalg.eigh(reduced_h)
        curvature_floor = self.tol * max(1.0, float(np.max(np.abs(eigenvalues))))
        flat = eigenvalues <= curvature_floor
        flat_component = vectors[:, flat] @ (vectors[:, flat].T @ reduced_g)
        if np.linalg.norm(flat_component) > self.tol * max(1.0, np.linalg.norm(reduced_g)):
            return -Z @ flat_component, True
        curved = ~flat
        inverse = vectors[:, curved] @ np.diag(1.0 / eigenvalues[curved]) @ vectors[:, curved].T
        return -Z @ (inverse @ reduced_g), False

    @staticmethod
    def _ratio_test(A, b, x, direction, active, feas_tol):
        step = np.inf
        blocking = None
        if A.shape[0] == 0:
            return step, blocking
        rates = A @ direction
        slack = b - A @ x
        for index in np.flatnonzero(rates > 1e-14 * max(1.0, np.linalg.norm(direction))):
            if index in active:
                continue
            candidate = max(slack[index], 0.0) / rates[index]
            if candidate < step:
                step = candidate
                blocking = int(index)
        return step, blocking

    @staticmethod
    def _step_clear(A, b, x, direction, active, feas_tol) -> bool:
        if A.shape[0] == 0:
            return True
        trial = A @ (x + direction) - b
        return bool(np.all(trial <= feas_tol))
