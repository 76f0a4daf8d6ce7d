"""Solver configuration shared by every module."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict

from dotenv import load_dotenv

load_dotenv()

_TRUTHY_ENV_VALUES = {"1", "true", "yes", "on"}


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name, "").strip()
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name, "").strip()
    if not raw:
        return default
    try:
        return float(raw)
    except ValueError:
        return default


SOLVER_CONFIG: Dict[str, object] = {
    "threads": _env_int("MINKGH_THREADS", 1),
    "default_tol": _env_float("MINKGH_TOL", 1e-9),
    "max_elements": _env_int("MINKGH_MAX_ELEMENTS", 100_000),
    "debug_reports": os.getenv("MINKGH_DEBUG_REPORTS", "").strip().lower() in _TRUTHY_ENV_VALUES,
    "schema_version": 1,
}


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds, grouped so that reports can echo them verbatim."""

    rel: float = 1e-9
    causal: float = 1e-9
    zero: float = 1e-12
    unit_circle: float = 1e-7
    loxodromic: float = 1e-7
    rank: float = 1e-8
    nilpotent: float = 1e-6
    dedup: float = 1e-8
    boundary: float = 1e-6

    @classmethod
    def from_config(cls, **overrides: float) -> "Tolerances":
        base = cls(rel=float(SOLVER_CONFIG["default_tol"]), causal=float(SOLVER_CONFIG["default_tol"]))
        return replace(base, **overrides) if overrides else base

    def with_rel(self, tol: float) -> "Tolerances":
        return replace(self, rel=tol, causal=tol)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()


def thread_count() -> int:
    return int(SOLVER_CONFIG["threads"])
