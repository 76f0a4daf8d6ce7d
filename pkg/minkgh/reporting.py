"""Report serialization, CSV point clouds and refinement comparisons."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import fields, is_dataclass
from enum import Enum
from pathlib import Path
from statistics import mean
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np

from .config import SOLVER_CONFIG, Tolerances


def _debug_reports_enabled() -> bool:
    return bool(SOLVER_CONFIG["debug_reports"])


def _safe_serialize(value: Any) -> Any:
    if value is None:
        return None
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if math.isnan(number):
            return "nan"
        if math.isinf(number):
            return "inf" if number > 0 else "-inf"
        return number
    if isinstance(value, str):
        return value
    if isinstance(value, np.ndarray):
        return _sanitize_structure(value.tolist())
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "to_dict") and callable(value.to_dict):
        try:
            return _sanitize_structure(value.to_dict())
        except Exception:
            return repr(value)
    if is_dataclass(value):
        return {item.name: _sanitize_structure(getattr(value, item.name)) for item in fields(value) if not item.name.startswith("_")}
    try:
        return repr(value)
    except Exception:
        return "<unserializable>"


def _sanitize_structure(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(key.value if isinstance(key, Enum) else key): _sanitize_structure(val) for key, val in value.items()}
    if isinstance(value, (list, tuple, set)):
        return [_sanitize_structure(item) for item in value]
    return _safe_serialize(value)


def report_header(
    command: str,
    tolerances: Tolerances,
    dimension: Optional[int],
    maxlen: Optional[int],
    seed: Optional[int],
    threads: int,
) -> Dict[str, Any]:
    return {
        "schema_version": SOLVER_CONFIG["schema_version"],
        "command": command,
        "header": {
            "tolerances": tolerances.to_dict(),
            "dimension": dimension,
            "maxlen": maxlen,
            "seed": seed,
            "threads": threads,
        },
    }


def render_report(report: Dict[str, Any]) -> str:
    return json.dumps(_sanitize_structure(report), indent=2, sort_keys=True)


def dump_report_to_file(report: Dict[str, Any], target_path: Path) -> None:
    target_path = Path(target_path)
    target_path.parent.mkdir(parents=True, exist_ok=True)
    target_path.write_text(render_report(report), encoding="utf-8")


def load_json(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_csv(rows: Iterable[Sequence[float]], header: Sequence[str], target_path: Path) -> int:
    target_path = Path(target_path)
    target_path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(target_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(item)) for item in row])
            count += 1
    return count


def read_csv_grid(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = [row for row in csv.reader(f) if row]
    try:
        return np.array([[float(item) for item in row] for row in rows])
    except ValueError:
        return np.array([[float(item) for item in row] for row in rows[1:]])


def compare_refinement(coarse: Sequence[float], fine: Sequence[float]) -> Dict[str, Any]:
    """KPIs between the same quantities computed at two sampling densities."""
    coarse = np.asarray(coarse, dtype=float)
    fine = np.asarray(fine, dtype=float)
    differences = np.abs(coarse - fine)
    relative = differences / np.maximum(np.abs(fine), 1e-300)
    return {
        "points": int(differences.size),
        "max_abs_difference": float(np.max(differences)) if differences.size else None,
        "mean_abs_difference": mean(differences.tolist()) if differences.size else None,
        "max_rel_difference": float(np.max(relative)) if relative.size else None,
        "coarse": coarse.tolist(),
        "fine": fine.tolist(),
    }


def log_report_metadata(label: str, report: Dict[str, Any], *, logger: logging.Logger, force: bool = False) -> None:
    """Log a compact summary of a report if diagnostics are enabled."""
    if not (force or _debug_reports_enabled()):
        return
    if not report:
        logger.info("[%s] empty report; no metadata available.", label)
        return
    summary: Dict[str, Any] = {"keys": sorted(report)}
    for key in ("command", "status", "schema_version"):
        if key in report:
            summary[key] = _safe_serialize(report[key])
    for key, value in report.items():
        if isinstance(value, (list, tuple)):
            summary[f"{key}_count"] = len(value)
    logger.info("[%s] report metadata: %s", label, json.dumps(summary, default=str, sort_keys=True))
