"""Batch front end: ``python -m minkgh.cli <command> [input.json] [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ValidationError

from .achronal import achronal_kind, membership_report, visibility_witness
from .classify import classify
from .cohomology import cocycle_from_coordinates, cohomology_report, cone_probe, first_infeasible_depth, tri_experiment
from .config import SOLVER_CONFIG, Tolerances, thread_count
from .convex_domain import (
    LambdaSet,
    cosmological_time,
    gauss_lipschitz_check,
    hyperboloid_directions,
    is_compact,
    is_future_regular,
    is_past_regular,
    level_set_sample,
    nearest_pairs,
)
from .curvature import (
    bumpy_graph,
    cmc_check,
    hyperboloid_graph,
    misner_level_graph,
    plane_graph,
    tabulated_graph,
    translation_leaf_graph,
)
from .errors import InputValidationError, MinkghError
from .kleinian import GroupSpec, admissibility, is_elementary, limit_set_approx, refinement_curve
from .minkowski import validate_isometry
from .models import (
    AmbientPresentation,
    EscapePath,
    ExtensionCase,
    SymExtProblem,
    build_misner,
    build_translation,
    build_unipotent,
    limits_allowed,
    radiant_standard,
    surface_completeness_probe,
    symmetric_extension,
    twisted_product,
    validate_presentation,
)
from .penrose import LightPlane, act_on_J, conformal_expansion, expansion_factor, translation_factor
from .reporting import dump_report_to_file, load_json, log_report_metadata, render_report, report_header, write_csv
from .schemas import (
    AchronalIn,
    ClassifyIn,
    CocycleIn,
    DomainIn,
    GroupIn,
    ModelDocument,
    PenroseIn,
    SurfaceIn,
    validation_pointers,
)

LOGGER = logging.getLogger("minkgh.cli")

COMMANDS = ("classify", "achronal", "penrose-act", "domain", "group", "cocycle", "tri", "model", "cmc")
DEFAULT_MAXLEN = 4

CsvTable = Tuple[List[str], List[List[float]]]


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: Optional[Path] = None
    dimension: int = 3
    tol: Optional[float] = None
    maxlen: int = DEFAULT_MAXLEN
    output: Optional[Path] = None
    csv: Optional[Path] = None
    seed: int = 0
    threads: Optional[int] = None

    def tolerances(self) -> Tolerances:
        base = Tolerances.from_config()
        return base if self.tol is None else base.with_rel(self.tol)

    def worker_count(self) -> int:
        return thread_count() if self.threads is None else self.threads


def _parse(document: Dict[str, Any], schema: type) -> BaseModel:
    return schema.model_validate(document)


def _group(data: GroupIn, tol: Tolerances) -> GroupSpec:
    return GroupSpec.from_records([item.model_dump() for item in data.generators], data.relations, data.name, tol)


def _run_classify(document: Dict[str, Any], config: RunConfig, tol: Tolerances) -> Tuple[Dict[str, Any], Optional[CsvTable]]:
    data = _parse(document, ClassifyIn)
    rows = []
    for item in data.isometries:
        g = validate_isometry(item.L, item.tau, tol.rel)
        rows.append({"classification": classify(g, tol).to_dict(), "achronal_kind": achronal_kind(g, tol).to_dict()})
    return {"dimension": len(data.isometries[0].tau), "results": rows}, None


def _run_achronal(document: Dict[str, Any], config: RunConfig, tol: Tolerances) -> Tuple[Dict[str, Any], Optional[CsvTable]]:
    data = _parse(document, AchronalIn)
    g = validate_isometry(data.isometry.L, data.isometry.tau, tol.rel)
    report: Dict[str, Any] = {
        "dimension": g.dim,
        "achronal_kind": achronal_kind(g, tol).to_dict(),
        "points": membership_report(g, data.points, data.qmax, tol),
    }
    if data.witness_base is not None:
        report["visibility_witness"] = visibility_witness(g, data.witness_base, tol).tolist()
    return report, None


def _run_penrose(document: Dict[str, Any], config: RunConfig, tol: Tolerances) -> Tuple[Dict[str, Any], Optional[CsvTable]]:
    data = _parse(document, PenroseIn)
    g = validate_isometry(data.isometry.L, data.isometry.tau, tol.rel)
    rows = []
    for item in data.planes:
        plane = LightPlane.from_direction(item.v, item.s, tol.causal)
        rows.append({
            "plane": plane.to_dict(),
            "image": act_on_J(g, plane).to_dict(),
            "a": expansion_factor(g, plane.v),
            "b": translation_factor(g, plane.v),
            "conformal_expansion": conformal_expansion(g, plane.v),
        })
    return {"dimension": g.dim, "planes": rows}, None


def _run_domain(document: Dict[str, Any], config: RunConfig, tol: Tolerances) -> Tuple[Dict[str, Any], Optional[CsvTable]]:
    data = _parse(document, DomainIn)
    lam = LambdaSet.from_records([item.model_dump() for item in data.planes], data.orientation)
    threads = config.worker_count()
    report: Dict[str, Any] = {
        "dimension": lam.dim,
        "lambda": lam.to_dict(),
        "future_regular": is_future_regular(lam, tol).to_dict(),
        "past_regular": is_past_regular(lam, tol).to_dict(),
        "compact": is_compact(lam, tol),
    }
    points = []
    for point in data.points:
        result = cosmological_time(lam, point, tol, threads)
        entry = result.to_dict()
        entry["residuals"] = result.residuals(lam, point)
        points.append(entry)
    report["points"] = points

    rng = np.random.default_rng(config.seed)
    rows: List[List[float]] = []
    levels = []
    for t in data.levels:
        sample = level_set_sample(lam, t, hyperboloid_directions(lam.dim, data.samples, rng, data.spread), tol)
        pairs = [(sample.points[i], sample.points[j]) for i, j in nearest_pairs(sample.points)]
        levels.append({
            "t": t,
            "points": len(sample.points),
            "failures": sample.failures,
            "gauss_lipschitz": gauss_lipschitz_check(lam, t, pairs, tol).to_dict(),
        })
        rows.extend([t] + row for row in sample.rows())
    report["levels"] = levels
    header = ["t"] + [f"p{i}" for i in range(lam.dim)] + [f"n{i}" for i in range(lam.dim)]
    return report, (header, rows)


def _run_group(document: Dict[str, Any], config: RunConfig, tol: Tolerances) -> Tuple[Dict[str, Any], Optional[CsvTable]]:
    data = _parse(document, GroupIn)
    spec = _group(data, tol)
    depths = data.depths or list(range(1, config.maxlen + 1))
    result = admissibility(spec, config.maxlen, tol, data.orientation)
    limit = result.limit_set or limit_set_approx(spec, config.maxlen, tol)
    report = {
        "dimension": spec.dim,
        "group": spec.to_dict(),
        "elementary": is_elementary(spec, tol).to_dict(),
        "admissibility": result.to_dict(),
        "limit_set": limit.to_dict(),
        "refinement": refinement_curve(spec, depths, tol, data.orientation),
    }
    header = [f"v{i}" for i in range(spec.dim)] + ["s"]
    rows = [list(item.plane.v) + [item.plane.s] for item in limit.data]
    return report, (header, rows)


def _run_cocycle(document: Dict[str, Any], config: RunConfig, tol: Tolerances) -> Tuple[Dict[str, Any], Optional[CsvTable]]:
    data = _parse(document, CocycleIn)
    spec = _group(data.group, tol)
    report: Dict[str, Any] = {"dimension": spec.dim, "cohomology": cohomology_report(spec).to_dict()}
    if data.values is not None:
        tau = cocycle_from_coordinates(spec, np.asarray(data.values, dtype=float).ravel(), tol)
        report["cocycle"] = tau.to_dict()
        report["cone_probe"] = cone_probe(spec, tau, config.maxlen, tol, data.group.orientation).to_dict()
        report["first_infeasible_depth"] = first_infeasible_depth(spec, tau, data.probe_depth, tol)
    return report, None


def _run_tri(document: Dict[str, Any], config: RunConfig, tol: Tolerances) -> Tuple[Dict[str, Any], Optional[CsvTable]]:
    result = tri_experiment(tol, config.maxlen)
    result.update({"dimension": 3, "h1_dim": result["cohomology"]["h1"], "e_dim": result["dim_E"]})
    return result, None


def _misner_from(data: Any, tol: Tolerances, rng: np.random.Generator):
    lattice = [(float(item["boost"]), item["shift"]) for item in data.lattice]
    return build_misner(data.t0, lattice, data.dimension, rng=rng, tol=tol)


def _run_model(document: Dict[str, Any], config: RunConfig, tol: Tolerances) -> Tuple[Dict[str, Any], Optional[CsvTable]]:
    data = _parse(document, ModelDocument).model
    rng = np.random.default_rng(config.seed)
    handlers: Dict[str, Callable[[], Tuple[Dict[str, Any], Optional[CsvTable]]]] = {
        "translation": lambda: (build_translation(data.translations, tol).to_dict(), None),
        "misner": lambda: _misner_report(data, tol, rng),
        "unipotent": lambda: _unipotent_report(data, rng),
        "radiant": lambda: _radiant_report(data, config, tol, rng),
        "symext": lambda: _symext_report(data),
        "twisted": lambda: _twisted_report(data, tol, rng),
    }
    return handlers[data.family]()


def _misner_report(data: Any, tol: Tolerances, rng: np.random.Generator) -> Tuple[Dict[str, Any], Optional[CsvTable]]:
    model = _misner_from(data, tol, rng)
    points = model.sample_points(8, rng)
    times = [model.cosmological_time(p) for p in points]
    general = [cosmological_time(model.lambda_set(), p, tol).T for p in points]
    report = model.to_dict()
    report.update({
        "commutator_residual": model.commutator_residual(),
        "lambda": model.lambda_set().to_dict(),
        "achronality": model.achronality_check(points, data.qmax, tol),
        "time_agreement": float(np.max(np.abs(np.subtract(times, general)))),
    })
    header = [f"p{i}" for i in range(model.n)] + ["T"]
    return report, (header, [list(p) + [t] for p, t in zip(points, times)])


def _unipotent_report(data: Any, rng: np.random.Generator) -> Tuple[Dict[str, Any], Optional[CsvTable]]:
    model = build_unipotent(data.lambdas, data.component_index, data.lattice)
    k = model.n - 2
    low, high = model.interval
    heights = [model.base_height + offset for offset in (-0.25, 0.0, 0.25)]
    heights = [y for y in heights if low < y < high]
    samples = [(y, rng.normal(size=k)) for y in heights]
    report = model.to_dict()
    report.update({
        "group_law_residual": model.group_law_residual(model.lattice[0], model.lattice[-1]),
        "invariance_residual": max(model.invariance_residual(y, z, t) for y, z in samples for t in model.lattice),
        "free_action_gap": model.free_action_gap([model.surface_point(y, z) for y, z in samples]),
        "completeness": surface_completeness_probe(model, [EscapePath(model.base_height, end, z) for _, z in samples for end in (low, high)]),
    })
    header = [f"p{i}" for i in range(model.n)]
    return report, (header, [list(model.surface_point(y, z)) for y, z in samples])


def _radiant_report(data: Any, config: RunConfig, tol: Tolerances, rng: np.random.Generator) -> Tuple[Dict[str, Any], Optional[CsvTable]]:
    model = radiant_standard(_group(data.group, tol))
    base = model.level_sample(data.levels[0], 8, rng)
    report = model.to_dict()
    report.update({
        "invariance_residual": model.invariance_residual(base),
        "distance_ratios": [
            {"t": t, "ratio": model.level_distance_ratio(list(zip(base[:-1], base[1:])), data.levels[0], t)} for t in data.levels
        ],
        "admissibility": model.admissibility(config.maxlen).to_dict(),
    })
    header = [f"p{i}" for i in range(model.dim)]
    return report, (header, [list(p) for p in base])


def _symext_report(data: Any) -> Tuple[Dict[str, Any], Optional[CsvTable]]:
    case = ExtensionCase(data.case)
    problem = SymExtProblem(np.asarray(data.basis, dtype=float), np.asarray(data.T, dtype=float), case, data.bound)
    result = symmetric_extension(problem)
    interval = {
        ExtensionCase.BOUNDED: (-data.bound, data.bound),
        ExtensionCase.FUTURE_INFINITE: (data.bound, np.inf),
        ExtensionCase.PAST_INFINITE: (-np.inf, data.bound),
    }[case]
    report = result.to_dict()
    report.update({"dimension": problem.ambient_dim, "case": case.value, "interval": list(interval), "limits_allowed": limits_allowed(problem, *interval)})
    return report, None


def _twisted_report(data: Any, tol: Tolerances, rng: np.random.Generator) -> Tuple[Dict[str, Any], Optional[CsvTable]]:
    if data.base.family == "misner":
        base = _misner_from(data.base, tol, rng)
        omega = base.in_omega
        samples = base.sample_points(8, rng)
    else:
        base = build_translation(data.base.translations, tol)
        omega = lambda p: True  # noqa: E731
        samples = rng.normal(size=(8, base.dim))
    monodromy = [(item["rotation"], item["translation"]) for item in data.monodromy]
    product = twisted_product(data.base.family, base.generators(), data.fiber_rank, monodromy)
    n, N = product.base_dim, product.dim
    presentation = AmbientPresentation(
        product.holonomy(),
        np.eye(N)[:, :n],
        lambda p: omega(p[:n]),
        np.hstack([samples, np.zeros((samples.shape[0], data.fiber_rank))]),
        np.eye(N)[:, n:],
    )
    report = product.descriptor()
    report["presentation"] = validate_presentation(presentation, product, rng)
    return report, None


def _run_cmc(document: Dict[str, Any], config: RunConfig, tol: Tolerances) -> Tuple[Dict[str, Any], Optional[CsvTable]]:
    data = _parse(document, SurfaceIn)
    n = data.dimension
    if data.kind == "hyperboloid":
        surface = hyperboloid_graph(data.t, n)
    elif data.kind == "plane":
        surface = plane_graph(data.t, data.slope, n)
    elif data.kind == "misner":
        surface = misner_level_graph(data.t, n)
    elif data.kind == "bumpy":
        surface = bumpy_graph(n, data.amplitude, seed=config.seed)
    elif data.kind == "translation_leaf":
        if data.translations is None:
            raise InputValidationError("translation_leaf needs translations")
        surface = translation_leaf_graph(build_translation(data.translations, tol), data.t)
    else:
        if data.csv is None:
            raise InputValidationError("tabulated surfaces need a csv path")
        surface = tabulated_graph(data.csv)
    points = surface.sample_points(data.points, np.random.default_rng(config.seed))
    result = cmc_check(surface, points, data.tol, threads=config.worker_count())
    report = {"dimension": surface.dim, "surface": surface.to_dict(), "cmc": result.to_dict()}
    header = [f"x{i + 1}" for i in range(surface.dim - 1)] + ["H"]
    return report, (header, [list(x) + [h] for x, h in zip(points, result.estimates)])


HANDLERS: Dict[str, Callable[[Dict[str, Any], RunConfig, Tolerances], Tuple[Dict[str, Any], Optional[CsvTable]]]] = {
    "classify": _run_classify,
    "achronal": _run_achronal,
    "penrose-act": _run_penrose,
    "domain": _run_domain,
    "group": _run_group,
    "cocycle": _run_cocycle,
    "tri": _run_tri,
    "model": _run_model,
    "cmc": _run_cmc,
}


def _emit(report: Dict[str, Any], config: RunConfig) -> None:
    if config.output is not None:
        dump_report_to_file(report, config.output)
        LOGGER.info("report written to %s", config.output)
    else:
        sys.stdout.write(render_report(report) + "\n")


def run(config: RunConfig) -> int:
    tol = config.tolerances()
    try:
        if config.command not in HANDLERS:
            raise InputValidationError(f"unknown command {config.command!r}; expected one of {', '.join(COMMANDS)}")
        document = load_json(str(config.input_path)) if config.input_path is not None else {}
        body, table = HANDLERS[config.command](document, config, tol)
    except ValidationError as exc:
        errors = validation_pointers(exc)
        LOGGER.error("input validation failed with %d error(s)", len(errors))
        _emit({"schema_version": SOLVER_CONFIG["schema_version"], "command": config.command, "status": "invalid", "errors": errors}, config)
        return 2
    except (json.JSONDecodeError, OSError) as exc:
        LOGGER.error("cannot read input: %s", exc)
        return 2
    except MinkghError as exc:
        code = getattr(exc, "exit_code", 3)
        LOGGER.error("%s: %s", type(exc).__name__, exc)
        _emit({
            "schema_version": SOLVER_CONFIG["schema_version"],
            "command": config.command,
            "status": "invalid" if code == 2 else "failed",
            "errors": [{"pointer": "", "message": f"{type(exc).__name__}: {exc}"}],
        }, config)
        return code

    report = report_header(config.command, tol, body.pop("dimension", config.dimension), config.maxlen, config.seed, config.worker_count())
    report["status"] = "ok"
    report["result"] = body
    log_report_metadata(config.command, report, logger=LOGGER)
    _emit(report, config)
    if config.csv is not None and table is not None:
        header, rows = table
        count = write_csv(rows, header, config.csv)
        LOGGER.info("wrote %d rows to %s", count, config.csv)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minkgh", description="Flat globally hyperbolic spacetime toolkit.")
    parser.add_argument("command", choices=COMMANDS, help="Computation to run.")
    parser.add_argument("input", nargs="?", type=Path, help="JSON input document (not needed for tri).")
    parser.add_argument("--dim", type=int, default=3, help="Spacetime dimension when the input does not fix it.")
    parser.add_argument("--tol", type=float, default=None, help="Relative tolerance (default: MINKGH_TOL or 1e-9).")
    parser.add_argument("--maxlen", type=int, default=DEFAULT_MAXLEN, help="Word length for group enumeration and probes.")
    parser.add_argument("--seed", type=int, default=0, help="Seed for samplers.")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads (default: MINKGH_THREADS or 1).")
    parser.add_argument("--out", type=Path, default=None, help="Write the JSON report here instead of stdout.")
    parser.add_argument("--csv", type=Path, default=None, help="Write the point cloud of the command here.")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging.")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    config = RunConfig(
        command=args.command,
        input_path=args.input,
        dimension=args.dim,
        tol=args.tol,
        maxlen=args.maxlen,
        output=args.out,
        csv=args.csv,
        seed=args.seed,
        threads=args.threads,
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
