from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from minkgh.cli import RunConfig, build_parser, main, run
from minkgh.minkowski import boost_matrix


def _write(tmp_path: Path, name: str, document: dict) -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


def _report(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


def _schottky_document() -> dict:
    return {
        "name": "schottky",
        "generators": [
            {"L": boost_matrix(3, 2.5, 1).tolist(), "tau": [0.0, 0.0, 0.0]},
            {"L": boost_matrix(3, 2.5, 2).tolist(), "tau": [0.0, 0.0, 0.0]},
        ],
    }


def test_parser_defaults() -> None:
    args = build_parser().parse_args(["tri"])
    assert args.command == "tri"
    assert args.input is None
    assert args.maxlen == 4
    with pytest.raises(SystemExit):
        build_parser().parse_args(["unknown"])


def test_classify_report(tmp_path: Path) -> None:
    source = _write(tmp_path, "in.json", {"isometries": [{"L": np.eye(3).tolist(), "tau": [0.0, 1.0, 0.0]}]})
    out = tmp_path / "report.json"
    assert run(RunConfig("classify", source, output=out)) == 0
    report = _report(out)
    assert report["status"] == "ok"
    assert report["schema_version"] == 1
    assert report["header"]["dimension"] == 3
    result = report["result"]["results"][0]
    assert result["classification"]["label"] == "elliptic (pure translation)"
    assert result["achronal_kind"]["kind"] == "all"


def test_invalid_document_reports_pointer(tmp_path: Path) -> None:
    source = _write(tmp_path, "in.json", {"isometries": [{"L": "identity", "tau": [0.0, 0.0, 0.0]}]})
    out = tmp_path / "report.json"
    assert run(RunConfig("classify", source, output=out)) == 2
    report = _report(out)
    assert report["status"] == "invalid"
    assert "/isometries/0/L" in [error["pointer"] for error in report["errors"]]


def test_unknown_field_is_rejected(tmp_path: Path) -> None:
    source = _write(tmp_path, "in.json", {"isometries": [{"L": np.eye(3).tolist(), "tau": [0, 0, 0], "extra": 1}]})
    assert run(RunConfig("classify", source, output=tmp_path / "r.json")) == 2


def test_non_lorentz_matrix_exits_with_input_status(tmp_path: Path) -> None:
    source = _write(tmp_path, "in.json", {"isometries": [{"L": (2.0 * np.eye(3)).tolist(), "tau": [0.0, 0.0, 0.0]}]})
    out = tmp_path / "report.json"
    assert run(RunConfig("classify", source, output=out)) == 2
    assert "NotLorentzError" in _report(out)["errors"][0]["message"]


def test_missing_input_file(tmp_path: Path) -> None:
    assert run(RunConfig("classify", tmp_path / "absent.json")) == 2


def test_achronal_command(tmp_path: Path) -> None:
    document = {
        "isometry": {"L": boost_matrix(3, 0.3).tolist(), "tau": [0.0, 0.0, 0.0]},
        "points": [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]],
        "qmax": 10,
    }
    out = tmp_path / "report.json"
    assert run(RunConfig("achronal", _write(tmp_path, "in.json", document), output=out)) == 0
    rows = _report(out)["result"]["points"]
    assert [row["in_achronal"] for row in rows] == ["inside", "outside"]
    assert [row["oracle"] for row in rows] == ["inside", "outside"]


def test_domain_command_writes_level_points(tmp_path: Path) -> None:
    root = 1.0 / np.sqrt(2.0)
    document = {
        "planes": [{"v": [root, root, 0.0], "s": 0.0}, {"v": [root, -root, 0.0], "s": 0.0}],
        "points": [[2.0, 0.5, 0.3]],
        "levels": [1.0],
        "samples": 6,
        "spread": 0.5,
    }
    out, table = tmp_path / "report.json", tmp_path / "level.csv"
    assert run(RunConfig("domain", _write(tmp_path, "in.json", document), output=out, csv=table)) == 0
    result = _report(out)["result"]
    assert result["future_regular"]["regular"]
    assert result["points"][0]["T"] == pytest.approx(np.sqrt(3.75), rel=1e-9)
    with open(table, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0][:2] == ["t", "p0"]
    assert len(rows) == 7


@pytest.mark.slow
def test_group_refinement_is_monotone(tmp_path: Path) -> None:
    source = _write(tmp_path, "group.json", _schottky_document())
    counts = {}
    for maxlen in (5, 6):
        table = tmp_path / f"planes{maxlen}.csv"
        out = tmp_path / f"report{maxlen}.json"
        assert run(RunConfig("group", source, maxlen=maxlen, output=out, csv=table)) == 0
        with open(table, newline="", encoding="utf-8") as f:
            counts[maxlen] = len(list(csv.reader(f))) - 1
        report = _report(out)["result"]
        assert report["admissibility"]["status"] == "feasible"
        assert not report["elementary"]["elementary"]
    assert counts[6] >= counts[5] > 0


def test_cocycle_command(tmp_path: Path) -> None:
    document = {"group": _schottky_document(), "values": [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]], "probe_depth": 2}
    out = tmp_path / "report.json"
    assert run(RunConfig("cocycle", _write(tmp_path, "in.json", document), maxlen=2, output=out)) == 0
    result = _report(out)["result"]
    assert result["cohomology"]["h1"] == 3
    assert result["first_infeasible_depth"] is None


@pytest.mark.slow
def test_tri_command(tmp_path: Path) -> None:
    out = tmp_path / "tri.json"
    assert main(["tri", "--out", str(out)]) == 0
    result = _report(out)["result"]
    assert result["h1_dim"] == 3
    assert result["e_dim"] == 0


def test_misner_model(tmp_path: Path) -> None:
    document = {"model": {"family": "misner", "t0": 0.3, "lattice": [{"boost": 0.0, "shift": [1.0]}]}}
    out = tmp_path / "report.json"
    assert run(RunConfig("model", _write(tmp_path, "in.json", document), output=out)) == 0
    result = _report(out)["result"]
    assert result["achronality"]["outside"] == 0
    assert result["time_agreement"] < 1e-8


def test_symext_model(tmp_path: Path) -> None:
    document = {"model": {"family": "symext", "basis": [[1.0], [0.0]], "T": [[1.0], [0.0]], "case": "bounded", "bound": 1.0}}
    out = tmp_path / "report.json"
    assert run(RunConfig("model", _write(tmp_path, "in.json", document), output=out)) == 0
    result = _report(out)["result"]
    assert result["branch"] == "shrink_limit"
    assert result["interval"] == [-1.0, 1.0]


def test_cmc_command(tmp_path: Path) -> None:
    out, table = tmp_path / "report.json", tmp_path / "h.csv"
    source = _write(tmp_path, "in.json", {"kind": "hyperboloid", "t": 2.0, "points": 10})
    assert main(["cmc", str(source), "--out", str(out), "--csv", str(table)]) == 0
    cmc = _report(out)["result"]["cmc"]
    assert cmc["is_cmc"]
    assert cmc["value"] == pytest.approx(0.5, rel=1e-5)


def test_reports_are_deterministic(tmp_path: Path) -> None:
    source = _write(tmp_path, "in.json", {"kind": "bumpy", "points": 10})
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    assert run(RunConfig("cmc", source, seed=7, output=first)) == 0
    assert run(RunConfig("cmc", source, seed=7, output=second)) == 0
    assert first.read_text(encoding="utf-8") == second.read_text(encoding="utf-8")
