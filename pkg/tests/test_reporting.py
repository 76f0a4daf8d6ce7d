from __future__ import annotations

import json
import logging

import numpy as np

from minkgh.achronal import Verdict
from minkgh.config import DEFAULT_TOLERANCES, SOLVER_CONFIG
from minkgh.reporting import (
    compare_refinement,
    dump_report_to_file,
    log_report_metadata,
    read_csv_grid,
    render_report,
    report_header,
    write_csv,
)


def test_render_report_sanitizes_values() -> None:
    report = {
        "verdict": Verdict.INSIDE,
        "array": np.array([1.0, 2.0]),
        "flag": np.bool_(True),
        "count": np.int64(3),
        "bad": float("nan"),
        "big": float("inf"),
        "tolerances": DEFAULT_TOLERANCES,
    }
    parsed = json.loads(render_report(report))
    assert parsed["verdict"] == "inside"
    assert parsed["array"] == [1.0, 2.0]
    assert parsed["flag"] is True
    assert parsed["count"] == 3
    assert parsed["bad"] == "nan"
    assert parsed["big"] == "inf"
    assert parsed["tolerances"]["rel"] == DEFAULT_TOLERANCES.rel


def test_header_echoes_run_settings() -> None:
    header = report_header("classify", DEFAULT_TOLERANCES, 3, 4, 0, 1)
    assert header["command"] == "classify"
    assert header["header"]["maxlen"] == 4
    assert header["header"]["tolerances"] == DEFAULT_TOLERANCES.to_dict()


def test_csv_round_trip(tmp_path) -> None:
    path = tmp_path / "nested" / "points.csv"
    count = write_csv([[1.0, 2.0, 3.0], [0.1, 0.2, 0.3]], ["a", "b", "c"], path)
    assert count == 2
    table = read_csv_grid(str(path))
    assert table.shape == (2, 3)
    assert table[1, 0] == 0.1


def test_dump_report(tmp_path) -> None:
    target = tmp_path / "out" / "report.json"
    dump_report_to_file({"status": "ok"}, target)
    assert json.loads(target.read_text(encoding="utf-8")) == {"status": "ok"}


def test_compare_refinement() -> None:
    report = compare_refinement([1.0, 2.0], [1.0, 2.5])
    assert report["points"] == 2
    assert report["max_abs_difference"] == 0.5
    assert report["max_rel_difference"] == 0.2


def test_metadata_logging(caplog) -> None:
    logger = logging.getLogger("minkgh.test")
    with caplog.at_level(logging.INFO, logger="minkgh.test"):
        log_report_metadata("run", {"command": "group", "rows": [1, 2]}, logger=logger, force=True)
    assert "rows_count" in caplog.text
    caplog.clear()
    with caplog.at_level(logging.INFO, logger="minkgh.test"):
        log_report_metadata("run", {}, logger=logger, force=True)
    assert "empty report" in caplog.text


def test_metadata_logging_follows_solver_config(caplog, monkeypatch) -> None:
    logger = logging.getLogger("minkgh.test")
    report = {"command": "group", "rows": [1, 2]}
    monkeypatch.setenv("MINKGH_DEBUG_REPORTS", "1")
    monkeypatch.setitem(SOLVER_CONFIG, "debug_reports", False)
    with caplog.at_level(logging.INFO, logger="minkgh.test"):
        log_report_metadata("run", report, logger=logger)
    assert caplog.text == ""
    monkeypatch.setitem(SOLVER_CONFIG, "debug_reports", True)
    with caplog.at_level(logging.INFO, logger="minkgh.test"):
        log_report_metadata("run", report, logger=logger)
    assert "rows_count" in caplog.text
