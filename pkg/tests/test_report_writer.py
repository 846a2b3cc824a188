"""
Tests for utils/report_writer.py: decimal rendering, CSV and JSON reports.
Run: python3 -m pytest tests/test_report_writer.py -v
"""
import json
import os
import sys
from fractions import Fraction

import pandas as pd
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from utils.experiment_harness import (
    BUDGET_EXHAUSTED, OK, ExperimentReport, ExperimentRow, TrialRecord,
)
from utils.fair_instance import INFINITE_RATIO
from utils.report_writer import (
    decimal_text, emit_report, format_for_path, load_report, report_frame, report_to_json_obj,
)


def _report():
    details = (
        TrialRecord(3, 0, OK, Fraction(5, 4), (Fraction(1, 3), Fraction(2, 3)), "oracle"),
        TrialRecord(3, 1, BUDGET_EXHAUSTED, None, (Fraction(1, 2), Fraction(1, 2)), "", "budget"),
    )
    rows = (
        ExperimentRow(2, 3, Fraction(5, 4), 2, "exact", 0, "exact", failures=1, details=details),
        ExperimentRow(2, 4, Fraction(1, 3), 2, "exact", 0, "exact"),
        ExperimentRow(2, 5, INFINITE_RATIO, 2, "exact", 0, "exact"),
        ExperimentRow(2, 6, None, 2, "exact", 0, "exact", failures=2),
    )
    return ExperimentReport(rows=rows, seed=7, algorithm="existence", config={"n": 2})


class TestDecimalText:
    @pytest.mark.parametrize("ratio,text", [
        (Fraction(1, 3), "0.3333333333"),
        (Fraction(2, 3), "0.6666666667"),
        (Fraction(5, 4), "1.2500000000"),
        (Fraction(1), "1.0000000000"),
        (INFINITE_RATIO, "inf"),
        (None, ""),
    ])
    def test_rendering(self, ratio, text):
        assert decimal_text(ratio) == text

    def test_half_up(self):
        assert decimal_text(Fraction(1, 8), 2) == "0.13"
        assert decimal_text(Fraction(7, 2), 0) == "4"


class TestCsv:
    def test_columns_and_rows(self, tmp_path):
        path = tmp_path / "out.csv"
        emit_report(_report(), "csv", str(path))
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "n,m,min_ratio,trials,share_method,wall_ms"
        assert lines[1] == "2,3,1.2500000000,2,exact,0"
        assert lines[3] == "2,5,inf,2,exact,0"
        assert lines[4] == "2,6,,2,exact,0"

    def test_frame_keeps_text_ratios(self):
        frame = report_frame(_report())
        assert isinstance(frame, pd.DataFrame)
        assert list(frame["min_ratio"]) == ["1.2500000000", "0.3333333333", "inf", ""]


class TestJson:
    def test_exact_and_decimal_ratios(self):
        obj = report_to_json_obj(_report())
        first = obj["rows"][0]
        assert first["min_ratio"] == "1.2500000000"
        assert first["min_ratio_exact"] == "5/4"
        assert first["details"][1]["min_ratio"] is None
        assert "details" not in obj["rows"][1]
        assert obj["rows"][2]["min_ratio_exact"] == "inf"

    def test_reads_back(self, tmp_path):
        path = tmp_path / "nested" / "out.json"
        emit_report(_report(), "json", str(path))
        assert load_report(str(path)) == _report()
        text = path.read_text(encoding="utf-8")
        assert text.endswith("\n")
        assert json.loads(text)["seed"] == 7


def test_format_from_extension():
    assert format_for_path("a/b.CSV") == "csv"
    assert format_for_path("b.json") == "json"
    with pytest.raises(ValueError):
        format_for_path("b.xlsx")
    with pytest.raises(ValueError):
        emit_report(_report(), "xlsx", "b.xlsx")
