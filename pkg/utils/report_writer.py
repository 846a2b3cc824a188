# utils/report_writer.py
"""CSV / JSON emission of experiment reports.

CSV is the plot-ready view (decimal strings); JSON keeps the exact ratios and
reads back into an identical ExperimentReport.
"""
import json
import logging
import math
import os
from fractions import Fraction

import pandas as pd

from utils.experiment_harness import ExperimentReport, ExperimentRow, TrialRecord
from utils.fair_instance import INFINITE_RATIO, parse_ratio, ratio_text

try:
    from config import CSV_COLUMNS, REPORT_DECIMALS
except ImportError:
    CSV_COLUMNS = ["n", "m", "min_ratio", "trials", "share_method", "wall_ms"]
    REPORT_DECIMALS = 10

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")


def decimal_text(ratio, digits: int = REPORT_DECIMALS) -> str:
    """Exact ratio rounded half-up to `digits` decimals; "inf" and "" (no data) pass through."""
    if ratio is None:
        return ""
    if ratio == INFINITE_RATIO:
        return "inf"
    r = Fraction(ratio)
    sign = "-" if r < 0 else ""
    scaled = math.floor(abs(r) * 10 ** digits + Fraction(1, 2))
    whole, frac = divmod(scaled, 10 ** digits)
    if digits == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{digits}d}"


def _ratio_or_none(ratio):
    return None if ratio is None else ratio_text(ratio)


def _record_obj(r: TrialRecord) -> dict:
    return {
        "m": r.m,
        "trial": r.trial,
        "status": r.status,
        "min_ratio": _ratio_or_none(r.min_ratio),
        "entitlements": [str(e) for e in r.entitlements],
        "source": r.source,
        "message": r.message,
    }


def _row_obj(row: ExperimentRow) -> dict:
    obj = {
        "n": row.n,
        "m": row.m,
        "min_ratio": decimal_text(row.min_ratio),
        "min_ratio_exact": _ratio_or_none(row.min_ratio),
        "ratio_label": row.ratio_label,
        "trials": row.trials,
        "share_method": row.share_method,
        "wall_ms": row.wall_ms,
        "failures": row.failures,
    }
    if row.details:
        obj["details"] = [_record_obj(r) for r in row.details]
    return obj


def report_to_json_obj(report: ExperimentReport) -> dict:
    return {
        "seed": report.seed,
        "algorithm": report.algorithm,
        "config": report.config,
        "rows": [_row_obj(row) for row in report.rows],
    }


def report_frame(report: ExperimentReport) -> pd.DataFrame:
    records = [{
        "n": row.n,
        "m": row.m,
        "min_ratio": decimal_text(row.min_ratio),
        "trials": row.trials,
        "share_method": row.share_method,
        "wall_ms": row.wall_ms,
    } for row in report.rows]
    return pd.DataFrame(records, columns=CSV_COLUMNS)


def emit_report(report: ExperimentReport, format: str, path: str) -> None:
    if format not in FORMATS:
        raise ValueError(f"unknown report format '{format}'; use one of {FORMATS}")
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    if format == "csv":
        report_frame(report).to_csv(path, index=False, lineterminator="\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report_to_json_obj(report), fh, indent=2, sort_keys=True)
            fh.write("\n")
    logger.info("wrote %s report with %d rows to %s", format, len(report.rows), path)


def format_for_path(path: str) -> str:
    ext = os.path.splitext(path)[1].lower().lstrip(".")
    if ext not in FORMATS:
        raise ValueError(f"cannot infer report format from '{path}'; use .csv or .json")
    return ext


def _parse_optional(text):
    return None if text is None else parse_ratio(text)


def report_from_json_obj(obj: dict) -> ExperimentReport:
    rows = []
    for r in obj["rows"]:
        details = tuple(
            TrialRecord(
                m=d["m"],
                trial=d["trial"],
                status=d["status"],
                min_ratio=_parse_optional(d["min_ratio"]),
                entitlements=tuple(Fraction(e) for e in d["entitlements"]),
                source=d.get("source", ""),
                message=d.get("message", ""),
            )
            for d in r.get("details", [])
        )
        rows.append(ExperimentRow(
            n=r["n"],
            m=r["m"],
            min_ratio=_parse_optional(r["min_ratio_exact"]),
            trials=r["trials"],
            share_method=r["share_method"],
            wall_ms=r["wall_ms"],
            ratio_label=r["ratio_label"],
            failures=r.get("failures", 0),
            details=details,
        ))
    return ExperimentReport(rows=tuple(rows), seed=obj["seed"], algorithm=obj["algorithm"],
                            config=obj.get("config", {}))


def load_report(path: str) -> ExperimentReport:
    with open(path, encoding="utf-8") as fh:
        return report_from_json_obj(json.load(fh))
