"""CSV ingestion/emission and the JSON fit report.

Dataset CSV format: header exactly ``index,opening,flow,mode``, UTF-8,
'.' decimal separator, one record per line.  The mode column holds the
ground-truth stroke (0/1) when known and is empty otherwise.

The JSON report serializes every float with 17+ significant digits so
that parsing it back reproduces the binary values exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict
from typing import List, Optional

import numpy as np

from .estimator import FitResult
from .evaluation import EvalRow
from .model import Dataset

__all__ = [
    "CSV_HEADER",
    "EVAL_HEADER",
    "PLOT_DATA_HEADER",
    "REPORT_SCHEMA_VERSION",
    "write_dataset_csv",
    "read_dataset_csv",
    "write_plot_data_csv",
    "report_dict",
    "error_report_dict",
    "dumps_report",
    "parse_report",
    "write_eval_csv",
]

CSV_HEADER = "index,opening,flow,mode"
PLOT_DATA_HEADER = "index,opening,flow,fitted_flow,label"
EVAL_HEADER = ("snr_db,method,n_trials,n_failures,"
               "misclassification_mean,misclassification_std,"
               "alpha_rel_err_mean,alpha_rel_err_std,"
               "beta_abs_err_mean,beta_abs_err_std")
REPORT_SCHEMA_VERSION = "1"


def _fmt(x: float) -> str:
    """Shortest decimal that round-trips to the same binary64 value."""
    return repr(float(x))


def write_dataset_csv(path, ds: Dataset) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        modes = ds.true_modes
        for i in range(len(ds)):
            mode = "" if modes is None else str(int(modes[i]))
            fh.write(f"{i + 1},{_fmt(ds.openings[i])},{_fmt(ds.flows[i])},{mode}\n")


def _parse_field(raw: str, kind, column: str, lineno: int):
    try:
        return kind(raw)
    except ValueError:
        raise ValueError(
            f"line {lineno}: {column} value {raw!r} is not numeric") from None


def read_dataset_csv(path, time_ordered: bool = True) -> Dataset:
    """Parse a dataset CSV; malformed content reports the offending line.

    Line numbers count from the top of the file (the header is line 1).
    Indices must run 1..N in order; the mode column must be all-empty or
    all-populated.
    """
    openings: List[float] = []
    flows: List[float] = []
    modes: List[int] = []
    blank_modes = 0
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty file: missing header") from None
        if ",".join(header) != CSV_HEADER:
            raise ValueError(
                f"line 1: header must be {CSV_HEADER!r}, got {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"line {lineno}: expected 4 fields, got {len(row)}")
            index = _parse_field(row[0].strip(), int, "index", lineno)
            if index != len(openings) + 1:
                raise ValueError(
                    f"line {lineno}: index {index} out of order "
                    f"(expected {len(openings) + 1})")
            opening = _parse_field(row[1].strip(), float, "opening", lineno)
            flow = _parse_field(row[2].strip(), float, "flow", lineno)
            if not math.isfinite(opening):
                raise ValueError(f"line {lineno}: opening is not finite")
            if not math.isfinite(flow):
                raise ValueError(f"line {lineno}: flow is not finite")
            openings.append(opening)
            flows.append(flow)
            raw_mode = row[3].strip()
            if raw_mode == "":
                blank_modes += 1
            else:
                mode = _parse_field(raw_mode, int, "mode", lineno)
                if mode not in (0, 1):
                    raise ValueError(f"line {lineno}: mode must be 0 or 1, got {mode}")
                modes.append(mode)
    if not openings:
        raise ValueError("no data records found")
    if blank_modes and modes:
        raise ValueError("mode column must be entirely empty or entirely populated")
    true_modes = np.asarray(modes, dtype=np.int64) if modes else None
    return Dataset(np.asarray(openings), np.asarray(flows),
                   time_ordered=time_ordered, true_modes=true_modes)


def write_plot_data_csv(path, ds: Dataset, result: FitResult) -> None:
    """Per-sample table for external plotting: measured and fitted flow."""
    labels = result.labels
    if labels is None:
        labels = np.zeros(len(ds), dtype=np.int64)
    fitted = result.params.alpha * ds.openings + result.params.beta * labels
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(PLOT_DATA_HEADER + "\n")
        for i in range(len(ds)):
            fh.write(f"{i + 1},{_fmt(ds.openings[i])},{_fmt(ds.flows[i])},"
                     f"{_fmt(fitted[i])},{int(labels[i])}\n")


def report_dict(result: FitResult, config_echo: dict) -> dict:
    """Flatten a FitResult into the versioned report structure."""
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "alpha": float(result.params.alpha),
        "beta": float(result.params.beta),
        "hysteresis_width": float(result.params.hysteresis_width),
        "labels": [] if result.labels is None else [int(v) for v in result.labels],
        "switch_epochs": None if result.epochs is None
        else [int(e) for e in result.epochs],
        "residual_rms": float(result.residual_rms),
        "singular_values": None if result.sigma is None
        else [float(s) for s in result.sigma],
        "warnings": list(result.warnings),
        "converged": bool(result.converged),
        "iterations": int(result.iterations),
        "config": config_echo,
    }


def error_report_dict(message: str, diagnostics: dict, config_echo: dict) -> dict:
    """Report emitted when estimation fails; carries partial diagnostics."""
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "error": message,
        "singular_values": diagnostics.get("singular_values"),
        "warnings": list(diagnostics.get("warnings", [])),
        "config": config_echo,
    }


def _emit(value, out: List[str], indent: int) -> None:
    pad = " " * indent
    if isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(value.items()):
            out.append(pad + "  " + json.dumps(k) + ": ")
            _emit(v, out, indent + 2)
            out.append(",\n" if i < len(value) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(value, (list, tuple)):
        if not value:
            out.append("[]")
            return
        out.append("[")
        for i, v in enumerate(value):
            _emit(v, out, indent)
            if i < len(value) - 1:
                out.append(", ")
        out.append("]")
    elif isinstance(value, bool) or value is None:
        out.append(json.dumps(value))
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite float in report: {value!r}")
        # 17 significant digits: lossless for binary64
        out.append(format(value, ".17g"))
    elif isinstance(value, (int, np.integer)):
        out.append(str(int(value)))
    else:
        out.append(json.dumps(value))


def dumps_report(report: dict) -> str:
    """Serialize a report with >= 17 significant digits on every float."""
    out: List[str] = []
    _emit(report, out, 0)
    out.append("\n")
    return "".join(out)


def parse_report(text: str) -> dict:
    return json.loads(text)


def _fmt_cell(x) -> str:
    if isinstance(x, float):
        return _fmt(x)
    return str(x)


def write_eval_csv(path, rows: List[EvalRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(EVAL_HEADER + "\n")
        for row in rows:
            d = asdict(row)
            fh.write(",".join(_fmt_cell(d[k]) for k in EVAL_HEADER.split(",")) + "\n")
