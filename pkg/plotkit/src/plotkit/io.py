"""Readers for the simulation harness's CSV and sidecar artifacts.

This package performs no numerical analysis: every number it displays comes
verbatim from these files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

REPORT_COLUMNS = [
    "param",
    "err_sup_mean",
    "err_sup_se",
    "err_holder_mean",
    "err_holder_se",
    "reps",
    "failures",
]

PATHS_COLUMNS = ["particle", "t", "value"]


class SchemaError(ValueError):
    """An input file does not match the expected column schema."""


@dataclass
class ReportBundle:
    """A convergence report CSV plus its key-value sidecar."""

    rows: list  # dicts keyed by REPORT_COLUMNS, values kept as strings
    sidecar: dict  # raw string values, never re-parsed into floats for display
    source: str


def _check_header(header, expected, path):
    missing = [c for c in expected if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")


def read_paths_csv(path) -> list:
    """Rows of the `particle,t,value` schema as (int, float, float)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        _check_header(header, PATHS_COLUMNS, path)
        idx = {c: header.index(c) for c in PATHS_COLUMNS}
        rows = [
            (int(rec[idx["particle"]]), float(rec[idx["t"]]), float(rec[idx["value"]]))
            for rec in reader
        ]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_report_csv(path) -> list:
    """Rows of the report schema; numeric strings are preserved verbatim."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        _check_header(header, REPORT_COLUMNS, path)
        idx = {c: header.index(c) for c in REPORT_COLUMNS}
        return [{c: rec[idx[c]] for c in REPORT_COLUMNS} for rec in reader]


def read_sidecar(path) -> dict:
    """`key = value` lines into a dict of raw strings."""
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or "=" not in line:
                continue
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def read_bundle(report_csv, sidecar_path) -> ReportBundle:
    return ReportBundle(
        rows=read_report_csv(report_csv),
        sidecar=read_sidecar(sidecar_path),
        source=str(report_csv),
    )
