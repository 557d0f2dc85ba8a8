"""Run manifests, JSON report schemas, CSV traces and key = value config files."""

from __future__ import annotations

import configparser
import csv
import io
import json
import math

import jsonschema
import numpy as np

from . import __version__
from .schwarz import SchwarzTrace, SweepRecord

TRACE_COLUMNS = ("sweep", "update_norm", "error", "energy")

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["command", "parameters", "seed", "version", "duration_s", "verdict"],
    "properties": {
        "command": {"enum": ["counterexample", "falsify", "schwarz", "buckling"]},
        "parameters": {"type": "object"},
        "seed": {"type": ["integer", "null"]},
        "version": {"type": "string"},
        "duration_s": {"type": "number", "minimum": 0},
        "verdict": {"type": "object", "required": ["exit_code", "summary"]},
    },
}

CERTIFICATE_SCHEMA = {
    "type": "object",
    "required": ["model", "kappa", "mu", "f1", "f2", "lambda", "lhs", "rhs", "margin"],
    "properties": {
        "model": {"type": "string"},
        "f1": {"type": "array", "items": {"type": "number"}, "minItems": 9, "maxItems": 9},
        "f2": {"type": "array", "items": {"type": "number"}, "minItems": 9, "maxItems": 9},
        "lambda": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
}

_RESULT_SCHEMAS = {
    "counterexample": {
        "type": "object",
        "required": ["kappa", "mu", "w_f1", "w_f2", "points", "excluded", "n_violated", "reproduced"],
    },
    "falsify": {
        "type": "object",
        "required": ["model", "test", "samples", "expected", "found"],
        "properties": {"certificate": {"oneOf": [{"type": "null"}, CERTIFICATE_SCHEMA]}},
    },
    "schwarz": {
        "type": "object",
        "required": ["trace", "rho", "r_squared", "max_error", "monolithic_energy"],
        "properties": {
            "trace": {
                "type": "object",
                "required": ["converged", "records"],
                "properties": {
                    "records": {
                        "type": "array",
                        "items": {"type": "object", "required": ["sweep", "update_norm", "energy", "error"]},
                    }
                },
            }
        },
    },
    "buckling": {
        "type": "object",
        "required": ["status", "reason", "critical_shortening", "subdomain_critical_strains", "window_ok"],
    },
}

REPORT_SCHEMAS = {
    name: {
        "type": "object",
        "required": ["manifest", "result"],
        "properties": {"manifest": MANIFEST_SCHEMA, "result": result},
    }
    for name, result in _RESULT_SCHEMAS.items()
}


def clean_json(obj):
    """Plain-Python copy of ``obj`` with non-finite floats mapped to None."""
    if isinstance(obj, dict):
        return {str(k): clean_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean_json(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def make_report(command: str, parameters: dict, seed, duration: float, exit_code: int, summary: str, result: dict) -> dict:
    manifest = {
        "command": command,
        "parameters": parameters,
        "seed": seed,
        "version": __version__,
        "duration_s": duration,
        "verdict": {"exit_code": exit_code, "summary": summary},
    }
    return clean_json({"manifest": manifest, "result": result})


def validate_report(report: dict) -> None:
    jsonschema.validate(report, REPORT_SCHEMAS[report["manifest"]["command"]])


def dumps(report: dict) -> str:
    # float repr is the shortest string that round-trips a double exactly
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def trace_to_csv(trace: SchwarzTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in trace.records:
        err = "" if r.error is None else f"{r.error:.17g}"
        w.writerow([r.sweep, f"{r.update_norm:.17g}", err, f"{r.energy:.17g}"])
    return buf.getvalue()


def trace_from_csv(text: str) -> SchwarzTrace:
    rows = list(csv.DictReader(io.StringIO(text)))
    trace = SchwarzTrace()
    for row in rows:
        err = float(row["error"]) if row["error"] else None
        trace.records.append(SweepRecord(int(row["sweep"]), float(row["update_norm"]), float(row["energy"]), err))
    return trace


def read_config(path) -> dict:
    """``key = value`` lines (``#`` comments allowed) as a dict of strings.

    Keys are normalised to underscores so ``end-shortening`` and ``end_shortening`` agree.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), delimiters=("=",))
    parser.optionxform = str
    parser.read_string("[run]\n" + text)
    return {k.strip().replace("-", "_"): v.strip() for k, v in parser["run"].items()}
