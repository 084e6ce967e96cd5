"""Serialization of verification and solver results.

JSON is the primary format: keys sorted, floats at a fixed number of
significant digits and non-finite values written as null, so identical runs
give byte-identical files. The CSV summary and margin table are pandas views.
"""
import json
import logging
import math
import os
from enum import Enum

import numpy as np
import pandas as pd

from fundtone.errors import MeshIOError

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["config", "level", "bound", "status", "bound_value", "lambda", "margin", "pass", "reason"]
MARGIN_COLUMNS = ["config", "level", "bound", "lambda", "margin"]


def normalize(value, digits=12):
    """JSON-ready copy with floats rounded to ``digits`` significant digits"""
    if isinstance(value, dict):
        return {str(k): normalize(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [normalize(v, digits) for v in value]
    if isinstance(value, np.ndarray):
        return normalize(value.tolist(), digits)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f"{value:.{digits}g}")
    if value is None or isinstance(value, str):
        return value
    return str(value)


def to_json(payload, digits=12):
    return json.dumps(normalize(payload, digits), sort_keys=True, indent=2) + "\n"


def reports_payload(reports):
    return [r.to_dict() for r in reports]


def summary_frame(reports):
    rows = [{
        "config": r.config,
        "level": r.mesh_level,
        "bound": r.bound_name,
        "status": r.status,
        "bound_value": r.bound_value,
        "lambda": r.computed_lambda,
        "margin": r.margin,
        "pass": r.passed,
        "reason": r.reason,
    } for r in reports]
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def margin_table(reports):
    """(config, level, bound, lambda, margin) for every report with a computed eigenvalue"""
    df = summary_frame(reports)
    df = df[df["lambda"].notna()]
    return df[MARGIN_COLUMNS].reset_index(drop=True)


def eigen_payload(result, mesh, extra=None):
    payload = {
        "problem_kind": result.problem_kind,
        "eigenvalues": result.eigenvalues,
        "residual_norms": result.residual_norms,
        "iterations": result.iterations,
        "mesh": mesh_stats(mesh),
    }
    payload.update(extra or {})
    return payload


def mesh_stats(mesh):
    return {
        "name": mesh.name,
        "curvature": mesh.space_form.curvature,
        "level": mesh.level,
        "vertices": mesh.n_vertices,
        "faces": mesh.n_faces,
        "boundary_vertices": int(np.count_nonzero(mesh.boundary_vertex_flags)),
        "euler_characteristic": mesh.euler_characteristic(),
        "h_max": mesh.h_max(),
        "area": mesh.total_area(),
    }


def write_text(text, path):
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as exc:
        raise MeshIOError(f"cannot write {path}: {exc}") from exc
    return path


def write_reports(reports, out_dir, name="verify", digits=12):
    """Write <name>.json, <name>_summary.csv and <name>_margins.csv into ``out_dir``"""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise MeshIOError(f"cannot create {out_dir}: {exc}") from exc
    json_path = write_text(to_json(reports_payload(reports), digits), os.path.join(out_dir, f"{name}.json"))
    fmt = f"%.{digits}g"
    summary_path = os.path.join(out_dir, f"{name}_summary.csv")
    margins_path = os.path.join(out_dir, f"{name}_margins.csv")
    try:
        summary_frame(reports).to_csv(summary_path, index=False, float_format=fmt)
        margin_table(reports).to_csv(margins_path, index=False, float_format=fmt)
    except OSError as exc:
        raise MeshIOError(f"cannot write reports to {out_dir}: {exc}") from exc
    logger.info("wrote %d reports to %s", len(reports), out_dir)
    return json_path, summary_path, margins_path
