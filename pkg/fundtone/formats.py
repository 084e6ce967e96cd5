"""Flat-file formats: ASCII OFF meshes and per-vertex CSV sidecars."""
import logging

import numpy as np
import pandas as pd

from fundtone.discretization import PhiField
from fundtone.errors import DomainError, MeshIOError
from fundtone.mesh import TriMesh
from fundtone.spaceform import SpaceForm

logger = logging.getLogger(__name__)

CURVATURE_COLUMNS = ["vertex_id", "kappa1", "kappa2", "S1", "S2"]
PHI_COLUMNS = ["vertex_id", "p11", "p12", "p22"]
MODEL_TOL = 1e-9


def _tokens(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise MeshIOError(f"cannot read {path}: {exc}") from exc
    rows = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    return rows


def infer_curvature(coords):
    """Model of 4-coordinate points: 1 for unit vectors, -1 for the upper hyperboloid"""
    coords = np.asarray(coords, dtype=float)
    if coords.shape[1] == 3:
        return 0
    for c in (1, -1):
        residual = SpaceForm(c).constraint_residual(coords)
        if np.all(residual <= MODEL_TOL):
            return c
    raise MeshIOError("4-coordinate vertices lie neither on the unit sphere nor on the hyperboloid")


def read_off(path, curvature=None):
    """Parse an ASCII OFF file into a TriMesh (model inferred unless ``curvature`` is given)"""
    rows = _tokens(path)
    if not rows or rows[0][0] != "OFF":
        raise MeshIOError(f"{path}: missing OFF header")
    if len(rows[0]) > 1:
        counts, rest = rows[0][1:], rows[1:]
    else:
        counts, rest = (rows[1] if len(rows) > 1 else []), rows[2:]
    try:
        n_vertices, n_faces = int(counts[0]), int(counts[1])
        vertex_rows = rest[:n_vertices]
        face_rows = rest[n_vertices:n_vertices + n_faces]
        if len(vertex_rows) != n_vertices or len(face_rows) != n_faces:
            raise MeshIOError(f"{path}: expected {n_vertices} vertices and {n_faces} faces")
        widths = {len(r) for r in vertex_rows}
        if len(widths) != 1 or widths.pop() not in (3, 4):
            raise MeshIOError(f"{path}: vertex lines must all carry 3 or 4 coordinates")
        coords = np.array(vertex_rows, dtype=float)
        faces = []
        for row in face_rows:
            if int(row[0]) != 3 or len(row) < 4:
                raise MeshIOError(f"{path}: only triangular faces are supported")
            faces.append([int(v) for v in row[1:4]])
    except (ValueError, IndexError) as exc:
        raise MeshIOError(f"{path}: malformed OFF ({exc})") from exc
    c = infer_curvature(coords) if curvature is None else int(curvature)
    if (coords.shape[1] == 3) != (c == 0):
        raise MeshIOError(f"{path}: {coords.shape[1]} coordinates do not fit curvature {c}")
    try:
        sf = SpaceForm(c)
        if c != 0 and np.all(sf.constraint_residual(coords) <= MODEL_TOL):
            coords = sf.normalize(coords)
        mesh = TriMesh(coords, faces, sf, name=str(path))
    except DomainError as exc:
        raise MeshIOError(f"{path}: {exc}") from exc
    logger.info("read %s: %d vertices, %d faces, c = %d", path, mesh.n_vertices, mesh.n_faces, c)
    return mesh


def write_off(mesh, path):
    """Write ``OFF``, the counts line ``V F E``, vertex lines and ``3 i j k`` face lines"""
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} {len(mesh.edges())}"]
    lines.extend(" ".join(f"{x:.17g}" for x in v) for v in mesh.vertices)
    lines.extend(f"3 {a} {b} {c}" for a, b, c in mesh.faces)
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise MeshIOError(f"cannot write {path}: {exc}") from exc
    return path


def _write_frame(df, path):
    try:
        df.to_csv(path, index=False, float_format="%.17g")
    except OSError as exc:
        raise MeshIOError(f"cannot write {path}: {exc}") from exc
    return path


def _read_frame(path, columns):
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise MeshIOError(f"cannot read {path}: {exc}") from exc
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise MeshIOError(f"{path}: missing columns {missing}")
    return df.sort_values("vertex_id").reset_index(drop=True)


def curvature_frame(cf):
    S = cf.symmetric_functions()
    return pd.DataFrame({
        "vertex_id": np.arange(len(cf)),
        "kappa1": cf.kappas[:, 0],
        "kappa2": cf.kappas[:, 1],
        "S1": S[:, 1],
        "S2": S[:, 2],
    })


def write_curvature_csv(cf, path):
    return _write_frame(curvature_frame(cf), path)


def read_curvature_csv(path):
    return _read_frame(path, CURVATURE_COLUMNS)


def write_eigenfunctions_csv(vectors, path):
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float).T).T
    df = pd.DataFrame(vectors, columns=[f"u{j + 1}" for j in range(vectors.shape[1])])
    df.insert(0, "vertex_id", np.arange(len(df)))
    return _write_frame(df, path)


def write_phi_csv(phi, path):
    m = phi.matrices
    df = pd.DataFrame({"vertex_id": np.arange(len(phi)), "p11": m[:, 0, 0], "p12": m[:, 0, 1],
                       "p22": m[:, 1, 1]})
    return _write_frame(df, path)


def read_phi_csv(path, frames, n_vertices=None):
    """PhiField from (vertex_id, p11, p12, p22) rows, expressed in ``frames``"""
    df = _read_frame(path, PHI_COLUMNS)
    n = len(frames) if n_vertices is None else n_vertices
    if len(df) != n or not np.array_equal(df["vertex_id"].to_numpy(), np.arange(n)):
        raise MeshIOError(f"{path}: expected one row per vertex 0..{n - 1}")
    m = np.zeros((n, 2, 2))
    m[:, 0, 0] = df["p11"].to_numpy(dtype=float)
    m[:, 0, 1] = m[:, 1, 0] = df["p12"].to_numpy(dtype=float)
    m[:, 1, 1] = df["p22"].to_numpy(dtype=float)
    return PhiField.custom(m, frames)
