"""Deterministic scene, mesh and report writers.

A scene is a JSON document holding one sampled immersion:

    {"space": {...}, "u": [...], "v": [...], "positions": [[[x, ...]]],
     "fields": {"name": [[...]]}, "chart": {...}, "geometry": {...}, "spinor": {...}}

``positions`` has shape (nu, nv, k) with k = 3 for flat and group kinds and
k = 4 for quadric kinds. Only ``space``, ``u``, ``v`` and ``positions`` are
required by the exporters.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

FORMATS = ("obj", "ply", "csv", "json")
QUADRIC_NAMES = ("de_sitter", "anti_de_sitter", "r_minus_s2")


class SceneError(ValueError):
    """Scene document is missing a required field or has the wrong shape."""


def fmt(x: float) -> str:
    """Fixed float formatting shared by every text writer."""
    x = float(x)
    if x == 0.0:
        return "0"
    if not math.isfinite(x):
        return repr(x)
    return f"{x:.12g}"


def _round(obj, digits: int = 12):
    if isinstance(obj, dict):
        return {str(k): _round(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist(), digits)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return repr(x)
        return float(f"{x:.{digits}g}")
    return obj


def dumps(obj, digits: int = 12) -> str:
    """Canonical JSON text: sorted keys, rounded floats, trailing newline."""
    return json.dumps(_round(obj, digits), sort_keys=True, indent=1) + "\n"


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


# ---------------------------------------------------------------------------
# scenes


def make_scene(imm, fields: dict | None = None, chart=None, geometry=None, spinor=None) -> dict:
    """Scene document of an ImmersionField (positions in real ambient coordinates)."""
    from .immersion import ambient_positions

    scene = {
        "space": imm.space.to_dict(),
        "u": np.asarray(imm.u).tolist(),
        "v": np.asarray(imm.v).tolist(),
        "positions": ambient_positions(imm).tolist(),
        "fields": {k: np.asarray(v).tolist() for k, v in (fields or {}).items()},
    }
    if chart is not None:
        scene["chart"] = chart.to_dict()
    if geometry is not None:
        scene["geometry"] = geometry.to_dict()
    if spinor is not None:
        scene["spinor"] = spinor.to_dict()
    return scene


def load_scene(path) -> dict:
    with open(path) as fh:
        scene = json.load(fh)
    validate_scene(scene)
    return scene


def validate_scene(scene: dict) -> None:
    for key in ("space", "u", "v", "positions"):
        if key not in scene:
            raise SceneError(f"scene is missing the {key!r} field")
    pos = np.asarray(scene["positions"], dtype=float)
    nu, nv = len(scene["u"]), len(scene["v"])
    if pos.ndim != 3 or pos.shape[:2] != (nu, nv) or pos.shape[2] not in (3, 4):
        raise SceneError(f"positions have shape {pos.shape}, expected ({nu}, {nv}, 3|4)")
    for name, val in scene.get("fields", {}).items():
        if np.asarray(val).shape[:2] != (nu, nv):
            raise SceneError(f"field {name!r} does not match the grid")


def space_name(scene: dict) -> str:
    sp = scene["space"]
    return sp["name"] if isinstance(sp, dict) else str(sp)


def projected(scene: dict) -> np.ndarray:
    """Three-dimensional positions for mesh output.

    de Sitter and R_- x S^2 drop the timelike first coordinate; anti-de Sitter
    uses the Poincare-type projection x[1:] / (1 + |x0|).
    """
    pos = np.asarray(scene["positions"], dtype=float)
    if pos.shape[-1] == 3:
        return pos
    if space_name(scene) == "anti_de_sitter":
        return pos[..., 1:] / (1.0 + np.abs(pos[..., :1]))
    return pos[..., 1:]


# ---------------------------------------------------------------------------
# meshes


def grid_faces(nu: int, nv: int) -> list[tuple[int, int, int]]:
    """Two triangles per grid cell, 0-based row-major vertex indices."""
    faces = []
    for i in range(nu - 1):
        for j in range(nv - 1):
            a = i * nv + j
            b = a + 1
            c = a + nv
            d = c + 1
            faces.append((a, c, d))
            faces.append((a, d, b))
    return faces


def obj_text(points: np.ndarray) -> str:
    nu, nv = points.shape[:2]
    out = io.StringIO()
    out.write(f"# grid {nu} x {nv}\n")
    for p in points.reshape(-1, 3):
        out.write("v " + " ".join(fmt(x) for x in p) + "\n")
    for f in grid_faces(nu, nv):
        out.write("f " + " ".join(str(k + 1) for k in f) + "\n")
    return out.getvalue()


def ply_text(points: np.ndarray) -> str:
    nu, nv = points.shape[:2]
    faces = grid_faces(nu, nv)
    out = io.StringIO()
    out.write("ply\nformat ascii 1.0\n")
    out.write(f"element vertex {nu * nv}\n")
    out.write("property double x\nproperty double y\nproperty double z\n")
    out.write(f"element face {len(faces)}\n")
    out.write("property list uchar int vertex_indices\nend_header\n")
    for p in points.reshape(-1, 3):
        out.write(" ".join(fmt(x) for x in p) + "\n")
    for f in faces:
        out.write("3 " + " ".join(str(k) for k in f) + "\n")
    return out.getvalue()


def positions_csv_text(scene: dict) -> str:
    pos = np.asarray(scene["positions"], dtype=float)
    k = pos.shape[-1]
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["i", "j", "u", "v"] + [f"x{m}" for m in range(k)])
    for i, u in enumerate(scene["u"]):
        for j, v in enumerate(scene["v"]):
            w.writerow([i, j, fmt(u), fmt(v)] + [fmt(x) for x in pos[i, j]])
    return out.getvalue()


def fields_csv_text(scene: dict, fields: dict | None = None) -> str:
    fields = scene.get("fields", {}) if fields is None else fields
    names = sorted(fields)
    arrays = [np.asarray(fields[n], dtype=float) for n in names]
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["i", "j", "u", "v"] + names)
    for i, u in enumerate(scene["u"]):
        for j, v in enumerate(scene["v"]):
            w.writerow([i, j, fmt(u), fmt(v)] + [fmt(a[i, j]) for a in arrays])
    return out.getvalue()


def export_scene(scene: dict, fmt_name: str, out_dir, stem: str = "scene") -> list[Path]:
    """Write a scene in one format; returns the written paths.

    Quadric scenes write their raw four ambient coordinates to CSV and a
    projected mesh for obj/ply; the csv format also writes the projected
    companion and any residual fields.
    """
    if fmt_name not in FORMATS:
        raise SceneError(f"unknown format {fmt_name!r}; choose from {FORMATS}")
    validate_scene(scene)
    out_dir = Path(out_dir)
    quadric = space_name(scene) in QUADRIC_NAMES
    written = []
    if fmt_name == "obj":
        written.append(write_text(out_dir / f"{stem}.obj", obj_text(projected(scene))))
        if quadric:
            written.append(write_text(out_dir / f"{stem}_r4.csv", positions_csv_text(scene)))
    elif fmt_name == "ply":
        written.append(write_text(out_dir / f"{stem}.ply", ply_text(projected(scene))))
        if quadric:
            written.append(write_text(out_dir / f"{stem}_r4.csv", positions_csv_text(scene)))
    elif fmt_name == "csv":
        name = f"{stem}_r4.csv" if quadric else f"{stem}_positions.csv"
        written.append(write_text(out_dir / name, positions_csv_text(scene)))
        if quadric:
            proj = dict(scene, positions=projected(scene).tolist())
            written.append(
                write_text(out_dir / f"{stem}_projected.csv", positions_csv_text(proj))
            )
        if scene.get("fields"):
            written.append(write_text(out_dir / f"{stem}_fields.csv", fields_csv_text(scene)))
    else:
        written.append(write_text(out_dir / f"{stem}.json", json.dumps(scene, sort_keys=True) + "\n"))
    return written
