"""Reading inputs and writing run outputs.

Point clouds are headerless CSV, one point per row. Images are plain PGM
(``P2``) or a CSV grid and are normalised to [0, 1] on load. Diagrams are
CSV with header ``dim,birth,death,creator,destroyer``; simplices are written
as their vertices joined by ``-`` and infinity as ``inf``. Floats use
``repr`` so a written file reads back bit-exactly. Every write goes to a
temporary file in the target directory that is then renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .persistence import PersistenceDiagram


class InputError(ValueError):
    """An input file is missing, empty or malformed; the message names it."""


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(x) -> str:
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_text(path) -> str:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    if not text.strip():
        raise InputError(f"{path}: file is empty")
    return text


# --- inputs ---------------------------------------------------------------


def read_points(path) -> np.ndarray:
    """Headerless CSV point cloud with 2 or 3 columns."""
    text = _read_text(path)
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    try:
        pts = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if pts.ndim != 2 or pts.shape[1] not in (2, 3):
        raise InputError(f"{path}: expected rows of 2 or 3 coordinates")
    if not np.isfinite(pts).all():
        raise InputError(f"{path}: non-finite coordinate")
    return pts


def read_pgm(path) -> np.ndarray:
    """Plain (P2) PGM, scaled by its maxval into [0, 1]."""
    text = _read_text(path)
    tokens = []
    for line in text.splitlines():
        tokens.extend(line.split("#", 1)[0].split())
    if not tokens or tokens[0] != "P2":
        raise InputError(f"{path}: not a plain PGM (P2) file")
    try:
        cols, rows, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        data = np.array([float(t) for t in tokens[4:]])
    except (IndexError, ValueError) as exc:
        raise InputError(f"{path}: malformed PGM header or pixel data") from exc
    if data.size != rows * cols or maxval <= 0:
        raise InputError(f"{path}: expected {rows * cols} pixels, found {data.size}")
    return data.reshape(rows, cols) / maxval


def read_image(path) -> np.ndarray:
    """PGM or CSV grid. CSV values outside [0, 1] are min-max rescaled."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    text = _read_text(path)
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    try:
        img = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if img.ndim != 2:
        raise InputError(f"{path}: rows have different lengths")
    if not np.isfinite(img).all():
        raise InputError(f"{path}: non-finite pixel value")
    lo, hi = img.min(), img.max()
    if lo < 0 or hi > 1:
        img = (img - lo) / (hi - lo) if hi > lo else np.zeros_like(img)
    return img


def write_pgm(path, image, maxval: int = 255) -> Path:
    img = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    vals = np.rint(img * maxval).astype(int)
    lines = ["P2", f"{img.shape[1]} {img.shape[0]}", str(maxval)]
    lines += [" ".join(map(str, row)) for row in vals]
    return atomic_write_text(path, "\n".join(lines) + "\n")


# --- outputs --------------------------------------------------------------

DIAGRAM_HEADER = ("dim", "birth", "death", "creator", "destroyer")


def _simplex_str(cx, idx) -> str:
    return "" if idx is None else "-".join(map(str, cx.simplices[idx]))


def diagram_rows(dgm: PersistenceDiagram, include_zero: bool = False) -> list[tuple]:
    cx = dgm.filtration.complex
    rows = []
    for k in range(dgm.max_dim + 1):
        for p in dgm.indexed(k, include_zero=include_zero):
            rows.append((k, _fmt(p.birth), _fmt(p.death), _simplex_str(cx, p.creator),
                         _simplex_str(cx, p.destroyer)))
    return rows


def write_diagram(path, dgm: PersistenceDiagram, fmt: str = "csv", include_zero: bool = False) -> Path:
    rows = diagram_rows(dgm, include_zero)
    if fmt == "json":
        recs = [dict(zip(DIAGRAM_HEADER, r)) for r in rows]
        return atomic_write_text(path, json.dumps(recs, indent=1) + "\n")
    return atomic_write_text(path, _csv_text(DIAGRAM_HEADER, rows))


def read_diagram(path) -> list[tuple]:
    """Rows ``(dim, birth, death, creator, destroyer)``; simplices as tuples, None if absent."""
    text = _read_text(path)
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        simp = [tuple(int(v) for v in rec[c].split("-")) if rec[c] else None for c in ("creator", "destroyer")]
        out.append((int(rec["dim"]), float(rec["birth"]), float(rec["death"]), *simp))
    return out


def write_table(path, header, rows, fmt: str = "csv") -> Path:
    rows = [[_fmt(v) if isinstance(v, (float, np.floating)) else v for v in r] for r in rows]
    if fmt == "json":
        return atomic_write_text(path, json.dumps([dict(zip(header, r)) for r in rows], indent=1) + "\n")
    return atomic_write_text(path, _csv_text(header, rows))


def write_points(path, points) -> Path:
    pts = np.asarray(points, dtype=float)
    return atomic_write_text(path, _csv_text(None, [[_fmt(v) for v in row] for row in pts]))


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")
