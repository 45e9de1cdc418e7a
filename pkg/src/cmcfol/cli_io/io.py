"""Deterministic text serialization: CSV tables and the mesh dump format."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    """Lossless, platform-independent text for a scalar (17 significant digits)."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x == 0.0:
            return "0"  # folds -0.0
        return f"{x:.17g}"
    if x is None:
        return ""
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def write_csv(path, header, rows) -> Path:
    return write_text(path, csv_text(header, rows))


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def meshdump_text(vertices: np.ndarray, faces: np.ndarray, fields: dict[str, np.ndarray]) -> str:
    lines = [f"VERTICES {len(vertices)}"]
    lines += [f"{i} {fmt(x)} {fmt(y)}" for i, (x, y) in enumerate(vertices)]
    lines.append(f"FACES {len(faces)}")
    lines += [f"{a} {b} {c}" for a, b, c in faces]
    for name, values in fields.items():
        if any(ch.isspace() for ch in name):
            raise ValueError(f"field name {name!r} contains whitespace")
        lines.append(f"FIELD {name}")
        lines += [f"{i} {fmt(v)}" for i, v in enumerate(np.asarray(values, dtype=float))]
    return "\n".join(lines) + "\n"


def write_meshdump(path, surface, fields: dict[str, np.ndarray]) -> Path:
    return write_text(path, meshdump_text(surface.vertices, surface.faces, fields))


@dataclass
class MeshDump:
    vertices: np.ndarray
    faces: np.ndarray
    fields: dict


def read_meshdump(path) -> MeshDump:
    text = Path(path).read_text().splitlines()
    i = 0

    def header(tag):
        nonlocal i
        parts = text[i].split()
        if parts[0] != tag:
            raise ValueError(f"line {i + 1}: expected {tag}")
        i += 1
        return parts

    nv = int(header("VERTICES")[1])
    verts = np.array([[float(v) for v in text[i + k].split()[1:]] for k in range(nv)])
    i += nv
    nf = int(header("FACES")[1])
    faces = np.array([[int(v) for v in text[i + k].split()] for k in range(nf)], dtype=int).reshape(-1, 3)
    i += nf
    fields = {}
    while i < len(text):
        name = header("FIELD")[1]
        fields[name] = np.array([float(text[i + k].split()[1]) for k in range(nv)])
        i += nv
    return MeshDump(verts.reshape(-1, 2), faces, fields)
