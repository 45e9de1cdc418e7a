"""JSON run configurations with field-path validation."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ParseError, ValidationError
from ..geometry.mesh import Grading, MarkedSurface, build_torus_mesh
from ..geometry.models import ModelGeometry
from ..solver import SolverOptions


@dataclass(frozen=True)
class MarkedSpec:
    x: float
    y: float
    theta: float


@dataclass(frozen=True)
class SurfaceSpec:
    tau: tuple[float, float] = (0.0, 1.0)
    marked: tuple[MarkedSpec, ...] = (MarkedSpec(0.5, 0.5, float(np.pi / 2)),)
    resolution: int = 32
    levels: int = 4
    min_radius: float | None = None

    @property
    def tau_complex(self) -> complex:
        return complex(*self.tau)

    def build(self, resolution: int | None = None) -> MarkedSurface:
        n = self.resolution if resolution is None else resolution
        scale = n / self.resolution
        rmin = None if self.min_radius is None else self.min_radius / scale
        return build_torus_mesh(
            self.tau_complex,
            [((m.x, m.y), m.theta) for m in self.marked],
            Grading(self.levels, rmin),
            n,
        )


@dataclass(frozen=True)
class RunConfig:
    surface: SurfaceSpec = SurfaceSpec()
    geometry: ModelGeometry = ModelGeometry.MINKOWSKI
    q: complex = 0.0
    H: tuple[float, ...] | None = None
    K: tuple[float, ...] | None = None
    t: tuple[float, ...] = ()
    solver: SolverOptions = SolverOptions()
    truncation: int = 8
    output_dir: str = "out"
    formats: tuple[str, ...] = ("csv", "meshdump")
    seed: int = 20240601

    def canonical(self) -> dict:
        d = {
            "surface": {
                "tau": list(self.surface.tau),
                "marked": [asdict(m) for m in self.surface.marked],
                "resolution": self.surface.resolution,
                "grading": {"levels": self.surface.levels, "min_radius": self.surface.min_radius},
            },
            "geometry": self.geometry.value,
            "q": [self.q.real, self.q.imag],
            "H": None if self.H is None else list(self.H),
            "K": None if self.K is None else list(self.K),
            "t": list(self.t),
            "solver": asdict(self.solver),
            "truncation": self.truncation,
            "formats": list(self.formats),
            "seed": self.seed,
        }
        return d

    def inputs_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _num(value, path, *, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(path, f"expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ValidationError(path, "expected an integer")
        return int(value)
    if not np.isfinite(value):
        raise ValidationError(path, "must be finite")
    return float(value)


def _grid(values, path):
    if not isinstance(values, list) or not values:
        raise ValidationError(path, "expected a non-empty list")
    out = tuple(_num(v, f"{path}[{i}]") for i, v in enumerate(values))
    if list(out) != sorted(out) or len(set(out)) != len(out):
        raise ValidationError(path, "grid must be strictly increasing")
    return out


def parse_surface(raw, path="surface", base_dir: Path | None = None) -> SurfaceSpec:
    if isinstance(raw, str):
        p = Path(raw)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        raw = _read_json(p)
    if not isinstance(raw, dict):
        raise ValidationError(path, "expected an object or a file path")
    tau = raw.get("tau", [0.0, 1.0])
    if not isinstance(tau, list) or len(tau) != 2:
        raise ValidationError(f"{path}.tau", "expected [re, im]")
    tau = (_num(tau[0], f"{path}.tau[0]"), _num(tau[1], f"{path}.tau[1]"))
    if tau[1] <= 0:
        raise ValidationError(f"{path}.tau", "Im tau must be positive")
    marked = []
    for i, m in enumerate(raw.get("marked", [])):
        mp = f"{path}.marked[{i}]"
        if not isinstance(m, dict):
            raise ValidationError(mp, "expected {x, y, theta}")
        theta = _num(m.get("theta"), f"{mp}.theta")
        if not 0.0 < theta < np.pi:
            raise ValidationError(f"{mp}.theta", f"cone angle {theta} must lie in (0, pi)")
        marked.append(MarkedSpec(_num(m.get("x"), f"{mp}.x"), _num(m.get("y"), f"{mp}.y"), theta))
    res = _num(raw.get("resolution", 32), f"{path}.resolution", integer=True)
    if res < 4:
        raise ValidationError(f"{path}.resolution", "must be at least 4")
    grading = raw.get("grading", {}) or {}
    levels = _num(grading.get("levels", 4), f"{path}.grading.levels", integer=True)
    if levels < 0:
        raise ValidationError(f"{path}.grading.levels", "must be non-negative")
    rmin = grading.get("min_radius")
    if rmin is not None:
        rmin = _num(rmin, f"{path}.grading.min_radius")
        if rmin <= 0:
            raise ValidationError(f"{path}.grading.min_radius", "must be positive")
    return SurfaceSpec(tau, tuple(marked), res, levels, rmin)


def parse_config(raw: dict, base_dir: Path | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ValidationError("$", "top level must be an object")
    known = {"surface", "geometry", "q", "H", "K", "t", "solver", "truncation", "output_dir", "formats", "seed"}
    extra = sorted(set(raw) - known)
    if extra:
        raise ValidationError(extra[0], "unknown field")
    surface = parse_surface(raw.get("surface", {}), base_dir=base_dir)
    try:
        geometry = ModelGeometry.parse(raw.get("geometry", "minkowski"))
    except ValueError as exc:
        raise ValidationError("geometry", str(exc)) from None
    q = raw.get("q", 0.0)
    if isinstance(q, list):
        if len(q) != 2:
            raise ValidationError("q", "expected [re, im]")
        q = complex(_num(q[0], "q[0]"), _num(q[1], "q[1]"))
    else:
        q = complex(_num(q, "q"))
    H = K = None
    if raw.get("H") is not None and raw.get("K") is not None:
        raise ValidationError("H", "give exactly one of H and K")
    if raw.get("H") is not None:
        H = _grid(raw["H"], "H")
        for i, x in enumerate(H):
            if not geometry.admits(x):
                raise ValidationError(f"H[{i}]", f"{geometry.value} requires {geometry.h_range_text}, got {x}")
    if raw.get("K") is not None:
        K = _grid(raw["K"], "K")
        lo, hi = geometry.k_range
        for i, x in enumerate(K):
            if not lo < x < hi:
                raise ValidationError(f"K[{i}]", f"{geometry.value} requires K ∈ ({lo}, {hi}), got {x}")
    t = raw.get("t", [])
    if not isinstance(t, list):
        raise ValidationError("t", "expected a list")
    t = tuple(_num(v, f"t[{i}]") for i, v in enumerate(t))
    sol = raw.get("solver", {}) or {}
    if not isinstance(sol, dict):
        raise ValidationError("solver", "expected an object")
    fields = {f for f in SolverOptions.__dataclass_fields__}
    for k in sol:
        if k not in fields:
            raise ValidationError(f"solver.{k}", "unknown solver option")
    try:
        solver = SolverOptions(**sol)
    except (TypeError, ValueError) as exc:
        raise ValidationError("solver", str(exc)) from None
    trunc = _num(raw.get("truncation", 8), "truncation", integer=True)
    if trunc < 8:
        raise ValidationError("truncation", "must be at least 8")
    formats = tuple(raw.get("formats", ["csv", "meshdump"]))
    for i, f in enumerate(formats):
        if f not in ("csv", "meshdump"):
            raise ValidationError(f"formats[{i}]", f"unknown format {f!r}")
    out = raw.get("output_dir", "out")
    if not isinstance(out, str):
        raise ValidationError("output_dir", "expected a string")
    seed = _num(raw.get("seed", 20240601), "seed", integer=True)
    return RunConfig(surface, geometry, q, H, K, t, solver, trunc, out, formats, seed)


def _read_json(path: Path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(_read_json(path), base_dir=path.parent)


DEFAULT_CONFIG = {
    "surface": {
        "tau": [0.0, 1.0],
        "marked": [{"x": 0.5, "y": 0.5, "theta": float(np.pi / 2)}],
        "resolution": 32,
        "grading": {"levels": 4, "min_radius": None},
    },
    "geometry": "minkowski",
    "q": [0.1, 0.0],
    "H": [-1.0],
}
