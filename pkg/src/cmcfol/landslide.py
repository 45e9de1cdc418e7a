"""Hopf differentials of the harmonic maps attached to a CMC surface, landslides,
and the minimal Lagrangian certificate.

Hopf coefficients are read off a symmetric-or-not bilinear form A(X, Y) = I(T X, Y)
as A(dx, dx) + i A(J dx, dx) in the flat chart, with J the rotation by +pi/2.
For A = Re(f dz^2) this gives conj(f).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateComposite, SingularB, ZeroHopf
from .geometry.mesh import MarkedSurface
from .geometry.models import ModelGeometry
from .geometry.operators import E2, J2, FramedMetric, TangentOperatorField, codazzi_residual, vertex_ring_stats
from .solver import EmbeddingData


@dataclass(frozen=True, eq=False)
class HopfDatum:
    coefficient: np.ndarray  # (F,) complex, flat chart
    source: str  # gauss | projection | left | right
    energy_density: np.ndarray  # (V,)
    holo_residual: float


def hopf_coefficient(data: EmbeddingData, T: np.ndarray) -> np.ndarray:
    """Per-face Hopf coefficient of the form I(T., .), cone vertices left out of the face averages."""
    I = data.I
    G = I.gram()
    GT = np.einsum("vij,vjk->vik", G, T)
    scale = np.exp(2 * I.base.exponent)
    with np.errstate(invalid="ignore", over="ignore"):
        vert = scale * (GT[:, 0, 0] + 1j * GT[:, 0, 1])
    vert = np.where(data.surface.is_marked, np.nan, vert)
    faces = data.surface.faces
    return np.nanmean(vert[faces], axis=1)


def _face_neighbours(surface: MarkedSurface):
    """For each face and edge k (opposite corner k): neighbour face and the translation
    carrying the neighbour's unwrapped corners into this face's frame."""
    f, c = surface.faces, surface.corners
    F = len(f)
    lookup = {}
    for fi in range(F):
        for k in range(3):
            a, b = f[fi, (k + 1) % 3], f[fi, (k + 2) % 3]
            lookup[(a, b, round((c[fi, (k + 2) % 3] - c[fi, (k + 1) % 3]).real, 9), round((c[fi, (k + 2) % 3] - c[fi, (k + 1) % 3]).imag, 9))] = (fi, k)
    nb = np.full((F, 3), -1)
    shift = np.zeros((F, 3), dtype=complex)
    for fi in range(F):
        for k in range(3):
            a, b = f[fi, (k + 1) % 3], f[fi, (k + 2) % 3]
            e = c[fi, (k + 2) % 3] - c[fi, (k + 1) % 3]
            g, kk = lookup[(b, a, round(-e.real, 9), round(-e.imag, 9))]
            nb[fi, k] = g
            shift[fi, k] = c[fi, (k + 1) % 3] - c[g, (kk + 2) % 3]
    return nb, shift


_NB_CACHE: dict = {}


def face_dbar(surface: MarkedSurface, coefficient: np.ndarray) -> np.ndarray:
    """Least-squares d-bar of a per-face field from differences to the three edge neighbours."""
    key = id(surface)
    if key not in _NB_CACHE or _NB_CACHE[key][0] is not surface:
        _NB_CACHE.clear()
        _NB_CACHE[key] = (surface, _face_neighbours(surface))
    nb, shift = _NB_CACHE[key][1]
    cen = surface.corners.mean(axis=1)
    dz = cen[nb] + shift - cen[:, None]
    df = coefficient[nb] - coefficient[:, None]
    A = np.stack([dz.real, dz.imag], axis=2)  # (F, 3, 2)
    AtA = np.einsum("fki,fkj->fij", A, A)
    Atb = np.einsum("fki,fk->fi", A.astype(complex), df)
    grad = _solve2(AtA, Atb)
    return 0.5 * (grad[:, 0] + 1j * grad[:, 1])


def _solve2(M, b):
    det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
    x0 = (M[:, 1, 1] * b[:, 0] - M[:, 0, 1] * b[:, 1]) / det
    x1 = (-M[:, 1, 0] * b[:, 0] + M[:, 0, 0] * b[:, 1]) / det
    return np.stack([x0, x1], axis=1)


def holomorphicity_residual(coefficient, surface: MarkedSurface) -> float:
    """L2 norm (flat area) of the discrete d-bar, excluding faces at marked vertices."""
    coef = coefficient.coefficient if isinstance(coefficient, HopfDatum) else np.asarray(coefficient, dtype=complex)
    dbar = face_dbar(surface, coef)
    ok = ~surface.cone_faces
    return float(np.sqrt(np.sum(np.abs(dbar[ok]) ** 2 * surface.face_areas[ok])))


def _require_cmc(data: EmbeddingData):
    if not np.isfinite(data.H):
        raise ValueError("Hopf data need a constant mean curvature surface")


def hopf_from_embedding(data: EmbeddingData, which: str = "gauss") -> HopfDatum:
    """Hopf data of the Gauss map (form H I B0) or the projection to the K-leaf (form -H I B0)."""
    _require_cmc(data)
    if which not in ("gauss", "projection"):
        raise ValueError(f"unknown map {which!r}")
    sign = 1.0 if which == "gauss" else -1.0
    T = sign * data.H * data.B0.matrix
    coef = hopf_coefficient(data, T)
    M = data.B.matrix if which == "gauss" else 2 * data.H * E2 - data.B.matrix
    energy = 0.5 * np.einsum("vij,vji->v", M, M)
    return HopfDatum(coef, which, energy, holomorphicity_residual(coef, data.surface))


@dataclass(frozen=True, eq=False)
class LandslidePair:
    h_l: FramedMetric
    h_r: FramedMetric
    alpha: float
    ratio: complex | None
    ratio_faces: np.ndarray | None
    ratio_deviation: float | None
    det_l: np.ndarray
    det_r: np.ndarray
    curvature_residual_l: float
    curvature_residual_r: float

    @property
    def expected_ratio(self) -> complex:
        return np.exp(2j * self.alpha)


def landslide_angle(H: float) -> float:
    return float(-np.arctan(H) + np.pi / 2)


def left_right_metrics(data: EmbeddingData, eps: float = 1e-12) -> LandslidePair:
    """h_l = I((E+JB)., (E+JB).) and h_r = I((E-JB)., (E-JB).)."""
    if data.geometry is not ModelGeometry.ADS:
        raise ValueError("left/right metrics are defined for AdS surfaces")
    B = data.B.matrix
    JB = np.einsum("ij,vjk->vik", J2, B)
    P0 = data.I.frame_or_identity
    mats = []
    for sign in (1.0, -1.0):
        Pm = E2 + sign * JB
        det = Pm[:, 0, 0] * Pm[:, 1, 1] - Pm[:, 0, 1] * Pm[:, 1, 0]
        if np.any(np.abs(det) < eps):
            raise DegenerateComposite("E +/- JB is singular at a vertex")
        mats.append((FramedMetric(data.I.base, np.einsum("vij,vjk->vik", P0, Pm)), det))
    ok = ~data.surface.is_marked
    res = [float(np.max(np.abs(m.curvature[ok] + 1.0))) for m, _ in mats]
    H = data.H if np.isfinite(data.H) else 0.0
    return LandslidePair(mats[0][0], mats[1][0], landslide_angle(H), None, None, None, mats[0][1], mats[1][1], res[0], res[1])


def landslide_check(data: EmbeddingData, tol: float = 1e-8) -> LandslidePair:
    """Per-face ratio Hopf(pi_l)/Hopf(pi_r) and its comparison with (H+i)/(H-i)."""
    _require_cmc(data)
    pair = left_right_metrics(data)
    if data.q is None or data.q.is_zero:
        raise ZeroHopf("q = 0: the left and right Hopf differentials vanish")
    B0 = data.B0.matrix
    H = data.H
    T_r = 0.5 * np.einsum("ij,vjk->vik", H * E2 - J2, B0)
    T_l = 0.5 * np.einsum("ij,vjk->vik", H * E2 + J2, B0)
    cr, cl = hopf_coefficient(data, T_r), hopf_coefficient(data, T_l)
    ok = ~data.surface.cone_faces
    if np.any(np.abs(cr[ok]) == 0):
        raise ZeroHopf("right Hopf differential vanishes on a face")
    ratio = cl / cr
    w = data.surface.face_areas[ok]
    mean = complex(np.sum(ratio[ok] * w) / w.sum())
    dev = float(np.max(np.abs(ratio[ok] - (H + 1j) / (H - 1j))))
    return LandslidePair(pair.h_l, pair.h_r, pair.alpha, mean, ratio, dev, pair.det_l, pair.det_r,
                         pair.curvature_residual_l, pair.curvature_residual_r)


@dataclass(frozen=True, eq=False)
class MinimalLagrangianCertificate:
    b: TangentOperatorField
    det_residual: float
    codazzi_residual: float
    positive: bool
    cone_limit_residual: float
    ring_profile: np.ndarray


def minimal_lagrangian_certificate(data: EmbeddingData) -> MinimalLagrangianCertificate:
    """b = B^{-1}(2H E - B), the operator of the projection composed with the inverse Gauss map."""
    _require_cmc(data)
    if data.geometry is not ModelGeometry.MINKOWSKI:
        raise ValueError("the minimal Lagrangian certificate is stated for Minkowski data")
    B = data.B.matrix
    detB = data.B.det
    if np.any(np.abs(detB) < 1e-14):
        raise SingularB("shape operator is singular at a vertex")
    raw = np.linalg.solve(B, 2 * data.H * E2 - B)
    det = raw[:, 0, 0] * raw[:, 1, 1] - raw[:, 0, 1] * raw[:, 1, 0]
    det_res = float(np.max(np.abs(det - 1.0)))
    b = raw / np.sqrt(det)[:, None, None]
    bf = TangentOperatorField(b, data.I)
    lo, hi = bf.eigenvalues()
    frame = np.einsum("vij,vjk->vik", data.I.frame_or_identity, B)
    cod = codazzi_residual(data.I.base, b, frame=frame)
    dev = np.maximum(np.abs(lo - 1), np.abs(hi - 1))
    surface = data.surface
    if surface.marked and surface.grading.levels > 0:
        _, prof = vertex_ring_stats(surface, dev)
        cone_res = float(prof[-1])
    else:
        prof, cone_res = np.array([]), 0.0
    return MinimalLagrangianCertificate(bf, det_res, cod, bool(np.all(lo > 0)), cone_res, prof)
