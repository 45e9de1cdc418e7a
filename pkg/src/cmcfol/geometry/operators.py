"""Tangent operator fields, quadratic differentials and the Codazzi residual.

Operators are stored as per-vertex 2x2 matrices in the orthonormal frame of a
conformal metric e^{2w}|dz|^2. Because the frame is a scalar multiple of the
coordinate frame, the same matrix also represents the operator in flat
coordinates. Non-conformal metrics are handled as ``FramedMetric``: a conformal
base metric pulled back through a per-vertex operator P.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import MarkedSurface, _min_image_dist
from .metric import ConeMetric, flat_cell_areas

E2 = np.eye(2)
J2 = np.array([[0.0, -1.0], [1.0, 0.0]])  # rotation by +pi/2


def flat_form(f) -> np.ndarray:
    """Matrix of Re(f dz^2) in flat coordinates, broadcast over ``f``."""
    f = np.asarray(f, dtype=complex)
    out = np.empty(f.shape + (2, 2))
    out[..., 0, 0] = f.real
    out[..., 0, 1] = -f.imag
    out[..., 1, 0] = -f.imag
    out[..., 1, 1] = -f.real
    return out


def identity_field(n: int) -> np.ndarray:
    return np.broadcast_to(E2, (n, 2, 2)).copy()


@dataclass(frozen=True, eq=False)
class TangentOperatorField:
    matrix: np.ndarray  # (V, 2, 2)
    metric_ref: object = None

    @property
    def trace(self) -> np.ndarray:
        return self.matrix[:, 0, 0] + self.matrix[:, 1, 1]

    @property
    def det(self) -> np.ndarray:
        m = self.matrix
        return m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]

    @property
    def traceless(self) -> np.ndarray:
        return self.matrix - 0.5 * self.trace[:, None, None] * E2

    def asymmetry(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m[:, 0, 1] - m[:, 1, 0]), initial=0.0))

    def eigenvalues(self) -> tuple[np.ndarray, np.ndarray]:
        """Ordered eigenvalues (low, high) of a symmetric field."""
        m = self.matrix
        half_tr = 0.5 * self.trace
        rad = np.hypot(0.5 * (m[:, 0, 0] - m[:, 1, 1]), 0.5 * (m[:, 0, 1] + m[:, 1, 0]))
        return half_tr - rad, half_tr + rad

    def norm(self) -> np.ndarray:
        return np.sqrt(np.einsum("vij,vij->v", self.matrix, self.matrix))


@dataclass(frozen=True, eq=False)
class QuadraticDifferentialField:
    """q = f dz^2 with f constant per face (v1: one global constant)."""

    surface: MarkedSurface
    coefficient: np.ndarray  # (F,) complex
    constant: complex

    @property
    def is_zero(self) -> bool:
        return self.constant == 0 and not np.any(self.coefficient)

    def real_part(self) -> np.ndarray:
        """Per-face matrix of Re(q) in flat coordinates."""
        return flat_form(self.coefficient)

    def vertex_coefficient(self) -> np.ndarray:
        return np.full(self.surface.n_vertices, self.constant, dtype=complex)

    def l2_pairing(self, metric: ConeMetric) -> float:
        """Integral of |f|^2 e^{-2w} dx dy."""
        return float(abs(self.constant) ** 2 * metric.inv_mass.sum())


def quad_diff_field(surface: MarkedSurface, c: complex = 0.0) -> QuadraticDifferentialField:
    c = complex(c)
    return QuadraticDifferentialField(surface, np.full(surface.n_faces, c, dtype=complex), c)


def traceless_operator(metric: ConeMetric, f) -> TangentOperatorField:
    """e^{-2w} Re(f dz^2) as an operator, for per-vertex (or constant) f."""
    f = np.broadcast_to(np.asarray(f, dtype=complex), (metric.surface.n_vertices,))
    return TangentOperatorField(metric.inv_density()[:, None, None] * flat_form(f), metric)


def operator_from_quaddiff(metric: ConeMetric, q: QuadraticDifferentialField) -> TangentOperatorField:
    """The operator b_q with Re(q)(X, Y) = g(b_q X, Y)."""
    return traceless_operator(metric, q.constant)


@dataclass(frozen=True, eq=False)
class FramedMetric:
    """The metric base(P., P.) for a per-vertex operator P (identity when None).

    When P is Codazzi for ``base``, the Gauss curvature is K_base / det P.
    """

    base: ConeMetric
    frame: np.ndarray | None = None

    @property
    def surface(self) -> MarkedSurface:
        return self.base.surface

    @property
    def frame_or_identity(self) -> np.ndarray:
        return identity_field(self.surface.n_vertices) if self.frame is None else self.frame

    @property
    def frame_det(self) -> np.ndarray:
        if self.frame is None:
            return np.ones(self.surface.n_vertices)
        P = self.frame
        return P[:, 0, 0] * P[:, 1, 1] - P[:, 0, 1] * P[:, 1, 0]

    @property
    def curvature(self) -> np.ndarray:
        return self.base.curvature / self.frame_det

    @property
    def mass(self) -> np.ndarray:
        return self.base.mass * np.abs(self.frame_det)

    @property
    def area(self) -> float:
        return float(self.mass.sum())

    def gram(self) -> np.ndarray:
        """Per-vertex matrix P^T P, the metric in the base orthonormal frame."""
        P = self.frame_or_identity
        return np.einsum("vki,vkj->vij", P, P)


def _face_gradients(surface: MarkedSurface):
    """Gradients (complex, flat) of the three P1 hat functions on every face."""
    c = surface.corners
    A2 = 2 * surface.face_areas
    return np.stack([1j * (c[:, (k + 2) % 3] - c[:, (k + 1) % 3]) / A2 for k in range(3)], axis=1)


def codazzi_defect(metric: ConeMetric, matrix: np.ndarray, frame: np.ndarray | None = None) -> np.ndarray:
    """Per-face vector d^nabla b(e1, e2) for the conformal metric (or base(P.,P.)).

    Values are in flat coordinates; faces incident to marked vertices are NaN.
    """
    surface = metric.surface
    faces = surface.faces
    ok = ~surface.cone_faces
    b = matrix if frame is None else np.einsum("vij,vjk->vik", frame, matrix)
    grad = _face_gradients(surface)
    w = np.where(surface.is_marked, 0.0, metric.exponent)
    bf = b[faces]  # (F, 3, 2, 2)
    db = np.einsum("fk,fkij->fij", grad, bf.astype(complex))  # d_x + i d_y of each entry
    dx, dy = db.real, db.imag
    wg = np.einsum("fk,fk->f", grad, w[faces])
    w1, w2 = wg.real, wg.imag
    bm = bf.mean(axis=1)
    v = np.empty((surface.n_faces, 2))
    # row k: d1 b^k_2 - d2 b^k_1 + Gamma^k_{1m} b^m_2 - Gamma^k_{2m} b^m_1
    wb2 = w1 * bm[:, 0, 1] + w2 * bm[:, 1, 1]
    wb1 = w1 * bm[:, 0, 0] + w2 * bm[:, 1, 0]
    skew = bm[:, 1, 0] - bm[:, 0, 1]
    wk = [w1, w2]
    for k in range(2):
        v[:, k] = (
            dx[:, k, 1] - dy[:, k, 0]
            + (wb2 if k == 0 else 0.0)
            - (wb1 if k == 1 else 0.0)
            + w1 * bm[:, k, 1] - w2 * bm[:, k, 0]
            + wk[k] * skew
        )
    if frame is not None:
        Pm = frame[faces].mean(axis=1)
        v = np.linalg.solve(Pm, v[..., None])[..., 0]
    v[~ok] = np.nan
    return v


def codazzi_residual(metric: ConeMetric, op, frame: np.ndarray | None = None) -> float:
    """L2 norm (flat area) of d^nabla b over faces away from marked vertices.

    With ``frame`` = P the covariant derivative is that of base(P., P.), i.e.
    P^{-1} d^nabla (P b).
    """
    matrix = op.matrix if isinstance(op, TangentOperatorField) else np.asarray(op)
    v = codazzi_defect(metric, matrix, frame)
    ok = ~metric.surface.cone_faces
    return float(np.sqrt(np.sum(np.sum(v[ok] ** 2, axis=1) * metric.surface.face_areas[ok])))


def vertex_ring_stats(surface: MarkedSurface, values: np.ndarray, marked: int = 0):
    """Group vertex values by distance to a marked point: (radii, mean |value|) per ring."""
    z = surface.vertices[:, 0] + 1j * surface.vertices[:, 1]
    d = _min_image_dist(z - surface.marked[marked].position, surface.tau)
    levels, rmin = surface.grading.resolve(surface.grid_spacing)
    h = surface.grid_spacing
    rho = (rmin / h) ** (1.0 / levels)
    radii = h * rho ** np.arange(levels + 1)
    out = []
    for r in radii:
        sel = np.abs(d - r) < 1e-9 * max(r, 1e-300) + 1e-12
        out.append(float(np.mean(np.abs(values[sel]))))
    return radii, np.array(out)


__all__ = [
    "E2", "J2", "FramedMetric", "QuadraticDifferentialField", "TangentOperatorField",
    "codazzi_defect", "codazzi_residual", "flat_cell_areas", "flat_form", "identity_field",
    "operator_from_quaddiff", "quad_diff_field", "traceless_operator", "vertex_ring_stats",
]
