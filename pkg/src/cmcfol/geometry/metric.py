"""Conformal cone metrics on a marked torus and their discrete operators.

Every metric here has the form e^{2w}|dz|^2 on the flat chart with
w = phi0 + smooth, where phi0 = sum_i beta_i G(z - p_i) carries the cone
singularities. Sign convention: ``L = div grad`` (non-positive at maxima);
the stiffness matrix is ``S = -L``, so u^T S u is the Dirichlet energy.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.special import roots_jacobi, roots_legendre

from ..errors import NonPositiveFaceArea, QuadratureFailure
from .green import green, green_regular, validate_truncation
from .mesh import MarkedSurface


@dataclass(frozen=True, eq=False)
class ConeMetric:
    """Per-vertex data of the metric e^{2(phi0 + smooth)}|dz|^2.

    ``mass`` holds the lumped areas (mixed Voronoi cells) and ``curvature``
    the Gauss curvature, so ``sum(curvature * mass)`` is the total smooth
    curvature. ``base_mass``/``base_inv_mass`` are the cell integrals of
    e^{+2 phi0} and e^{-2 phi0}; they let derived metrics rescale cheaply.
    """

    surface: MarkedSurface
    singular: np.ndarray  # phi0 per vertex, +inf at cone vertices
    smooth: np.ndarray
    curvature: np.ndarray
    base_mass: np.ndarray
    base_inv_mass: np.ndarray
    truncation: int = 8
    uniformized: bool = False

    @property
    def mass(self) -> np.ndarray:
        return self.base_mass * np.exp(2 * self.smooth)

    @property
    def inv_mass(self) -> np.ndarray:
        """Cell integrals of e^{-2w} dx dy."""
        return self.base_inv_mass * np.exp(-2 * self.smooth)

    @property
    def exponent(self) -> np.ndarray:
        """Full exponent w (inf at cone vertices)."""
        return self.singular + self.smooth

    def inv_density(self) -> np.ndarray:
        """Pointwise e^{-2w} at vertices; exactly 0 at cone vertices."""
        return np.exp(-2 * self.exponent)

    @property
    def area(self) -> float:
        return float(self.mass.sum())

    def phi0_at(self, z) -> np.ndarray:
        """Singular exponent sum_i beta_i G(z - p_i) at arbitrary flat points."""
        return _phi0(np.asarray(z, dtype=complex), self.surface, self.truncation)

    @property
    def curvature_density(self) -> np.ndarray:
        """Curvature per unit flat area, K e^{2w} in lumped form."""
        return self.curvature * self.mass / flat_cell_areas(self.surface)

    def total_curvature(self) -> float:
        return float(np.sum(self.curvature * self.mass))

    def gauss_bonnet_defect(self) -> float:
        """Smooth curvature plus cone defects; zero on the torus."""
        defects = sum(2 * np.pi - m.angle for m in self.surface.marked)
        return self.total_curvature() + defects

    def rescaled(self, extra: np.ndarray, curvature: np.ndarray | None = None, **kw) -> "ConeMetric":
        """Metric e^{2 extra} * self, with curvature from the conformal change formula."""
        extra = np.asarray(extra, dtype=float)
        if curvature is None:
            curvature = discrete_curvature(self, extra)
        return replace(self, smooth=self.smooth + extra, curvature=curvature, **kw)


# ----------------------------------------------------------------------------
# stiffness


def cotan_weights_from_lengths(lengths: np.ndarray) -> np.ndarray:
    """Half-cotangents opposite each edge; ``lengths[:, k]`` is opposite corner k."""
    l2 = lengths**2
    s = lengths.sum(axis=1) / 2
    area = np.sqrt(np.maximum(s * (s - lengths[:, 0]) * (s - lengths[:, 1]) * (s - lengths[:, 2]), 0.0))
    if (area <= 0).any():
        raise NonPositiveFaceArea("degenerate face in cotangent assembly")
    cot = np.empty_like(lengths)
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        cot[:, k] = (l2[:, i] + l2[:, j] - l2[:, k]) / (4 * area)
    return 0.5 * cot


def face_edge_lengths(surface: MarkedSurface) -> np.ndarray:
    c = surface.corners
    return np.column_stack([np.abs(c[:, 2] - c[:, 1]), np.abs(c[:, 0] - c[:, 2]), np.abs(c[:, 1] - c[:, 0])])


def stiffness_from_weights(faces: np.ndarray, half_cot: np.ndarray, n: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j = faces[:, (k + 1) % 3], faces[:, (k + 2) % 3]
        w = half_cot[:, k]
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    S = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return S.tocsr()


@lru_cache(maxsize=16)
def _stiffness_cached(surface: MarkedSurface) -> sp.csr_matrix:
    if (surface.face_areas <= 0).any():
        raise NonPositiveFaceArea("surface has a non-positive face")
    w = cotan_weights_from_lengths(face_edge_lengths(surface))
    return stiffness_from_weights(surface.faces, w, surface.n_vertices)


def stiffness(surface: MarkedSurface) -> sp.csr_matrix:
    """Flat cotangent stiffness; exact for any conformal metric in 2D."""
    return _stiffness_cached(surface)


# ----------------------------------------------------------------------------
# mixed Voronoi cells and their quadrature


def _subtriangles(corners: np.ndarray):
    """Split each face into 6 triangles, two per corner, tiling the mixed Voronoi cells.

    Returns (P0, P1, P2) arrays of shape (F, 3, 2) where index [f, k, :] are the
    two sub-triangles owned by corner k, each with the owner as first point.
    """
    a, b, c = corners[:, 0], corners[:, 1], corners[:, 2]
    pts = [a, b, c]
    mids = {(i, j): 0.5 * (pts[i] + pts[j]) for i in range(3) for j in range(3) if i != j}
    # circumcentre
    d = 2 * ((a.real * (b.imag - c.imag)) + (b.real * (c.imag - a.imag)) + (c.real * (a.imag - b.imag)))
    ux = (abs(a) ** 2 * (b.imag - c.imag) + abs(b) ** 2 * (c.imag - a.imag) + abs(c) ** 2 * (a.imag - b.imag)) / d
    uy = (abs(a) ** 2 * (c.real - b.real) + abs(b) ** 2 * (a.real - c.real) + abs(c) ** 2 * (b.real - a.real)) / d
    cc = ux + 1j * uy
    # obtuse corner detection via dot products
    dots = []
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        e1, e2 = pts[i] - pts[k], pts[j] - pts[k]
        dots.append((e1.conjugate() * e2).real)
    dots = np.column_stack(dots)
    obtuse = dots < 0

    F = len(corners)
    P0 = np.empty((F, 3, 2), dtype=complex)
    P1 = np.empty_like(P0)
    P2 = np.empty_like(P0)
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        mk_i, mk_j, mij = mids[(k, i)], mids[(k, j)], mids[(i, j)]
        # non-obtuse: [k, m_ki, cc] and [k, cc, m_kj]
        q0 = [pts[k], pts[k]]
        q1 = [mk_i, cc]
        q2 = [cc, mk_j]
        # obtuse at k: [k, m_ki, m_ij] and [k, m_ij, m_kj]
        ob_k = obtuse[:, k]
        # obtuse elsewhere: k owns the corner triangle (k, m_ki, m_kj), split in two
        ob_other = obtuse[:, i] | obtuse[:, j]
        half = 0.5 * (mk_i + mk_j)
        for s in range(2):
            P0[:, k, s] = q0[s]
            P1[:, k, s] = np.where(ob_k, [mk_i, mij][s], np.where(ob_other, [mk_i, half][s], q1[s]))
            P2[:, k, s] = np.where(ob_k, [mij, mk_j][s], np.where(ob_other, [half, mk_j][s], q2[s]))
    return P0, P1, P2


def _tri_area(p0, p1, p2):
    e1, e2 = p1 - p0, p2 - p0
    return 0.5 * (e1.real * e2.imag - e1.imag * e2.real)


def flat_cell_areas(surface: MarkedSurface) -> np.ndarray:
    P0, P1, P2 = _subtriangles(surface.corners)
    A = _tri_area(P0, P1, P2).sum(axis=2)
    return np.bincount(surface.faces.ravel(), weights=A.ravel(), minlength=surface.n_vertices)


@lru_cache(maxsize=64)
def _collapsed_rule(n: int, jacobi_exp: float):
    """Points (s, sigma) and weights for int_0^1 int_0^1 g(s, sigma) s^jacobi_exp ds dsigma."""
    xs, ws = roots_jacobi(n, 0.0, jacobi_exp)  # weight (1+x)^jacobi_exp on [-1, 1]
    s = 0.5 * (xs + 1)
    ws = ws / 2.0 ** (jacobi_exp + 1)
    xl, wl = roots_legendre(n)
    sig = 0.5 * (xl + 1)
    wl = 0.5 * wl
    S, SIG = np.meshgrid(s, sig, indexing="ij")
    W = np.outer(ws, wl)
    return S.ravel(), SIG.ravel(), W.ravel()


def _phi0(z, surface: MarkedSurface, truncation: int, skip: int | None = None):
    """phi0 at points, optionally with cone ``skip`` replaced by its regular part."""
    out = np.zeros(np.shape(z))
    for j, m in enumerate(surface.marked):
        if j == skip:
            out = out + m.beta * green_regular(z - m.position, surface.tau, truncation)
        else:
            out = out + m.beta * green(z - m.position, surface.tau, truncation)
    return out


def _cell_integrals(surface: MarkedSurface, sign: int, truncation: int, order=(4, 8, 14)):
    """Per-vertex integrals of e^{2 sign phi0} over the mixed Voronoi cells."""
    corners = surface.corners
    P0, P1, P2 = _subtriangles(corners)
    F = surface.n_faces
    owner = np.broadcast_to(surface.faces[:, :, None], (F, 3, 2))
    cone_face = np.broadcast_to(surface.cone_faces[:, None, None], (F, 3, 2))
    owner_is_cone = surface.is_marked[owner]
    area2 = 2 * _tri_area(P0, P1, P2)
    result = np.zeros(surface.n_vertices)
    cone_of_vertex = {int(v): j for j, v in enumerate(surface.marked_vertices)}

    def integrate(mask, n, jac_exp, skip=None, beta=0.0):
        if not mask.any():
            return
        p0, p1, p2, a2 = P0[mask], P1[mask], P2[mask], area2[mask]
        s, sig, w = _collapsed_rule(n, 1.0 + jac_exp)
        e = (1 - sig)[None, :] * (p1 - p0)[:, None] + sig[None, :] * (p2 - p0)[:, None]
        x = p0[:, None] + s[None, :] * e
        phi = _phi0(x, surface, truncation, skip=skip)
        vals = np.exp(2 * sign * phi)
        if jac_exp != 0.0:
            vals = vals * np.abs(e) ** jac_exp
        contrib = a2 * (vals * w[None, :]).sum(axis=1)
        if not np.all(np.isfinite(contrib)):
            raise QuadratureFailure("non-finite cell integral near a cone vertex")
        np.add.at(result, owner[mask], contrib)

    n_reg, n_near, n_cone = order
    integrate(~cone_face, n_reg, 0.0)
    integrate(cone_face & ~owner_is_cone, n_near, 0.0)
    for v, j in cone_of_vertex.items():
        beta = surface.marked[j].beta
        integrate(cone_face & (owner == v), n_cone, 2 * sign * beta, skip=j, beta=beta)
    return result


def background_factor(surface: MarkedSurface, truncation: int = 8) -> ConeMetric:
    """Flat cone metric e^{2 phi0}|dz|^2 with phi0 = sum beta_i G(z - p_i)."""
    validate_truncation(surface.tau, truncation)
    z = surface.vertices[:, 0] + 1j * surface.vertices[:, 1]
    phi0 = np.zeros(surface.n_vertices)
    if surface.marked:
        regular = ~surface.is_marked
        phi0[regular] = _phi0(z[regular], surface, truncation)
        phi0[surface.is_marked] = np.inf * np.sign(-surface.betas)
        m0 = _cell_integrals(surface, +1, truncation)
        n0 = _cell_integrals(surface, -1, truncation)
    else:
        m0 = flat_cell_areas(surface)
        n0 = m0.copy()
    kappa0 = 2 * np.pi * surface.chi / surface.area
    curvature = kappa0 * flat_cell_areas(surface) / m0
    return ConeMetric(
        surface=surface,
        singular=phi0,
        smooth=np.zeros(surface.n_vertices),
        curvature=curvature,
        base_mass=m0,
        base_inv_mass=n0,
        truncation=truncation,
    )


def laplacian_and_mass(surface: MarkedSurface, metric: ConeMetric | None = None):
    """Stiffness matrix (= -div grad, PSD) and lumped masses of ``metric``."""
    S = stiffness(surface)
    if metric is None:
        return S, flat_cell_areas(surface)
    if metric.surface is not surface:
        raise ValueError("metric belongs to a different surface")
    return S, metric.mass


def discrete_curvature(metric: ConeMetric, extra: np.ndarray) -> np.ndarray:
    """Gauss curvature of e^{2 extra} * metric: e^{-2u}(K + (S u)/m)."""
    extra = np.asarray(extra, dtype=float)
    S = stiffness(metric.surface)
    return np.exp(-2 * extra) * (metric.curvature + (S @ extra) / metric.mass)
