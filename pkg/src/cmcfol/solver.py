"""Uniformization and the convex variational problem for CMC conformal factors.

Discrete functional for the conformal factor u of I = e^{2u} h:

    F(u) = 1/2 u^T S u + sum_i [ -1/2 c m_i e^{2u_i} + K_i m_i u_i + 1/2 n_i e^{-2u_i} ]

with S the cotangent stiffness, m the masses of h, K the curvature of h,
c = Sec - H^2 < 0 and n_i the cell integral of |f|^2 e^{-2w} (w the full
exponent of h). Its critical points solve the discrete Gauss equation
e^{-2u}(K + S u / m) = c + |f|^2 e^{-4(u+w)} in cell-averaged form.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    BoundsViolated,
    ExponentOverflow,
    LinearSolveFailure,
    NonConvergence,
    PositiveChi,
)
from .geometry.mesh import MarkedSurface
from .geometry.metric import ConeMetric, background_factor, discrete_curvature, stiffness
from .geometry.models import ModelGeometry
from .geometry.operators import (
    E2,
    FramedMetric,
    QuadraticDifferentialField,
    TangentOperatorField,
    flat_form,
    quad_diff_field,
)

log = logging.getLogger(__name__)

EXPONENT_LIMIT = 50.0


@dataclass(frozen=True)
class SolverOptions:
    grad_tol: float = 1e-10
    max_newton: int = 50
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    linear_tol: float = 1e-8  # relative residual accepted from the sparse direct solve
    initial_guess: str = "umbilic"  # or "zero"

    def __post_init__(self):
        # grad_tol = 0 is accepted and can never be met (convergence needs |g| < grad_tol)
        if not (self.grad_tol >= 0 and self.linear_tol > 0 and self.max_newton > 0):
            raise ValueError("solver tolerances must be positive")
        if not (0 < self.armijo_c1 < 0.5 and 0 < self.backtrack < 1):
            raise ValueError("Armijo parameters out of range")
        if self.initial_guess not in ("umbilic", "zero"):
            raise ValueError(f"unknown initial_guess {self.initial_guess!r}")


@dataclass
class NewtonLog:
    rows: list = field(default_factory=list)

    def add(self, it, value, gnorm, step):
        self.rows.append((it, value, gnorm, step))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "F", "gradient_norm", "step"])
        for it, val, g, s in self.rows:
            w.writerow([it, f"{val:.17g}", f"{g:.17g}", f"{s:.17g}"])
        return buf.getvalue()


# ----------------------------------------------------------------------------
# generic Newton-Armijo driver for the separable-exponential convex functionals


def _newton(value_grad_hess, x0, opts: SolverOptions, what: str):
    x = np.array(x0, dtype=float)
    record = NewtonLog()
    val, g, H = value_grad_hess(x)
    gnorm = float(np.max(np.abs(g)))
    record.add(0, val, gnorm, 0.0)
    for it in range(1, opts.max_newton + 1):
        if gnorm < opts.grad_tol:
            return x, val, gnorm, it - 1, record
        try:
            dx = spla.spsolve(H.tocsc(), -g)
        except Exception as exc:  # pragma: no cover - scipy raises several types
            raise LinearSolveFailure(f"{what}: sparse solve failed: {exc}") from exc
        if not np.all(np.isfinite(dx)):
            raise LinearSolveFailure(f"{what}: non-finite Newton step")
        lin_res = np.linalg.norm(H @ dx + g) / max(np.linalg.norm(g), 1e-300)
        if lin_res > opts.linear_tol:
            raise LinearSolveFailure(f"{what}: linear residual {lin_res:.2e} above {opts.linear_tol:.1e}")
        slope = float(g @ dx)
        if slope >= 0:
            dx, slope = -g, -float(g @ g)
        step = 1.0
        for _ in range(opts.max_backtracks):
            trial = x + step * dx
            try:
                v_new, g_new, H_new = value_grad_hess(trial)
            except ExponentOverflow:
                step *= opts.backtrack
                continue
            if v_new <= val + opts.armijo_c1 * step * slope or abs(v_new - val) <= 1e-15 * max(1.0, abs(val)):
                break
            step *= opts.backtrack
        else:
            raise NonConvergence(f"{what}: line search failed at iteration {it}")
        x, val, g, H = trial, v_new, g_new, H_new
        gnorm = float(np.max(np.abs(g)))
        record.add(it, val, gnorm, step)
        log.debug("%s it=%d F=%.12g |g|=%.3e step=%.3g", what, it, val, gnorm, step)
    if gnorm < opts.grad_tol:
        return x, val, gnorm, opts.max_newton, record
    raise NonConvergence(f"{what}: gradient {gnorm:.3e} above tolerance {opts.grad_tol:.1e} after {opts.max_newton} steps")


def _guard(u):
    if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > EXPONENT_LIMIT:
        raise ExponentOverflow(f"|u| exceeds {EXPONENT_LIMIT}")


# ----------------------------------------------------------------------------
# uniformization


def uniformize(surface: MarkedSurface, background: ConeMetric | None = None, opts: SolverOptions = SolverOptions()) -> ConeMetric:
    """Hyperbolic cone metric e^{2v} g0 in the conformal class of the background.

    Minimizes 1/2 v^T S v + sum kappa0 a_i v_i + 1/2 sum m0_i e^{2 v_i}; at the
    minimizer the discrete curvature is exactly -1 and the area is -2 pi chi.
    """
    if not surface.marked or surface.chi >= 0:
        raise PositiveChi("uniformization needs chi(Sigma, theta) < 0; add a marked point")
    if background is None:
        background = background_factor(surface)
    S = stiffness(surface)
    m0 = background.mass
    b = background.curvature * m0  # kappa0 * flat cell areas

    def vgh(v):
        _guard(v)
        e = m0 * np.exp(2 * v)
        val = 0.5 * v @ (S @ v) + b @ v + 0.5 * e.sum()
        grad = S @ v + b + e
        return val, grad, S + sp.diags(2 * e)

    v0 = np.full(surface.n_vertices, 0.5 * np.log(-b.sum() / m0.sum()))
    v, *_ = _newton(vgh, v0, opts, "uniformize")
    K = discrete_curvature(background, v)
    return background.rescaled(v, curvature=K, uniformized=True)


# ----------------------------------------------------------------------------
# CMC problem


@dataclass(frozen=True, eq=False)
class CmcProblem:
    h: ConeMetric
    q: QuadraticDifferentialField
    H: float
    geometry: ModelGeometry
    c_eff: float
    mass: np.ndarray  # m_i, cell integrals of e^{2w}
    inv_weight: np.ndarray  # n_i, cell integrals of |f|^2 e^{-2w}

    @property
    def surface(self) -> MarkedSurface:
        return self.h.surface

    def umbilic_guess(self) -> np.ndarray:
        return np.full(self.surface.n_vertices, -0.5 * np.log(-self.c_eff))


def assemble_problem(h: ConeMetric, q: QuadraticDifferentialField | complex, H: float, geometry) -> CmcProblem:
    geometry = ModelGeometry.parse(geometry)
    if not isinstance(q, QuadraticDifferentialField):
        q = quad_diff_field(h.surface, q)
    c_eff = geometry.c_eff(float(H))
    n = abs(q.constant) ** 2 * h.inv_mass
    if not (np.all(np.isfinite(h.mass)) and np.all(np.isfinite(n))):
        raise ExponentOverflow("non-finite precomputed fields")
    return CmcProblem(h, q, float(H), geometry, c_eff, h.mass, n)


def evaluate_functional(problem: CmcProblem, u, with_hessian: bool = False):
    """Value and gradient (and optionally the sparse Hessian) of the discrete F."""
    u = np.asarray(u, dtype=float)
    _guard(u)
    S = stiffness(problem.surface)
    m, n, c = problem.mass, problem.inv_weight, problem.c_eff
    Km = problem.h.curvature * m
    ep = m * np.exp(2 * u)
    em = n * np.exp(-2 * u)
    Su = S @ u
    val = 0.5 * u @ Su + np.sum(-0.5 * c * ep + Km * u + 0.5 * em)
    grad = Su - c * ep + Km - em
    if with_hessian:
        return float(val), grad, S + sp.diags(-2 * c * ep + 2 * em)
    return float(val), grad


@dataclass(frozen=True)
class ConformalSolution:
    u: np.ndarray
    gradient_norm: float
    iterations: int
    functional_value: float
    log_csv: str = ""


def minimize(problem: CmcProblem, opts: SolverOptions = SolverOptions(), u0=None) -> ConformalSolution:
    if u0 is None:
        u0 = problem.umbilic_guess() if opts.initial_guess == "umbilic" else np.zeros(problem.surface.n_vertices)
    u, val, gnorm, its, record = _newton(
        lambda x: evaluate_functional(problem, x, with_hessian=True), u0, opts, "cmc"
    )
    return ConformalSolution(u, gnorm, its, val, record.to_csv())


# ----------------------------------------------------------------------------
# embedding data


@dataclass(frozen=True, eq=False)
class EmbeddingData:
    """First fundamental form and shape operator of a space-like surface.

    ``I`` is a FramedMetric; ``B.matrix`` is expressed in the orthonormal frame
    of ``I.base`` (the same matrix as in flat coordinates).
    """

    geometry: ModelGeometry
    H: float
    I: FramedMetric
    B: TangentOperatorField
    B0: TangentOperatorField
    lam: np.ndarray
    mu: np.ndarray
    h: ConeMetric | None = None
    q: QuadraticDifferentialField | None = None
    u: np.ndarray | None = None

    @property
    def surface(self) -> MarkedSurface:
        return self.I.surface

    @property
    def metric(self) -> ConeMetric:
        return self.I.base

    @property
    def area(self) -> float:
        return self.I.area

    def discrete_gauss_curvature(self) -> np.ndarray:
        return self.I.curvature

    def gauss_curvature_from_B(self) -> np.ndarray:
        return self.geometry.sec - self.B.det


def build_embedding(problem: CmcProblem, solution: ConformalSolution | np.ndarray) -> EmbeddingData:
    u = solution.u if isinstance(solution, ConformalSolution) else np.asarray(solution, dtype=float)
    h = problem.h
    I = h.rescaled(u)
    B0 = flat_form(problem.q.constant) * I.inv_density()[:, None, None]
    B = B0 + problem.H * E2
    rho = np.abs(problem.q.constant) * I.inv_density()
    return EmbeddingData(
        geometry=problem.geometry,
        H=problem.H,
        I=FramedMetric(I),
        B=TangentOperatorField(B, I),
        B0=TangentOperatorField(B0, I),
        lam=problem.H - rho,
        mu=problem.H + rho,
        h=h,
        q=problem.q,
        u=u,
    )


def solve_cmc(h: ConeMetric, q, H: float, geometry, opts: SolverOptions = SolverOptions()) -> EmbeddingData:
    problem = assemble_problem(h, q, H, geometry)
    return build_embedding(problem, minimize(problem, opts))


def gauss_residual(data: EmbeddingData) -> tuple[np.ndarray, float]:
    """det B - Sec + K_I per vertex (K_I discrete) and its sup away from marked vertices."""
    field_ = data.B.det - data.geometry.sec + data.discrete_gauss_curvature()
    field_ = np.where(data.surface.is_marked, 0.0, field_)
    return field_, float(np.max(np.abs(field_)))


@dataclass(frozen=True)
class BoundsReport:
    H: float
    lam_min: float
    lam_max: float
    mu_min: float
    mu_max: float
    fraction_ok: float
    cone_defect: float
    innermost_ring_defect: float

    @property
    def ok(self) -> bool:
        return self.fraction_ok == 1.0


def principal_curvatures(data: EmbeddingData, tol: float = 1e-9, raise_on_fail: bool = True):
    """Eigenvalues (lam <= mu) of B and the future-convex bounds 2H < lam <= H <= mu < 0."""
    lam, mu = data.B.eigenvalues()
    H = data.H
    ok = (2 * H < lam) & (lam <= H + tol) & (H - tol <= mu) & (mu < 0)
    from .geometry.operators import vertex_ring_stats

    defect = mu - lam
    surface = data.surface
    cone = float(np.max(defect[surface.marked_vertices])) if surface.marked else 0.0
    ring = float("nan")
    if surface.marked and surface.grading.levels > 0:
        ring = float(vertex_ring_stats(surface, defect)[1][-1])
    report = BoundsReport(H, float(lam.min()), float(lam.max()), float(mu.min()), float(mu.max()), float(ok.mean()), cone, ring)
    if data.geometry is ModelGeometry.MINKOWSKI and raise_on_fail and not report.ok:
        raise BoundsViolated(f"{int((~ok).sum())} vertices violate 2H < lam <= H <= mu < 0")
    return lam, mu, report


def hyperbolic_metric(surface: MarkedSurface, truncation: int = 8, opts: SolverOptions = SolverOptions()) -> ConeMetric:
    return uniformize(surface, background_factor(surface, truncation), opts)


__all__ = [
    "BoundsReport", "CmcProblem", "ConformalSolution", "EmbeddingData", "SolverOptions",
    "assemble_problem", "build_embedding", "evaluate_functional", "gauss_residual",
    "hyperbolic_metric", "minimize", "principal_curvatures", "solve_cmc", "uniformize",
]
