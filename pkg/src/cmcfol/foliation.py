"""Families of CMC and K leaves for fixed (h, q), normal charts and global checks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CmcError, DomainError, EmptyInterval, NotConstantCurvature, OrderingViolated
from .flow import DualityMap, FlowResult, admissible_interval, flow_embedding, k_leaf_from_cmc
from .geometry.metric import ConeMetric
from .geometry.models import ModelGeometry
from .solver import EmbeddingData, SolverOptions, gauss_residual, principal_curvatures, solve_cmc


@dataclass(frozen=True, eq=False)
class FoliationLeaf:
    parameter: float
    kind: str  # "H" or "K"
    data: EmbeddingData | FlowResult | None
    area: float
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def embedding(self) -> EmbeddingData:
        return self.data.data if isinstance(self.data, FlowResult) else self.data


def _leaf_diagnostics(data: EmbeddingData) -> dict:
    _, sup = gauss_residual(data)
    lam, mu, report = principal_curvatures(data, raise_on_fail=False)
    lo, hi = admissible_interval(data)
    diag = {
        "gauss_residual_sup": sup,
        "lambda_min": float(lam.min()),
        "lambda_max": float(lam.max()),
        "mu_min": float(mu.min()),
        "mu_max": float(mu.max()),
        "trace_defect": float(np.max(np.abs(data.B.trace - 2 * data.H))),
        "interval_lo": lo,
        "interval_hi": hi,
    }
    if data.geometry is ModelGeometry.MINKOWSKI:
        diag["bounds_ok"] = report.ok
    return diag


def sweep(h: ConeMetric, q, geometry, grid, opts: SolverOptions = SolverOptions()) -> list[FoliationLeaf]:
    """Solve one CMC leaf per H in ``grid``; per-leaf failures are recorded, not raised."""
    geometry = ModelGeometry.parse(geometry)
    grid = [float(x) for x in grid]
    if grid != sorted(grid):
        raise ValueError("H grid must be sorted")
    bad = [x for x in grid if not geometry.admits(x)]
    if bad:
        raise DomainError(f"{geometry.value}: {bad} outside {geometry.h_range_text}")
    leaves = []
    for H in grid:
        try:
            data = solve_cmc(h, q, H, geometry, opts)
        except CmcError as exc:
            leaves.append(FoliationLeaf(H, "H", None, float("nan"), {}, f"{type(exc).__name__}: {exc}"))
            continue
        leaves.append(FoliationLeaf(H, "H", data, data.area, _leaf_diagnostics(data)))
    return leaves


def k_leaves(leaves: list[FoliationLeaf], tol: float = 1e-4) -> list[FoliationLeaf]:
    """Dual constant-curvature leaf of every solved CMC leaf."""
    out = []
    for leaf in leaves:
        if not leaf.ok:
            out.append(FoliationLeaf(float("nan"), "K", None, float("nan"), {}, leaf.error))
            continue
        data = leaf.embedding
        _, K = DualityMap(data.geometry, "cmc_to_k").eval(data.H)
        try:
            res = k_leaf_from_cmc(data, tol)
        except CmcError as exc:
            out.append(FoliationLeaf(K, "K", None, float("nan"), {}, f"{type(exc).__name__}: {exc}"))
            continue
        diag = {"curvature_mismatch": res.curvature_mismatch(), "time": res.t}
        out.append(FoliationLeaf(K, "K", res, res.I_t.area, diag))
    return out


# ----------------------------------------------------------------------------
# normal chart


@dataclass(frozen=True, eq=False)
class SpacetimeChart:
    """g = -dt^2 + I_t on the normal chart of a leaf, sampled on ``t_grid``.

    ``metric[k, v]`` is the 3x3 matrix at time t_grid[k] and vertex v, with the
    spatial block written in the orthonormal frame of the leaf's conformal base.
    """

    leaf: FoliationLeaf
    t_grid: np.ndarray
    metric: np.ndarray  # (T, V, 3, 3)
    delta: float
    interval: tuple[float, float]

    def signature_ok(self) -> bool:
        spatial = self.metric[:, :, 1:, 1:]
        ev = np.linalg.eigvalsh(spatial)
        return bool(np.all(ev > 0) and np.all(self.metric[:, :, 0, 0] < 0))


def spacetime_chart(leaf: FoliationLeaf | EmbeddingData, t_grid) -> SpacetimeChart:
    if isinstance(leaf, EmbeddingData):
        leaf = FoliationLeaf(leaf.H, "H", leaf, leaf.area)
    data = leaf.embedding
    lo, hi = admissible_interval(data, eps=0.0)
    delta = min(-lo, hi)
    if not delta > 0:
        raise EmptyInterval("normal chart has an empty non-degeneracy interval")
    t_grid = np.asarray(t_grid, dtype=float)
    V = data.surface.n_vertices
    g = np.zeros((len(t_grid), V, 3, 3))
    g[:, :, 0, 0] = -1.0
    for k, t in enumerate(t_grid):
        res = flow_embedding(data, float(t))
        g[k, :, 1:, 1:] = res.I_t.gram()
    return SpacetimeChart(leaf, t_grid, g, float(delta), (float(lo), float(hi)))


# ----------------------------------------------------------------------------
# global checks


def gauss_bonnet_predicted(K: float, chi: float, geometry=ModelGeometry.MINKOWSKI) -> float:
    geometry = ModelGeometry.parse(geometry)
    lo, hi = geometry.k_range
    if not lo < K < hi:
        raise DomainError(f"{geometry.value}: K={K} outside ({lo}, {hi})")
    return 2 * np.pi * chi / K


@dataclass(frozen=True)
class GaussBonnetRecord:
    K: float
    area: float
    predicted: float
    relative_error: float


def gauss_bonnet_report(leaf: FoliationLeaf | FlowResult, tol: float = 1e-3) -> GaussBonnetRecord:
    res = leaf.data if isinstance(leaf, FoliationLeaf) else leaf
    if not isinstance(res, FlowResult):
        raise NotConstantCurvature("Gauss-Bonnet report expects a K-leaf")
    surface = res.I_t.surface
    K_field = res.gauss_curvature[~surface.is_marked]
    K = float(np.mean(K_field))
    if np.max(np.abs(K_field - K)) > tol * abs(K):
        raise NotConstantCurvature(f"curvature varies by {np.ptp(K_field):.3e} across the leaf")
    predicted = gauss_bonnet_predicted(K, surface.chi, res.data.geometry)
    area = res.I_t.area
    return GaussBonnetRecord(K, area, predicted, abs(area - predicted) / abs(predicted))


def umbilic_time(l1, l2, geometry) -> np.ndarray:
    """Normal time carrying umbilic curvature l1 to l2 under the flow law."""
    geometry = ModelGeometry.parse(geometry)
    l1, l2 = np.asarray(l1, dtype=float), np.asarray(l2, dtype=float)
    if geometry is ModelGeometry.MINKOWSKI:
        return 1.0 / l1 - 1.0 / l2
    if geometry is ModelGeometry.ADS:
        return np.arctan(l2) - np.arctan(l1)
    return np.arctanh((l1 - l2) / (1.0 - l1 * l2))


@dataclass(frozen=True)
class OrderingRecord:
    parameters: tuple
    areas: tuple
    k_areas: tuple
    areas_monotone: bool
    leaf_times: tuple | None
    times_monotone: bool | None
    k_fields_ordered: bool

    @property
    def ok(self) -> bool:
        return self.areas_monotone and self.times_monotone is not False and self.k_fields_ordered


def _strictly_monotone(x) -> bool:
    d = np.diff(np.asarray(x, dtype=float))
    return bool(d.size == 0 or np.all(d > 0) or np.all(d < 0))


def ordering_report(leaves: list[FoliationLeaf], raise_on_fail: bool = True, tol: float = 1e-4) -> OrderingRecord:
    """Area monotonicity, normal-time ordering (umbilic families) and K-leaf ordering.

    Areas: CMC leaf areas must be strictly monotone in Minkowski and dS; the
    dual K-leaf areas must be strictly monotone in every geometry.
    """
    if len(leaves) < 2:
        raise ValueError("ordering needs at least two leaves")
    if any(not leaf.ok for leaf in leaves):
        raise OrderingViolated("a leaf failed to solve")
    data = [leaf.embedding for leaf in leaves]
    geometry = data[0].geometry
    areas = [leaf.area for leaf in leaves]
    kl = k_leaves(leaves, tol)
    if any(not k.ok for k in kl):
        raise OrderingViolated("a dual K-leaf could not be formed")
    k_areas = [k.area for k in kl]
    mono = _strictly_monotone(k_areas)
    if geometry is not ModelGeometry.ADS:
        mono = mono and _strictly_monotone(areas)
    times, times_ok = None, None
    if all(d.q is not None and d.q.is_zero for d in data):
        t = [float(np.mean(umbilic_time(a.lam, b.lam, geometry))) for a, b in zip(data, data[1:])]
        times = tuple(np.cumsum([0.0] + t).tolist())
        times_ok = bool(all(x > 0 for x in t))
    ordered = True
    for a, b in zip(kl, kl[1:]):
        ka, kb = a.data.gauss_curvature, b.data.gauss_curvature
        sel = ~a.data.I_t.surface.is_marked
        diff = kb[sel] - ka[sel]
        ordered &= bool(np.all(diff > 0) or np.all(diff < 0))
    rec = OrderingRecord(
        tuple(leaf.parameter for leaf in leaves), tuple(areas), tuple(k_areas), mono, times, times_ok, ordered
    )
    if raise_on_fail and not rec.ok:
        raise OrderingViolated(f"leaf ordering violated: {rec}")
    return rec
