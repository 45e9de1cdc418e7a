"""The eleven acceptance criteria, shared by `cmcfol verify` and the test suite.

Every criterion returns one ``CriterionResult`` with the measured value, the
threshold it is compared against and a pass flag. Numbers are computed with
fixed seeds, so the rendered report is byte-reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import mpmath
import numpy as np

from ..errors import CmcError, FlowSingular
from ..flow import DualityMap, dual_embedding, dual_parameter, flow_point, k_leaf_from_cmc, third_form
from ..foliation import ordering_report, sweep
from ..geometry.mesh import MarkedSurface
from ..geometry.metric import ConeMetric, background_factor
from ..landslide import landslide_check
from ..solver import (
    SolverOptions,
    assemble_problem,
    build_embedding,
    evaluate_functional,
    gauss_residual,
    minimize,
    principal_curvatures,
    solve_cmc,
    uniformize,
)
from .config import SurfaceSpec
from .io import csv_text

SEED = 20240601
THREE_PI_HALF = 1.5 * np.pi


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    value: float
    threshold: float
    relation: str  # how value is compared with threshold
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: value={self.value:.6g} {self.relation} {self.threshold:.6g} {self.detail}".rstrip()


@dataclass
class AcceptanceContext:
    """Caches meshes and hyperbolic metrics at the resolutions the criteria need."""

    spec: SurfaceSpec = field(default_factory=SurfaceSpec)
    truncation: int = 8
    opts: SolverOptions = field(default_factory=SolverOptions)
    _surfaces: dict = field(default_factory=dict)
    _metrics: dict = field(default_factory=dict)

    @property
    def base(self) -> int:
        return self.spec.resolution

    def surface(self, level: int = 0) -> MarkedSurface:
        if level not in self._surfaces:
            self._surfaces[level] = self.spec.build(self.base * 2**level)
        return self._surfaces[level]

    def hyperbolic(self, level: int = 0) -> ConeMetric:
        if level not in self._metrics:
            s = self.surface(level)
            self._metrics[level] = uniformize(s, background_factor(s, self.truncation), self.opts)
        return self._metrics[level]

    @cached_property
    def chi(self) -> float:
        return self.surface(0).chi


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


# ----------------------------------------------------------------------------


def criterion_1(ctx: AcceptanceContext) -> CriterionResult:
    rng = np.random.default_rng(SEED)
    worst = 0.0
    ranges = {"minkowski": (-0.3, 1.5), "ads": (-1.2, 1.2), "ds": (-0.5, 2.0)}
    for g, (lo, hi) in ranges.items():
        n = 0
        while n < 1000:
            lam, mu = rng.uniform(-3.0, -0.1, 2)
            t, s = rng.uniform(lo, hi, 2)
            try:
                # eps=0.25 keeps only well-conditioned samples (denominators away from 0)
                a = flow_point(*flow_point(lam, mu, t, g, eps=0.25), s, g, eps=0.25)
                b = flow_point(lam, mu, t + s, g, eps=0.25)
            except FlowSingular:
                continue
            worst = max(worst, _rel(a[0], b[0]), _rel(a[1], b[1]))
            n += 1
    return CriterionResult(1, "flow semigroup", worst, 1e-12, "<", worst < 1e-12, "3000 samples")


def criterion_2(ctx: AcceptanceContext) -> CriterionResult:
    mink = DualityMap("minkowski", "cmc_to_k").eval(-1.0)
    ads = DualityMap("ads", "k_to_cmc").eval(-2.0)
    ds = DualityMap("ds", "k_to_cmc").eval(-1.0)
    with mpmath.workdps(40):
        ds_ref = (mpmath.atanh(mpmath.sqrt(mpmath.mpf(1) / 2)), mpmath.mpf(-3) / (2 * mpmath.sqrt(2)))
    ok_mink = mink == (-0.5, -4.0)
    err_ads = max(abs(ads[0] - np.pi / 4), abs(ads[1]))
    err_ds = max(abs(ds[0] - float(ds_ref[0])), abs(ds[1] - float(ds_ref[1])))
    passed = ok_mink and err_ads <= 1e-14 and err_ds <= 1e-12
    detail = f"mink={mink} ads_err={err_ads:.2e} ds_err={err_ds:.2e}"
    return CriterionResult(2, "duality instances", max(err_ads, err_ds), 1e-12, "<=", passed, detail)


def criterion_3(ctx: AcceptanceContext) -> CriterionResult:
    h = ctx.hyperbolic(0)
    data = solve_cmc(h, 0.0, -1.0, "minkowski", ctx.opts)
    u_err = float(np.max(np.abs(data.u)))
    leaf = k_leaf_from_cmc(data)
    ok = ~data.surface.is_marked
    k_err = float(np.max(np.abs(leaf.gauss_curvature[ok] + 4.0)))
    worst = max(u_err, k_err)
    return CriterionResult(3, "umbilic pipeline", worst, 1e-10, "<=", worst <= 1e-10, f"sup|u|={u_err:.2e} sup|K+4|={k_err:.2e}")


def criterion_4(ctx: AcceptanceContext) -> CriterionResult:
    sups = []
    for level in range(3):
        data = solve_cmc(ctx.hyperbolic(level), 0.1, -1.0, "minkowski", ctx.opts)
        sups.append(gauss_residual(data)[1])
    ratios = [sups[i] / sups[i + 1] for i in range(2)]
    worst = min(ratios)
    detail = "sup=" + ",".join(f"{s:.3e}" for s in sups)
    return CriterionResult(4, "Gauss residual convergence", worst, 1.8, ">=", worst >= 1.8, detail)


def criterion_5(ctx: AcceptanceContext) -> CriterionResult:
    data = solve_cmc(ctx.hyperbolic(0), 0.1, -1.0, "minkowski", ctx.opts)
    _, _, rep = principal_curvatures(data, raise_on_fail=False)
    umb_ok = rep.cone_defect < 3 * rep.innermost_ring_defect
    passed = rep.fraction_ok == 1.0 and umb_ok
    detail = f"cone_defect={rep.cone_defect:.3e} ring_defect={rep.innermost_ring_defect:.3e}"
    return CriterionResult(5, "principal curvature bounds", rep.fraction_ok, 1.0, "==", passed, detail)


def criterion_6(ctx: AcceptanceContext) -> CriterionResult:
    target = -2 * np.pi * ctx.chi
    errs, leaf_errs = [], []
    for level in range(2):
        h = ctx.hyperbolic(level)
        errs.append(abs(h.area - target) / target)
        leaf = k_leaf_from_cmc(solve_cmc(h, 0.1, -1.0, "minkowski", ctx.opts))
        leaf_target = 2 * np.pi * ctx.chi / -4.0
        leaf_errs.append(abs(leaf.I_t.area - leaf_target) / leaf_target)
    passed = errs[0] <= 0.01 and errs[1] <= 0.0025 and leaf_errs[0] <= 0.01 and leaf_errs[1] <= 0.0025
    worst = max(errs[1], leaf_errs[1])
    detail = f"area_err={errs[0]:.2e},{errs[1]:.2e} leaf_err={leaf_errs[0]:.2e},{leaf_errs[1]:.2e}"
    return CriterionResult(6, "Gauss-Bonnet areas", worst, 0.0025, "<=", passed, detail)


def criterion_7(ctx: AcceptanceContext) -> CriterionResult:
    worst_dev, decreasing = 0.0, True
    parts = []
    for H in (-1.0, 0.0, 1.0):
        res = []
        for level in range(2):
            pair = landslide_check(solve_cmc(ctx.hyperbolic(level), 0.1, H, "ads", ctx.opts))
            if level == 0:
                worst_dev = max(worst_dev, pair.ratio_deviation)
            res.append(max(pair.curvature_residual_l, pair.curvature_residual_r))
        decreasing &= res[1] < res[0]
        parts.append(f"H={H:g}:{res[0]:.2e}->{res[1]:.2e}")
    passed = worst_dev <= 1e-8 and decreasing
    return CriterionResult(7, "landslide ratio and hyperbolicity", worst_dev, 1e-8, "<=", passed, " ".join(parts))


def criterion_8(ctx: AcceptanceContext) -> CriterionResult:
    rng = np.random.default_rng(SEED + 8)
    n = fails = 0
    while n < 200:
        lam, mu = rng.uniform(-4.0, -0.1, 2)
        if lam * mu <= 1:
            continue
        t1, t2 = np.sort(rng.uniform(0.0, 3.0, 2))
        if not 0 < t1 < t2:
            continue
        a = flow_point(lam, mu, t1, "ds")
        b = flow_point(lam, mu, t2, "ds")
        fails += not (a[0] * a[1] > b[0] * b[1])
        n += 1
    return CriterionResult(8, "dS monotonicity", fails, 0, "==", fails == 0, "200 samples")


def criterion_9(ctx: AcceptanceContext) -> CriterionResult:
    rng = np.random.default_rng(SEED + 9)
    h = ctx.hyperbolic(0)
    worst_u = worst_g = 0.0
    for _ in range(5):
        c = complex(*rng.uniform(-0.2, 0.2, 2))
        H = float(rng.uniform(-2.0, -0.5))
        prob = assemble_problem(h, c, H, "minkowski")
        a = minimize(prob, ctx.opts).u
        start = rng.normal(0.0, 0.5, h.surface.n_vertices)
        b = minimize(prob, ctx.opts, u0=start).u
        worst_u = max(worst_u, float(np.max(np.abs(a - b))))
        base = a + 0.1 * rng.normal(size=a.size)
        _, g = evaluate_functional(prob, base)
        for _ in range(4):
            d = rng.normal(size=a.size)
            eps = 1e-5
            fd = (evaluate_functional(prob, base + eps * d)[0] - evaluate_functional(prob, base - eps * d)[0]) / (2 * eps)
            worst_g = max(worst_g, abs(fd - g @ d) / max(abs(fd), 1e-12))
    passed = worst_u <= 1e-8 and worst_g <= 1e-6
    return CriterionResult(9, "solver uniqueness and gradient", worst_u, 1e-8, "<=", passed, f"fd_rel={worst_g:.2e}")


def criterion_10(ctx: AcceptanceContext) -> CriterionResult:
    h = ctx.hyperbolic(0)
    L = dual_parameter(h, 0.1, 4.0)
    data = dual_embedding(h, 0.1, L, C=4.0)
    K = data.I.curvature[~data.surface.is_marked]
    k_ok = bool(np.all((K > -4.0) & (K < 0.0)))
    III = third_form(data)
    third_err = float(np.max(np.abs(III.gram() - np.eye(2)))) if III.base is h else np.inf
    grid = [-2.0, -1.6, -1.3, -1.0, -0.8, -0.6, -0.45, -0.3]
    rep = ordering_report(sweep(h, 0.1, "minkowski", grid, ctx.opts), raise_on_fail=False)
    passed = k_ok and third_err <= 1e-10 and rep.areas_monotone
    detail = f"K_range=({K.min():.4f},{K.max():.4f}) areas_monotone={rep.areas_monotone}"
    return CriterionResult(10, "dual construction", third_err, 1e-10, "<=", passed, detail)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10]

REPORT_HEADER = ["criterion", "name", "value", "relation", "threshold", "passed", "detail"]


def run_criterion(fn, ctx) -> CriterionResult:
    number = CRITERIA.index(fn) + 1
    try:
        return fn(ctx)
    except CmcError as exc:
        return CriterionResult(number, fn.__name__, float("nan"), float("nan"), "error", False, f"{type(exc).__name__}: {exc}")


def report_text(results) -> str:
    rows = [(r.number, r.name, r.value, r.relation, r.threshold, r.passed, r.detail) for r in results]
    return csv_text(REPORT_HEADER, rows)


def run_suite(ctx: AcceptanceContext | None = None, determinism_check: bool = True, echo=None) -> list[CriterionResult]:
    """Run criteria 1-10; criterion 11 re-runs them from scratch and compares the report bytes."""
    ctx = ctx or AcceptanceContext()
    results = []
    for fn in CRITERIA:
        r = run_criterion(fn, ctx)
        results.append(r)
        if echo:
            echo(r.line())
    if determinism_check:
        fresh = AcceptanceContext(ctx.spec, ctx.truncation, ctx.opts)
        again = [run_criterion(fn, fresh) for fn in CRITERIA]
        same = report_text(results) == report_text(again)
        r = CriterionResult(11, "determinism", float(same), 1.0, "==", same, "report bytes of two runs")
        results.append(r)
        if echo:
            echo(r.line())
    return results
