"""Normal flow of embedding data, CMC/K-leaf duality and the dual-data construction.

Normal time t > 0 always points to the future. For data (I, B) the flowed
surface has first fundamental form I(P_t., P_t.) with

    Minkowski  P_t = E - t B              B_t = P_t^{-1} B
    AdS        P_t = cos t E - sin t B    B_t = P_t^{-1} (sin t E + cos t B)
    dS         P_t = cosh t E - sinh t B  B_t = P_t^{-1} (cosh t B - sinh t E)

and principal curvatures transform by the corresponding Moebius maps.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundViolation, CurvatureNotConstant, DomainError, FlowSingular
from .geometry.metric import ConeMetric
from .geometry.models import ModelGeometry
from .geometry.operators import E2, FramedMetric, QuadraticDifferentialField, TangentOperatorField, flat_form, quad_diff_field
from .solver import EmbeddingData

EPS_T = 1e-9
MINK, ADS, DS = ModelGeometry.MINKOWSKI, ModelGeometry.ADS, ModelGeometry.DS


# ----------------------------------------------------------------------------
# scalar laws


def _denominator(kappa, t, geometry):
    if geometry is MINK:
        return 1.0 - kappa * t
    if geometry is ADS:
        return 1.0 - kappa * np.tan(t)
    return 1.0 - kappa * np.tanh(t)


def _law(kappa, t, geometry):
    if geometry is MINK:
        return kappa / (1.0 - kappa * t)
    if geometry is ADS:
        T = np.tan(t)
        return (kappa + T) / (1.0 - kappa * T)
    T = np.tanh(t)
    return (kappa - T) / (1.0 - kappa * T)


def flow_point(lam, mu, t, geometry, eps: float = EPS_T):
    """Principal curvatures after flowing for normal time t."""
    geometry = ModelGeometry.parse(geometry)
    lam, mu = np.asarray(lam, dtype=float), np.asarray(mu, dtype=float)
    if geometry is ADS and abs(np.cos(t)) < eps:
        raise FlowSingular(f"AdS flow time {t} hits a pole of tan")
    for k in (lam, mu):
        if np.any(np.abs(_denominator(k, t, geometry)) < eps):
            raise FlowSingular(f"{geometry.value}: focal point reached at t={t}")
    lt, mt = _law(lam, t, geometry), _law(mu, t, geometry)
    if lt.ndim == 0:
        return float(lt), float(mt)
    return lt, mt


def frame_matrix(B: np.ndarray, t: float, geometry: ModelGeometry) -> np.ndarray:
    if geometry is MINK:
        return E2 - t * B
    if geometry is ADS:
        return np.cos(t) * E2 - np.sin(t) * B
    return np.cosh(t) * E2 - np.sinh(t) * B


def flowed_operator_matrix(B: np.ndarray, t: float, geometry: ModelGeometry) -> np.ndarray:
    """Closed-form matrix law for B_t (used directly for Minkowski and dS)."""
    P = frame_matrix(B, t, geometry)
    if geometry is MINK:
        rhs = B
    elif geometry is ADS:
        rhs = np.sin(t) * E2 + np.cos(t) * B
    else:
        rhs = np.cosh(t) * B - np.sinh(t) * E2
    return np.linalg.solve(P, rhs)


def _sym_eigh(B):
    Bs = 0.5 * (B + np.swapaxes(B, -1, -2))
    return np.linalg.eigh(Bs)


# ----------------------------------------------------------------------------
# surfaces


@dataclass(frozen=True, eq=False)
class FlowResult:
    t: float
    lambda_t: np.ndarray
    mu_t: np.ndarray
    I_t: FramedMetric
    B_t: TangentOperatorField
    valid: np.ndarray
    data: EmbeddingData  # the flowed surface, usable as input to further flows

    @property
    def gauss_curvature(self) -> np.ndarray:
        """Discrete curvature K_I / det P (P Codazzi)."""
        return self.I_t.curvature

    @property
    def gauss_curvature_from_B(self) -> np.ndarray:
        return self.data.geometry.sec - self.B_t.det

    def curvature_mismatch(self) -> float:
        surface = self.I_t.surface
        d = np.abs(self.gauss_curvature - self.gauss_curvature_from_B)
        return float(np.max(d[~surface.is_marked], initial=0.0))


def admissible_interval(data: EmbeddingData, eps: float = EPS_T) -> tuple[float, float]:
    """Largest open interval around 0 on which every vertex stays non-focal, shrunk by eps."""
    data = data.data if isinstance(data, FlowResult) else data
    kappa = np.concatenate([data.lam, data.mu])
    g = data.geometry
    if g is MINK:
        neg, pos = kappa[kappa < 0], kappa[kappa > 0]
        lo = float(np.max(1.0 / neg)) if neg.size else -np.inf
        hi = float(np.min(1.0 / pos)) if pos.size else np.inf
    elif g is ADS:
        # cos t - kappa sin t > 0  <=>  t in (arccot(kappa) - pi, arccot(kappa))
        acot = np.pi / 2 - np.arctan(kappa)
        lo = max(float(np.max(acot - np.pi)), -np.pi / 2)
        hi = min(float(np.min(acot)), np.pi / 2)
    else:
        big, small = kappa[kappa > 1], kappa[kappa < -1]
        hi = float(np.min(np.arctanh(1.0 / big))) if big.size else np.inf
        lo = float(np.max(np.arctanh(1.0 / small))) if small.size else -np.inf
    return lo + eps, hi - eps


def flow_embedding(data, t: float, eps: float = EPS_T) -> FlowResult:
    """Equidistant surface at normal time t. AdS uses the eigenvalue law in the eigenframe of B."""
    data = data.data if isinstance(data, FlowResult) else data
    g = data.geometry
    B = data.B.matrix
    lam, mu = data.lam, data.mu
    den = np.stack([_denominator(lam, t, g), _denominator(mu, t, g)])
    valid = (np.abs(den) >= eps).all(axis=0) & (den > 0).all(axis=0)
    if g is ADS and abs(np.cos(t)) < eps:
        valid[:] = False
    if not valid.all():
        raise FlowSingular(f"{int((~valid).sum())} vertices are focal or beyond at t={t}")
    if t == 0:
        return FlowResult(0.0, lam.copy(), mu.copy(), data.I, data.B, valid, data)
    lt, mt = flow_point(lam, mu, t, g, eps)
    if g is ADS:
        w, R = _sym_eigh(B)
        wt = _law(w, t, g)
        pt = np.cos(t) - np.sin(t) * w
        Bt = np.einsum("vik,vk,vjk->vij", R, wt, R)
        P = np.einsum("vik,vk,vjk->vij", R, pt, R)
    else:
        P = frame_matrix(B, t, g)
        Bt = flowed_operator_matrix(B, t, g)
    frame = P if data.I.frame is None else np.einsum("vij,vjk->vik", data.I.frame, P)
    I_t = FramedMetric(data.I.base, frame)
    B_t = TangentOperatorField(Bt, I_t)
    mean = 0.5 * (lt + mt)
    H_t = float(mean[0]) if np.ptp(mean) <= 1e-12 * max(1.0, abs(mean[0])) else float("nan")
    new = EmbeddingData(g, H_t, I_t, B_t, TangentOperatorField(Bt - 0.5 * B_t.trace[:, None, None] * E2, I_t), lt, mt, data.h, data.q, data.u)
    return FlowResult(float(t), lt, mt, I_t, B_t, valid, new)


# ----------------------------------------------------------------------------
# duality


@dataclass(frozen=True)
class DualityMap:
    """CMC <-> K-leaf correspondence in one geometry.

    ``direction`` is "k_to_cmc" or "cmc_to_k". ``distance`` follows the closed
    forms (Minkowski: 1/(2H) < 0; AdS and dS: positive), while
    ``signed_time`` is the normal time carrying the source leaf to the target.
    """

    geometry: ModelGeometry
    direction: str = "k_to_cmc"

    def __post_init__(self):
        object.__setattr__(self, "geometry", ModelGeometry.parse(self.geometry))
        if self.direction not in ("k_to_cmc", "cmc_to_k"):
            raise ValueError(f"unknown direction {self.direction!r}")

    @property
    def domain_text(self) -> str:
        g, forward = self.geometry, self.direction == "k_to_cmc"
        if g is MINK:
            return "K < 0" if forward else "H < 0"
        if g is ADS:
            return "K < -1" if forward else "H real"
        return "K < 0" if forward else "H < -1"

    def _check(self, x):
        g, forward = self.geometry, self.direction == "k_to_cmc"
        ok = {
            (MINK, True): x < 0, (MINK, False): x < 0,
            (ADS, True): x < -1, (ADS, False): np.isfinite(x),
            (DS, True): x < 0, (DS, False): x < -1,
        }[(g, forward)]
        if not (np.isfinite(x) and ok):
            raise DomainError(f"{g.value} {self.direction}: {x} outside {self.domain_text}")

    def eval(self, x: float) -> tuple[float, float]:
        """(distance, value) with value = H for k_to_cmc and K for cmc_to_k."""
        x = float(x)
        self._check(x)
        g = self.geometry
        if self.direction == "k_to_cmc":
            K = x
            if g is MINK:
                H = -np.sqrt(-K) / 2
                return 1.0 / (2 * H), H
            if g is ADS:
                return float(np.arctan(np.sqrt(1.0 / (-1.0 - K)))), (-2.0 - K) / (2 * np.sqrt(-1.0 - K))
            return float(np.arctanh(np.sqrt(1.0 / (1.0 - K)))), (K - 2.0) / (2 * np.sqrt(1.0 - K))
        H = x
        if g is MINK:
            return 1.0 / (2 * H), -4.0 * H * H
        if g is ADS:
            s = H + np.sqrt(H * H + 1.0)
            return float(np.arctan(1.0 / s)), -1.0 - s * s
        s = -H + np.sqrt(H * H - 1.0)
        return float(np.arctanh(1.0 / s)), 1.0 - s * s

    def signed_time(self, x: float) -> float:
        d, _ = self.eval(x)
        g, forward = self.geometry, self.direction == "k_to_cmc"
        if g is MINK:
            return -d if forward else d
        if g is ADS:
            return -d if forward else d
        return d if forward else -d


def duality_eval(map_: DualityMap, x: float) -> tuple[float, float]:
    return map_.eval(x)


def mink_distance(H: float) -> tuple[float, float]:
    """Minkowski closed forms d(H) = 1/(2H), f(H) = -4H^2."""
    return DualityMap(MINK, "cmc_to_k").eval(H)


def k_leaf_from_cmc(data: EmbeddingData, tol: float = 1e-4) -> FlowResult:
    """Flow a CMC surface to its dual constant-curvature leaf and check the result."""
    dmap = DualityMap(data.geometry, "cmc_to_k")
    t = dmap.signed_time(data.H)
    _, K = dmap.eval(data.H)
    res = flow_embedding(data, t)
    K_disc = res.gauss_curvature
    ok = ~data.surface.is_marked
    dev = float(np.max(np.abs(K_disc[ok] - K), initial=0.0))
    if dev > tol * max(1.0, abs(K)):
        raise CurvatureNotConstant(f"K-leaf curvature deviates by {dev:.3e} from {K}")
    lam, mu = res.lambda_t, res.mu_t
    if data.geometry is ADS:
        convex = (lam > 0) & (mu > 0)
    else:
        convex = (lam < 0) & (mu < 0)
    if not convex.all():
        raise CurvatureNotConstant("K-leaf violates the convexity convention of the geometry")
    return res


def cmc_from_k_leaf(leaf, K: float) -> FlowResult:
    dmap = DualityMap(leaf.data.geometry if isinstance(leaf, FlowResult) else leaf.geometry, "k_to_cmc")
    return flow_embedding(leaf, dmap.signed_time(K))


# ----------------------------------------------------------------------------
# dual data construction


def dual_parameter(h_dual: ConeMetric, q_dual, C: float, margin: float = 1e-3) -> float:
    """L = -sqrt(1/C - inf det b0) - margin, the bound guaranteeing -C < K_I < 0."""
    c = q_dual.constant if isinstance(q_dual, QuadraticDifferentialField) else complex(q_dual)
    inf_det = -abs(c) ** 2 * float(np.max(h_dual.inv_density() ** 2))
    return -np.sqrt(1.0 / C - inf_det) - margin


def dual_embedding(h_dual: ConeMetric, q_dual, L: float, C: float | None = None) -> EmbeddingData:
    """Surface with B = b^{-1} and I = h(b., b.) where b = h^{-1} Re(q) + L E."""
    if not isinstance(q_dual, QuadraticDifferentialField):
        q_dual = quad_diff_field(h_dual.surface, q_dual)
    b0 = flat_form(q_dual.constant) * h_dual.inv_density()[:, None, None]
    b = b0 + L * E2
    det_b = b[:, 0, 0] * b[:, 1, 1] - b[:, 0, 1] ** 2
    if C is not None:
        det_b0 = b0[:, 0, 0] * b0[:, 1, 1] - b0[:, 0, 1] ** 2
        bound = -np.sqrt(1.0 / C - float(det_b0.min()))
        if not L < bound:
            raise BoundViolation(f"L={L} must be below {bound:.6g} for curvature bound C={C}")
    if not (L < 0 and np.all(det_b > 0)):
        raise BoundViolation("b must be negative definite")
    B = np.linalg.inv(b)
    I = FramedMetric(h_dual, b)
    Bf = TangentOperatorField(B, I)
    lam, mu = Bf.eigenvalues()
    tr = Bf.trace
    return EmbeddingData(MINK, float("nan"), I, Bf, TangentOperatorField(B - 0.5 * tr[:, None, None] * E2, I), lam, mu, h_dual, q_dual, None)


def third_form(data) -> FramedMetric:
    """III = I(B., B.) as a framed metric over the same conformal base."""
    data = data.data if isinstance(data, FlowResult) else data
    P = data.I.frame_or_identity
    return FramedMetric(data.I.base, np.einsum("vij,vjk->vik", P, data.B.matrix))
