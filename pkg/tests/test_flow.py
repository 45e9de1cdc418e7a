import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmcfol import (
    DualityMap,
    admissible_interval,
    dual_embedding,
    dual_parameter,
    duality_eval,
    flow_embedding,
    flow_point,
    k_leaf_from_cmc,
    quad_diff_field,
    solve_cmc,
    third_form,
)
from cmcfol.errors import BoundViolation, DomainError, FlowSingular
from cmcfol.flow import EPS_T, cmc_from_k_leaf, flowed_operator_matrix

GEOMS = ["minkowski", "ads", "ds"]


@pytest.mark.parametrize("g", GEOMS)
def test_flow_point_identity(g):
    assert flow_point(-1.3, -0.4, 0.0, g) == (-1.3, -0.4)


def test_flow_point_minkowski_example():
    assert flow_point(-1.0, -1.0, -0.5, "minkowski") == (-2.0, -2.0)


def test_flow_point_ds_decreasing_product():
    lt, mt = flow_point(-2.0, -2.0, 0.5, "ds")
    assert lt * mt < 4


def test_flow_point_singular():
    with pytest.raises(FlowSingular):
        flow_point(-1.0, -0.5, -1.0, "minkowski")
    with pytest.raises(FlowSingular):
        flow_point(0.0, 0.0, np.pi / 2, "ads")


def _admissible_times(lam, mu, g, rng):
    # interval around 0 on which 1 - k T(t) > 0 for both eigenvalues, with margin
    from cmcfol.flow import _denominator

    while True:
        t, s = rng.uniform(-0.6, 0.6, 2)
        if all(_denominator(k, x, g) > 1e-2 for k in (lam, mu) for x in (t, t + s)):
            return t, s


@pytest.mark.parametrize("g", GEOMS)
def test_semigroup_random(g):
    from cmcfol import ModelGeometry

    gm = ModelGeometry.parse(g)
    rng = np.random.default_rng(11)
    err = 0.0
    for _ in range(1000):
        lam, mu = rng.uniform(-3, -0.1, 2)
        t, s = _admissible_times(lam, mu, gm, rng)
        a = flow_point(*flow_point(lam, mu, t, g), s, g)
        b = flow_point(lam, mu, t + s, g)
        err = max(err, *(abs(x - y) / max(1.0, abs(y)) for x, y in zip(a, b)))
    assert err < 1e-12


@settings(max_examples=200, deadline=None)
@given(k=st.floats(-3, -0.1), t1=st.floats(0.01, 5), dt=st.floats(0.01, 5))
def test_minkowski_monotone_to_future(k, t1, dt):
    a, _ = flow_point(k, k, t1, "minkowski")
    b, _ = flow_point(k, k, t1 + dt, "minkowski")
    assert a < b < 0


@settings(max_examples=200, deadline=None)
@given(lam=st.floats(-4, -1.05), mu=st.floats(-4, -1.05), t1=st.floats(0.01, 0.3), dt=st.floats(0.01, 0.3))
def test_ds_product_decreasing(lam, mu, t1, dt):
    a = np.prod(flow_point(lam, mu, t1, "ds"))
    b = np.prod(flow_point(lam, mu, t1 + dt, "ds"))
    assert a > b


@pytest.mark.parametrize("g,sign", [("minkowski", -1), ("ads", 1), ("ds", -1)])
def test_duality_flow_consistency(g, sign):
    # K-leaf data with lam * mu fixed by the Gauss equation, flowed by the signed duality time
    dmap = DualityMap(g, "k_to_cmc")
    sec = {"minkowski": 0.0, "ads": -1.0, "ds": 1.0}[g]
    rng = np.random.default_rng(4)
    for _ in range(200):
        K = -rng.uniform(1.2, 6.0)
        kappa = sec - K
        lam = sign * np.sqrt(kappa) * np.exp(rng.uniform(-0.3, 0.3))
        mu = kappa / lam
        _, H = dmap.eval(K)
        lt, mt = flow_point(lam, mu, dmap.signed_time(K), g)
        assert 0.5 * (lt + mt) == pytest.approx(H, abs=1e-12)


def test_ads_distance_limits():
    dmap = DualityMap("ads", "k_to_cmc")
    Ks = -1 - np.logspace(-6, np.log10(1e6 - 1), 200)
    d = np.array([dmap.eval(K)[0] for K in Ks])
    assert np.all((d > 0) & (d < np.pi / 2))
    assert np.all(np.diff(d) < 0)
    assert d[0] > np.pi / 2 - 1e-2 and d[-1] < 1e-2


def test_ds_distance_limit():
    dmap = DualityMap("ds", "k_to_cmc")
    assert dmap.eval(-1e8)[0] < 1e-3
    d = [dmap.eval(K)[0] for K in (-1, -10, -100)]
    assert d[0] > d[1] > d[2] > 0


def test_duality_examples():
    assert duality_eval(DualityMap("minkowski", "cmc_to_k"), -1.0) == (-0.5, -4.0)
    d, f = duality_eval(DualityMap("ads", "k_to_cmc"), -2.0)
    assert abs(d - np.pi / 4) < 1e-14 and abs(f) < 1e-14
    d, f = duality_eval(DualityMap("ds", "k_to_cmc"), -1.0)
    with mp.workdps(30):
        assert abs(d - float(mp.atanh(1 / mp.sqrt(2)))) < 1e-12
        assert abs(f - float(-3 / (2 * mp.sqrt(2)))) < 1e-12


@pytest.mark.parametrize("g,direction,x", [
    ("minkowski", "cmc_to_k", 0.5), ("minkowski", "k_to_cmc", 0.0), ("ads", "k_to_cmc", -0.5),
    ("ds", "k_to_cmc", 0.2), ("ds", "cmc_to_k", -0.5), ("ads", "cmc_to_k", np.inf),
])
def test_duality_domain(g, direction, x):
    with pytest.raises(DomainError):
        DualityMap(g, direction).eval(x)


@pytest.mark.parametrize("g,H", [("minkowski", -0.7), ("ads", 0.4), ("ads", -2.0), ("ds", -1.5)])
def test_duality_inverse(g, H):
    _, K = DualityMap(g, "cmc_to_k").eval(H)
    d1, H2 = DualityMap(g, "k_to_cmc").eval(K)
    assert H2 == pytest.approx(H, rel=1e-12)
    assert DualityMap(g, "k_to_cmc").signed_time(K) == pytest.approx(-DualityMap(g, "cmc_to_k").signed_time(H), rel=1e-12)


@pytest.mark.parametrize("g", GEOMS)
def test_duality_monotone(g):
    dmap = DualityMap(g, "k_to_cmc")
    Ks = -np.linspace(1.1, 20, 50)
    H = [dmap.eval(K)[1] for K in Ks]
    assert np.all(np.diff(H) > 0) or np.all(np.diff(H) < 0)


def test_admissible_interval_examples(hyperbolic):
    h = hyperbolic(16)
    data = solve_cmc(h, 0, -1.0, "minkowski")
    lo, hi = admissible_interval(data)
    assert lo == pytest.approx(-1 + EPS_T, abs=1e-15) and hi == np.inf
    assert lo < -0.5 < hi
    data = solve_cmc(h, 0.1, -1.0, "minkowski")
    lo, hi = admissible_interval(data)
    assert hi == np.inf and lo == pytest.approx(max(1 / k for k in np.r_[data.lam, data.mu]) + EPS_T)
    ads = solve_cmc(h, 0, 1.0, "ads")
    lo, hi = admissible_interval(ads)
    assert lo == pytest.approx(-np.pi / 2 + EPS_T)


def test_flow_umbilic_example(hyperbolic):
    data = solve_cmc(hyperbolic(16), 0, -1.0, "minkowski")
    res = flow_embedding(data, -0.5)
    assert np.all(res.lambda_t == -2.0) and np.all(res.mu_t == -2.0)
    assert np.allclose(res.gauss_curvature_from_B, -4.0, rtol=1e-14)
    assert np.allclose(res.gauss_curvature, -4.0, rtol=1e-9)


def test_flow_time_zero(hyperbolic):
    data = solve_cmc(hyperbolic(16), 0.1, -1.0, "minkowski")
    res = flow_embedding(data, 0.0)
    assert res.I_t is data.I and res.B_t is data.B


@pytest.mark.parametrize("g,H,t,s", [("minkowski", -1.0, 0.3, -0.5), ("ads", 0.5, -0.3, -0.4), ("ds", -1.5, 0.1, 0.15)])
def test_flow_embedding_semigroup(hyperbolic, g, H, t, s):
    data = solve_cmc(hyperbolic(16), 0.1 + 0.05j, H, g)
    a = flow_embedding(flow_embedding(data, t), s)
    b = flow_embedding(data, t + s)
    assert np.max(np.abs(a.B_t.matrix - b.B_t.matrix)) < 1e-12
    assert np.max(np.abs(a.I_t.gram() - b.I_t.gram())) < 1e-12 * np.abs(b.I_t.gram()).max()
    assert a.curvature_mismatch() < 1e-2


def test_flow_embedding_curvature_two_ways(hyperbolic):
    errs = []
    for n in (16, 32):
        data = solve_cmc(hyperbolic(n), 0.1, -1.0, "minkowski")
        errs.append(flow_embedding(data, 0.4).curvature_mismatch())
    assert errs[1] < errs[0]


def test_ads_eigenframe_matches_matrix_formula(hyperbolic):
    data = solve_cmc(hyperbolic(16), 0.1 - 0.1j, 0.7, "ads")
    for t in (-0.6, -0.2, 0.3):
        res = flow_embedding(data, t)
        assert np.max(np.abs(res.B_t.matrix - flowed_operator_matrix(data.B.matrix, t, data.geometry))) < 1e-12


def test_flow_embedding_singular(hyperbolic):
    data = solve_cmc(hyperbolic(16), 0, -1.0, "minkowski")
    with pytest.raises(FlowSingular):
        flow_embedding(data, -1.0)


@pytest.mark.parametrize("g,H", [("minkowski", -1.0), ("ads", 0.5), ("ds", -1.5)])
def test_k_leaf_round_trip(hyperbolic, g, H):
    data = solve_cmc(hyperbolic(16), 0.1, H, g)
    leaf = k_leaf_from_cmc(data)
    back = cmc_from_k_leaf(leaf, float(np.mean(leaf.gauss_curvature_from_B)))
    assert np.max(np.abs(back.B_t.matrix - data.B.matrix)) < 1e-10
    assert np.max(np.abs(back.I_t.gram() - data.I.gram())) < 1e-10 * np.abs(data.I.gram()).max()


def test_k_leaf_umbilic_exact(hyperbolic):
    leaf = k_leaf_from_cmc(solve_cmc(hyperbolic(16), 0, -1.0, "minkowski"))
    assert np.allclose(leaf.gauss_curvature_from_B, -4.0, rtol=1e-14)


def test_k_leaf_refinement(hyperbolic):
    devs = []
    for n in (16, 32):
        leaf = k_leaf_from_cmc(solve_cmc(hyperbolic(n), 0.1, -1.0, "minkowski"))
        ok = ~leaf.I_t.surface.is_marked
        devs.append(np.max(np.abs(leaf.gauss_curvature[ok] + 4.0)))
    assert devs[1] < devs[0]


def test_dual_embedding_umbilic(hyperbolic):
    h = hyperbolic(16)
    data = dual_embedding(h, 0, -2.0)
    assert np.allclose(data.B.matrix, -0.5 * np.eye(2), atol=1e-15)
    assert np.allclose(data.I.gram(), 4 * np.eye(2), atol=1e-14)
    assert np.allclose(data.I.curvature, -0.25, rtol=1e-9)


def test_dual_embedding_bound(hyperbolic):
    h = hyperbolic(16)
    L = dual_parameter(h, 0.1, 4.0)
    data = dual_embedding(h, 0.1, L, C=4.0)
    K = data.I.curvature
    assert np.all((K > -4) & (K < 0))
    assert np.all(data.B.det > 0) and np.all(data.B.trace < 0)
    assert np.allclose(third_form(data).gram(), np.eye(2), atol=1e-10)
    with pytest.raises(BoundViolation):
        dual_embedding(h, 0.1, L + 0.5, C=4.0)
    with pytest.raises(BoundViolation):
        dual_embedding(h, 0, 1.0)


def test_third_form_umbilic(hyperbolic):
    data = solve_cmc(hyperbolic(16), 0, -1.5, "minkowski")
    assert np.allclose(third_form(data).gram(), 2.25 * data.I.gram(), rtol=1e-14)


def test_third_form_shared_by_equidistant(hyperbolic):
    data = solve_cmc(hyperbolic(16), 0.1, -1.0, "minkowski")
    leaf = k_leaf_from_cmc(data)
    assert np.max(np.abs(third_form(leaf).gram() - third_form(data).gram())) < 1e-12
