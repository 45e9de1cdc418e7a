import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmcfol import ModelGeometry, model_chart_metric
from cmcfol.errors import ChartDomainError, InadmissibleH
from cmcfol.geometry.models import HYPERBOLIC

MINK, ADS, DS = ModelGeometry.MINKOWSKI, ModelGeometry.ADS, ModelGeometry.DS


def test_chart_examples():
    assert np.array_equal(model_chart_metric(MINK, np.pi / 2, (0, 1, 0)), np.diag([-1.0, 1.0, 1.0]))
    assert np.array_equal(model_chart_metric(ADS, np.pi / 2, (0.3, 0.2, 0.0)), np.diag([-1.0, 0.0, 1.0]))
    phi = 0.7
    assert np.allclose(model_chart_metric(DS, np.pi / 2, (0.0, phi, 0.1)), np.diag([-1.0, 1.0, np.sin(phi) ** 2]))
    assert np.allclose(model_chart_metric(HYPERBOLIC, 1.0, (0.5, 0.2)), np.diag([1.0, np.sinh(0.5) ** 2]))


def test_signature():
    for g, c in ((MINK, (0.3, 2.0, 0.4)), (ADS, (0.1, 0.4, 1.2)), (DS, (0.5, 1.0, 0.3))):
        d = np.diag(model_chart_metric(g, 1.5, c))
        assert d[0] < 0 and np.all(d[1:] > 0)


def test_chart_domain():
    with pytest.raises(ChartDomainError):
        model_chart_metric(MINK, 1.0, (0, -1, 0))
    with pytest.raises(ChartDomainError):
        model_chart_metric(MINK, 1.0, (0, 1, 1.5))
    with pytest.raises(ChartDomainError):
        model_chart_metric(DS, 1.0, (0, 4.0, 0.1))
    with pytest.raises(ChartDomainError):
        model_chart_metric(ADS, 1.0, (0, 0.1))


def test_c_eff_examples():
    assert MINK.c_eff(-1.0) == -1.0
    assert ADS.c_eff(0.0) == -1.0
    with pytest.raises(InadmissibleH):
        DS.c_eff(-0.5)
    with pytest.raises(InadmissibleH):
        MINK.c_eff(0.0)
    assert (MINK.sec, ADS.sec, DS.sec) == (0.0, -1.0, 1.0)


@given(g=st.sampled_from(list(ModelGeometry)), H=st.floats(-50, 50).filter(lambda h: abs(h) > 1e-100))
def test_c_eff_negative_on_range(g, H):
    if g.admits(H):
        assert g.c_eff(H) < 0


def test_parse_aliases():
    assert ModelGeometry.parse("AdS") is ADS
    assert ModelGeometry.parse("de-sitter") is DS
    assert ModelGeometry.parse("flat") is MINK
    with pytest.raises(ValueError):
        ModelGeometry.parse("sphere")
