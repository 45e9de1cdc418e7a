import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmcfol.errors import DegenerateLattice, TruncationTooLow
from cmcfol.geometry.green import (
    _raw_green,
    green,
    green_regular,
    periodicity_residual,
    validate_truncation,
)


def theta_oracle(z, tau):
    """log|theta_1(pi z)/eta(tau)| - pi y^2 / Im tau in high precision."""
    with mpmath.workdps(30):
        q = mpmath.exp(1j * mpmath.pi * tau)
        eta = q ** (mpmath.mpf(1) / 12) * mpmath.qp(q**2, q**2)
        th = mpmath.jtheta(1, mpmath.pi * z, q)
        return float(mpmath.log(abs(th / eta)) - mpmath.pi * mpmath.im(z) ** 2 / mpmath.im(tau))


def fourier_oracle(z, modes=120):
    """Unit square torus: G = -(1/2pi) sum_{k != 0} e^{2 pi i k.x} / |k|^2."""
    m = np.arange(-modes, modes + 1)
    M, N = np.meshgrid(m, m, indexing="ij")
    k2 = (M**2 + N**2).astype(float)
    k2[modes, modes] = np.inf
    phase = np.cos(2 * np.pi * (M * z.real + N * z.imag))
    return float(-np.sum(phase / k2) / (2 * np.pi))


@pytest.mark.parametrize("z", [0.1 + 0.2j, 0.37 - 0.41j, 0.5 + 0.5j, -0.25 + 0.05j])
@pytest.mark.parametrize("tau", [1j, 0.3 + 0.9j, -0.2 + 1.7j])
def test_matches_theta_function(z, tau):
    assert green(z, tau) == pytest.approx(theta_oracle(z, tau), abs=1e-13)


@pytest.mark.parametrize("z", [0.25 + 0.25j, 0.5 + 0.1j, 0.4 + 0.45j])
def test_matches_fourier_series(z):
    # the lattice sum converges slowly, so only a loose agreement is expected
    assert green(z, 1j) == pytest.approx(fourier_oracle(z), abs=2e-4)


def test_zero_mean():
    n = 400
    s = (np.arange(n) + 0.5) / n
    S, T = np.meshgrid(s, s, indexing="ij")
    tau = 0.2 + 1.1j
    vals = green(S + T * tau, tau)
    assert abs(vals.mean()) < 1e-4


@pytest.mark.parametrize("tau", [1j, 0.4 + 0.8j])
def test_laplacian_is_minus_two_pi_over_area(tau):
    z0, h = 0.31 + 0.22j, 1e-3
    f = lambda z: green(z, tau)  # noqa: E731
    lap = (f(z0 + h) + f(z0 - h) + f(z0 + 1j * h) + f(z0 - 1j * h) - 4 * f(z0)) / h**2
    assert lap == pytest.approx(-2 * np.pi / tau.imag, rel=1e-5)


def test_log_singularity_removed():
    tau = 1j
    r = np.geomspace(1e-8, 1e-3, 6)
    vals = green_regular(r * np.exp(0.7j), tau)
    assert np.all(np.isfinite(vals))
    assert np.ptp(vals) < 1e-5
    assert green_regular(0.0, tau) == pytest.approx(vals[0], abs=1e-9)


def test_truncation_checks():
    assert periodicity_residual(1j, 8) < 1e-10
    with pytest.raises(TruncationTooLow):
        validate_truncation(1j, 4)
    with pytest.raises(TruncationTooLow):
        validate_truncation(0.05j, 8)  # tall lattice, slow product convergence


def test_degenerate_lattice():
    with pytest.raises(DegenerateLattice):
        green(0.1, 1.0 + 0j)


@settings(max_examples=60, deadline=None)
@given(
    x=st.floats(-0.45, 0.45), y=st.floats(-0.45, 0.45),
    re=st.floats(-0.5, 0.5), im=st.floats(0.6, 2.0),
)
def test_even_and_periodic(x, y, re, im):
    tau = complex(re, im)
    z = x + y * tau
    if abs(z) < 1e-3:
        return
    g = _raw_green(np.array(z), tau, 16)
    assert float(_raw_green(np.array(-z), tau, 16)) == pytest.approx(float(g), abs=1e-11)
    assert float(_raw_green(np.array(z + 1), tau, 16)) == pytest.approx(float(g), abs=1e-9)
    assert float(_raw_green(np.array(z + tau), tau, 16)) == pytest.approx(float(g), abs=1e-9)
