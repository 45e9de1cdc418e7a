"""Periodic Green's function of the flat torus C / (Z + tau Z).

``G`` solves  (div grad) G = 2 pi (delta_0 - 1/|T|)  with zero mean, where
|T| = Im(tau) is the area of the fundamental parallelogram. It is evaluated
from the product expansion of the Jacobi theta function theta_1, which
converges like |q|^(2n) with q = exp(i pi tau).
"""
from __future__ import annotations

import numpy as np

from ..errors import DegenerateLattice, TruncationTooLow

MIN_TRUNCATION = 8
PERIODICITY_TOL = 1e-10


def _check_tau(tau: complex) -> complex:
    tau = complex(tau)
    if not tau.imag > 0:
        raise DegenerateLattice(f"Im(tau) must be positive, got {tau!r}")
    return tau


def lattice_coords(z, tau):
    """Coordinates (s, t) with z = s + t*tau."""
    z = np.asarray(z, dtype=complex)
    t = z.imag / tau.imag
    s = z.real - t * tau.real
    return s, t


def reduce_to_cell(z, tau):
    """Translate z by lattice vectors into the cell centred at the origin."""
    tau = _check_tau(tau)
    s, t = lattice_coords(z, tau)
    s = s - np.round(s)
    t = t - np.round(t)
    return s + t * tau


def _smooth_terms(z, tau, truncation):
    # everything in the product formula except log|sin(pi z)|
    q2 = np.exp(2j * np.pi * tau)
    y = z.imag
    out = np.log(2.0) - np.pi * tau.imag / 6.0 - np.pi * y**2 / tau.imag
    e_plus = np.exp(2j * np.pi * z)
    e_minus = np.exp(-2j * np.pi * z)
    qn = 1.0 + 0j
    for _ in range(truncation):
        qn = qn * q2
        out = out + np.log(np.abs(1.0 - qn * e_plus)) + np.log(np.abs(1.0 - qn * e_minus))
    return out


def _sin2(z):
    return np.sin(np.pi * z.real) ** 2 + np.sinh(np.pi * z.imag) ** 2


def _raw_green(z, tau, truncation):
    # product formula, valid for any z but only accurate near the origin cell
    with np.errstate(divide="ignore"):
        return 0.5 * np.log(_sin2(z)) + _smooth_terms(z, tau, truncation)


def green(z, tau, truncation=16):
    """Zero-mean periodic Green's function G(z) (log-singular at lattice points)."""
    tau = _check_tau(tau)
    z = reduce_to_cell(np.asarray(z, dtype=complex), tau)
    return _raw_green(z, tau, truncation)


def green_regular(z, tau, truncation=16):
    """G(z) - log|z| for z in the reduced cell; bounded near the origin."""
    tau = _check_tau(tau)
    z = reduce_to_cell(np.asarray(z, dtype=complex), tau)
    r2 = np.abs(z) ** 2
    tiny = r2 < 1e-300
    ratio = np.where(tiny, np.pi**2, _sin2(z) / np.where(tiny, 1.0, r2))
    return _smooth_terms(z, tau, truncation) + 0.5 * np.log(ratio)


def periodicity_residual(tau, truncation, samples=16):
    """Largest defect |G(z + w) - G(z)| over lattice generators w, unreduced."""
    tau = _check_tau(tau)
    rng = np.random.default_rng(12345)
    s = rng.uniform(-0.5, 0.5, samples)
    t = rng.uniform(-0.5, 0.5, samples)
    z = s + t * tau + 0.05  # keep away from the singular lattice points
    base = _raw_green(z, tau, truncation)
    d1 = np.abs(_raw_green(z + 1.0, tau, truncation) - base)
    d2 = np.abs(_raw_green(z + tau, tau, truncation) - base)
    return float(max(d1.max(), d2.max()))


def validate_truncation(tau, truncation):
    if truncation < MIN_TRUNCATION:
        raise TruncationTooLow(f"truncation {truncation} < {MIN_TRUNCATION}")
    res = periodicity_residual(tau, truncation)
    if not res < PERIODICITY_TOL:
        raise TruncationTooLow(
            f"periodicity residual {res:.3e} exceeds {PERIODICITY_TOL:g} at truncation {truncation}"
        )
    return res
