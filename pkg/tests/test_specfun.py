import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from mm1ps.model import DomainError, UnsupportedOrderError
from mm1ps.specfun import (
    bessel_i0,
    bessel_i0e,
    bessel_i1,
    bessel_i1e,
    erfc,
    pcf_d,
    pcf_d_scaled_sequence,
)


def series_i(nu, z, dps=60):
    """Extended-precision power series oracle for I_nu."""
    with mpmath.workdps(dps):
        z = mpmath.mpf(z)
        half = z / 2
        total = mpmath.mpf(0)
        k = 0
        while True:
            term = half ** (2 * k + nu) / (mpmath.factorial(k) * mpmath.factorial(k + nu))
            total += term
            if k > 5 and term < total * mpmath.mpf(10) ** (-dps + 5):
                return total
            k += 1


def test_i0_values():
    assert bessel_i0(0.0) == 1.0
    assert bessel_i0(1.0) == pytest.approx(1.2660658777520083, rel=1e-14)
    assert bessel_i0(10.0) == pytest.approx(2815.716628466254, rel=1e-13)


def test_i1_values():
    assert bessel_i1(0.0) == 0.0
    assert bessel_i1(2.0) == pytest.approx(1.5906368546373291, rel=1e-14)
    z = 1e-4
    assert bessel_i1(z) == pytest.approx(z / 2, rel=1e-8)


@pytest.mark.parametrize("z", [0.1, 0.7, 3.0, 9.5, 14.9, 15.0, 15.1, 17.0, 25.0, 40.0, 120.0, 500.0])
def test_bessel_against_extended_series(z):
    dps = 60 if z < 100 else 400
    for nu, fn in ((0, bessel_i0), (1, bessel_i1)):
        exact = float(series_i(nu, z, dps))
        assert fn(z) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("z", [0.5, 14.0, 16.0, 300.0, 2000.0])
def test_scaled_bessel(z):
    with mpmath.workdps(30):
        e0 = float(mpmath.besseli(0, z) * mpmath.exp(-z))
        e1 = float(mpmath.besseli(1, z) * mpmath.exp(-z))
    assert bessel_i0e(z) == pytest.approx(e0, rel=1e-12)
    assert bessel_i1e(z) == pytest.approx(e1, rel=1e-12)


def test_switch_point_continuity():
    # both branches agree across the series / asymptotic switch
    lo, hi = bessel_i1(15.0), bessel_i1(math.nextafter(15.0, 16.0))
    assert hi == pytest.approx(lo, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=0.1, max_value=20.0))
def test_i0_derivative_is_i1(z):
    h = 1e-5 * max(1.0, z)
    d = (bessel_i0(z + h) - bessel_i0(z - h)) / (2 * h)
    assert d == pytest.approx(bessel_i1(z), rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=0.0, max_value=50.0), st.floats(min_value=1e-3, max_value=5.0))
def test_bessel_monotone(z, dz):
    assert bessel_i0(z + dz) > bessel_i0(z)
    assert bessel_i1(z) >= 0.0


@pytest.mark.parametrize("fn", [bessel_i0, bessel_i1, erfc])
def test_nonfinite_rejected(fn):
    for bad in (math.nan, math.inf, -math.inf):
        with pytest.raises(DomainError):
            fn(bad)


def test_erfc_values():
    assert erfc(0.0) == 1.0
    # adaptive quadrature of the defining integral
    quad, _ = integrate.quad(lambda t: math.exp(-t * t), 1.0, math.inf, epsabs=0, epsrel=1e-13)
    assert erfc(1.0) == pytest.approx(2 / math.sqrt(math.pi) * quad, rel=1e-12)
    assert erfc(1.0) == pytest.approx(0.15729920705028513, rel=1e-14)


@pytest.mark.parametrize("z", [8.0, 15.0, 25.0])
def test_erfc_large_argument(z):
    approx = math.exp(-z * z) / (math.sqrt(math.pi) * z)
    assert erfc(z) / approx == pytest.approx(1.0, abs=1.0 / z**2)


def test_erfc_underflow_is_absolute_small():
    assert 0.0 <= erfc(30.0) <= 1e-300


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=-30.0, max_value=30.0, allow_nan=False))
def test_erfc_symmetry_and_bounds(z):
    assert erfc(z) + erfc(-z) == pytest.approx(2.0, abs=1e-15)
    assert 0.0 <= erfc(z) <= 2.0
    if abs(z) < 5.0:
        assert 0.0 < erfc(z) < 2.0


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=-6.0, max_value=6.0), st.floats(min_value=1e-3, max_value=1.0))
def test_erfc_decreasing(z, dz):
    assert erfc(z + dz) <= erfc(z)
    # below about -5.9 erfc rounds to 2.0, so strictness only holds inside
    if abs(z) < 5.0:
        assert erfc(z + dz) < erfc(z)


def test_pcf_anchors():
    for w in (-3.0, 0.0, 0.4, 2.5, 9.0):
        assert pcf_d(0, w) == pytest.approx(math.exp(-w * w / 4), rel=1e-15)
    assert pcf_d(-1, 0.0) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-15)


def integral_d(k, z):
    """D_{-k}(z) = exp(-z^2/4)/(k-1)! int_0^inf t^{k-1} exp(-z t - t^2/2) dt."""
    val, _ = integrate.quad(
        lambda t: t ** (k - 1) * math.exp(-z * t - t * t / 2), 0, math.inf, epsabs=0, epsrel=1e-13
    )
    return math.exp(-z * z / 4) * val / math.factorial(k - 1)


@pytest.mark.parametrize(
    "k,z", [(2, 1.5), (1, 0.3), (3, -2.0), (5, 0.7), (7, 4.0), (12, 10.0), (20, 2.0)]
)
def test_pcf_against_integral(k, z):
    assert pcf_d(-k, z) == pytest.approx(integral_d(k, z), rel=1e-10)


@pytest.mark.parametrize("z", [-5.0, -1.0, 0.0, 0.3, 0.5, 0.51, 1.0, 2.0, 3.0, 7.0, 30.0, 300.0])
def test_pcf_against_mpmath(z):
    g = pcf_d_scaled_sequence(64, z)
    with mpmath.workdps(40):
        for k in (1, 2, 3, 10, 33, 64):
            exact = mpmath.pcfd(-k, z) * mpmath.exp(mpmath.mpf(z) ** 2 / 4)
            assert g[k] == pytest.approx(float(exact), rel=1e-12)


def test_pcf_recurrence_residual():
    for i in range(31):
        z = -5.0 + 0.5 * i
        d = {nu: pcf_d(nu, z) for nu in range(-21, 1)}
        for nu in range(-1, -21, -1):
            res = d[nu + 1] - z * d[nu] + nu * d[nu - 1]
            scale = max(abs(d[nu + 1]), abs(d[nu]), abs(d[nu - 1]))
            assert abs(res) <= 1e-10 * scale, (z, nu)


def test_pcf_unsupported_orders():
    with pytest.raises(UnsupportedOrderError):
        pcf_d(1, 0.5)
    with pytest.raises(UnsupportedOrderError):
        pcf_d(-65, 0.5)
    with pytest.raises(UnsupportedOrderError):
        pcf_d(-1.5, 0.5)
