"""Special functions used by the density formulas.

Modified Bessel functions I0 and I1 (plus exponentially scaled variants),
the complementary error function, and parabolic cylinder functions
D_nu(z) at nonpositive integer order.
"""

from __future__ import annotations

import math

from scipy.special import erfcx as _erfcx

from .model import DomainError, UnsupportedOrderError

__all__ = [
    "bessel_i0",
    "bessel_i1",
    "bessel_i0e",
    "bessel_i1e",
    "erfc",
    "erfcx",
    "pcf_d",
    "pcf_d_scaled_sequence",
    "MAX_PCF_ORDER",
]

# Power series below this argument, large-argument expansion above it.
BESSEL_SERIES_MAX = 15.0
MAX_PCF_ORDER = 64
# Forward (downward-in-order) recurrence is stable only for small positive z.
_PCF_FORWARD_MAX_Z = 0.5
_SQRT_HALF_PI = math.sqrt(0.5 * math.pi)


def _check_finite(z, name="argument"):
    z = float(z)
    if not math.isfinite(z):
        raise DomainError(f"{name} must be finite, got {z}")
    return z


def _bessel_series(nu, z):
    # sum_k (z/2)^(2k+nu) / (k! (k+nu)!); all terms positive
    half = 0.5 * z
    q = half * half
    term = 1.0 if nu == 0 else half
    total = term
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu))
        total += term
        if term <= 1e-17 * total:
            return total


def _bessel_asymptotic_scaled(nu, z):
    # e^{-z} I_nu(z) ~ (2 pi z)^{-1/2} sum_k (-1)^k a_k(nu) / z^k, truncated
    # at the smallest term.
    mu = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    k = 0
    while k < 60:
        k += 1
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total / math.sqrt(2.0 * math.pi * z)


def bessel_i0e(z: float) -> float:
    """Exponentially scaled I0: ``exp(-|z|) * I0(z)``."""
    z = abs(_check_finite(z))
    if z <= BESSEL_SERIES_MAX:
        return _bessel_series(0, z) * math.exp(-z)
    return _bessel_asymptotic_scaled(0, z)


def bessel_i1e(z: float) -> float:
    """Exponentially scaled I1: ``exp(-|z|) * I1(z)``."""
    z = _check_finite(z)
    sign = -1.0 if z < 0 else 1.0
    z = abs(z)
    if z <= BESSEL_SERIES_MAX:
        return sign * _bessel_series(1, z) * math.exp(-z)
    return sign * _bessel_asymptotic_scaled(1, z)


def bessel_i0(z: float) -> float:
    """Modified Bessel function of the first kind, order zero."""
    z = abs(_check_finite(z))
    if z <= BESSEL_SERIES_MAX:
        return _bessel_series(0, z)
    return _bessel_asymptotic_scaled(0, z) * math.exp(z)


def bessel_i1(z: float) -> float:
    """Modified Bessel function of the first kind, order one."""
    z = _check_finite(z)
    a = abs(z)
    if a <= BESSEL_SERIES_MAX:
        v = _bessel_series(1, a)
    else:
        v = _bessel_asymptotic_scaled(1, a) * math.exp(a)
    return -v if z < 0 else v


def erfc(z: float) -> float:
    """Complementary error function ``2/sqrt(pi) * int_z^inf exp(-t^2) dt``."""
    return math.erfc(_check_finite(z))


def erfcx(z: float) -> float:
    """Scaled complementary error function ``exp(z^2) * erfc(z)``."""
    return float(_erfcx(_check_finite(z)))


def pcf_d_scaled_sequence(kmax: int, z: float) -> list[float]:
    """Return ``[g_0, g_1, ..., g_kmax]`` with ``g_k = exp(z^2/4) * D_{-k}(z)``.

    The scaling removes the Gaussian factor so that large ``z`` neither
    underflows nor overflows. The sequence satisfies the same three-term
    recurrence as D itself:
    ``g_{k+1} = (g_{k-1} - z g_k) / k``.

    For ``z <= 0.5`` the recurrence is run forward from the closed forms
    ``g_0 = 1``, ``g_1 = sqrt(pi/2) erfcx(z/sqrt 2)``. For larger ``z`` the
    wanted solution is minimal in that direction, so Miller's backward
    algorithm is used instead, normalised by ``g_0 = 1``.
    """
    kmax = int(kmax)
    if kmax < 0 or kmax > MAX_PCF_ORDER:
        raise UnsupportedOrderError(
            f"order must lie in [-{MAX_PCF_ORDER}, 0], got {-kmax}"
        )
    z = _check_finite(z)
    if z <= _PCF_FORWARD_MAX_Z:
        g = [1.0, _SQRT_HALF_PI * erfcx(z / math.sqrt(2.0))]
        for k in range(1, kmax):
            g.append((g[k - 1] - z * g[k]) / k)
        return g[: kmax + 1]

    start = max(kmax + 40, int(math.ceil((math.sqrt(kmax) + 20.0 / z) ** 2)))
    seq = [0.0] * (start + 2)
    seq[start] = 1e-300
    for k in range(start, 0, -1):
        seq[k - 1] = z * seq[k] + k * seq[k + 1]
        if seq[k - 1] > 1e250:
            for i in range(k - 1, start + 2):
                seq[i] *= 1e-250
    scale = 1.0 / seq[0]
    return [v * scale for v in seq[: kmax + 1]]


def pcf_d(order: int, z: float) -> float:
    """Parabolic cylinder function D_order(z) for integer order in [-64, 0]."""
    if int(order) != order:
        raise UnsupportedOrderError(f"only integer orders are supported, got {order}")
    order = int(order)
    if order > 0 or order < -MAX_PCF_ORDER:
        raise UnsupportedOrderError(
            f"order must lie in [-{MAX_PCF_ORDER}, 0], got {order}"
        )
    z = _check_finite(z)
    g = pcf_d_scaled_sequence(-order, z)[-order]
    e = -0.25 * z * z
    if g == 0.0:
        return 0.0
    # combine in log space so that exp(-z^2/4) * g does not underflow early
    return math.copysign(math.exp(e + math.log(abs(g))), g)
