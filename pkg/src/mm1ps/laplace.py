"""Numerical inversion of Laplace transforms with real, nonpositive singularities.

Two unrelated schemes are provided so that each can check the other:

* ``talbot`` -- trapezoid rule on a cotangent (Talbot-type) contour with the
  fixed parameters of Weideman (2006), which are tuned for double precision
  when every singularity lies on the negative real axis;
* ``euler`` -- the Abate-Whitt discretisation of the Bromwich line integral
  with Euler (binomial) summation of the alternating tail.

Both accept a ``shift``: the transform is inverted as ``F(s + shift)`` and
the result multiplied by ``exp(shift * t)``. Putting the shift at the
dominant singularity keeps the relative accuracy of exponentially small
values of ``f(t)``.
"""

from __future__ import annotations

import math
from math import comb

import numpy as np

# Weideman's optimised cotangent contour
#   s(theta) = (N/t) * (SIGMA + MU * theta * cot(ALPHA * theta) + i * NU * theta)
SIGMA = -0.6122
MU = 0.5017
ALPHA = 0.6407
NU = 0.2645

EULER_TERMS = 11


def talbot_nodes(nodes: int, t: float, scale_nodes: int | None = None):
    """Return contour points ``s_k`` and weights ``w_k`` for ``theta_k > 0``.

    ``f(t) ~ sum_k Im(w_k * exp(s_k t) * F(s_k))``. The contour geometry is set
    by ``scale_nodes`` (defaults to ``nodes``) so that a refined rule can be
    laid on the same contour.
    """
    scale = (scale_nodes or nodes) / t
    half = nodes // 2
    theta = (np.arange(half) + 0.5) * (2.0 * np.pi / nodes)
    at = ALPHA * theta
    cot = np.cos(at) / np.sin(at)
    s = scale * (SIGMA + MU * theta * cot + 1j * NU * theta)
    ds = scale * (MU * (cot - at / np.sin(at) ** 2) + 1j * NU)
    w = (2.0 / nodes) * ds
    return s, w


def talbot(transform, t: float, nodes: int = 48, shift: float = 0.0):
    """Invert ``transform`` at time ``t > 0`` on the cotangent contour.

    ``transform`` must accept a complex ndarray. Returns ``(value, err)``
    where ``value`` uses ``2 * nodes`` points and ``err`` is its difference
    from the ``nodes``-point rule on the same contour.
    """
    vals = []
    for n in (nodes, 2 * nodes):
        s, w = talbot_nodes(n, t, scale_nodes=nodes)
        f = transform(s + shift)
        vals.append(float(np.sum((w * np.exp(s * t) * f).imag)))
    return _rescale(vals[1], shift * t), _rescale(abs(vals[1] - vals[0]), shift * t)


def _rescale(v, log_g):
    # v * exp(log_g) without overflowing the exponential on its own
    if v == 0.0 or not math.isfinite(v):
        return v * math.exp(min(log_g, 700.0))
    return math.copysign(math.exp(math.log(abs(v)) + log_g), v)


def _euler_once(transform, t, n, a, shift):
    k = np.arange(n + EULER_TERMS + 1)
    s = (a + 2j * np.pi * k) / (2.0 * t)
    f = transform(s + shift).real
    terms = np.where(k % 2 == 0, 1.0, -1.0) * f
    terms[0] *= 0.5
    partial = np.cumsum(terms)[n:]
    weights = np.array([comb(EULER_TERMS, j) for j in range(EULER_TERMS + 1)]) / 2.0**EULER_TERMS
    return math.exp(a / 2.0) / t * float(np.dot(weights, partial))


def euler(transform, t: float, nodes: int = 48, shift: float = 0.0, tolerance: float = 1e-9):
    """Abate-Whitt inversion on a vertical line ``Re(s) = shift + A/(2t)``.

    The aliasing error is about ``exp(-A)`` relative to the (shifted)
    function, so ``A`` is chosen from ``tolerance``. Returns ``(value, err)``
    with ``err`` from comparing ``nodes`` and ``2 * nodes`` partial sums.
    """
    a = max(18.4, math.log(1.0 / tolerance) + 2.0)
    v1 = _euler_once(transform, t, nodes, a, shift)
    v2 = _euler_once(transform, t, 2 * nodes, a, shift)
    # truncation (doubling) plus aliasing error
    return _rescale(v2, shift * t), _rescale(abs(v2 - v1) + math.exp(-a) * abs(v2), shift * t)
