"""Asymptotic approximations of ``p(t|x)`` for fixed ``rho < 1``.

Four regimes in the ``(x, t)`` plane, plus the formula bridging the last
two and the tail of the unconditional density:

* ``regime1_bessel``    -- ``x -> inf`` with ``x (t - x) = O(1)``;
* ``regime2_saddle``    -- ``x, t -> inf`` with ``1 < t/x < inf`` (real saddle point);
* ``regime3_series``    -- ``x -> inf`` with ``a = t/x^2 = O(1)`` (theta-type series);
* ``regime4_spectral``  -- ``x = O(1)``, ``t -> inf`` (dominant pole);
* ``matching_formula``  -- overlap of regimes 3 and 4;
* ``flatto_tail``       -- ``p(t) ~ C_* t^{-5/6} exp(-A t - B t^{1/3})``.
"""

from __future__ import annotations

import decimal
import math
from dataclasses import dataclass

from .model import ConvergenceError, DensityValue, DomainError, ModelParams
from .singularities import dominant_singularity, r_star_large_x
from .specfun import bessel_i1e

_MAX_TERMS = 200
_SQRT_PI = math.sqrt(math.pi)


def _exp(log_val):
    # asymptotic forms evaluated outside their regime can exceed the float range
    return math.exp(min(log_val, 709.0))


def _check_tx(t, x):
    t, x = float(t), float(x)
    if not (math.isfinite(t) and math.isfinite(x) and x > 0):
        raise DomainError(f"need finite t and x > 0, got t={t}, x={x}")
    if t <= x:
        raise DomainError(f"asymptotic forms require t > x, got t={t}, x={x}")
    return t, x


def regime1_bessel(t: float, x: float, params: ModelParams) -> DensityValue:
    """Bessel form ``(1-rho) sqrt(rho x/(t-x)) e^{-rho x} I1(2 sqrt(rho x (t-x)))``."""
    t, x = _check_tx(t, x)
    rho = params.rho
    z = 2.0 * math.sqrt(rho * x * (t - x))
    # I1(z) = e^z * i1e(z); fold e^z into the exponent
    log_val = math.log1p(-rho) + 0.5 * math.log(rho * x / (t - x)) - rho * x + z
    log_val += math.log(bessel_i1e(z))
    return DensityValue(_exp(log_val), regime="T1-case1", extra={"log_value": log_val})


@dataclass(frozen=True)
class SaddleData:
    """Real saddle point of ``x phi(s) = s (t - x) + rho x r(s)``."""

    s0: float
    r_s0: float
    phase: float  # x * phi(s0)
    curvature: float  # phi''(s0)


def saddle_data(t: float, x: float, params: ModelParams) -> SaddleData:
    t, x = _check_tx(t, x)
    rho, rs = params.rho, params.sqrt_rho
    root = math.sqrt(t * (t - x))
    s0 = -1.0 - rho + rs * (2.0 * t - x) / root
    r0 = math.sqrt((t - x) / (rho * t))
    phase = (x - t) * (1.0 + rho) + 2.0 * rs * root
    curv = 2.0 * t**1.5 * (t - x) ** 1.5 / (rs * x**3)
    return SaddleData(s0, r0, phase, curv)


def regime2_saddle(t: float, x: float, params: ModelParams) -> DensityValue:
    """Laplace-method approximation about the real saddle ``s0(t/x)``."""
    t, x = _check_tx(t, x)
    rho, rs = params.rho, params.sqrt_rho
    u = t / x
    log_val = (
        math.log1p(-rho)
        + 0.25 * math.log(rho)
        + 2.0 * t * math.sqrt(rho * (1.0 - x / t))
        - (1.0 + rho) * t
        + x
        - math.log(2.0 * _SQRT_PI * math.sqrt(x))
        - 0.75 * math.log(u * (u - 1.0))
        - 2.0 * math.log(math.sqrt(u) - rs * math.sqrt(u - 1.0))
    )
    sd = saddle_data(t, x, params)
    return DensityValue(_exp(log_val), regime="T1-case2", extra={"saddle": sd, "log_value": log_val})


def regime2_from_saddle(t: float, x: float, params: ModelParams) -> float:
    """The same approximation assembled from :class:`SaddleData` (cross-check)."""
    sd = saddle_data(t, x, params)
    rho = params.rho
    log_val = (
        math.log1p(-rho)
        - rho * x
        + math.log(1.0 - rho * sd.r_s0**2)
        + sd.phase
        - 0.5 * math.log(2.0 * math.pi)
        - 2.0 * math.log(1.0 - rho * sd.r_s0)
        - 0.5 * math.log(x * sd.curvature)
    )
    return _exp(log_val)


def gaussian_approx(t: float, x: float, params: ModelParams) -> float:
    """Gaussian simplification of regime 2 about the mean ``x / (1 - rho)``."""
    rho = params.rho
    eps = 1.0 - rho
    pref = eps**1.5 / (2.0 * math.sqrt(rho * math.pi * x))
    return pref * math.exp(-(eps**3) / (4.0 * rho * x) * (t - x / eps) ** 2)


def _direct_sum(a, rs):
    """Odd-image sum, exact enough to survive its own cancellation.

    For large ``a`` the terms are O(1) while the sum is of order
    ``exp(-pi^2 a / sqrt(rho))``, so it is carried out in decimal arithmetic
    with that many extra digits. Returns ``(sign, log|sum|, terms)``.
    """
    lost = math.pi**2 * a / rs / math.log(10.0)
    with decimal.localcontext() as ctx:
        ctx.prec = 30 + int(math.ceil(lost))
        b, aa = decimal.Decimal(rs), decimal.Decimal(a)
        four_a = 4 * aa
        total = decimal.Decimal(0)
        for n in range(_MAX_TERMS):
            m2 = (2 * n + 1) ** 2
            term = (-(m2 * b) / four_a).exp() * (m2 * b - 2 * aa)
            total += term
            if n > 0 and abs(term) < decimal.Decimal("1e-14") * abs(total):
                break
        else:
            raise ConvergenceError(f"direct series did not converge in {_MAX_TERMS} terms (a={a})")
        if total == 0:
            raise ConvergenceError(f"direct series cancelled to zero (a={a})")
        return (1 if total > 0 else -1), float(abs(total).ln()), n + 1


def _poisson_sum(a, rs):
    """Dual sum ``sum_m (-1)^{m+1} m^2 exp(-pi^2 m^2 a / sqrt(rho))`` in log form."""
    c = math.pi**2 * a / rs
    # factor out the m = 1 term so nothing underflows
    total = 1.0
    for m in range(2, _MAX_TERMS + 2):
        term = (-1) ** (m + 1) * m * m * math.exp(-c * (m * m - 1))
        total += term
        if abs(term) < 1e-14 * abs(total):
            break
    else:
        raise ConvergenceError(f"dual series did not converge in {_MAX_TERMS} terms (a={a})")
    if total == 0:
        raise ConvergenceError(f"dual series cancelled to zero (a={a})")
    return (1 if total > 0 else -1), -c + math.log(abs(total)), m - 1


def regime3_series(t: float, x: float, params: ModelParams, form: str | None = None) -> DensityValue:
    """Theta-series approximation for ``a = t / x^2 = O(1)``.

    ``form="direct"`` sums over odd images, ``"poisson"`` over the dual
    modes; ``None`` picks the faster one (direct for ``a < 1/sqrt(rho)``).
    The log of the value is in ``extra["log_value"]`` since the density
    itself underflows for moderately large ``t``.
    """
    t, x = float(t), float(x)
    if not (x > 0 and t > 0 and math.isfinite(t) and math.isfinite(x)):
        raise DomainError(f"need t > 0 and x > 0, got t={t}, x={x}")
    a = t / (x * x)
    rs = params.sqrt_rho
    if form is None:
        form = "direct" if a < 1.0 / rs else "poisson"
    log_common = -((1.0 - rs) ** 2) * t + (1.0 - rs) * x
    if form == "direct":
        sign, log_s, terms = _direct_sum(a, rs)
        log_pref = math.log((1.0 + rs) / (2.0 * _SQRT_PI * params.rho**0.25 * (1.0 - rs))) - 2.5 * math.log(a)
    elif form == "poisson":
        sign, log_s, terms = _poisson_sum(a, rs)
        log_pref = math.log(2.0 * math.pi**2 * (1.0 + rs) / (params.rho * (1.0 - rs)))
    else:
        raise DomainError(f"form must be 'direct' or 'poisson', got {form!r}")
    log_val = log_pref - 3.0 * math.log(x) + log_s + log_common
    return DensityValue(
        sign * _exp(log_val),
        regime="T1-case3",
        extra={"form": form, "a": a, "terms": terms, "log_value": log_val},
    )


def regime4_spectral(t: float, x: float, params: ModelParams) -> DensityValue:
    """Single dominant-pole term ``F(x) exp(r_*(x) t)``."""
    t, x = float(t), float(x)
    if not (x > 0 and t > 0):
        raise DomainError(f"need t > 0 and x > 0, got t={t}, x={x}")
    sing = dominant_singularity(x, params)
    log_val = sing.log_f_amp + sing.r_star * t
    return DensityValue(
        _exp(log_val),
        regime="T1-case4",
        extra={"r_star": sing.r_star, "F": sing.f_amp, "branch": sing.branch, "log_value": log_val},
    )


def matching_formula(t: float, x: float, params: ModelParams) -> DensityValue:
    """Regime 4 with ``F`` and ``r_*`` replaced by their large-``x`` forms."""
    t, x = float(t), float(x)
    if not (x > 0 and t > 0):
        raise DomainError(f"need t > 0 and x > 0, got t={t}, x={x}")
    rs, rho = params.sqrt_rho, params.rho
    pref = 2.0 * math.pi**2 * (1.0 + rs) / (rho * (1.0 - rs) * x**3)
    log_val = math.log(pref) + (1.0 - rs) * x + r_star_large_x(x, params) * t
    return DensityValue(_exp(log_val), regime="T1-match", extra={"log_value": log_val})


@dataclass(frozen=True)
class TailConstants:
    """Constants of ``p(t) ~ C_* t^{-5/6} exp(-A t - B t^{1/3})``.

    ``C_*`` grows like ``e^{4/(1-rho)}``, so it is stored as a logarithm;
    the properties return ``inf`` once it leaves the float range.
    """

    rho: float
    A: float
    B: float
    log_C_star: float

    @property
    def C_star(self) -> float:
        return _exp_or_inf(self.log_C_star)

    @property
    def log_ros_factor(self) -> float:
        return math.log(self.A) + self.log_C_star - math.log(self.rho)

    @property
    def ros_factor(self) -> float:
        """Alternative prefactor ``A C_* / rho`` (see :func:`flatto_tail`)."""
        return _exp_or_inf(self.log_ros_factor)


def _exp_or_inf(v):
    return math.exp(v) if v < 709.0 else math.inf


def tail_constants(params: ModelParams) -> TailConstants:
    rho, rs = params.rho, params.sqrt_rho
    A = (1.0 - rs) ** 2
    B = 3.0 * (math.pi / 2.0) ** (2.0 / 3.0) * rho ** (1.0 / 6.0)
    g = (1.0 + rs) / (1.0 - rs)
    log_C = (
        2.0 / 3.0 * math.log(2.0) - 0.5 * math.log(3.0) + 5.0 / 6.0 * math.log(math.pi)
        - 5.0 / 12.0 * math.log(rho) + math.log(g) + g
    )
    return TailConstants(rho, A, B, log_C)


def flatto_tail(t: float, params: ModelParams, prefactor: str = "C_star"):
    """Large-``t`` unconditional density ``pref * t^{-5/6} exp(-A t - B t^{1/3})``.

    ``prefactor="C_star"`` (default) uses ``C_*``; ``"ros"`` uses
    ``A C_* / rho``. Numerically the ``C_*`` form is the one the exact
    density approaches. Returns ``(TailConstants, value)``.
    """
    t = float(t)
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    tc = tail_constants(params)
    if prefactor == "C_star":
        log_pref = tc.log_C_star
    elif prefactor == "ros":
        log_pref = tc.log_ros_factor
    else:
        raise DomainError(f"prefactor must be 'C_star' or 'ros', got {prefactor!r}")
    return tc, _exp(log_pref - 5.0 / 6.0 * math.log(t) - tc.A * t - tc.B * t ** (1.0 / 3.0))


# -- regime selection ----------------------------------------------------------------

LARGE_X = 30.0
LARGE_T_FACTOR = 30.0
CASE1_MAX_PRODUCT = 50.0
CASE3_MIN_A = 0.05


def classify_regime(t: float, x: float, params: ModelParams) -> str:
    """Pick the asymptotic regime for ``(t, x)``; ``"exact"`` when none applies.

    ``x >= LARGE_X`` counts as large ``x``, ``t >= LARGE_T_FACTOR * max(1, x)``
    as large ``t``.
    """
    t, x = _check_tx(t, x)
    if x >= LARGE_X:
        if x * (t - x) <= CASE1_MAX_PRODUCT / params.rho:
            return "T1-case1"
        if t / (x * x) >= CASE3_MIN_A:
            return "T1-case3"
        return "T1-case2"
    if t >= LARGE_T_FACTOR * max(1.0, x):
        return "T1-case4"
    return "exact"


EVALUATORS = {
    "T1-case1": regime1_bessel,
    "T1-case2": regime2_saddle,
    "T1-case3": regime3_series,
    "T1-case4": regime4_spectral,
    "T1-match": matching_formula,
}
