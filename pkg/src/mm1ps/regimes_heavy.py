"""Heavy-traffic approximations of ``p(t|x)`` for ``rho = 1 - eps``, ``eps -> 0``.

Scales: ``t = T/eps``, ``x = X/eps``, ``x = Z/sqrt(eps)``, ``T = Theta/eps``,
``Theta = sigma/eps`` (so ``t = sigma/eps^3``). Six cases in ``(x, t)``:

1. ``x, t = O(1)``: numerical inversion of the ``eps``-leading transform;
2. ``x = O(1)``, ``T = O(1)``: exponential in ``T/x`` plus an ``eps^2`` correction;
3. ``t - x = O(eps)`` on the ``X`` scale: Bessel form;
4. ``1 < T/X < inf``: saddle point;
5. ``x = O(eps^{-1/2})``: theta series (direct or Poisson-dual form);
6. ``T = O(eps^{-1})``: contour integral, parabolic cylinder series, or
   spectral sum over the roots ``v_n(X)``.

Also the single-mode formula on the ``sigma`` scale, the unconditional
density on that scale and its large-``sigma`` tail constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from . import laplace
from .exact import MIN_WAIT, delay_sum
from .model import ConvergenceError, DensityValue, DomainError, InversionConfig, SolverError
from .singularities import heavy_roots, k_of_X, psi_from_sigma
from .specfun import bessel_i1e, erfcx, pcf_d_scaled_sequence

_DEFAULT_CFG = InversionConfig()
_SQRT_PI = math.sqrt(math.pi)
_MAX_TERMS = 200
PCF_MAX_N = 30
SPECTRAL_MAX_MODES = 400


def _check_eps(eps):
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    return eps


def _positive(name, value):
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be positive and finite, got {value}")
    return value


@dataclass(frozen=True)
class HeavyScales:
    """All heavy-traffic scalings of one ``(t, x, eps)`` point."""

    t: float
    x: float
    eps: float
    T: float
    X: float
    Z: float
    Theta: float
    sigma: float
    T_star: float

    @classmethod
    def from_tx(cls, t: float, x: float, eps: float) -> "HeavyScales":
        eps = _check_eps(eps)
        t, x = float(t), float(x)
        if t < 0 or x < 0:
            raise DomainError(f"t and x must be nonnegative, got t={t}, x={x}")
        T, X = eps * t, eps * x
        Theta = eps * T
        return cls(t, x, eps, T, X, X / math.sqrt(eps), Theta, eps * Theta, (T - X) / eps**2)

    def to_tx(self) -> tuple[float, float]:
        return self.T / self.eps, self.X / self.eps


# -- case 1 --------------------------------------------------------------------------


def ht_case1(t: float, x: float, eps: float, cfg: InversionConfig = _DEFAULT_CFG) -> DensityValue:
    """Invert the ``eps``-leading transform (the ``rho -> 1`` limit times ``eps``).

    Same delayed-term structure as the exact transform: atoms of mass
    ``eps e^{-(2k+1) x}`` at ``t = (k+1) x`` are removed and reported in
    ``extra["atom_mass"]`` (``k = 0``).
    """
    eps = _check_eps(eps)
    t, x = float(t), _positive("x", x)
    w = t - x
    if not w > 0:
        raise DomainError(f"need t > x, got t={t}, x={x}")
    w = max(w, MIN_WAIT)
    nodes = cfg.nodes
    while True:
        v, e, _ = delay_sum(w, x, 1.0, nodes, eps)
        if e <= cfg.tolerance * abs(v) or nodes >= 8 * cfg.nodes:
            break
        nodes *= 2
    if not math.isfinite(v) or e > max(cfg.tolerance * abs(v), 1e-300):
        raise ConvergenceError(f"case-1 inversion failed at t={t}, x={x}: err {e:.3g}", estimates=(v, e))
    return DensityValue(v, regime="T2-case1", err_est=e, extra={"atom_mass": eps * math.exp(-x)})


# -- cases 2 to 5 --------------------------------------------------------------------


def ht_case2(T: float, x: float, eps: float) -> DensityValue:
    """Exponential law in ``T / x`` with its ``eps^2`` correction.

    The ``delta(T)`` part of the correction is not a density; its weight
    ``-(x + 3) eps^2 / 6`` is reported in ``extra["mass_deficit"]``.
    """
    eps = _check_eps(eps)
    T, x = _positive("T", T), _positive("x", x)
    e = math.exp(-T / x)
    lead = eps / x * e
    corr = (x + 3.0) / 6.0 * (2.0 * x - T) / (x * x) * e * eps**2
    return DensityValue(
        lead + corr,
        regime="T2-case2",
        extra={"leading": lead, "mass_deficit": -(x + 3.0) * eps**2 / 6.0},
    )


def ht_case3(X: float, T_star: float, eps: float) -> DensityValue:
    """Bessel form for ``t - x = O(eps)`` with ``x = X / eps``."""
    eps = _check_eps(eps)
    X, T_star = _positive("X", X), _positive("T_star", T_star)
    z = 2.0 * math.sqrt(X * T_star)
    log_val = -X / eps + X + 0.5 * math.log(X / T_star) + z + math.log(bessel_i1e(z))
    return DensityValue(math.exp(log_val), regime="T2-case3", extra={"log_value": log_val})


def ht_case4(T: float, X: float, eps: float) -> DensityValue:
    """Saddle-point form for ``1 < T/X < inf``."""
    eps = _check_eps(eps)
    T, X = _positive("T", T), _positive("X", X)
    if T <= X:
        raise DomainError(f"need T > X, got T={T}, X={X}")
    root = math.sqrt(T * (T - X))
    log_val = (
        1.5 * math.log(eps)
        + 2.0 * math.log(math.sqrt(T) + math.sqrt(T - X))
        - math.log(2.0 * _SQRT_PI)
        - 0.75 * math.log(T * (T - X))
        + T
        - root
        + (2.0 * root + X - 2.0 * T) / eps
    )
    return DensityValue(math.exp(log_val), regime="T2-case4", extra={"log_value": log_val})


def ht_case5(T: float, Z: float, eps: float, form: str = "direct") -> DensityValue:
    """Theta series for ``x = Z / sqrt(eps)``.

    ``form="direct"`` sums the odd images; ``"poisson"`` the dual form
    ``eps^{3/2}/Z [1 + 2 sum (-1)^n exp(-n^2 pi^2 T / Z^2)]``.
    """
    eps = _check_eps(eps)
    T, Z = _positive("T", T), _positive("Z", Z)
    total = 0.0
    if form == "direct":
        c = Z * Z / (4.0 * T)
        for n in range(_MAX_TERMS):
            term = math.exp(-((2 * n + 1) ** 2) * c)
            total += term
            if term < 1e-14 * total:
                break
        value = 2.0 * eps**1.5 / math.sqrt(math.pi * T) * total
    elif form == "poisson":
        c = math.pi**2 * T / (Z * Z)
        total = 1.0
        for n in range(1, _MAX_TERMS):
            term = 2.0 * (-1) ** n * math.exp(-n * n * c)
            total += term
            if abs(term) < 1e-14 * abs(total):
                break
        value = eps**1.5 / Z * total
    else:
        raise DomainError(f"form must be 'direct' or 'poisson', got {form!r}")
    return DensityValue(value, regime="T2-case5", extra={"form": form})


# -- case 6 --------------------------------------------------------------------------


def _case6_kernel(xi, X):
    rt = np.sqrt(xi)
    e2 = np.exp(-2.0 * rt * X)
    return rt * np.exp(-rt * X) / ((1.0 + 2.0 * rt) ** 2 - (1.0 - 2.0 * rt) ** 2 * e2)


def _case6_integral(Theta, X, eps, nodes=48, tol=1e-10):
    # the kernel is even in sqrt(xi), hence single valued; its poles are
    # at xi = -v_n^2, so a Talbot contour about xi = -v_1^2 applies. For
    # large X / Theta the contour is moved out to the saddle of
    # exp(xi Theta - X sqrt(xi)).
    v1 = heavy_roots(X, 1)[0]
    shift = -v1 * v1 + X * X / (4.0 * Theta * Theta)
    n = nodes
    while True:
        val, err = laplace.talbot(lambda s: _case6_kernel(s, X), Theta, nodes=n, shift=shift)
        if err <= tol * abs(val) or n >= 8 * nodes:
            break
        n *= 2
    if err > 1e-6 * abs(val):
        raise ConvergenceError(f"case-6 integral form did not converge (Theta={Theta}, X={X})", estimates=(val, err))
    pref = 8.0 * eps**2 * math.exp(X / 2.0 - Theta / 4.0)
    return pref * val, pref * err


def _case6_pcf_term(n, Theta, X):
    """``n``-th outer term of the parabolic cylinder series, without ``eps^2``."""
    r2t = math.sqrt(2.0 * Theta)
    z = ((2 * n + 1) * X + Theta) / r2t
    g = pcf_d_scaled_sequence(2 * n + 2, z)  # g[k] = D_{-k}(z) e^{z^2/4}
    inner = 0.0
    for l in range(2 * n + 1):
        bracket = 4.0 / r2t * g[l] - 4.0 * g[l + 1] + r2t * g[l + 2]
        inner += (-1) ** l * comb(2 * n, l) * (2.0 * Theta) ** (l / 2.0) * bracket
    # e^{(n+1) X} e^{-z^2/4} D(z) = e^{(n+1) X - z^2/2} g
    return math.exp((n + 1) * X - z * z / 2.0) * inner / math.sqrt(2.0 * math.pi)


def _case6_pcf(Theta, X, eps):
    total = 0.0
    for n in range(PCF_MAX_N + 1):
        term = _case6_pcf_term(n, Theta, X)
        total += term
        if n > 0 and abs(term) < 1e-14 * abs(total):
            return eps**2 * total, eps**2 * abs(term)
    raise ConvergenceError(f"parabolic cylinder series needs more than {PCF_MAX_N} terms (Theta={Theta}, X={X})")


def f_tilde(X: float, v: float) -> float:
    """Residue weight of the mode ``v`` in the spectral sum."""
    q = 4.0 * v * v
    num = 8.0 * v * v * ((q - 1.0) * math.cos(X * v) + 4.0 * v * math.sin(X * v))
    return num / ((q + 1.0) * ((q + 1.0) * X + 4.0)) * math.exp(X / 2.0)


def r_tilde(v: float, eps: float, corrected: bool = True) -> float:
    """Decay rate ``-(v^2 + 1/4)(1 + eps/2)``; leading term only if not ``corrected``."""
    base = -(v * v + 0.25)
    return base * (1.0 + eps / 2.0) if corrected else base


def _case6_spectral(Theta, X, eps, corrected):
    total = 0.0
    count = 16
    while True:
        roots = heavy_roots(X, count)
        total = 0.0
        last = None
        for v in roots:
            last = f_tilde(X, v) * math.exp(r_tilde(v, eps, corrected) * Theta)
            total += last
            # |F~| grows like a constant in v while the exponent decays
            if abs(last) < 1e-16 * abs(total) and math.exp(r_tilde(v, eps, corrected) * Theta) < 1e-16:
                return eps**2 * total, eps**2 * abs(last)
        if count >= SPECTRAL_MAX_MODES:
            raise ConvergenceError(f"spectral sum needs more than {SPECTRAL_MAX_MODES} modes (Theta={Theta}, X={X})")
        count = min(2 * count, SPECTRAL_MAX_MODES)


def ht_case6(
    Theta: float, X: float, eps: float, form: str = "integral", corrected: bool = True
) -> DensityValue:
    """Density on the ``T = Theta / eps`` scale in one of three forms.

    ``form`` is ``"integral"`` (contour integral), ``"pcf_series"``
    (parabolic cylinder functions) or ``"spectral"`` (sum over the roots
    ``v_n(X)``). ``corrected`` toggles the ``O(eps)`` term of the spectral
    decay rate; the other two forms are leading order only.
    """
    eps = _check_eps(eps)
    Theta, X = _positive("Theta", Theta), _positive("X", X)
    if form == "integral":
        val, err = _case6_integral(Theta, X, eps)
    elif form == "pcf_series":
        val, err = _case6_pcf(Theta, X, eps)
    elif form == "spectral":
        val, err = _case6_spectral(Theta, X, eps, corrected)
    else:
        raise DomainError(f"unknown case-6 form {form!r}")
    return DensityValue(val, regime=f"T2-case6-{form}", err_est=err)


def case6_first_image(Theta: float, X: float) -> float:
    """Closed form of the ``n = 0`` image integral of the case-6 kernel.

    ``(1/2 pi i) int e^{xi Theta} sqrt(xi) e^{-X sqrt(xi)} / (1 + 2 sqrt(xi))^2 d xi``.
    """
    Theta, X = _positive("Theta", Theta), _positive("X", X)
    g = math.exp(-X * X / (4.0 * Theta))
    # e^{X/2 + Theta/4} erfc((X + Theta) / (2 sqrt Theta)) written to avoid overflow
    arg = (X + Theta) / (2.0 * math.sqrt(Theta))
    tail = g * erfcx(arg)
    return (
        g / (4.0 * math.sqrt(math.pi * Theta))
        + math.sqrt(Theta) / (8.0 * _SQRT_PI) * g
        - (4.0 + X + Theta) / 16.0 * tail
    )


def case6_large_X(Theta: float, X: float, eps: float) -> float:
    """Single-image limit ``2 eps^2 / sqrt(pi Theta) e^{X/2 - Theta/4 - X^2/(4 Theta)}``."""
    eps = _check_eps(eps)
    return 2.0 * eps**2 / math.sqrt(math.pi * Theta) * math.exp(X / 2.0 - Theta / 4.0 - X * X / (4.0 * Theta))


def ht_sigma_scale(sigma: float, X: float, eps: float) -> DensityValue:
    """Single-mode formula on the ``Theta = sigma / eps`` scale."""
    eps = _check_eps(eps)
    sigma, X = _positive("sigma", sigma), _positive("X", X)
    v1 = heavy_roots(X, 1)[0]
    log_val = 2.0 * math.log(eps) + math.log(f_tilde(X, v1)) + r_tilde(v1, eps) * sigma / eps
    return DensityValue(
        math.exp(log_val), regime="T2-sigma", extra={"v1": v1, "log_value": log_val}
    )


# -- unconditional density on the sigma scale ----------------------------------------


def morrison_f0(psi: float, sigma: float) -> float:
    return 2.0 * psi * math.tan(psi / 2.0) + sigma / (4.0 * math.sin(psi / 2.0) ** 2)


def morrison_f1(psi: float, sigma: float) -> float:
    return -psi * math.tan(psi / 2.0) + sigma / (8.0 * math.sin(psi / 2.0) ** 2)


def morrison_f0_second(psi: float) -> float:
    """``d^2 F_0 / d psi^2`` at fixed ``sigma``, at the stationary point ``sigma(psi)``."""
    h = psi / 2.0
    c4 = math.cos(h) ** 4
    return (3.0 / math.tan(h) * (psi + math.sin(psi)) + 4.0 * c4) / (2.0 * c4)


def morrison_density(sigma: float, eps: float) -> float:
    """Unconditional density at ``t = sigma / eps^3`` (Laplace method in ``X``)."""
    return math.exp(morrison_log_density(sigma, eps))


def morrison_log_density(sigma: float, eps: float) -> float:
    """Natural log of :func:`morrison_density`."""
    eps = _check_eps(eps)
    sigma = _positive("sigma", sigma)
    pt = psi_from_sigma(sigma)
    psi = pt.psi
    log_val = (
        0.5 * math.log(2.0 * math.pi)
        + 1.5 * math.log(eps)
        - math.log(math.tan(psi / 2.0))
        - 0.5 * math.log(morrison_f0_second(psi))
        - morrison_f0(psi, sigma) / eps
        - morrison_f1(psi, sigma)
    )
    return log_val


def morrison_log_density_direct(sigma: float, eps: float) -> float:
    """Log of the same Laplace approximation, assembled in the ``X`` variable.

    Locates ``X~`` from ``k(X) = sigma`` using the root solver for ``v_1(X)``
    and takes ``Phi''`` by implicit differentiation; independent of the
    ``psi`` parametrization.
    """
    eps = _check_eps(eps)
    sigma = _positive("sigma", sigma)
    from scipy.optimize import brentq

    lo, hi = 1e-3, 1.0
    while k_of_X(lo) > sigma:
        lo /= 4.0
    while k_of_X(hi) < sigma:
        hi *= 2.0
        if hi > 1e6:
            raise SolverError(f"could not bracket k(X) = {sigma}", bracket=(lo, hi))
    X = brentq(lambda z: k_of_X(z) - sigma, lo, hi, xtol=1e-15, rtol=1e-15)
    v = heavy_roots(X, 1)[0]
    g = 1.0 + 4.0 * v * v
    D = g * X + 4.0
    dv = -g * v / D
    dN = -dv * (8.0 * v * v + g)
    dD = 8.0 * v * dv * X + g
    d2v = (dN * D - (-g * v) * dD) / (D * D)
    phi = -X - (v * v + 0.25) * sigma
    phi2 = -2.0 * sigma * (dv * dv + v * d2v)
    log_val = (
        0.5 * math.log(2.0 * math.pi)
        + 1.5 * math.log(eps)
        - 0.5 * math.log(-phi2)
        + math.log(f_tilde(X, v))
        - (v * v + 0.25) * sigma / 2.0
        + phi / eps
    )
    return log_val


@dataclass(frozen=True)
class MorrisonTail:
    """Constants of ``Pr[V > t] ~ alpha* exp(-beta* t - gamma* t^{1/3}) / t^{5/6}``.

    ``beta_star`` keeps the sign of the closed form, which is negative; the
    decay rate actually seen in the tail is ``decay_rate = |beta_star|``.
    """

    alpha_star: float
    beta_star: float
    gamma_star: float
    log_alpha_star: float

    @property
    def decay_rate(self) -> float:
        return -self.beta_star

    def tail_probability(self, t: float) -> float:
        # alpha* grows like e^{4/eps}, so combine in log space
        log_p = self.log_alpha_star - self.decay_rate * t - self.gamma_star * t ** (1.0 / 3.0) - 5.0 / 6.0 * math.log(t)
        return math.exp(log_p) if log_p < 709.0 else math.inf


def morrison_tail_constants(eps: float) -> MorrisonTail:
    eps = _check_eps(eps)
    log_alpha = (
        14.0 / 3.0 * math.log(2.0) - 0.5 * math.log(3.0) + 5.0 / 6.0 * math.log(math.pi) - 3.0 * math.log(eps)
        + 4.0 / eps - 2.0
    )
    alpha = math.exp(log_alpha) if log_alpha < 709.0 else math.inf
    beta = -(eps**2 / 4.0 + eps**3 / 8.0)
    gamma = 3.0 * (math.pi / 2.0) ** (2.0 / 3.0) * (1.0 - eps / 6.0)
    return MorrisonTail(alpha, beta, gamma, log_alpha)
