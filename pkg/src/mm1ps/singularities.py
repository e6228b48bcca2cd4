"""Root solvers for the transcendental equations behind the asymptotic formulas.

The transform of the conditional waiting time is written in the variable
eta through ``s = -1 - rho + 2 sqrt(rho) cosh(eta)``; its poles are zeros of

    D(eta) = (1 - sqrt(rho) e^{-eta})^2 - (sqrt(rho) - e^{-eta})^2 exp(-2 sqrt(rho) x sinh(eta)).

The dominant pole (largest real ``s``) sits either on the imaginary axis,
``eta = i v`` (for ``x > x_*``), or on the line ``Im(eta) = pi``,
``eta = u + i pi`` (for ``x < x_*``).  In heavy traffic the poles collapse
towards ``eta = 0`` and are described by the roots ``v_n(X)`` of
``((2iv + 1)/(2iv - 1))^2 = exp(-2ivX)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .model import ModelParams, SolverError

_SCAN_POINTS = 512


# -- fixed rho: dominant singularity ------------------------------------------------


@dataclass(frozen=True)
class SingularityResult:
    """Dominant singularity ``eta = u + i v`` with its decay rate and amplitude."""

    u: float
    v: float
    r_star: float
    log_f_amp: float
    branch: str  # "imaginary-axis", "line-pi" or "corner"

    @property
    def f_amp(self) -> float:
        """Amplitude ``F(x)``; ``inf`` once it exceeds double range."""
        return math.exp(self.log_f_amp) if self.log_f_amp < 709.0 else math.inf

    @property
    def eta(self) -> complex:
        return complex(self.u, self.v)


def x_star(params: ModelParams) -> float:
    """Service requirement at which the dominant singularity turns the corner at ``i pi``."""
    rs = params.sqrt_rho
    return (1.0 - rs) / (rs * (1.0 + rs))


def eta_denominator(eta, x: float, params: ModelParams):
    """Denominator ``D(eta)`` of the eta-plane integrand (vectorised)."""
    rs = params.sqrt_rho
    e = np.exp(-np.asarray(eta, dtype=complex))
    return (1.0 - rs * e) ** 2 - (rs - e) ** 2 * np.exp(-2.0 * rs * x * np.sinh(eta))


def s_of_eta(eta, params: ModelParams):
    return -1.0 - params.rho + 2.0 * params.sqrt_rho * np.cosh(eta)


def _phase_mismatch(v, x, rs):
    # h(v) - pi where h(v) = v + 2 arg(1 - rs e^{-iv}) + rs x sin v; h(v) = pi
    # is the phase form of the imaginary-axis equation (both sides unimodular).
    alpha = math.atan2(rs * math.sin(v), 1.0 - rs * math.cos(v))
    return v + 2.0 * alpha + rs * x * math.sin(v) - math.pi


def _line_pi_mismatch(u, x, rs):
    # log of the line-pi equation divided by two
    eu = math.exp(-u)
    return math.log((1.0 + rs * eu) / (rs + eu)) - rs * x * math.sinh(u)


def _log_amplitude(x, params: ModelParams, sv, cv):
    # cv is real on both branches, so the growth factor exp((1 - rs cv) x)
    # is real and kept as a log to avoid overflow at large x
    rho, rs = params.rho, params.sqrt_rho
    k = 1.0 + rho - 2.0 * rs * cv
    theta = rs * x * sv
    num = 2.0 * rs * (1.0 - rho) * sv * sv
    den = k * k * rs * x * cv + (1.0 - rho) * k
    # cos(theta) * [(1 - rho) sin v tan(theta) + 2 rs - (1 + rho) cos v], without the tan pole
    bracket = (1.0 - rho) * sv * cmath.sin(theta) + (2.0 * rs - (1.0 + rho) * cv) * cmath.cos(theta)
    rest = (num / den * bracket).real
    if not rest > 0.0:
        raise SolverError(f"nonpositive amplitude {rest!r} at x={x}")
    return (1.0 - rs * cv) * x + math.log(rest)


def amplitude_at_corner(params: ModelParams) -> float:
    rs = params.sqrt_rho
    return 6.0 * rs * (1.0 + rs) ** 2 / (1.0 + 4.0 * rs + params.rho) * math.exp(1.0 / rs - 1.0)


def _solve_v(x, rs):
    grid = np.linspace(0.0, math.pi, _SCAN_POINTS + 1)[1:-1]
    prev = 0.0
    for v in grid:
        if _phase_mismatch(v, x, rs) >= 0.0:
            return brentq(_phase_mismatch, prev, v, args=(x, rs), xtol=1e-15, rtol=1e-15)
        prev = v
    # the crossing is squeezed against v = pi (x just above x_*)
    delta = math.pi - prev
    for _ in range(60):
        delta *= 0.5
        if _phase_mismatch(math.pi - delta, x, rs) > 0.0:
            return brentq(_phase_mismatch, prev, math.pi - delta, args=(x, rs), xtol=1e-15, rtol=1e-15)
    raise SolverError(
        f"no sign change of the imaginary-axis equation on (0, pi) for x={x}",
        bracket=(prev, math.pi),
    )


def _solve_u(x, rs):
    hi = 1.0
    while _line_pi_mismatch(hi, x, rs) >= 0.0:
        hi *= 2.0
        if hi > 800.0:
            raise SolverError(f"could not bracket the line-pi root for x={x}", bracket=(0.0, hi))
    lo = hi
    for _ in range(200):
        lo *= 0.5
        if _line_pi_mismatch(lo, x, rs) > 0.0:
            return brentq(_line_pi_mismatch, lo, hi, args=(x, rs), xtol=1e-15, rtol=1e-15)
    raise SolverError(f"could not bracket the line-pi root for x={x}", bracket=(lo, hi))


@lru_cache(maxsize=4096)
def _dominant(x: float, rho: float) -> SingularityResult:
    params = ModelParams(rho)
    rs = params.sqrt_rho
    xs = x_star(params)
    if abs(x - xs) < 1e-9 * max(1.0, xs):
        return SingularityResult(0.0, math.pi, -((1.0 + rs) ** 2), math.log(amplitude_at_corner(params)), "corner")
    if x > xs:
        v = _solve_v(x, rs)
        r = -1.0 - rho + 2.0 * rs * math.cos(v)
        f = _log_amplitude(x, params, math.sin(v), math.cos(v))
        return SingularityResult(0.0, v, r, f, "imaginary-axis")
    u = _solve_u(x, rs)
    r = -1.0 - rho - 2.0 * rs * math.cosh(u)
    f = _log_amplitude(x, params, 1j * math.sinh(u), -math.cosh(u))
    return SingularityResult(u, math.pi, r, f, "line-pi")


def dominant_singularity(x: float, params: ModelParams) -> SingularityResult:
    """Dominant pole of the conditional waiting-time transform for service ``x > 0``.

    For ``x > x_*`` the pole is ``eta = i v`` with ``v`` the smallest root of
    the imaginary-axis equation in ``(0, pi)``; for ``x < x_*`` it is
    ``eta = u + i pi`` with ``u > 0`` the unique root of the line-pi
    equation. ``r_star`` is the exponential decay rate of the density in
    ``t`` and ``f_amp`` its amplitude.
    """
    x = float(x)
    if not (x > 0 and math.isfinite(x)):
        raise ValueError(f"x must be positive and finite, got {x}")
    return _dominant(x, params.rho)


def r_star_large_x(x: float, params: ModelParams) -> float:
    """Three-term expansion of the decay rate for large ``x``."""
    rs, rho = params.sqrt_rho, params.rho
    return (
        -((1.0 - rs) ** 2)
        - math.pi**2 / (rs * x * x)
        + 2.0 * math.pi**2 * (1.0 + rs) / (rho * (1.0 - rs) * x**3)
    )


def r_star_small_x(x: float, params: ModelParams) -> float:
    """Three-term expansion of the decay rate for small ``x``."""
    rho = params.rho
    lg = math.log(rho)
    c0 = -(1.0 + rho + 2.0 * (1.0 - rho) / lg)
    c1 = (2.0 * rho * lg * lg + (rho * rho - 1.0) * lg - 4.0 * (1.0 - rho) ** 2) / lg**3
    return lg / x + c0 + c1 * x


def v_large_x(x: float, params: ModelParams) -> float:
    """Two-term large-``x`` estimate of ``v(x)``."""
    rs, rho = params.sqrt_rho, params.rho
    return math.pi / (rs * x) - math.pi * (1.0 + rs) / (rho * (1.0 - rs) * x * x)


def u_small_x(x: float, params: ModelParams) -> float:
    """Small-``x`` expansion of ``u(x)`` through the ``x^2`` term."""
    rho = params.rho
    lg = math.log(rho)
    return (
        -math.log(x)
        + math.log(-lg)
        - 0.5 * lg
        - 2.0 * (1.0 - rho) / lg**2 * x
        + (rho * lg * lg + (rho * rho - 1.0) * lg - 6.0 * (1.0 - rho) ** 2) / lg**4 * x * x
    )


def amplitude_large_x(x: float, params: ModelParams) -> float:
    """Leading large-``x`` form of the amplitude ``F(x)``."""
    rs, rho = params.sqrt_rho, params.rho
    return 2.0 * math.pi**2 * (1.0 + rs) / (rho * (1.0 - rs) * x**3) * math.exp((1.0 - rs) * x)


def _newton_eta(eta, x, params, steps=50):
    try:
        return _newton_eta_raw(eta, x, params, steps)
    except (OverflowError, ZeroDivisionError):
        # the iteration left the region where D(eta) is representable
        return eta, math.inf


def _newton_eta_raw(eta, x, params, steps):
    rs = params.sqrt_rho
    for _ in range(steps):
        e = cmath.exp(-eta)
        ex = cmath.exp(-2.0 * rs * x * cmath.sinh(eta))
        d = (1.0 - rs * e) ** 2 - (rs - e) ** 2 * ex
        dd = (
            2.0 * (1.0 - rs * e) * rs * e
            - 2.0 * (rs - e) * e * ex
            + (rs - e) ** 2 * ex * 2.0 * rs * x * cmath.cosh(eta)
        )
        if dd == 0:
            break
        step = d / dd
        eta -= step
        if abs(step) < 1e-14 * max(1.0, abs(eta)):
            return eta, abs(d)
    e = cmath.exp(-eta)
    return eta, abs((1.0 - rs * e) ** 2 - (rs - e) ** 2 * cmath.exp(-2.0 * rs * x * cmath.sinh(eta)))


def scan_poles(x: float, params: ModelParams, u_max: float | None = None, n_u: int = 160, n_v: int = 160):
    """Locate zeros of ``D(eta)`` in ``0 <= Re(eta) <= u_max``, ``0 <= Im(eta) <= pi``.

    Coarse grid search for local minima of ``|D|`` followed by Newton
    polishing. The removable zeros at ``eta = 0`` and ``eta = i pi``
    (cancelled by the numerator) are dropped. Returns a list of complex eta.
    """
    if u_max is None:
        u_max = max(8.0, 2.0 * (abs(math.log(x)) + 4.0))
    us = np.linspace(0.0, u_max, n_u)
    vs = np.linspace(0.0, math.pi, n_v)
    grid = us[:, None] + 1j * vs[None, :]
    with np.errstate(over="ignore", invalid="ignore"):
        mag = np.abs(eta_denominator(grid, x, params))
    mag = np.where(np.isfinite(mag), mag, np.inf)
    found = []
    for i in range(n_u):
        for j in range(n_v):
            m = mag[i, j]
            nb = mag[max(i - 1, 0): i + 2, max(j - 1, 0): j + 2]
            if m < np.inf and m <= nb.min():
                eta, res = _newton_eta(complex(grid[i, j]), x, params)
                if res > 1e-9 or not math.isfinite(eta.real):
                    continue
                if eta.real < -1e-8 or abs(eta.imag) > math.pi + 1e-8:
                    continue
                eta = complex(abs(eta.real), abs(eta.imag))
                if abs(eta) < 1e-6 or abs(eta - 1j * math.pi) < 1e-6:
                    continue
                if all(abs(eta - f) > 1e-7 for f in found):
                    found.append(eta)
    return found


def verify_dominance(x: float, params: ModelParams, **scan_kw):
    """Check that no pole found by :func:`scan_poles` beats the solver's dominant one.

    Returns ``(ok, poles)`` where ``ok`` is true when every located pole has
    ``Re(s) <= r_star + 1e-9``.
    """
    dom = dominant_singularity(x, params)
    poles = scan_poles(x, params, **scan_kw)
    ok = all(s_of_eta(p, params).real <= dom.r_star + 1e-9 for p in poles)
    return ok, poles


# -- heavy traffic: eigenvalues v_n(X) ---------------------------------------------


@dataclass(frozen=True)
class HeavyRoots:
    roots: tuple
    X: float

    def __len__(self):
        return len(self.roots)

    def __getitem__(self, i):
        return self.roots[i]


def heavy_root_residual(v: float, X: float) -> float:
    """``|((2iv+1)/(2iv-1))^2 - exp(-2ivX)|``."""
    lhs = ((2j * v + 1.0) / (2j * v - 1.0)) ** 2
    return abs(lhs - cmath.exp(-2j * v * X))


def _odd_eq(theta, X):
    # cot(theta) = 2v with theta = X v / 2, multiplied through by sin(theta)
    return math.cos(theta) - 4.0 * theta / X * math.sin(theta)


def _even_eq(theta, X):
    # tan(theta) = -2v, multiplied through by cos(theta)
    return 4.0 * theta / X * math.cos(theta) + math.sin(theta)


@lru_cache(maxsize=4096)
def _heavy_roots(X: float, count: int) -> tuple:
    roots = []
    for n in range(1, count + 1):
        k = (n - 1) // 2
        if n % 2:
            a, b, fn = k * math.pi, k * math.pi + 0.5 * math.pi, _odd_eq
        else:
            a, b, fn = k * math.pi + 0.5 * math.pi, (k + 1) * math.pi, _even_eq
        fa, fb = fn(a, X), fn(b, X)
        if fa * fb > 0:
            raise SolverError(f"v_{n}({X}) not bracketed", bracket=(2 * a / X, 2 * b / X))
        theta = brentq(fn, a, b, args=(X,), xtol=1e-300, rtol=1e-15, maxiter=200)
        roots.append(2.0 * theta / X)
    return tuple(roots)


def heavy_roots(X: float, count: int) -> HeavyRoots:
    """First ``count`` positive roots ``v_1 < v_2 < ...`` of the heavy-traffic pole equation.

    ``v_n`` lies in ``((n-1) pi / X, n pi / X)``; odd ``n`` solve
    ``cot(Xv/2) = 2v`` and even ``n`` solve ``tan(Xv/2) = -2v``.
    """
    X = float(X)
    if not (X > 0 and math.isfinite(X)):
        raise ValueError(f"X must be positive and finite, got {X}")
    if count < 1:
        raise ValueError("count must be at least 1")
    return HeavyRoots(_heavy_roots(X, int(count)), X)


def v1_large_X(X: float) -> float:
    return math.pi / X - 4.0 * math.pi / X**2 + 16.0 * math.pi / X**3


def v1_small_X(X: float) -> float:
    return 1.0 / math.sqrt(X) - math.sqrt(X) / 24.0 + 11.0 / 5760.0 * X**1.5


def vn_large_X(n: int, X: float) -> float:
    return n * math.pi * (1.0 / X - 4.0 / X**2 + 16.0 / X**3)


def vn_small_X(n: int, X: float) -> float:
    if n < 2:
        raise ValueError("the small-X form applies to n >= 2")
    m = (n - 1) * math.pi
    return m / X + 1.0 / m - X / m**3


def k_of_X(X: float) -> float:
    """``sigma`` at which the X-integrand of the sigma-scale density is stationary."""
    v = heavy_roots(X, 1)[0]
    return (X * (1.0 + 4.0 * v * v) + 4.0) / (2.0 * v * v * (1.0 + 4.0 * v * v))


# -- sigma scale: psi parametrisation ----------------------------------------------


@dataclass(frozen=True)
class PsiPoint:
    psi: float
    sigma: float
    x_tilde: float
    v_tilde: float


def sigma_from_psi(psi: float) -> float:
    return 4.0 * math.tan(0.5 * psi) ** 3 * (psi + math.sin(psi))


def _sigma_of_w(w):
    # w = tan(psi/2):  psi + sin(psi) = 2 atan(w) + 2w/(1+w^2)
    return 4.0 * w**3 * (2.0 * math.atan(w) + 2.0 * w / (1.0 + w * w))


def psi_from_sigma(sigma: float) -> PsiPoint:
    """Solve ``sigma = 4 tan^3(psi/2) (psi + sin psi)`` for ``psi`` in ``(0, pi)``."""
    sigma = float(sigma)
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ValueError(f"sigma must be positive and finite, got {sigma}")
    target = math.log(sigma)
    guess = min((sigma / 16.0) ** 0.25, (sigma / (4.0 * math.pi)) ** (1.0 / 3.0))
    lo, hi = math.log(guess) - 2.0, math.log(guess) + 2.0

    def f(lw):
        return math.log(_sigma_of_w(math.exp(lw))) - target

    while f(lo) > 0:
        lo -= 2.0
    while f(hi) < 0:
        hi += 2.0
    lw = brentq(f, lo, hi, xtol=1e-16, rtol=1e-15, maxiter=200)
    w = math.exp(lw)
    psi = 2.0 * math.atan(w)
    return PsiPoint(psi=psi, sigma=sigma, x_tilde=2.0 * psi * w, v_tilde=0.5 / w)


# -- reference table -----------------------------------------------------------------


def table1_reference() -> list[tuple[float, float, float, float]]:
    """Stored dominant singularities ``(rho, x, u, v)`` (4-decimal values).

    Read from the package data file ``data/table1.txt``: whitespace
    separated ``rho x u v`` per line, ``#`` starts a comment.
    """
    from importlib.resources import files

    rows = []
    for line in files("mm1ps").joinpath("data/table1.txt").read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rho, x, u, v = (float(f) for f in line.split())
            rows.append((rho, x, u, v))
    return rows
