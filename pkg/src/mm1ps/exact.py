"""Exact conditional and unconditional sojourn-time densities.

The waiting time ``W(x) = V(x) - x`` of a job with service requirement ``x``
has the closed-form Laplace transform

    E[exp(-s W)] = (1-rho)(1-rho r^2) e^{-rho(1-r)x}
                   / [(1-rho r)^2 - rho (1-r)^2 exp(-x(1-rho r^2)/r)]

with ``r = r(s)`` the small root of ``rho r^2 - (1+rho+s) r + 1 = 0``.

Since ``exp(-x(1-rho r^2)/r) ~ exp(-x s)`` for large ``s``, the denominator
acts as a delay line: expanding it geometrically shows that ``V(x)`` has
atoms at every ``t = (k+1) x`` (``k`` other jobs, all outlasting the tagged
one, and no arrivals), not only at ``t = x``, and the continuous density
jumps at those points. The same structure puts a vertical line of poles
into the left half plane, so the full transform cannot be inverted on a
Talbot contour; see :func:`invert_density` for how this is handled.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import laplace
from .model import (
    ConvergenceError,
    DensityValue,
    DomainError,
    InversionConfig,
    ModelParams,
    PoleProximityError,
    SolverError,
)
from .singularities import dominant_singularity

# Closer than this to the support boundary the inversion is refused.
MIN_WAIT = 1e-8
X_CUTOFF = 745.0
_DEFAULT_CFG = InversionConfig()


def _small_root(s, rho):
    # r = 2 / (w + q), q = +-sqrt(w^2 - 4 rho); taking the sign that
    # maximises |w + q| avoids cancellation and picks |r| <= 1/sqrt(rho).
    w = 1.0 + rho + s
    q = np.sqrt(w * w - 4.0 * rho)
    a, b = w + q, w - q
    return 2.0 / np.where(np.abs(a) >= np.abs(b), a, b)


def root_r(s, params: ModelParams):
    """Root of ``rho r^2 - (1+rho+s) r + 1 = 0`` that vanishes as ``s -> +inf``.

    Accepts a scalar or array; returns complex. On the cut
    ``[-(1+sqrt rho)^2, -(1-sqrt rho)^2]`` the two roots have equal modulus
    and either may be returned; the transform does not depend on the choice.
    """
    s_arr = np.asarray(s, dtype=complex)
    if not np.all(np.isfinite(s_arr)):
        raise DomainError("s must be finite")
    r = _small_root(s_arr, params.rho)
    return complex(r) if r.ndim == 0 else r


def _transform_from_root(r, x, rho):
    e = -x * (1.0 - rho * r * r) / r
    m = np.maximum(0.0, e.real)
    num = (1.0 - rho) * (1.0 - rho * r * r) * np.exp(-rho * (1.0 - r) * x - m)
    den = (1.0 - rho * r) ** 2 * np.exp(-m) - rho * (1.0 - r) ** 2 * np.exp(e - m)
    return num, den


def _waiting_lt_array(s, x, rho):
    r = _small_root(s, rho)
    num, den = _transform_from_root(r, x, rho)
    return num / den


def waiting_lt(s, x: float, params: ModelParams):
    """Laplace transform ``E[exp(-s W(x))]`` of the conditional waiting time.

    Vectorised over ``s``. Raises :class:`PoleProximityError` if the
    (rescaled) denominator vanishes to working precision.
    """
    x = float(x)
    if not (x >= 0 and math.isfinite(x)):
        raise DomainError(f"x must be nonnegative and finite, got {x}")
    s_arr = np.asarray(s, dtype=complex)
    if not np.all(np.isfinite(s_arr)):
        raise DomainError("s must be finite")
    r = _small_root(s_arr, params.rho)
    num, den = _transform_from_root(r, x, params.rho)
    if np.any(np.abs(den) < 1e-300):
        where = s_arr[np.abs(den) < 1e-300].ravel()[0]
        raise PoleProximityError(f"transform evaluated on a pole near s={where}")
    val = num / den
    return complex(val) if val.ndim == 0 else val


def waiting_lt_other_root(s, x: float, params: ModelParams):
    """The transform evaluated with the large root ``1/(rho r)`` (for symmetry checks)."""
    s_arr = np.asarray(s, dtype=complex)
    r = 1.0 / (params.rho * _small_root(s_arr, params.rho))
    num, den = _transform_from_root(r, float(x), params.rho)
    val = num / den
    return complex(val) if val.ndim == 0 else val


def atom_mass(x: float, params: ModelParams) -> float:
    """Probability ``(1-rho) exp(-rho x)`` that the sojourn time equals ``x`` exactly."""
    x = float(x)
    if not x >= 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    return (1.0 - params.rho) * math.exp(-params.rho * x)


def default_shift(x: float, params: ModelParams) -> float:
    """Abscissa shift for the tail inversion: the dominant pole, else the right branch point."""
    try:
        return dominant_singularity(x, params).r_star
    except SolverError:
        return params.s_minus


def boundary_density(x: float, params: ModelParams) -> float:
    """Limit of the continuous density as ``t -> x+``: ``(1-rho) rho (x+2) e^{-rho x}``.

    By the initial value theorem this is ``lim s (E[e^{-sW}] - atom)`` as
    ``s -> oo``; with ``r ~ 1/s`` the factor ``e^{rho r x}`` gives the
    ``rho x`` and ``(1 - rho r)^{-2}`` the ``2 rho``.
    """
    return params.rho * (x + 2.0) * atom_mass(x, params)


def lattice_atom(x: float, params: ModelParams, k: int) -> float:
    """Mass of the atom at ``t = (k+1) x``.

    ``k`` other jobs are present on arrival, all with residual work above
    ``x``, and nobody arrives for ``(k+1) x``:
    ``(1-rho) rho^k e^{-k x} e^{-(k+1) rho x}``. ``k = 0`` is :func:`atom_mass`.
    """
    if k < 0:
        raise DomainError("k must be nonnegative")
    return atom_mass(x, params) * (params.rho * math.exp(-x * (1.0 + params.rho))) ** k


def total_atom_mass(x: float, params: ModelParams) -> float:
    """Sum of all lattice atoms ``sum_k lattice_atom(x, k)``."""
    return atom_mass(x, params) / (1.0 - params.rho * math.exp(-x * (1.0 + params.rho)))


def _lattice_ratio(x, rho):
    return rho * math.exp(-x * (1.0 + rho))


def _clog1p(z):
    # numpy's complex log1p loses digits near 0; this form does not
    return 2.0 * np.arctanh(z / (2.0 + z))


def _term_excess(s, k, x, rho, scale):
    # k-th delayed term of the transform (delay e^{-k x s} removed) minus its
    # limit a_k as s -> oo, written as a_k expm1(E) so nothing cancels when
    # r(s) is small. Singular only on the cut [-(1+sqrt rho)^2, -(1-sqrt rho)^2];
    # rho = 1 is allowed.
    r = _small_root(s, rho)
    one_m = 1.0 - rho * r
    lead = _clog1p(rho * r * (2.0 - r - rho * r) / (one_m * one_m)) + rho * r * x
    step = 2.0 * _clog1p(-(1.0 - rho) * r / one_m) + 2.0 * x * rho * r
    a_k = scale * math.exp(-rho * x) * _lattice_ratio(x, rho) ** k
    return a_k * np.expm1(lead + k * step)


def delay_sum(w: float, x: float, rho: float, nodes: int, scale: float):
    """Continuous density at waiting time ``w`` as a finite sum of delayed terms.

    ``scale`` multiplies the whole transform (``1 - rho`` for the exact
    density; the heavy-traffic leading term uses ``rho = 1`` with
    ``scale = eps``). Returns ``(value, err, magnitude)`` where
    ``magnitude`` is the sum of absolute term values (the cancellation
    scale).
    """
    a0, q = scale * math.exp(-rho * x), _lattice_ratio(x, rho)
    nterms = max(1, int(math.ceil(w / x - 1e-12)))
    k = np.arange(nterms)
    tau = np.maximum(w - k * x, MIN_WAIT)
    # per-term shift to the saddle of e^{s tau} e^{(2k+1) rho x r(s)}
    xe = (2 * k + 1) * x
    shift = -1.0 - rho + math.sqrt(rho) * (2.0 * tau + xe) / np.sqrt(tau * (tau + xe))
    est = []
    for n in (nodes, 2 * nodes):
        s_unit, wt_unit = laplace.talbot_nodes(n, 1.0, scale_nodes=nodes)
        s = s_unit[None, :] / tau[:, None]
        wt = wt_unit[None, :] / tau[:, None]
        f = _term_excess(s + shift[:, None], k[:, None], x, rho, scale)
        est.append(np.sum((wt * np.exp(s * tau[:, None]) * f).imag, axis=1) * np.exp(shift * tau))
    terms = est[1]
    err = float(np.sum(np.abs(est[1] - est[0])))
    mag = float(np.sum(np.abs(terms)))
    return float(np.sum(terms)), err + 1e-15 * mag, mag


def _delay_sum(w, x, params, nodes):
    return delay_sum(w, x, params.rho, nodes, 1.0 - params.rho)


def _tail_inverse(w, x, params, cfg, shift):
    rho = params.rho
    a0, q = atom_mass(x, params), _lattice_ratio(x, rho)

    def fn(s):
        # transform of the continuous part: all lattice atoms removed
        return _waiting_lt_array(s, x, rho) - a0 / (1.0 - q * np.exp(-x * s))

    return laplace.euler(fn, w, nodes=cfg.nodes, shift=shift, tolerance=min(cfg.tolerance, 1e-9))


# Beyond this many delayed terms only the tail method is tried.
MAX_DELAY_TERMS = 400
# Past this many delays the tail method is tried first.
TAIL_FIRST_RATIO = 8.0
_ACCEPT_REL = 1e-9


@lru_cache(maxsize=65536)
def _invert_cached(w, x, params, cfg, shift):
    candidates = []
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if cfg.contour != "fixed-talbot":
            return (*_tail_inverse(w, x, params, cfg, shift), cfg.contour)
        order = ("tail", "delay") if w / x > TAIL_FIRST_RATIO else ("delay", "tail")
        for name in order:
            if name == "delay":
                if w / x > MAX_DELAY_TERMS:
                    continue
                nodes = cfg.nodes
                v, e, _ = _delay_sum(w, x, params, nodes)
                # large x sharpens the saddle; refine the contour a few times,
                # stopping once roundoff (growing like e^{0.17 nodes}) takes over
                while e > _ACCEPT_REL * abs(v) and e > 1e-3 * cfg.tolerance and nodes < 8 * cfg.nodes:
                    nodes *= 2
                    v2, e2, _ = _delay_sum(w, x, params, nodes)
                    if not e2 < e:
                        break
                    v, e = v2, e2
                candidates.append((v, e, "delay-talbot"))
            else:
                v, e = _tail_inverse(w, x, params, cfg, shift)
                candidates.append((v, e, "shifted-bromwich-euler"))
            if e <= _ACCEPT_REL * abs(v):
                break
    return min(candidates, key=lambda c: c[1] if math.isfinite(c[1]) else math.inf)


def invert_density(t: float, x: float, params: ModelParams, cfg: InversionConfig = _DEFAULT_CFG) -> DensityValue:
    """Continuous part of ``p(t|x)`` for ``t > x > 0`` by numerical inversion.

    Besides the atom at ``t = x`` the sojourn time has atoms at every
    ``t = (k+1) x`` (see :func:`lattice_atom`), and the continuous density
    jumps there. With ``contour="fixed-talbot"`` the transform is split
    into delayed terms, each inverted on the cotangent contour; this is
    exact but cancels when ``t/x`` is large, so the Euler line inversion
    shifted to the dominant pole is also tried and the estimate with the
    smaller error bound wins. ``contour="shifted-bromwich-euler"`` uses the
    line inversion alone. At a jump the right limit is returned, and
    ``atom`` reports the lattice atom sitting at ``t``.

    Raises
    ------
    DomainError
        If ``t <= x``, or ``t - x`` is below ``MIN_WAIT`` (use
        :func:`mm1ps.regimes_fixed.regime1_bessel` there instead).
    ConvergenceError
        If the error estimate exceeds ``cfg.tolerance``.
    """
    t, x = float(t), float(x)
    if not (x > 0 and math.isfinite(x) and math.isfinite(t)):
        raise DomainError(f"need finite t and x > 0, got t={t}, x={x}")
    if t <= x:
        raise DomainError(f"the continuous density lives on t > x; got t={t}, x={x}")
    w = t - x
    if w < MIN_WAIT:
        raise DomainError(
            f"t - x = {w:.3g} is below {MIN_WAIT:g}; use the Bessel (regime 1) formula near the support edge"
        )
    shift = cfg.abscissa_shift if cfg.abscissa_shift is not None else default_shift(x, params)
    method = cfg.contour
    value, err, method = _invert_cached(w, x, params, cfg, shift)
    if not (math.isfinite(value) and math.isfinite(err)) or err > cfg.tolerance:
        raise ConvergenceError(
            f"inversion at t={t}, x={x}, rho={params.rho} did not converge (err={err:.3g})",
            estimates=(value, err),
        )
    k = round(t / x) - 1
    atom = lattice_atom(x, params, k) if k >= 1 and abs(t - (k + 1) * x) <= 1e-12 * t else 0.0
    clamped = value < 0.0
    return DensityValue(
        continuous=0.0 if clamped else value,
        atom=atom,
        regime="exact-inversion",
        err_est=err,
        clamped=clamped,
        extra={"shift": shift, "method": method},
    )


def conditional_density(t: float, x: float, params: ModelParams, cfg: InversionConfig = _DEFAULT_CFG) -> float:
    """Continuous density on ``t > x``, using the boundary limit within ``MIN_WAIT`` of ``x``."""
    if 0.0 < t - x < MIN_WAIT:
        return boundary_density(x, params)
    return invert_density(t, x, params, cfg).continuous


def integrate_continuous(x: float, params: ModelParams, weight=None, cfg: InversionConfig = _DEFAULT_CFG,
                         w_max: float | None = None, rtol: float = 1e-10) -> float:
    """``int_x^inf weight(t) * p_c(t|x) dt`` by quadrature between the jump points ``t = (k+1) x``.

    ``w_max`` bounds the waiting times integrated; by default it is chosen
    so that the neglected tail is below ``1e-13`` relative to unit mass.
    """
    fn = (lambda t: conditional_density(t, x, params, cfg)) if weight is None else (
        lambda t: weight(t) * conditional_density(t, x, params, cfg))
    if w_max is None:
        decay = max(abs(default_shift(x, params)), 1e-3)
        w_max = 40.0 / decay
    edges = [x + k * x for k in range(int(min(w_max / x, 200)) + 1)]
    if edges[-1] < x + w_max:
        edges.append(x + w_max)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        # the absolute floor follows the size of the weight on the panel
        floor = 1e-14 * (1.0 if weight is None else max(1.0, abs(weight(b))))
        total += integrate.quad(fn, a, b, epsabs=floor, epsrel=rtol, limit=200)[0]
    return total


def conditional_cdf(ts, x: float, params: ModelParams, cfg: InversionConfig = _DEFAULT_CFG,
                    rtol: float = 1e-10) -> np.ndarray:
    """``Pr[V(x) <= t]`` at each ``t`` in ``ts``: lattice atoms plus the continuous part.

    The continuous density is integrated piece by piece between the
    requested points and the jumps at ``(k+1) x``.
    """
    ts = np.asarray(ts, dtype=float)
    if ts.size == 0:
        return ts.copy()
    x = float(x)
    t_hi = float(ts.max())
    jumps = [x * (k + 1) for k in range(int(t_hi / x) + 1) if x * (k + 1) <= t_hi]
    knots = sorted({x, *jumps, *(float(t) for t in ts if t > x)})
    cum = {x: 0.0}
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        total += integrate.quad(lambda t: conditional_density(t, x, params, cfg), a, b,
                                epsabs=1e-14, epsrel=rtol, limit=200)[0]
        cum[b] = total
    out = np.empty_like(ts)
    for i, t in enumerate(ts):
        if t < x:
            out[i] = 0.0
            continue
        k_max = int(math.floor(t / x + 1e-12)) - 1
        atoms = sum(lattice_atom(x, params, k) for k in range(k_max + 1))
        out[i] = atoms + cum[float(t)] if t > x else atoms
    return out


def waiting_moments(x: float, params: ModelParams, order: int = 2) -> list[float]:
    """Raw moments ``E[W(x)^k]``, ``k = 1..order``, from Taylor coefficients of the transform.

    The coefficients are read off by the trapezoid rule on a circle about
    ``s = 0`` inside the disc of analyticity.
    """
    radius = 0.25 * abs(default_shift(x, params))
    n = 64
    s = radius * np.exp(2j * np.pi * np.arange(n) / n)
    coef = np.fft.fft(waiting_lt(s, x, params)) / n
    return [float(((-1) ** k * math.factorial(k) * coef[k] / radius**k).real) for k in range(1, order + 1)]


def mean_sojourn(x: float, params: ModelParams) -> float:
    """``E[V(x)] = x / (1 - rho)``."""
    return float(x) / (1.0 - params.rho)


def unconditional_density(t: float, params: ModelParams, cfg: InversionConfig = _DEFAULT_CFG, rtol: float = 1e-7) -> float:
    """Unconditional sojourn density ``p(t) = int_0^t e^{-x} p(t|x) dx`` for unit-mean service.

    The lattice atoms at ``t = (k+1) x`` contribute
    ``(1-rho) e^{-(1+rho) t} rho^k / (k+1)`` each, summing to
    ``(1-rho) e^{-(1+rho) t} log(1/(1-rho)) / rho``. The continuous part is
    integrated adaptively between its jump points ``x = t/(k+1)``, after
    the interior peak of the integrand is located by a coarse scan.
    """
    t = float(t)
    if not (t > 0 and math.isfinite(t)):
        raise DomainError(f"t must be positive and finite, got {t}")
    rho = params.rho
    atom_part = (1.0 - rho) * math.exp(-(1.0 + rho) * t) * (-math.log1p(-rho) / rho)

    def g(x):
        return math.exp(-x) * conditional_density(t, x, params, cfg)

    # beyond x ~ 745 the weight e^{-x} is below the smallest double
    x_max = min(t, X_CUTOFF)
    grid = x_max * (np.arange(1, 64) / 64.0)
    vals = np.array([g(xx) for xx in grid])
    peak = float(grid[int(np.argmax(vals))])
    breaks = {0.0, x_max, peak} | {t / (k + 1) for k in range(1, 40) if t / (k + 1) < x_max}
    edges = sorted(breaks)
    # absolute floor from the coarse scan, so the jumps piling up at x -> 0
    # (where the integrand is negligible) are not chased
    floor = 1e-2 * rtol * float(vals.max()) * x_max
    total, err_total = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(g, a, b, epsabs=floor, epsrel=rtol, limit=400)
        total += val
        err_total += err
    if err_total > 1e3 * rtol * max(abs(total), 1e-300) + len(edges) * floor:
        raise ConvergenceError(f"quadrature for p({t}) did not converge", estimates=(total, err_total))
    return atom_part + total
