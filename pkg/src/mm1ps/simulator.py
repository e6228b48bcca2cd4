"""Event-driven Monte Carlo for the tagged job in a stationary M/M/1-PS queue.

Each replication starts from the state seen by an arriving job: a geometric
number ``N`` of others (``P(N = n) = (1-rho) rho^n``), each with exponential
residual work. The processor-sharing dynamics are then simulated exactly
from event to event until the tagged job's work ``x`` is used up.

Replications run in lockstep over blocks of ``BLOCK`` jobs. Each block has
its own Philox stream keyed by ``(seed, block index)``, so results depend
only on the seed and the configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import DomainError, MM1PSError, RunawayError

BLOCK = 65536
_Z95 = 1.959963984540054


class EstimationError(MM1PSError, ValueError):
    """A statistical estimate was requested from an empty subsample."""


@dataclass(frozen=True)
class SimConfig:
    rho: float
    x: float
    replications: int = 100_000
    seed: int = 0
    max_events: int = 1_000_000
    check_conservation: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.rho) and 0.0 < self.rho < 1.0):
            raise DomainError(f"need 0 < rho < 1, got {self.rho}")
        if not (math.isfinite(self.x) and self.x >= 0.0):
            raise DomainError(f"x must be nonnegative, got {self.x}")
        if int(self.replications) != self.replications or self.replications < 1:
            raise DomainError(f"replications must be a positive integer, got {self.replications}")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.max_events < 1:
            raise DomainError("max_events must be positive")


@dataclass(frozen=True)
class SojournSample:
    """Sojourn times of the tagged job, one per replication.

    ``lattice`` is ``k >= 0`` when the sojourn is the atom ``(k+1) x`` (the
    ``k`` jobs present all outlast the tagged one and nobody arrives), and
    ``-1`` otherwise. ``empty_no_arrival`` flags replications that found the
    system empty and saw no arrival.
    """

    values: np.ndarray
    lattice: np.ndarray
    x: float
    rho: float
    mean: float = field(init=False)
    variance: float = field(init=False)
    ci_halfwidth: float = field(init=False)

    def __post_init__(self):
        n = self.values.size
        object.__setattr__(self, "mean", float(self.values.mean()))
        var = float(self.values.var(ddof=1)) if n > 1 else 0.0
        object.__setattr__(self, "variance", var)
        object.__setattr__(self, "ci_halfwidth", _Z95 * math.sqrt(var / n))

    def __len__(self):
        return self.values.size

    @property
    def atom_fraction(self) -> float:
        """Fraction of samples exactly equal to ``x``."""
        return float(np.mean(self.values == self.x))

    @property
    def empty_no_arrival(self) -> float:
        """Fraction of replications in the atom at ``t = x`` by construction."""
        return float(np.mean(self.lattice == 0))

    def lattice_fraction(self, k: int) -> float:
        return float(np.mean(self.lattice == k))

    def continuous_values(self) -> np.ndarray:
        return self.values[self.lattice < 0]


def _block(rng, n, rho, x, max_events, check):
    n0 = rng.geometric(1.0 - rho, n) - 1
    cap = int(n0.max()) + 8
    work = np.full((n, cap), np.inf)
    mask = np.arange(cap)[None, :] < n0[:, None]
    work[mask] = rng.standard_exponential(int(mask.sum()))

    out = np.zeros(n)
    lattice = np.full(n, -1, dtype=np.int64)
    if x == 0.0:
        # zero work: the job leaves at once; every lattice atom sits at t = 0
        lattice[:] = n0
        return out, lattice

    rows = np.arange(n)
    tagged = np.full(n, x)
    elapsed = np.zeros(n)
    count = n0.copy()
    clean = np.ones(n, dtype=bool)  # no arrival and no departure so far
    events = 0
    while rows.size:
        events += 1
        if events > max_events:
            raise RunawayError(f"more than {max_events} events in one replication")
        k = count + 1
        m_other = work.min(axis=1)
        tagged_first = tagged <= m_other
        m = np.minimum(m_other, tagged)
        t_done = k * m
        t_arr = rng.standard_exponential(rows.size) / rho
        arrive = t_arr < t_done
        dt = np.where(arrive, t_arr, t_done)
        dec = dt / k
        if check:
            before = np.where(np.isfinite(work), work, 0.0).sum(axis=1) + tagged
        work -= dec[:, None]
        tagged = tagged - dec
        elapsed = elapsed + dt
        if check:
            after = np.where(np.isfinite(work), work, 0.0).sum(axis=1) + tagged
            served = before - after
            assert np.allclose(served, dt, rtol=1e-9, atol=1e-12), "work not conserved"

        finish = ~arrive & tagged_first
        leave = ~arrive & ~finish
        if leave.any():
            idx = np.nonzero(leave)[0]
            work[idx, work[idx].argmin(axis=1)] = np.inf
            count = count - leave
        if arrive.any():
            idx = np.nonzero(arrive)[0]
            if int(count[idx].max()) + 1 >= work.shape[1]:
                work = np.hstack([work, np.full((work.shape[0], work.shape[1]), np.inf)])
            slot = np.isinf(work[idx]).argmax(axis=1)
            work[idx, slot] = rng.standard_exponential(idx.size)
            count = count + arrive
        clean &= ~(arrive | leave)

        if finish.any():
            done = rows[finish]
            out[done] = elapsed[finish]
            lattice[done] = np.where(clean[finish], n0[done], -1)
            keep = ~finish
            rows, work, tagged, elapsed, count, clean = (
                rows[keep], work[keep], tagged[keep], elapsed[keep], count[keep], clean[keep]
            )
        if events % 16 == 0 and rows.size:
            # pack live jobs to the left and trim the padding
            work = np.sort(work, axis=1)[:, : int(count.max()) + 8]
    return out, lattice


def sample_sojourn(cfg: SimConfig) -> SojournSample:
    """Simulate ``cfg.replications`` sojourn times of a job of size ``cfg.x``."""
    vals, lats = [], []
    remaining = int(cfg.replications)
    b = 0
    while remaining > 0:
        n = min(BLOCK, remaining)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(cfg.seed), b])))
        v, lat = _block(rng, n, cfg.rho, float(cfg.x), cfg.max_events, cfg.check_conservation)
        vals.append(v)
        lats.append(lat)
        remaining -= n
        b += 1
    return SojournSample(np.concatenate(vals), np.concatenate(lats), float(cfg.x), float(cfg.rho))


def empirical_cdf(sample: SojournSample, ts) -> np.ndarray:
    """Fraction of all sojourns (atoms included) that are ``<= t``."""
    v = np.sort(sample.values)
    return np.searchsorted(v, np.asarray(ts, dtype=float), side="right") / v.size


def empirical_density(sample: SojournSample, grid, bandwidth: float | None = None):
    """Box-kernel estimate of the continuous part of the sojourn density.

    Lattice atoms are excluded; the estimate is normalised by the total
    number of replications so it targets the (defective) continuous
    density directly. Returns a list of ``(t, estimate, stderr)``. The box
    half-width defaults to a normal-reference rule on the continuous
    subsample; boxes that straddle a jump at ``(k+1) x`` are biased.
    """
    cont = np.sort(sample.continuous_values())
    if cont.size == 0:
        raise EstimationError("no continuous samples to estimate a density from")
    n = sample.values.size
    if bandwidth is None:
        spread = float(np.std(cont)) if cont.size > 1 else 1.0
        bandwidth = 0.9 * max(spread, 1e-12) * cont.size ** -0.2
    if not bandwidth > 0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth}")
    out = []
    for t in np.asarray(grid, dtype=float):
        c = np.searchsorted(cont, t + bandwidth) - np.searchsorted(cont, t - bandwidth)
        p = c / n
        width = 2.0 * bandwidth
        out.append((float(t), float(p / width), math.sqrt(p * (1.0 - p) / n) / width))
    return out
