"""Claim-arrival renewal processes and investment log-return processes.

The renewal side covers homogeneous Poisson arrivals and renewal processes
with Erlang interarrivals (analytic convolution powers); the return side
covers a deterministic force of interest, Brownian motion with drift, and a
compound Poisson process with drift.  Each return process exposes its exact
Laplace exponent ``phi(k) = log E[exp(-k * xi(1))]``, which drives both the
hypothesis checkers and the infinite-horizon truncation rule.

Returns are only ever sampled at claim-arrival epochs: the discounted
aggregate vector depends on the paths solely through those values, and the
increments used are exact (Gaussian or compound Poisson over each
inter-arrival gap), so there is no discretization error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

__all__ = [
    "Poisson",
    "Erlang",
    "RenewalIID",
    "RenewalSpec",
    "Deterministic",
    "BrownianDrift",
    "ExponentialJumps",
    "FixedJumps",
    "CompoundPoissonDrift",
    "ReturnProcess",
    "BoundedBelowResult",
    "SummabilityResult",
    "renewal_function",
    "renewal_density",
    "sample_arrivals",
    "laplace_exponent",
    "check_bounded_below",
    "check_discount_summability",
    "truncation_horizon",
    "discount_integral_tail_bound",
]

#: single-path probability below which an arrival-count cap is considered safe
_CAP_EPS = 1e-16
#: truncation tolerance for renewal-series evaluation
_SERIES_TOL = 1e-8


# ---------------------------------------------------------------------------
# renewal processes


@dataclass(frozen=True)
class Poisson:
    """Homogeneous Poisson arrivals with intensity ``rate``."""

    rate: float

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("Poisson rate must be positive")

    def interarrival_laplace(self, s: float) -> float:
        if s <= -self.rate:
            raise ValueError("Laplace transform diverges at this argument")
        return self.rate / (self.rate + s)

    def interarrival_mean(self) -> float:
        return 1.0 / self.rate

    def interarrivals_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return -np.log1p(-u) / self.rate

    def arrival_cap(self, horizon: float) -> int:
        mu = self.rate * horizon
        n = int(stats.poisson.isf(_CAP_EPS, mu)) + 8
        return max(n, 8)


@dataclass(frozen=True)
class Erlang:
    """Erlang interarrival law: sum of ``k`` exponentials of the given rate."""

    k: int
    rate: float

    def __post_init__(self):
        if self.k < 1 or self.rate <= 0:
            raise ValueError("Erlang needs k >= 1 and rate > 0")

    def cdf(self, t) -> np.ndarray:
        return special.gammainc(self.k, self.rate * np.maximum(np.asarray(t, dtype=float), 0.0))

    def convolution_cdf(self, i: int, t) -> np.ndarray:
        """Distribution function of the ``i``-th arrival time."""
        return special.gammainc(i * self.k, self.rate * np.maximum(np.asarray(t, dtype=float), 0.0))

    def convolution_pdf(self, i: int, t) -> np.ndarray:
        return stats.gamma.pdf(np.asarray(t, dtype=float), a=i * self.k, scale=1.0 / self.rate)

    def laplace(self, s: float) -> float:
        if s <= -self.rate:
            raise ValueError("Laplace transform diverges at this argument")
        return (self.rate / (self.rate + s)) ** self.k

    def mean(self) -> float:
        return self.k / self.rate

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return special.gammaincinv(self.k, u) / self.rate


@dataclass(frozen=True)
class RenewalIID:
    """Renewal process with independent Erlang interarrivals."""

    interarrival: Erlang

    def interarrival_laplace(self, s: float) -> float:
        return self.interarrival.laplace(s)

    def interarrival_mean(self) -> float:
        return self.interarrival.mean()

    def interarrivals_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return self.interarrival.from_uniforms(u)

    def arrival_cap(self, horizon: float) -> int:
        n = max(8, int(math.ceil(2.0 * horizon / self.interarrival.mean())) + 8)
        while float(self.interarrival.convolution_cdf(n, horizon)) > _CAP_EPS:
            n *= 2
            if n > 10_000_000:  # pragma: no cover - defensive
                raise RuntimeError("arrival cap search diverged")
        return n

    def series_terms(self, t: float) -> int:
        """Number of convolution terms so the neglected renewal-series tail
        is below the evaluation tolerance.

        Bounds each term by ``P[tau_i <= t] <= exp(s t) * L(s)**i`` with
        ``L`` the interarrival Laplace transform, so the tail beyond ``I``
        is geometric; ``s`` is chosen from a small grid.
        """
        mean = self.interarrival.mean()
        best = None
        for s in (0.5 / mean, 1.0 / mean, 2.0 / mean, 4.0 / mean, 8.0 / mean):
            q = self.interarrival_laplace(s)
            prefactor = math.exp(s * t)
            i = max(1, int(2 * t / mean))
            while prefactor * q ** (i + 1) / (1.0 - q) > _SERIES_TOL and i < 1_000_000:
                i += max(1, i // 4)
            if best is None or i < best:
                best = i
        return best


RenewalSpec = Poisson | RenewalIID


def renewal_function(spec: RenewalSpec, t: float) -> float:
    """Expected number of arrivals by time ``t``.

    Exact ``rate * t`` for Poisson; for Erlang renewals the convolution
    series is summed until a Chernoff bound puts the neglected tail below
    1e-8.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t == 0:
        return 0.0
    if isinstance(spec, Poisson):
        return spec.rate * t
    n_terms = spec.series_terms(t)
    i = np.arange(1, n_terms + 1)
    vals = special.gammainc(i * spec.interarrival.k, spec.interarrival.rate * t)
    total = float(vals.sum())
    if not math.isfinite(total):
        raise ArithmeticError("renewal series did not evaluate to a finite value")
    return total


def renewal_density(spec: RenewalSpec, t: float, horizon: float | None = None) -> float:
    """Density of the renewal measure at ``t`` (``rate`` for Poisson)."""
    if isinstance(spec, Poisson):
        return spec.rate
    if t <= 0:
        return 0.0
    n_terms = spec.series_terms(horizon if horizon is not None else t)
    i = np.arange(1, n_terms + 1)
    return float(stats.gamma.pdf(t, a=i * spec.interarrival.k, scale=1.0 / spec.interarrival.rate).sum())


def sample_arrivals(spec: RenewalSpec, T: float, rng: np.random.Generator) -> np.ndarray:
    """Arrival times in ``(0, T]``, strictly increasing."""
    if T <= 0:
        raise ValueError("horizon must be positive")
    out = []
    t = 0.0
    block = max(16, int(4 * T / spec.interarrival_mean()) + 16)
    while True:
        gaps = spec.interarrivals_from_uniforms(rng.random(block))
        times = t + np.cumsum(gaps)
        inside = times[times <= T]
        out.append(inside)
        if inside.size < times.size:
            break
        t = float(times[-1])
    return np.concatenate(out)


# ---------------------------------------------------------------------------
# return processes


@dataclass(frozen=True)
class Deterministic:
    """Constant force of interest: ``xi(t) = rate * t`` with ``rate >= 0``."""

    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("deterministic force of interest must be nonnegative")

    uniform_blocks = 0
    nondecreasing_paths = True

    def laplace_exponent(self, k: float) -> float:
        return -k * self.rate

    def xi_at(self, tau: np.ndarray, dtau: np.ndarray, ublocks: tuple) -> np.ndarray:
        return self.rate * tau

    def sample_at(self, times: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return self.rate * np.asarray(times, dtype=float)


@dataclass(frozen=True)
class BrownianDrift:
    """Arithmetic Brownian log-returns: ``xi(t) = mu t + sigma B(t)``."""

    mu: float
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("volatility must be nonnegative")

    uniform_blocks = 1

    @property
    def nondecreasing_paths(self) -> bool:
        return self.sigma == 0.0 and self.mu >= 0.0

    def laplace_exponent(self, k: float) -> float:
        return -k * self.mu + 0.5 * k * k * self.sigma * self.sigma

    def xi_at(self, tau, dtau, ublocks):
        z = special.ndtri(ublocks[0])
        inc = self.mu * dtau + self.sigma * np.sqrt(dtau) * z
        return np.cumsum(inc, axis=-1)

    def sample_at(self, times, rng):
        times = np.asarray(times, dtype=float)
        dtau = np.diff(times, prepend=0.0)
        inc = self.mu * dtau + self.sigma * np.sqrt(dtau) * rng.standard_normal(times.shape)
        return np.cumsum(inc, axis=-1)


@dataclass(frozen=True)
class ExponentialJumps:
    """Exponential jump sizes with the given mean (nonnegative jumps)."""

    mean: float

    def __post_init__(self):
        if self.mean <= 0:
            raise ValueError("jump mean must be positive")

    nonnegative = True

    def mgf_neg(self, k: float) -> float:
        """``E[exp(-k J)]``; finite for ``k > -1/mean``."""
        if k <= -1.0 / self.mean:
            raise ValueError("exponential jump transform diverges at this argument")
        return 1.0 / (1.0 + self.mean * k)

    def block_sum_from_uniform(self, counts: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Sum of ``counts`` i.i.d. jumps via the gamma quantile of one uniform."""
        out = np.zeros_like(u)
        m = counts > 0
        out[m] = special.gammaincinv(counts[m], u[m]) * self.mean
        return out

    def sample_sum(self, count: int, rng: np.random.Generator) -> float:
        return float(rng.exponential(self.mean, count).sum())


@dataclass(frozen=True)
class FixedJumps:
    """Deterministic jump size (any sign)."""

    size: float

    @property
    def nonnegative(self) -> bool:
        return self.size >= 0

    def mgf_neg(self, k: float) -> float:
        return math.exp(-k * self.size)

    def block_sum_from_uniform(self, counts, u):
        return self.size * counts

    def sample_sum(self, count: int, rng) -> float:
        return self.size * count


@dataclass(frozen=True)
class CompoundPoissonDrift:
    """Drift plus compound Poisson jumps: ``xi(t) = drift*t + sum of jumps``."""

    drift: float
    jump_rate: float
    jumps: ExponentialJumps | FixedJumps

    def __post_init__(self):
        if self.jump_rate <= 0:
            raise ValueError("jump rate must be positive")

    uniform_blocks = 2

    @property
    def nondecreasing_paths(self) -> bool:
        return self.drift >= 0 and self.jumps.nonnegative

    def laplace_exponent(self, k: float) -> float:
        return -k * self.drift + self.jump_rate * (self.jumps.mgf_neg(k) - 1.0)

    def xi_at(self, tau, dtau, ublocks):
        counts = _poisson_from_uniform(ublocks[0], self.jump_rate * dtau)
        inc = self.drift * dtau + self.jumps.block_sum_from_uniform(counts, ublocks[1])
        return np.cumsum(inc, axis=-1)

    def sample_at(self, times, rng):
        times = np.asarray(times, dtype=float)
        dtau = np.diff(times, prepend=0.0)
        flat = dtau.reshape(-1)
        counts = rng.poisson(self.jump_rate * flat)
        sums = np.array([self.jumps.sample_sum(int(c), rng) for c in counts])
        inc = self.drift * dtau + sums.reshape(dtau.shape)
        return np.cumsum(inc, axis=-1)


ReturnProcess = Deterministic | BrownianDrift | CompoundPoissonDrift


def _poisson_from_uniform(u: np.ndarray, mean: np.ndarray, max_iter: int = 4096) -> np.ndarray:
    """Inverse-transform Poisson counts with per-cell means."""
    mean = np.asarray(mean, dtype=float)
    pmf = np.exp(-mean)
    cdf = pmf.copy()
    counts = np.zeros_like(mean)
    k = 0
    while True:
        open_cells = u >= cdf
        if not open_cells.any():
            return counts
        k += 1
        if k > max_iter:  # pragma: no cover - defensive
            raise RuntimeError("Poisson inverse transform failed to settle")
        counts[open_cells] += 1
        pmf = pmf * (mean / k)
        cdf = cdf + pmf


def laplace_exponent(proc: ReturnProcess, k: float) -> float:
    """``log E[exp(-k xi(1))]``; raises outside the finiteness domain."""
    return proc.laplace_exponent(k)


@dataclass(frozen=True)
class BoundedBelowResult:
    """Whether the return process stays above a deterministic floor on [0, T]."""

    holds: bool
    bound: float | None

    def __bool__(self) -> bool:
        return self.holds


def check_bounded_below(proc: ReturnProcess, T: float) -> BoundedBelowResult:
    """Check that ``inf_{t <= T} xi(t) >= -K`` almost surely, returning ``K``.

    Holds with ``K = 0`` for nonnegative drift and nonnegative jumps; with
    ``K = |drift| T`` for negative drift and nonnegative jumps.  Fails for any
    Brownian component: those paths are unbounded below on every interval.
    """
    if not math.isfinite(T) or T < 0:
        raise ValueError("need a finite nonnegative horizon")
    if isinstance(proc, Deterministic):
        return BoundedBelowResult(True, 0.0)
    if isinstance(proc, BrownianDrift):
        if proc.sigma > 0:
            return BoundedBelowResult(False, None)
        return BoundedBelowResult(True, max(0.0, -proc.mu * T))
    if isinstance(proc, CompoundPoissonDrift):
        if not proc.jumps.nonnegative:
            return BoundedBelowResult(False, None)
        return BoundedBelowResult(True, max(0.0, -proc.drift * T))
    raise TypeError(f"unknown return process {type(proc).__name__}")


@dataclass(frozen=True)
class SummabilityResult:
    """Outcome of the discounted-moment summability check.

    ``series_bound`` bounds ``sum_i (E[e^{-p1 xi(tau_i)}] v E[e^{-p2 xi(tau_i)}])^{1/rho}``
    by the exact geometric sum available for Levy returns over a renewal
    sequence.
    """

    holds: bool
    rho: float
    series_bound: float | None
    phi_p1: float
    phi_p2: float

    def __bool__(self) -> bool:
        return self.holds


def check_discount_summability(proc: ReturnProcess, renewal: RenewalSpec,
                               p1: float, p2: float,
                               tail_index_upper: float) -> SummabilityResult:
    """Verify geometric summability of discounted exceedance moments.

    Requires exponents ``0 < p1 < p2`` bracketing the scalarized claim law's
    polynomial decay exponents and a positive upper exponent.  The exponent
    ``rho`` is 1 when the upper decay exponent is below one and ``p2``
    otherwise.  The check passes when the Laplace exponent is negative at
    both ``p1`` and ``p2``; the returned bound is
    ``q^{1/rho} / (1 - q^{1/rho})`` with
    ``q = max_j E[exp(tau_1 * phi(p_j))]``.
    """
    if not 0 < p1 < p2:
        raise ValueError("need 0 < p1 < p2")
    if tail_index_upper <= 0:
        raise ValueError("upper decay exponent must be positive")
    rho = 1.0 if tail_index_upper < 1.0 else p2
    phi1 = proc.laplace_exponent(p1)
    phi2 = proc.laplace_exponent(p2)
    if phi1 >= 0 or phi2 >= 0:
        return SummabilityResult(False, rho, None, phi1, phi2)
    q = max(renewal.interarrival_laplace(-phi1), renewal.interarrival_laplace(-phi2))
    qr = q ** (1.0 / rho)
    return SummabilityResult(True, rho, qr / (1.0 - qr), phi1, phi2)


def discount_integral_tail_bound(proc: ReturnProcess, renewal: RenewalSpec,
                                 alpha: float, T: float) -> float:
    """Upper bound on ``integral_T^inf E[exp(-alpha xi(s))] d(renewal measure)``.

    Exact for Poisson arrivals; otherwise a Cauchy-Schwarz split of each
    renewal term gives ``exp(phi T / 2) * q / (1 - q)`` with
    ``q = E[exp(tau_1 phi / 2)]``.  Requires ``phi(alpha) < 0``.
    """
    phi = proc.laplace_exponent(alpha)
    if phi >= 0:
        raise ValueError("discounted integral diverges: Laplace exponent is nonnegative")
    if isinstance(renewal, Poisson):
        return renewal.rate * math.exp(T * phi) / (-phi)
    q = renewal.interarrival_laplace(-phi / 2.0)
    return math.exp(phi * T / 2.0) * q / (1.0 - q)


def truncation_horizon(proc: ReturnProcess, renewal: RenewalSpec, alpha: float,
                       rel_bound: float = 1e-3) -> float:
    """Horizon ``T*`` past which the discounted tail is below ``rel_bound``
    of the total discounted integral, in the geometric proxy."""
    phi = proc.laplace_exponent(alpha)
    if phi >= 0:
        raise ValueError("no finite truncation horizon: Laplace exponent is nonnegative")
    total = _discount_integral_total(proc, renewal, alpha)
    T = max(1.0, -math.log(2.0) / phi)
    for _ in range(200):
        tail = discount_integral_tail_bound(proc, renewal, alpha, T)
        if tail <= rel_bound * max(total - tail, 1e-300):
            return T
        T *= 1.25
    raise RuntimeError("truncation horizon search did not converge")  # pragma: no cover


def _discount_integral_total(proc: ReturnProcess, renewal: RenewalSpec, alpha: float) -> float:
    """``integral_0^inf E[exp(-alpha xi(s))] d(renewal measure)`` exactly.

    Equals the geometric sum of interarrival transforms at ``-phi(alpha)``.
    """
    phi = proc.laplace_exponent(alpha)
    q = renewal.interarrival_laplace(-phi)
    return q / (1.0 - q)
