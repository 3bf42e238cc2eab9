"""Discounted surplus processes, ruin events, and ruin-probability asymptotics.

The surplus of ``d`` lines of business with initial capital ``x`` allocated
by the vector ``l`` is

    U(t) = x*l + integral_0^t e^{-xi(s)} p(s) ds - D(t),

with piecewise-constant premium densities ``p``.  Ruin by horizon ``T`` is
the entrance of ``U`` into a ruin set (some line negative, or the weighted
total negative).  Because the ruin sets are scale-insensitive, ruin is the
entrance of the net claim process into ``x*(l - L)``, so ruin estimation and
asymptotics delegate to the entrance machinery on the mapped target set.

Ruin can only occur at claim-arrival epochs: premiums accrue continuously
and nonnegatively while claims are downward jumps, so checking the surplus
at arrivals is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dependence import ClaimModel
from .estimators import (
    HypothesisError,
    ModelSpec,
    asymptotic_entrance_finite,
    asymptotic_entrance_infinite,
    resolve_finite_mode,
    resolve_infinite_mode,
)
from .montecarlo import (
    AggregatePath,
    EstimateTable,
    SimConfig,
    _AggregateTask,
    _finish_table,
    _make_layout,
    _run_chunks,
    _simulate_aggregate_chunk,
)
from .processes import Deterministic, RenewalSpec, ReturnProcess
from .rare_sets import RareSet, RuinSet, from_ruin_set

__all__ = [
    "PremiumSchedule",
    "RuinModel",
    "surplus_path",
    "empirical_ruin",
    "asymptotic_ruin",
]


@dataclass(frozen=True)
class PremiumSchedule:
    """Piecewise-constant premium densities per line of business.

    ``rates[j]`` applies on ``[breaks[j], breaks[j+1])``; the last piece
    extends indefinitely.  Densities must be nonnegative and therefore
    bounded by their maximum on every finite horizon.
    """

    breaks: tuple[float, ...]
    rates: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        breaks = tuple(float(b) for b in self.breaks)
        rates = tuple(tuple(float(r) for r in row) for row in self.rates)
        if not breaks or breaks[0] != 0.0 or list(breaks) != sorted(breaks):
            raise ValueError("piece boundaries must start at 0 and increase")
        if len(rates) != len(breaks):
            raise ValueError("need one rate row per piece")
        widths = {len(row) for row in rates}
        if len(widths) != 1:
            raise ValueError("rate rows must share one dimension")
        if any(r < 0 for row in rates for r in row):
            raise ValueError("premium densities must be nonnegative")
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "rates", rates)

    @classmethod
    def constant(cls, rates) -> "PremiumSchedule":
        return cls(breaks=(0.0,), rates=(tuple(float(r) for r in np.atleast_1d(rates)),))

    @classmethod
    def zero(cls, d: int) -> "PremiumSchedule":
        return cls.constant((0.0,) * d)

    @property
    def d(self) -> int:
        return len(self.rates[0])

    @property
    def bound(self) -> float:
        """Uniform upper bound on every density."""
        return max(r for row in self.rates for r in row)

    @property
    def is_zero(self) -> bool:
        return self.bound == 0.0

    def density(self, t: float) -> np.ndarray:
        j = int(np.searchsorted(self.breaks, t, side="right")) - 1
        return np.asarray(self.rates[max(j, 0)], dtype=float)


@dataclass(frozen=True)
class RuinModel:
    """Surplus model: claims/arrivals/returns, allocation, premiums, ruin set."""

    claim: ClaimModel
    renewal: RenewalSpec
    ret: ReturnProcess
    alloc: tuple[float, ...]
    ruin_set: RuinSet
    premiums: PremiumSchedule | None = None

    def __post_init__(self):
        alloc = tuple(float(a) for a in self.alloc)
        if len(alloc) != self.claim.d:
            raise ValueError("allocation dimension must match the claim dimension")
        premiums = self.premiums if self.premiums is not None else PremiumSchedule.zero(self.claim.d)
        if premiums.d != self.claim.d:
            raise ValueError("premium dimension must match the claim dimension")
        object.__setattr__(self, "alloc", alloc)
        object.__setattr__(self, "premiums", premiums)
        # validates positivity and normalization of the allocation
        object.__setattr__(self, "_mapped_set", from_ruin_set(self.ruin_set, alloc))

    @property
    def mapped_set(self) -> RareSet:
        return self._mapped_set

    def entrance_model(self) -> ModelSpec:
        """The entrance model whose target set encodes this ruin event."""
        return ModelSpec(self.claim, self.mapped_set, self.renewal, self.ret)


def discounted_premium_integral(model: RuinModel, times, rng_path_xi=None,
                                grid_steps: int = 10_000) -> np.ndarray:
    """``integral_0^t e^{-xi(s)} p(s) ds`` at each requested time.

    Exact piecewise evaluation under deterministic returns.  For stochastic
    returns the integral is a trapezoid sum on a refined grid with the
    log-return path linearly interpolated between its sampled arrival-epoch
    values (``rng_path_xi`` maps sorted times to sampled values).
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    prem = model.premiums
    if prem.is_zero:
        return np.zeros(times.shape + (model.claim.d,))
    if isinstance(model.ret, Deterministic):
        from .montecarlo import _discounted_premium_at

        return _discounted_premium_at(times[None, :], prem.breaks,
                                      np.asarray(prem.rates), model.ret.rate)[0]
    if rng_path_xi is None:
        raise ValueError("stochastic returns need the sampled log-return path")
    anchor_t, anchor_xi = rng_path_xi
    horizon = float(times.max())
    grid = np.linspace(0.0, horizon, grid_steps + 1)
    xi_grid = np.interp(grid, np.concatenate([[0.0], anchor_t]),
                        np.concatenate([[0.0], anchor_xi]))
    dens = np.stack([model.premiums.density(t) for t in grid])
    integrand = np.exp(-xi_grid)[:, None] * dens
    cum = np.concatenate([
        np.zeros((1, model.claim.d)),
        np.cumsum(0.5 * (integrand[1:] + integrand[:-1])
                  * np.diff(grid)[:, None], axis=0),
    ])
    out = np.empty(times.shape + (model.claim.d,))
    for j in range(model.claim.d):
        out[..., j] = np.interp(times, grid, cum[:, j])
    return out


def surplus_path(model: RuinModel, path: AggregatePath, x: float) -> np.ndarray:
    """Surplus vectors at the path's arrival epochs for initial capital ``x``.

    ``U(tau_k) = x*alloc + integral_0^{tau_k} e^{-xi} p - D(tau_k)``.
    """
    if x < 0:
        raise ValueError("initial capital must be nonnegative")
    alloc = np.asarray(model.alloc)
    if path.n_arrivals == 0:
        return np.zeros((0, model.claim.d))
    discounted = path.claims * np.exp(-path.log_returns)[:, None]
    running = np.cumsum(discounted, axis=0)
    prem = discounted_premium_integral(
        model, path.arrival_times,
        rng_path_xi=(path.arrival_times, path.log_returns))
    return x * alloc[None, :] + prem - running


def empirical_ruin(model: RuinModel, x_grid, T: float, sim: SimConfig,
                   unsafe: bool = False) -> EstimateTable:
    """Empirical ruin probabilities over the capital grid, with asymptotics.

    The result table carries a ``ruin_set`` column naming the event (``or``
    for any-line ruin, ``sum`` for weighted-total ruin) and, in its metadata,
    the entrance counts of ``D(T)`` on the same paths for sandwich coupling
    checks.
    """
    sim = replace(sim, x_grid=tuple(float(v) for v in x_grid), horizon=T)
    entrance = model.entrance_model()
    if not model.premiums.is_zero and not isinstance(model.ret, Deterministic):
        raise NotImplementedError(
            "vectorized ruin with premiums needs deterministic returns; "
            "use surplus_path for stochastic-return premium accrual")
    if math.isinf(T):
        horizon, asym_vals, meta = _infinite_ruin_asymptotics(model, entrance, sim, unsafe)
    else:
        if not unsafe:
            resolve_finite_mode(entrance, T).require()
        _check_premium_finiteness(model, T)
        asym_vals = np.asarray([
            asymptotic_entrance_finite(entrance, x, T, unsafe=True) for x in sim.x_grid
        ])
        horizon, meta = T, {}
    rate = model.ret.rate if isinstance(model.ret, Deterministic) else 0.0
    layout = _make_layout(model.claim, model.ret, model.renewal, horizon)
    proto = _AggregateTask(
        claim=model.claim, rare_set=model.mapped_set, renewal=model.renewal,
        ret=model.ret, horizon=horizon, seed=sim.seed, start=0, count=0,
        layout=layout, x_grid=sim.x_grid, want_entrance=True,
        ruin={
            "mapped_set": model.mapped_set,
            "premium_breaks": model.premiums.breaks,
            "premium_rates": None if model.premiums.is_zero else np.asarray(model.premiums.rates),
            "rate": rate,
        })
    merged = _run_chunks(proto, _simulate_aggregate_chunk, sim.n_paths, sim.n_workers)
    meta.update(
        n_paths=sim.n_paths, seed=sim.seed,
        entrance_counts=merged["entrance_counts"],
        premium_bound=model.premiums.bound,
    )
    return _finish_table(sim.x_grid, merged["ruin_counts"], sim.n_paths,
                         sim.ci_level, asym_vals,
                         extra={"ruin_set": model.ruin_set.name}, meta=meta)


def _infinite_ruin_asymptotics(model: RuinModel, entrance: ModelSpec,
                               sim: SimConfig, unsafe: bool):
    if not unsafe:
        resolve_infinite_mode(entrance).require()
    _check_premium_finiteness(model, math.inf)
    estimates = [asymptotic_entrance_infinite(entrance, x, unsafe=True) for x in sim.x_grid]
    horizon = max(e.horizon for e in estimates)
    meta = {
        "truncation_horizon": horizon,
        "tail_bound_rel": max(e.tail_bound_rel for e in estimates),
    }
    return horizon, np.asarray([e.value for e in estimates]), meta


def _check_premium_finiteness(model: RuinModel, T: float) -> None:
    """Discounted premium integrals must be finite (a.s.) on the horizon.

    Automatic for zero premiums or any finite horizon with bounded
    densities; over an infinite horizon it holds for a positive constant
    force of interest and, for stochastic returns, whenever the discount
    moment ``E[e^{-xi(s)}]`` decays geometrically (negative Laplace exponent
    at one).
    """
    if model.premiums.is_zero or not math.isinf(T):
        return
    ret = model.ret
    if isinstance(ret, Deterministic):
        if ret.rate > 0:
            return
        raise HypothesisError([
            "discounted premiums: infinite-horizon premiums diverge without "
            "a positive force of interest"])
    if ret.laplace_exponent(1.0) < 0:
        return
    raise HypothesisError([
        "discounted premiums: not verifiably finite over an infinite horizon "
        "(the discount moment does not decay)"])


def asymptotic_ruin(model: RuinModel, x: float, T: float, unsafe: bool = False):
    """First-order ruin approximation: the entrance value on the mapped set.

    Finite horizons return a float; ``T = math.inf`` returns an
    :class:`~ruinflow.estimators.InfiniteHorizonEstimate`.
    """
    entrance = model.entrance_model()
    _check_premium_finiteness(model, T)
    if math.isinf(T):
        return asymptotic_entrance_infinite(entrance, x, unsafe=unsafe)
    return asymptotic_entrance_finite(entrance, x, T, unsafe=unsafe)
