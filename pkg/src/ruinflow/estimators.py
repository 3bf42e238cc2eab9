"""Asymptotic estimates for entrance probabilities of discounted claim vectors.

The central object is the first-order approximation

    P[ D(T) in x*A ]  ~  integral_0^T  P[ X exp(-xi(s)) in x*A ]  d(renewal measure)

valid as ``x -> infinity`` under one of three hypothesis sets, enforced here
as hard gates unless explicitly bypassed:

``consistent-variation`` (finite horizon)
    scalarized claim law consistently varying, scalarized exceedances
    quasi-asymptotically independent, returns bounded below on [0, T].

``subexponential-monotone`` (finite horizon)
    scalarized claim law subexponential, scalarized exceedances regression
    dependent, return paths non-decreasing.

``infinite-horizon`` (T = infinity)
    scalarized claim law consistently varying and positively decreasing,
    quasi-asymptotic independence, and geometric summability of the
    discounted moments (checked through the Laplace exponent).

For claim vectors with a jointly regularly-varying (heaviest-tail) structure
the right-hand side collapses to the closed form
``mu(A) * S_ref(x) * integral e^{s phi(alpha)} d(renewal measure)`` exposed by
:func:`mrv_closed_form`, with the limit-measure mass :func:`mrv_mu` available
for independent components in the parametric set catalog.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import adaptive_simpson
from .dependence import ClaimModel, UnsupportedModelError, scalarized_survival
from .heavy_tails import Pareto, TailDistribution
from .processes import (
    BrownianDrift,
    CompoundPoissonDrift,
    Deterministic,
    Poisson,
    RenewalSpec,
    ReturnProcess,
    check_bounded_below,
    check_discount_summability,
    discount_integral_tail_bound,
    renewal_density,
    truncation_horizon,
)
from .rare_sets import HalfSpace, MaxExceed, PolyhedralUnion, RareSet, Ray

__all__ = [
    "MrvSpec",
    "ModelSpec",
    "HypothesisError",
    "ModeReport",
    "resolve_finite_mode",
    "resolve_infinite_mode",
    "single_claim_entrance",
    "single_claim_entrance_detail",
    "asymptotic_entrance_finite",
    "asymptotic_entrance_infinite",
    "InfiniteHorizonEstimate",
    "mrv_mu",
    "mrv_closed_form",
    "derive_mrv",
    "entrance_time_cdf",
]

GH_NODES = 64
INNER_MC_DRAWS = 100_000


class HypothesisError(ValueError):
    """A theorem-mode hypothesis failed; carries the named violations."""

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__(
            "asymptotic mode unavailable: " + "; ".join(self.failures)
        )


@dataclass(frozen=True)
class MrvSpec:
    """Jointly regularly-varying description of the claim vector.

    ``alpha`` is the common tail index, ``reference_tail`` the normalizing
    survival function, and ``mu_of_a`` the limit-measure mass of the
    configured target set (finite and positive).
    """

    alpha: float
    reference_tail: TailDistribution
    mu_of_a: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("tail index must be positive")
        if not 0 <= self.mu_of_a < math.inf:
            raise ValueError("limit-measure mass must be finite and nonnegative")


@dataclass(frozen=True)
class ModelSpec:
    """Full experiment model: claims, target set, arrivals, returns."""

    claim: ClaimModel
    rare_set: RareSet
    renewal: RenewalSpec
    ret: ReturnProcess
    mrv: MrvSpec | None = None

    def __post_init__(self):
        if self.claim.d != self.rare_set.dim:
            raise ValueError("claim dimension does not match set dimension")

    def with_derived_mrv(self) -> "ModelSpec":
        spec = derive_mrv(self.claim, self.rare_set)
        return ModelSpec(self.claim, self.rare_set, self.renewal, self.ret, spec)


@dataclass(frozen=True)
class ModeReport:
    """Resolved asymptotic mode plus the individual hypothesis checks."""

    mode: str | None
    checks: tuple[tuple[str, bool, str], ...]
    summability: object | None = None

    @property
    def failures(self) -> list[str]:
        return [f"{name}: {detail}" for name, ok, detail in self.checks if not ok]

    def require(self):
        if self.mode is None:
            raise HypothesisError(self.failures)
        return self


def _base_checks(model: ModelSpec) -> list[tuple[str, bool, str]]:
    ident = model.claim.identically_distributed
    return [(
        "identically distributed claim vectors",
        ident,
        "holds" if ident else "the dependence structure alternates vector laws",
    )]


def resolve_finite_mode(model: ModelSpec, T: float) -> ModeReport:
    """Pick the finite-horizon mode whose hypotheses the model satisfies.

    Tries the consistent-variation mode first, then the
    subexponential-monotone mode; the report lists every check so gate
    failures can name the violated hypothesis.
    """
    if not (math.isfinite(T) and T > 0):
        raise ValueError("need a finite positive horizon")
    tags = model.claim.scalarized_tags(model.rare_set)
    bounded = check_bounded_below(model.ret, T)
    checks = _base_checks(model)
    cv_checks = checks + [
        ("consistently varying scalarized claims", tags.consistently_varying,
         "holds" if tags.consistently_varying else "scalarized law lacks consistent variation"),
        ("quasi-asymptotically independent scalarizations", model.claim.scalarized_qai,
         "holds"),
        ("returns bounded below on [0, T]", bounded.holds,
         f"floor {bounded.bound:g}" if bounded.holds else "paths are unbounded below (Brownian component)"),
    ]
    if all(ok for _, ok, _ in cv_checks):
        return ModeReport("consistent-variation", tuple(cv_checks))
    sub_checks = checks + [
        ("subexponential scalarized claims", tags.subexponential,
         "holds" if tags.subexponential else "scalarized law is not subexponential"),
        ("regression-dependent scalarizations", model.claim.scalarized_rd,
         "holds" if model.claim.scalarized_rd else "dependence structure violates regression dependence"),
        ("non-decreasing return paths", model.ret.nondecreasing_paths,
         "holds" if model.ret.nondecreasing_paths else "return paths can decrease"),
    ]
    if all(ok for _, ok, _ in sub_checks):
        return ModeReport("subexponential-monotone", tuple(sub_checks))
    seen = {}
    for name, ok, detail in cv_checks + sub_checks:
        seen.setdefault(name, (name, ok, detail))
    return ModeReport(None, tuple(seen.values()))


def _pick_summability_exponents(model: ModelSpec) -> tuple[float, float] | None:
    j = model.claim.scalarized_matuszewska(model.rare_set)
    if j is None:
        return None
    j_lo, j_up = j
    p1 = 0.5 * j_lo
    p2 = j_up + 1.0
    if model.ret.laplace_exponent(p2) < 0:
        return p1, p2
    # the Laplace exponent turns nonnegative before j_up + 1: bisect for its
    # positive root and aim halfway between the decay exponent and the root
    lo, hi = j_up, j_up + 1.0
    if model.ret.laplace_exponent(lo) >= 0:
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if model.ret.laplace_exponent(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-9:
            break
    root = lo
    if root <= j_up * (1 + 1e-9):
        return None
    return p1, 0.5 * (j_up + root)


def resolve_infinite_mode(model: ModelSpec,
                          p_exponents: tuple[float, float] | None = None) -> ModeReport:
    """Check the infinite-horizon hypotheses, including moment summability."""
    tags = model.claim.scalarized_tags(model.rare_set)
    checks = _base_checks(model)
    checks.append((
        "consistently varying scalarized claims", tags.consistently_varying,
        "holds" if tags.consistently_varying else "scalarized law lacks consistent variation"))
    checks.append((
        "positively decreasing scalarized claims", tags.positively_decreasing,
        "holds" if tags.positively_decreasing else "lower decay exponent is zero"))
    checks.append((
        "quasi-asymptotically independent scalarizations", model.claim.scalarized_qai, "holds"))
    summability = None
    j = model.claim.scalarized_matuszewska(model.rare_set)
    if j is None:
        checks.append(("finite polynomial decay exponents", False,
                       "scalarized law decays faster than every power"))
    else:
        exps = p_exponents or _pick_summability_exponents(model)
        if exps is None:
            checks.append(("discounted-moment summability", False,
                           "no exponent above the upper decay exponent has a negative Laplace exponent"))
        else:
            p1, p2 = exps
            summability = check_discount_summability(model.ret, model.renewal, p1, p2, j[1])
            detail = (
                f"p1={p1:g}, p2={p2:g}, rho={summability.rho:g}, "
                f"phi(p1)={summability.phi_p1:.6g}, phi(p2)={summability.phi_p2:.6g}"
            )
            if summability.holds:
                detail += f", series bound {summability.series_bound:.6g}"
            checks.append(("discounted-moment summability", summability.holds, detail))
    ok = all(flag for _, flag, _ in checks)
    return ModeReport("infinite-horizon" if ok else None, tuple(checks), summability)


# ---------------------------------------------------------------------------
# single-claim entrance expectation


_GH_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_hermite(n: int):
    if n not in _GH_CACHE:
        x, w = np.polynomial.hermite.hermgauss(n)
        _GH_CACHE[n] = (x, w / math.sqrt(math.pi))
    return _GH_CACHE[n]


def single_claim_entrance_detail(model: ModelSpec, x: float, s: float,
                                 rng: np.random.Generator | None = None,
                                 mc_draws: int = INNER_MC_DRAWS):
    """``E[ S_A(x exp(xi(s))) ]`` with the standard error of the estimate.

    ``S_A`` is the scalarized single-vector survival.  Deterministic returns
    evaluate directly, Brownian returns by Gauss-Hermite quadrature over the
    Gaussian log-return (zero standard error), anything else by inner Monte
    Carlo over ``mc_draws`` return samples.
    """
    if x <= 0:
        raise ValueError("threshold must be positive")
    if s < 0:
        raise ValueError("time must be nonnegative")
    sf = lambda v: scalarized_survival(model.claim, model.rare_set, v)
    ret = model.ret
    if s == 0:
        return float(sf(x)), 0.0
    if isinstance(ret, Deterministic):
        return float(sf(x * math.exp(ret.rate * s))), 0.0
    if isinstance(ret, BrownianDrift):
        if ret.sigma == 0:
            return float(sf(x * math.exp(ret.mu * s))), 0.0
        nodes, weights = _gauss_hermite(GH_NODES)
        xi = ret.mu * s + ret.sigma * math.sqrt(2.0 * s) * nodes
        vals = sf(x * np.exp(xi))
        return float(np.dot(weights, vals)), 0.0
    if rng is None:
        raise UnsupportedModelError(
            "no quadrature for this return process; pass an rng to enable inner Monte Carlo")
    xi = _sample_xi_single_time(ret, s, mc_draws, rng)
    vals = np.asarray(sf(x * np.exp(xi)))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(mc_draws))


def _sample_xi_single_time(ret: ReturnProcess, s: float, n: int,
                           rng: np.random.Generator) -> np.ndarray:
    if isinstance(ret, CompoundPoissonDrift):
        counts = rng.poisson(ret.jump_rate * s, n)
        sums = ret.jumps.block_sum_from_uniform(counts.astype(float), rng.random(n))
        return ret.drift * s + sums
    raise UnsupportedModelError(
        f"no sampler for return process {type(ret).__name__}")


def single_claim_entrance(model: ModelSpec, x: float, s: float,
                          rng: np.random.Generator | None = None) -> float:
    """Entrance probability of a single discounted claim at lag ``s``."""
    return single_claim_entrance_detail(model, x, s, rng)[0]


# ---------------------------------------------------------------------------
# horizon integrals


def asymptotic_entrance_finite(model: ModelSpec, x: float, T: float,
                               rel_tol: float = 1e-4, unsafe: bool = False,
                               rng: np.random.Generator | None = None) -> float:
    """First-order entrance approximation over a finite horizon.

    Adaptive Simpson integration of the single-claim entrance probability
    against the renewal density; the hypothesis gate runs first unless
    ``unsafe`` is set.
    """
    if T == 0:
        return 0.0
    if not unsafe:
        resolve_finite_mode(model, T).require()
    dens = (lambda s: model.renewal.rate) if isinstance(model.renewal, Poisson) \
        else (lambda s: renewal_density(model.renewal, s, horizon=T))
    f = lambda s: single_claim_entrance(model, x, s, rng) * dens(s)
    return adaptive_simpson(f, 0.0, T, rel_tol=rel_tol)


@dataclass(frozen=True)
class InfiniteHorizonEstimate:
    """Truncated infinite-horizon value with its analytic tail bound."""

    value: float
    horizon: float
    tail_bound: float
    tail_bound_rel: float

    def __float__(self) -> float:
        return self.value


def asymptotic_entrance_infinite(model: ModelSpec, x: float,
                                 rel_bound: float = 1e-3,
                                 rel_tol: float = 1e-4,
                                 unsafe: bool = False) -> InfiniteHorizonEstimate:
    """First-order entrance approximation with ``T = infinity``.

    Evaluates the finite integral up to a truncation horizon and attaches an
    analytic bound on the neglected tail; the horizon grows until the bound
    drops below ``rel_bound`` of the running value.  The bound combines the
    global polynomial envelope of the scalarized claim law with the
    geometric decay of the discounted moments.
    """
    if not unsafe:
        resolve_infinite_mode(model).require()
    env = model.claim.pareto_envelope(model.rare_set)
    if env is None:
        raise UnsupportedModelError(
            "truncation bound needs a polynomial envelope with one shared tail index")
    c_env, alpha = env
    T = truncation_horizon(model.ret, model.renewal, alpha, rel_bound)
    for _ in range(60):
        value = asymptotic_entrance_finite(model, x, T, rel_tol=rel_tol, unsafe=True)
        bound = c_env * x**-alpha * discount_integral_tail_bound(
            model.ret, model.renewal, alpha, T)
        if bound <= rel_bound * value:
            return InfiniteHorizonEstimate(value, T, bound, bound / value)
        T *= 1.25
    raise RuntimeError("truncation horizon search did not converge")  # pragma: no cover


# ---------------------------------------------------------------------------
# regular-variation closed forms


def mrv_mu(tail_weights, alpha: float, rare_set: RareSet) -> float:
    """Limit-measure mass of a catalog set for independent regularly-varying
    components with the given tail weights.

    The limit measure of an independent-component vector concentrates on the
    coordinate axes, so the mass is a weighted sum of one-dimensional power
    tails: ``sum_i c_i b_i**-alpha`` for max-type sets,
    ``sum_i c_i (l_i/b)**alpha`` for weighted-sum sets, ``c_1 b**-alpha`` for
    rays.
    """
    c = np.asarray(tail_weights, dtype=float)
    if np.any(c < 0):
        raise ValueError("tail weights must be nonnegative")
    if alpha <= 0:
        raise ValueError("tail index must be positive")
    if c.size != rare_set.dim:
        raise ValueError("tail-weight dimension does not match the set")
    if isinstance(rare_set, MaxExceed):
        return float(np.sum(c * np.asarray(rare_set.b) ** -alpha))
    if isinstance(rare_set, Ray):
        return float(c[0] * rare_set.b**-alpha)
    if isinstance(rare_set, HalfSpace):
        return float(np.sum(c * (np.asarray(rare_set.l) / rare_set.b) ** alpha))
    if isinstance(rare_set, PolyhedralUnion):
        raise UnsupportedModelError(
            "limit mass of a polyhedral union is not a sum of member masses; unsupported")
    raise TypeError(f"unknown rare set {type(rare_set).__name__}")


def derive_mrv(claim: ClaimModel, rare_set: RareSet) -> MrvSpec:
    """Build the regular-variation description from independent catalog margins.

    Requires every margin to be regularly varying with one common index and a
    pure power envelope; the reference tail is the unit-scale Pareto of that
    index, making each component's tail weight its envelope constant.
    Dependence specs without identically distributed vectors are rejected.
    """
    if not claim.identically_distributed:
        raise UnsupportedModelError(
            "regular-variation description needs identically distributed vectors")
    alpha = claim.common_tail_index()
    if alpha is None:
        raise UnsupportedModelError(
            "margins must share one regular-variation index")
    weights = []
    for m in claim.margins:
        env = m.pareto_envelope()
        if env is None:
            raise UnsupportedModelError(
                f"margin {type(m).__name__} has no power-tail weight")
        weights.append(env[0])
    return MrvSpec(alpha=alpha, reference_tail=Pareto(alpha, 1.0),
                   mu_of_a=mrv_mu(weights, alpha, rare_set))


def mrv_closed_form(model: ModelSpec, x: float, T: float) -> float:
    """Closed-form first-order entrance value for regularly-varying claims.

    ``mu(A) * S_ref(x) * integral_0^T exp(s phi(alpha)) d(renewal measure)``,
    with the Poisson integral in closed form; ``T`` may be ``math.inf`` when
    ``phi(alpha) < 0``.
    """
    if model.mrv is None:
        raise ValueError("model carries no regular-variation description")
    if x <= 0:
        raise ValueError("threshold must be positive")
    spec = model.mrv
    phi = model.ret.laplace_exponent(spec.alpha)
    if math.isinf(T):
        if phi >= 0:
            raise ValueError(
                "infinite-horizon closed form diverges: Laplace exponent is nonnegative")
        if isinstance(model.renewal, Poisson):
            integral = model.renewal.rate / (-phi)
        else:
            q = model.renewal.interarrival_laplace(-phi)
            integral = q / (1.0 - q)
    else:
        if T < 0:
            raise ValueError("horizon must be nonnegative")
        if isinstance(model.renewal, Poisson):
            lam = model.renewal.rate
            integral = lam * T if phi == 0 else lam * (1.0 - math.exp(T * phi)) / (-phi)
        else:
            integral = adaptive_simpson(
                lambda s: math.exp(s * phi) * renewal_density(model.renewal, s, horizon=T),
                0.0, T, rel_tol=1e-6)
    return spec.mu_of_a * float(spec.reference_tail.survival(x)) * integral


def entrance_time_cdf(alpha: float, r: float, T: float) -> float:
    """Limiting conditional law of the first entrance time.

    For regularly-varying claims with index ``alpha``, Poisson arrivals, and
    a constant force of interest ``r``, the first entrance time conditioned
    on being finite is asymptotically exponential with rate ``alpha * r``.
    """
    if alpha <= 0 or r <= 0:
        raise ValueError("need alpha > 0 and r > 0")
    if T < 0:
        raise ValueError("time must be nonnegative")
    return 1.0 - math.exp(-alpha * r * T)
