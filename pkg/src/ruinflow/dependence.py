"""Claim-vector models: marginal laws, inter-vector dependence, diagnostics.

A :class:`ClaimModel` couples per-component marginal tail distributions
(components are independent within a vector for every supported structure)
with one of three inter-vector dependence generators:

``IID``
    Vectors are independent and identically distributed.

``FgmChain``
    Consecutive vector pairs ``(1, 2), (3, 4), ...`` are linked through a
    four-variable FGM survival structure: all four coupled components share
    one absolutely continuous marginal, any two and any three of them are
    independent, and only the full 4-tuple carries the coupling parameter.
    Pairs are independent of each other.  The copula density is bounded
    between ``1 - |theta|`` and ``1 + |theta|`` times the independent one, so
    scalarized exceedances are regression dependent (and in particular
    quasi-asymptotically independent) for every catalog set.

``CubicPair``
    Consecutive vector pairs where same-index components are linked through
    the joint survival ``(1 + x^3 + y)**-1``; first vectors carry cubic
    marginals, second vectors harmonic marginals.  The scalarized
    exceedances are quasi-asymptotically independent but *not* regression
    dependent: the conditional exceedance ratio stays above 3/4 in the
    limit.

Sampling is by conditional inverse transform from the explicit joint
survival functions; every conditional inverse used here is closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._util import wilson_interval
from .heavy_tails import ClassTags, CubicSurvival, HarmonicSurvival, TailDistribution
from .rare_sets import HalfSpace, MaxExceed, PolyhedralUnion, RareSet, Ray, z_index

__all__ = [
    "IID",
    "FgmChain",
    "CubicPair",
    "ClaimModel",
    "UnsupportedModelError",
    "NoExceedanceError",
    "EmpiricalRatio",
    "fgm_joint_survival",
    "fgm_conditional_inverse",
    "scalarized_survival",
    "qai_ratio",
    "rd_violation_ratio",
]

#: exceedance counts below this are flagged unreliable in empirical ratios
RELIABLE_COUNT = 20


class UnsupportedModelError(ValueError):
    """No analytic route exists for the requested (model, set) pair."""


class NoExceedanceError(RuntimeError):
    """Empirical ratio undefined: the threshold produced no exceedances."""


@dataclass(frozen=True)
class IID:
    pass


@dataclass(frozen=True)
class FgmChain:
    theta: float
    marginal: TailDistribution

    def __post_init__(self):
        if not -1.0 <= self.theta <= 1.0:
            raise ValueError("FGM coupling parameter must lie in [-1, 1]")


@dataclass(frozen=True)
class CubicPair:
    pass


@dataclass(frozen=True)
class ClaimModel:
    """Multivariate claim-vector law with an inter-vector dependence generator.

    ``margins`` are the component laws of the first vector in each dependence
    block; components are independent within a vector.  Claim vectors are
    nonnegative and never almost-surely zero.
    """

    margins: tuple[TailDistribution, ...]
    inter: IID | FgmChain | CubicPair = IID()

    def __post_init__(self):
        margins = tuple(self.margins)
        if not margins:
            raise ValueError("need at least one margin")
        if isinstance(self.inter, FgmChain):
            if len(margins) != 2 or any(m != self.inter.marginal for m in margins):
                raise ValueError("FGM chain couples two components sharing one marginal")
        if isinstance(self.inter, CubicPair):
            if margins != (CubicSurvival(), CubicSurvival()):
                raise ValueError("cubic-pair margins are fixed by its joint survival")
        object.__setattr__(self, "margins", margins)

    @classmethod
    def iid(cls, margins) -> "ClaimModel":
        return cls(margins=tuple(margins), inter=IID())

    @classmethod
    def fgm_chain(cls, theta: float, marginal: TailDistribution) -> "ClaimModel":
        return cls(margins=(marginal, marginal), inter=FgmChain(theta, marginal))

    @classmethod
    def cubic_pair(cls) -> "ClaimModel":
        return cls(margins=(CubicSurvival(), CubicSurvival()), inter=CubicPair())

    @property
    def d(self) -> int:
        return len(self.margins)

    @property
    def identically_distributed(self) -> bool:
        """Whether all vectors in the sequence share one distribution."""
        return not isinstance(self.inter, CubicPair)

    @property
    def scalarized_rd(self) -> bool:
        """Regression dependence of the scalarized exceedance sequence."""
        return not isinstance(self.inter, CubicPair)

    @property
    def scalarized_qai(self) -> bool:
        """Quasi-asymptotic independence of the scalarized exceedances."""
        return True

    def second_margins(self) -> tuple[TailDistribution, ...]:
        """Margins of the second vector in each block (differs for CubicPair)."""
        if isinstance(self.inter, CubicPair):
            return (HarmonicSurvival(), HarmonicSurvival())
        return self.margins

    def scalarized_tags(self, rare_set: RareSet) -> ClassTags:
        """Curated class tags of the scalarized law ``P[z_index(X) > .]``.

        The scalarization of a vector with independent catalog margins
        inherits the intersection of the margins' memberships: max-type sets
        give tail-sum equivalents, weighted sums preserve each catalog class
        under convolution with same-or-lighter tails.
        """
        tags = self.margins[0].tags
        for m in self.margins[1:]:
            tags = tags.intersect(m.tags)
        if not self.identically_distributed:
            for m in self.second_margins():
                tags = tags.intersect(m.tags)
        return tags

    def common_tail_index(self) -> float | None:
        """Shared regular-variation index of all margins, if there is one."""
        idx = set()
        for m in self.margins:
            if m.matuszewska is None or m.matuszewska[0] != m.matuszewska[1]:
                return None
            idx.add(m.matuszewska[0])
        return idx.pop() if len(idx) == 1 else None

    def scalarized_matuszewska(self, rare_set: RareSet) -> tuple[float, float] | None:
        """Polynomial decay exponents of the scalarized law (heaviest margin wins)."""
        lows, ups = [], []
        for m in self.margins:
            if m.matuszewska is None:
                return None
            lows.append(m.matuszewska[0])
            ups.append(m.matuszewska[1])
        return (min(lows), min(ups))

    def pareto_envelope(self, rare_set: RareSet) -> tuple[float, float] | None:
        """Global bound ``P[z_index(X) > v] <= C * v**-alpha``, if available.

        Requires a common regular-variation index across margins; built from
        the per-margin envelopes by a union bound over the set's defining
        inequalities.
        """
        alpha = self.common_tail_index()
        if alpha is None:
            return None
        envs = [m.pareto_envelope() for m in self.margins]
        if any(e is None for e in envs):
            return None
        cs = np.array([e[0] for e in envs])
        return (_envelope_constant(rare_set, cs, alpha), alpha)

    def uniforms_per_vector(self) -> int:
        return self.d

    def claims_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        """Transform a ``(m, d)`` block of uniforms into ``m`` claim vectors.

        Rows pair up as ``(0, 1), (2, 3), ...`` for the paired structures, so
        ``m`` must be even for those (pad and truncate when sampling an odd
        count; a truncated pair's first vector keeps its marginal law).
        """
        u = np.asarray(u, dtype=float)
        if u.ndim != 2 or u.shape[1] != self.d:
            raise ValueError(f"expected uniforms of shape (m, {self.d})")
        if isinstance(self.inter, IID):
            out = np.empty_like(u)
            for j, m in enumerate(self.margins):
                out[:, j] = m.from_survival_uniform(u[:, j])
            return out
        if u.shape[0] % 2:
            raise ValueError("paired dependence structures need an even row count")
        if isinstance(self.inter, FgmChain):
            g = self.inter.marginal
            # survival transforms of the four coupled components: the first
            # three are independent uniforms, the fourth is conditional with
            # the closed-form FGM quadratic inverse
            v1 = 1.0 - u[0::2, 0]
            v2 = 1.0 - u[0::2, 1]
            v3 = 1.0 - u[1::2, 0]
            v4 = fgm_conditional_inverse(self.inter.theta, v1, v2, v3, 1.0 - u[1::2, 1])
            out = np.empty_like(u)
            out[0::2, 0] = g._qf(v1)
            out[0::2, 1] = g._qf(v2)
            out[1::2, 0] = g._qf(v3)
            out[1::2, 1] = g._qf(v4)
            return out
        if isinstance(self.inter, CubicPair):
            cubic = self.margins[0]
            x = np.empty_like(u)
            xv = cubic._qf(1.0 - u[0::2, :])
            x[0::2, :] = xv
            # P[Y > y | X = x] = ((1+x^3)/(1+x^3+y))^2, inverted in closed form
            w = 1.0 - u[1::2, :]
            x[1::2, :] = (1.0 + xv**3) * (w**-0.5 - 1.0)
            return x
        raise TypeError(f"unknown dependence structure {type(self.inter).__name__}")

    def sample_sequence(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` claim vectors as an ``(n, d)`` array."""
        if n < 1:
            raise ValueError("need n >= 1")
        m = n + (n % 2 if not isinstance(self.inter, IID) else 0)
        u = rng.random((m, self.uniforms_per_vector()))
        return self.claims_from_uniforms(u)[:n]


def sample_sequence(model: ClaimModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Functional alias for :meth:`ClaimModel.sample_sequence`."""
    return model.sample_sequence(n, rng)


def fgm_conditional_inverse(theta: float, v1, v2, v3, w):
    """Invert the conditional survival transform of the fourth FGM variable.

    Given the first three survival transforms ``v1, v2, v3`` and a uniform
    ``w``, solves ``v + a*v*(1 - v) = w`` with
    ``a = theta * (1 - 2 v1)(1 - 2 v2)(1 - 2 v3)`` using the numerically
    stable root of the quadratic (exact for ``a = 0``).
    """
    a = theta * (1.0 - 2.0 * np.asarray(v1)) * (1.0 - 2.0 * np.asarray(v2)) * (1.0 - 2.0 * np.asarray(v3))
    w = np.asarray(w)
    return 2.0 * w / ((1.0 + a) + np.sqrt((1.0 + a) ** 2 - 4.0 * a * w))


def fgm_joint_survival(theta: float, marginal: TailDistribution, x1, x2, y1, y2):
    """Joint survival of the four FGM-coupled components.

    ``S(x1) S(x2) S(y1) S(y2) * (1 + theta F(x1) F(x2) F(y1) F(y2))`` with
    ``S`` the shared marginal survival and ``F = 1 - S``.  Always in [0, 1];
    reduces to the product of marginals for ``theta = 0`` exactly.
    """
    if not -1.0 <= theta <= 1.0:
        raise ValueError("FGM coupling parameter must lie in [-1, 1]")
    svals = [np.asarray(marginal.survival(np.asarray(v, dtype=float))) for v in (x1, x2, y1, y2)]
    tail = svals[0] * svals[1] * svals[2] * svals[3]
    bump = (1.0 - svals[0]) * (1.0 - svals[1]) * (1.0 - svals[2]) * (1.0 - svals[3])
    return tail * (1.0 + theta * bump)


def _envelope_constant(rare_set: RareSet, cs: np.ndarray, alpha: float) -> float:
    if isinstance(rare_set, MaxExceed):
        return float(np.sum(cs * np.asarray(rare_set.b) ** -alpha))
    if isinstance(rare_set, Ray):
        return float(cs[0] * rare_set.b**-alpha)
    if isinstance(rare_set, HalfSpace):
        l = np.asarray(rare_set.l)
        active = l > 0
        k = int(active.sum())
        return float(np.sum(cs[active] * (k * l[active] / rare_set.b) ** alpha))
    if isinstance(rare_set, PolyhedralUnion):
        return float(sum(_envelope_constant(p, cs, alpha) for p in rare_set.parts))
    raise TypeError(f"unknown rare set {type(rare_set).__name__}")


def scalarized_survival(model: ClaimModel, rare_set: RareSet, x):
    """Survival ``P[z_index(X) > x]`` of the scalarized single-vector law.

    Closed forms exist for max-type sets and rays (products of marginal
    distribution functions); weighted-sum sets in dimension two are handled
    by adaptive quadrature of the convolution.  Anything else raises
    :class:`UnsupportedModelError` directing the caller to Monte Carlo.
    """
    if model.d != rare_set.dim:
        raise ValueError("model dimension does not match set dimension")
    if not model.identically_distributed:
        raise UnsupportedModelError(
            "scalarized survival needs identically distributed vectors")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xv = np.atleast_1d(x)
    if np.any(xv < 0):
        raise ValueError("threshold must be nonnegative")
    if isinstance(rare_set, MaxExceed):
        cdf_prod = np.ones_like(xv)
        for m, b in zip(model.margins, rare_set.b):
            cdf_prod = cdf_prod * (1.0 - m.survival(xv * b))
        out = 1.0 - cdf_prod
    elif isinstance(rare_set, Ray):
        out = np.asarray(model.margins[0].survival(xv * rare_set.b))
    elif isinstance(rare_set, HalfSpace):
        l = np.asarray(rare_set.l)
        active = np.flatnonzero(l > 0)
        if active.size == 1:
            j = active[0]
            out = np.asarray(model.margins[j].survival(xv * rare_set.b / l[j]))
        elif active.size == 2 and model.d == 2:
            out = np.array([
                _weighted_sum_survival(model.margins, l, rare_set.b * t) for t in xv
            ])
        else:
            raise UnsupportedModelError(
                "weighted-sum scalarization is analytic only in dimension two; use Monte Carlo")
    else:
        raise UnsupportedModelError(
            f"no analytic scalarized survival for {type(rare_set).__name__}; use Monte Carlo")
    return float(out[0]) if scalar else out


def _left_concentrated_quad(g, a: float, b: float) -> float:
    """``integral_a^b g`` for integrands whose mass sits near ``a``.

    The substitution ``y = a + e^u - 1`` equidistributes decades, so the
    adaptive rule resolves a narrow left boundary layer even when ``b - a``
    spans many orders of magnitude.
    """
    if b <= a:
        return 0.0
    top = math.log1p(b - a)
    val, _ = integrate.quad(lambda u: g(a + math.expm1(u)) * math.exp(u),
                            0.0, top, limit=300)
    return float(val)


def _weighted_sum_survival(margins, l, s: float) -> float:
    """``P[l1 X1 + l2 X2 > s]`` for independent margins via adaptive quadrature.

    Splits the event at the half level of each component: one component
    below its half level pins the other in its tail, and both above is a
    product.  The pieces partition the event, so the value is exact up to
    quadrature error at every scale.
    """
    m1, m2 = margins
    l1, l2 = float(l[0]), float(l[1])
    if s <= l1 * m1.support_min + l2 * m2.support_min:
        return 1.0
    y_mid = s / (2.0 * l2)
    x_mid = s / (2.0 * l1)
    y_star = (s - l1 * m1.support_min) / l2
    if y_mid >= y_star:
        # one component's floor already carries half the level: single piece
        head = float(m2.survival(y_star))
        val = _left_concentrated_quad(
            lambda y: float(m1.survival((s - l2 * y) / l1)) * float(m2.pdf(y)),
            m2.support_min, y_star)
        return min(1.0, head + val)
    t1 = _left_concentrated_quad(
        lambda y: float(m1.survival((s - l2 * y) / l1)) * float(m2.pdf(y)),
        m2.support_min, y_mid)
    t2 = _left_concentrated_quad(
        lambda x: float(m2.survival((s - l1 * x) / l2)) * float(m1.pdf(x)),
        m1.support_min, x_mid)
    cross = float(m1.survival(x_mid)) * float(m2.survival(y_mid))
    return min(1.0, t1 + t2 + cross)


# ---------------------------------------------------------------------------
# pairwise dependence diagnostics


@dataclass(frozen=True)
class EmpiricalRatio:
    """Empirical exceedance ratio with a Wilson interval on the joint rate.

    ``reliable`` is False when the joint exceedance count is too small for
    the interval to mean much.
    """

    value: float
    ci_lo: float
    ci_hi: float
    joint_count: int
    denominator: float

    @property
    def reliable(self) -> bool:
        return self.joint_count >= RELIABLE_COUNT


def _cubic_pair_joint(x: float, y: float) -> float:
    """Joint survival of the two scalarized exceedances of a cubic pair.

    Expansion of ``P[max-type exceedance of both vectors]`` from the
    explicit component-pair survival ``(1 + x^3 + y)**-1``.
    """
    a = 1.0 / (1.0 + x**3 + y)
    b = 1.0 / (1.0 + x**3)
    c = 1.0 / (1.0 + y)
    return 2 * a + 2 * b * c - 2 * a * c - 2 * b * a + a * a


def _cubic_pair_marginals(x: float) -> tuple[float, float]:
    b = 1.0 / (1.0 + x**3)
    c = 1.0 / (1.0 + x)
    return 2 * b - b * b, 2 * c - c * c


_CUBIC_SET = MaxExceed(b=(1.0, 1.0))


def _pair_exceedance(model: ClaimModel, rare_set: RareSet, x: float,
                     n: int | None, rng: np.random.Generator | None):
    """Analytic or empirical joint/marginal exceedance rates for one pair."""
    if isinstance(model.inter, CubicPair) and rare_set == _CUBIC_SET:
        joint = _cubic_pair_joint(x, x)
        sf1, sf2 = _cubic_pair_marginals(x)
        return joint, sf1, sf2, None
    if n is None or rng is None:
        raise UnsupportedModelError(
            "no analytic pair formulas for this (model, set); pass n and rng for Monte Carlo")
    seq = model.sample_sequence(2 * n, rng)
    z = z_index(rare_set, seq)
    z1 = z[0::2]
    z2 = z[1::2]
    joint_count = int(np.count_nonzero((z1 > x) & (z2 > x)))
    c1 = int(np.count_nonzero(z1 > x))
    c2 = int(np.count_nonzero(z2 > x))
    if c1 == 0 and c2 == 0:
        raise NoExceedanceError(
            f"no exceedances at x={x:g} over {n} pairs; lower x or raise n")
    return joint_count / n, c1 / n, c2 / n, (joint_count, n)


def qai_ratio(model: ClaimModel, rare_set: RareSet, x: float,
              n: int | None = None, rng: np.random.Generator | None = None):
    """Joint-exceedance ratio ``P[both > x] / (P[first > x] + P[second > x])``.

    Vanishing of this ratio as ``x`` grows is what quasi-asymptotic
    independence of the scalarized pair means.  Analytic for the cubic pair
    on the unit max-type set; empirical otherwise (``n`` pairs, explicit
    ``rng``), returning an :class:`EmpiricalRatio`.
    """
    joint, sf1, sf2, counts = _pair_exceedance(model, rare_set, x, n, rng)
    value = joint / (sf1 + sf2)
    if counts is None:
        return value
    lo, hi = wilson_interval(counts[0], counts[1])
    return EmpiricalRatio(value, lo / (sf1 + sf2), hi / (sf1 + sf2), counts[0], sf1 + sf2)


def rd_violation_ratio(model: ClaimModel, rare_set: RareSet, x: float,
                       n: int | None = None, rng: np.random.Generator | None = None):
    """Conditional exceedance ratio ``P[both > x] / P[first > x]``.

    A nonvanishing limit witnesses failure of regression dependence (the
    cubic pair's limit is 3/4) even when the pair is quasi-asymptotically
    independent.
    """
    joint, sf1, _, counts = _pair_exceedance(model, rare_set, x, n, rng)
    value = joint / sf1
    if counts is None:
        return value
    lo, hi = wilson_interval(counts[0], counts[1])
    return EmpiricalRatio(value, lo / sf1, hi / sf1, counts[0], sf1)
