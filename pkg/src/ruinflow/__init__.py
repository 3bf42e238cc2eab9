"""ruinflow: simulation and asymptotics for multivariate renewal risk models
with stochastic investment returns.

The package simulates discounted aggregate claim vectors and ruin events,
evaluates first-order asymptotic approximations for entrance and ruin
probabilities, and verifies that the two agree at desk scale.
"""

from .dependence import (
    ClaimModel,
    CubicPair,
    EmpiricalRatio,
    FgmChain,
    IID,
    NoExceedanceError,
    UnsupportedModelError,
    fgm_joint_survival,
    qai_ratio,
    rd_violation_ratio,
    scalarized_survival,
)
from .estimators import (
    HypothesisError,
    InfiniteHorizonEstimate,
    ModelSpec,
    MrvSpec,
    asymptotic_entrance_finite,
    asymptotic_entrance_infinite,
    derive_mrv,
    entrance_time_cdf,
    mrv_closed_form,
    mrv_mu,
    resolve_finite_mode,
    resolve_infinite_mode,
    single_claim_entrance,
)
from .heavy_tails import (
    ClassTags,
    CubicSurvival,
    HarmonicSurvival,
    HeavyWeibull,
    Lognormal,
    Pareto,
    SurvivalUnderflowError,
    TailDistribution,
    matuszewska_bounds,
)
from .montecarlo import (
    BigJumpTable,
    EngineCapacityError,
    EntranceTimeTable,
    EstimateTable,
    SimConfig,
    empirical_entrance,
    empirical_entrance_time,
    simulate_aggregate,
    single_big_jump_check,
    wilson_interval,
)
from .processes import (
    BrownianDrift,
    CompoundPoissonDrift,
    Deterministic,
    Erlang,
    ExponentialJumps,
    FixedJumps,
    Poisson,
    RenewalIID,
    check_bounded_below,
    check_discount_summability,
    laplace_exponent,
    renewal_function,
    sample_arrivals,
    truncation_horizon,
)
from .rare_sets import (
    AnyLineNegative,
    HalfSpace,
    MaxExceed,
    PolyhedralUnion,
    Ray,
    WeightedSumNegative,
    contains,
    from_ruin_set,
    z_index,
)
from .ruin import (
    PremiumSchedule,
    RuinModel,
    asymptotic_ruin,
    empirical_ruin,
    surplus_path,
)

__version__ = "0.1.0"
