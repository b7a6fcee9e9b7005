"""Refinement: cutoff selection, dyadic partition, randomized threshold
queries, variance-aware allocation, and the median-of-means wrapper.

All sample counts are deterministic functions of the parameters, so
``predict_cost`` reproduces realized transcript totals exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import Agent, ThresholdGE, ThresholdLE, Transcript, query_probability, \
    uniform_threshold_probability
from .distributions import Distribution, FamilyParams
from .localization import LocalizationResult, localize_median, median_search_cost, \
    median_search_levels

__all__ = [
    "ALLOCATION_PROFILES",
    "allocation_constant",
    "worst_case_tail_bound",
    "cutoff_threshold",
    "Region",
    "RefinementPlan",
    "RegionEstimate",
    "EstimateReport",
    "CostBreakdown",
    "build_plan",
    "estimate_region",
    "base_estimate",
    "refine_from_center",
    "estimate_mean",
    "predict_cost",
    "analytic_region_probs",
    "analytic_region_mean",
]

# Centering after localization guarantees the shifted mean lies in
# [-4 sigma, 4 sigma]; the cutoff and allocation constants assume it.
SHIFTED_MEAN_BOUND = 4.0
MIN_CUTOFF_EXPONENT = 4  # t >= 16 sigma keeps t > 8 sigma with margin

ALLOCATION_PROFILES = ("proof-safe", "empirical")


def allocation_constant(profile: str, k: float) -> float:
    """Per-region sample constant C in n_i = ceil(C (sigma/eps)^2 2^{|i|(2-k')}).

    proof-safe: tracks the variance chain exactly -- inner geometric sums are
    at most (8/C) eps^2 2^{jk'}, the j <= 3 terms contribute at most 3 * 2^{3k'}
    and the j >= 4 tail at most 2^{2k'}, on both sides, so
    C = 256 (3 * 2^{3k'} + 2^{2k'}) forces Var(base) <= eps^2 / 16.
    empirical: C = 16, validated by the Monte Carlo variance oracle.
    """
    if profile == "proof-safe":
        kk = min(k, 3.0)
        return 256.0 * (3.0 * 2.0 ** (3.0 * kk) + 2.0 ** (2.0 * kk))
    if profile == "empirical":
        return 16.0
    raise ValueError(f"unknown allocation profile {profile!r}; expected one of {ALLOCATION_PROFILES}")


def worst_case_tail_bound(params: FamilyParams, t: float) -> float:
    """Upper bound on |E[(X - c) 1(|X - c| > t)]| for any family member with
    |mean - c| <= 4 sigma: sigma^k/(t - 4s)^{k-1} + 4s * sigma^k/(t - 4s)^k."""
    k = params.operative_k
    s = params.sigma
    gap = t - SHIFTED_MEAN_BOUND * s
    if gap <= 0:
        return math.inf
    return s ** k / gap ** (k - 1.0) + SHIFTED_MEAN_BOUND * s * s ** k / gap ** k


def cutoff_threshold(params: FamilyParams, eps: float) -> float:
    """Smallest power-of-two multiple t = 2^j sigma (j >= 4) with tail bound <= eps/2."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    j = MIN_CUTOFF_EXPONENT
    while worst_case_tail_bound(params, 2.0 ** j * params.sigma) > eps / 2.0:
        j += 1
    return 2.0 ** j * params.sigma


@dataclass(frozen=True)
class Region:
    """One cell of the dyadic partition, in shifted coordinates.

    ``inner``/``outer`` are the magnitudes m_{|i|-1} sigma and m_{|i|} sigma;
    the actual cell is sign(index) * [inner, outer).
    """

    index: int
    inner: float
    outer: float

    @property
    def sign(self) -> int:
        return 1 if self.index > 0 else -1

    @property
    def bounds(self) -> tuple[float, float]:
        if self.index > 0:
            return self.inner, self.outer
        return -self.outer, -self.inner


@dataclass(frozen=True)
class RefinementPlan:
    t: float
    i_max: int
    regions: tuple[Region, ...]
    n_by_magnitude: dict[int, int]
    batches: int
    profile: str
    params: FamilyParams
    eps: float

    @property
    def samples_per_batch(self) -> int:
        return sum(4 * self.n_by_magnitude[abs(r.index)] for r in self.regions)

    @property
    def total_samples(self) -> int:
        return self.batches * self.samples_per_batch


def _region_magnitudes(sigma: float, i_max: int) -> list[tuple[int, float, float]]:
    # m_0 = 0 and m_i = 2^i for i >= 1
    out = []
    for i in range(1, i_max + 1):
        inner = 0.0 if i == 1 else 2.0 ** (i - 1) * sigma
        out.append((i, inner, 2.0 ** i * sigma))
    return out


def build_plan(params: FamilyParams, eps: float, delta: float,
               profile: str = "empirical") -> RefinementPlan:
    """Partition, allocation, and batch count for one refinement run."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if not 0 < eps < SHIFTED_MEAN_BOUND * params.sigma:
        raise ValueError(
            f"refinement expects 0 < eps < 4 sigma; got eps={eps}, sigma={params.sigma}"
        )
    k = params.operative_k
    sigma = params.sigma
    t = cutoff_threshold(params, eps)
    i_max = round(math.log2(t / sigma))
    c = allocation_constant(profile, k)
    n_by_magnitude = {
        i: math.ceil(c * (sigma / eps) ** 2 * 2.0 ** (i * (2.0 - k)))
        for i in range(1, i_max + 1)
    }
    batches = math.ceil(8.0 * math.log(2.0 / delta))
    regions = []
    for i, inner, outer in _region_magnitudes(sigma, i_max):
        regions.append(Region(index=i, inner=inner, outer=outer))
    for i, inner, outer in _region_magnitudes(sigma, i_max):
        regions.append(Region(index=-i, inner=inner, outer=outer))
    return RefinementPlan(
        t=t, i_max=i_max, regions=tuple(regions), n_by_magnitude=n_by_magnitude,
        batches=batches, profile=profile, params=params, eps=eps,
    )


@dataclass(frozen=True)
class RegionEstimate:
    index: int
    p_a_hat: float
    p_b_hat: float
    mu_hat: float
    samples: int


def estimate_region(agent: Agent, region: Region, n: int, center: float,
                    rng: np.random.Generator | None = None,
                    transcript: Transcript | None = None,
                    bitwise: bool = False) -> RegionEstimate:
    """Estimate the region's mean contribution with 4n threshold queries.

    Right regions: p_a = frac(X >= a) - frac(X >= T), p_b = frac(X <= b) -
    frac(X <= T) with T ~ Uniform(a, b) fresh per query; mu = a p_a + b p_b.
    Left regions use the mirrored identity.  All thresholds are issued in
    original coordinates (shifted by ``center``).

    ``bitwise=True`` materializes every threshold draw (needs ``rng`` for the
    learner's uniform cutoffs); the default draws the four 1-bit counts as
    exact Binomials.
    """
    if n < 1:
        raise ValueError("region allocation must be >= 1")
    if transcript is None:
        transcript = Transcript()
    a, b = region.inner, region.outer
    if region.index > 0:
        lo, hi = center + a, center + b
        if bitwise:
            if rng is None:
                raise ValueError("bitwise mode needs the learner's rng for thresholds")
            f1 = float(np.mean(agent.respond_threshold_bits("ge", np.full(n, lo))))
            f2 = float(np.mean(agent.respond_threshold_bits("ge", rng.uniform(lo, hi, n))))
            f3 = float(np.mean(agent.respond_threshold_bits("le", np.full(n, hi))))
            f4 = float(np.mean(agent.respond_threshold_bits("le", rng.uniform(lo, hi, n))))
        else:
            f1 = agent.respond_count(ThresholdGE(lo), n) / n
            f2 = agent.respond_count_uniform_threshold("ge", lo, hi, n) / n
            f3 = agent.respond_count(ThresholdLE(hi), n) / n
            f4 = agent.respond_count_uniform_threshold("le", lo, hi, n) / n
        p_a = f1 - f2
        p_b = f3 - f4
        mu_hat = a * p_a + b * p_b
    else:
        # Mirror: thresholds at center - a, center - b; T ~ U(a, b) maps to a
        # uniform cutoff on (center - b, center - a).
        lo, hi = center - b, center - a
        if bitwise:
            if rng is None:
                raise ValueError("bitwise mode needs the learner's rng for thresholds")
            f1 = float(np.mean(agent.respond_threshold_bits("le", np.full(n, hi))))
            f2 = float(np.mean(agent.respond_threshold_bits("le", rng.uniform(lo, hi, n))))
            f3 = float(np.mean(agent.respond_threshold_bits("ge", np.full(n, lo))))
            f4 = float(np.mean(agent.respond_threshold_bits("ge", rng.uniform(lo, hi, n))))
        else:
            f1 = agent.respond_count(ThresholdLE(hi), n) / n
            f2 = agent.respond_count_uniform_threshold("le", lo, hi, n) / n
            f3 = agent.respond_count(ThresholdGE(lo), n) / n
            f4 = agent.respond_count_uniform_threshold("ge", lo, hi, n) / n
        p_a = f1 - f2
        p_b = f3 - f4
        mu_hat = -(a * p_a + b * p_b)
    transcript.record_batch(4 * n)
    return RegionEstimate(index=region.index, p_a_hat=p_a, p_b_hat=p_b,
                          mu_hat=mu_hat, samples=4 * n)


def base_estimate(agent: Agent, plan: RefinementPlan, center: float,
                  rng: np.random.Generator | None = None,
                  transcript: Transcript | None = None,
                  bitwise: bool = False) -> float:
    """Sum of region estimates plus the localization center (one batch)."""
    total = center
    for region in plan.regions:
        n = plan.n_by_magnitude[abs(region.index)]
        est = estimate_region(agent, region, n, center, rng=rng,
                              transcript=transcript, bitwise=bitwise)
        total += est.mu_hat
    return total


@dataclass(frozen=True)
class EstimateReport:
    mu_hat: float
    n_localization: int
    n_refinement: int
    rounds_of_adaptivity: int
    localization: LocalizationResult | None
    plan: RefinementPlan | None
    batch_values: tuple[float, ...] = field(default=())

    @property
    def n_total(self) -> int:
        return self.n_localization + self.n_refinement


def refine_from_center(agent: Agent, params: FamilyParams, eps: float, delta: float,
                       center: float, profile: str = "empirical",
                       rng: np.random.Generator | None = None,
                       transcript: Transcript | None = None,
                       bitwise: bool = False) -> tuple[float, RefinementPlan, tuple[float, ...]]:
    """K batches of the base estimator around ``center``; returns their median."""
    if transcript is None:
        transcript = Transcript()
    transcript.begin_phase("refinement")
    plan = build_plan(params, eps, delta, profile)
    values = tuple(
        base_estimate(agent, plan, center, rng=rng, transcript=transcript, bitwise=bitwise)
        for _ in range(plan.batches)
    )
    return float(np.median(values)), plan, values


def estimate_mean(agent: Agent, params: FamilyParams, eps: float, delta: float,
                  profile: str = "empirical",
                  rng: np.random.Generator | None = None,
                  transcript: Transcript | None = None,
                  bitwise: bool = False) -> EstimateReport:
    """The full adaptive estimator: localize, recenter, refine, take the median.

    When eps >= 4 sigma the localization center alone already meets the
    accuracy target on the localization event, so refinement is skipped.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if transcript is None:
        transcript = Transcript()

    loc = localize_median(agent, params, delta, transcript)
    # Sequential decision points: one per halving level in each of the two
    # searches, plus one non-adaptive refinement round.
    adaptive_rounds = 2 * median_search_levels(params) + 1

    if eps >= SHIFTED_MEAN_BOUND * params.sigma:
        return EstimateReport(
            mu_hat=loc.center,
            n_localization=loc.samples_used,
            n_refinement=0,
            rounds_of_adaptivity=adaptive_rounds - 1,
            localization=loc,
            plan=None,
        )

    mu_hat, plan, values = refine_from_center(
        agent, params, eps, delta, loc.center, profile=profile,
        rng=rng, transcript=transcript, bitwise=bitwise,
    )
    return EstimateReport(
        mu_hat=mu_hat,
        n_localization=loc.samples_used,
        n_refinement=plan.total_samples,
        rounds_of_adaptivity=adaptive_rounds,
        localization=loc,
        plan=plan,
        batch_values=values,
    )


@dataclass(frozen=True)
class CostBreakdown:
    localization: int
    refinement: int
    t: float | None
    i_max: int
    batches: int
    n_per_region: dict[int, int]

    @property
    def total(self) -> int:
        return self.localization + self.refinement


def predict_cost(params: FamilyParams, eps: float, delta: float,
                 profile: str = "empirical") -> CostBreakdown:
    """Closed-form sample counts; matches realized transcripts exactly."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    loc = median_search_cost(params, delta)
    if eps >= SHIFTED_MEAN_BOUND * params.sigma:
        return CostBreakdown(localization=loc, refinement=0, t=None, i_max=0,
                             batches=0, n_per_region={})
    plan = build_plan(params, eps, delta, profile)
    return CostBreakdown(
        localization=loc,
        refinement=plan.total_samples,
        t=plan.t,
        i_max=plan.i_max,
        batches=plan.batches,
        n_per_region=dict(plan.n_by_magnitude),
    )


# -- analytic oracles for the query identities (test support) ---------------

def analytic_region_probs(dist: Distribution, center: float,
                          region: Region) -> tuple[float, float]:
    """Exact (p_a, p_b) for the region's four-query scheme."""
    a, b = region.inner, region.outer
    if region.index > 0:
        lo, hi = center + a, center + b
        p_a = query_probability(dist, ThresholdGE(lo)) \
            - uniform_threshold_probability(dist, "ge", lo, hi)
        p_b = query_probability(dist, ThresholdLE(hi)) \
            - uniform_threshold_probability(dist, "le", lo, hi)
    else:
        lo, hi = center - b, center - a
        p_a = query_probability(dist, ThresholdLE(hi)) \
            - uniform_threshold_probability(dist, "le", lo, hi)
        p_b = query_probability(dist, ThresholdGE(lo)) \
            - uniform_threshold_probability(dist, "ge", lo, hi)
    return p_a, p_b


def analytic_region_mean(dist: Distribution, center: float, region: Region) -> float:
    """Exact expectation of the region estimator: a p_a + b p_b (sign-adjusted).

    Equals E[(X - center) 1(X - center in the closed cell)]; atoms exactly on
    a cell endpoint are picked up by the endpoint query that touches them.
    """
    p_a, p_b = analytic_region_probs(dist, center, region)
    value = region.inner * p_a + region.outer * p_b
    return value if region.index > 0 else -value
