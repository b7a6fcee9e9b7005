import math

import numpy as np
import pytest
from pytest import approx

from bitmean.channel import Agent, GrayBit, Transcript
from bitmean.distributions import FamilyParams, make_gaussian_budget_tight, \
    make_point_mass, make_two_sided_pareto
from bitmean.harness import trial_rng
from bitmean.localization import (
    gray_bit_value,
    gray_change_points,
    gray_cost,
    gray_decode,
    gray_plan,
    localize_gray,
    localize_median,
    median_search_cost,
    median_search_levels,
    median_votes_per_level,
)


def test_gray_bit_values_from_definition():
    assert gray_bit_value(1, 0.3) == 0   # floor(0.6) = 0
    assert gray_bit_value(2, 0.3) == 1   # floor(1.2) = 1
    assert gray_bit_value(2, 0.8) == 0   # floor(3.2) = 3
    assert gray_bit_value(1, 0.5) == 1
    assert gray_bit_value(3, 1.0) == 0   # clamp then floor(8) mod 4 = 0


def test_gray_bit_clamps_outside_unit_interval():
    assert gray_bit_value(2, -3.0) == gray_bit_value(2, 0.0) == 0
    assert gray_bit_value(1, 7.0) == gray_bit_value(1, 1.0) == 1


def test_gray_change_points_disjoint_up_to_level_12():
    seen = set()
    for level in range(1, 13):
        points = gray_change_points(level)
        assert len(points) == 2 ** (level - 1)
        for p in points:
            key = float(p).as_integer_ratio()
            assert key not in seen
            seen.add(key)


def test_gray_decode_examples():
    assert gray_decode([0, 1]) == (0.25, 0.5)
    assert gray_decode([0]) == (0.0, 0.5)
    lo, hi = gray_decode([gray_bit_value(l, 0.37) for l in range(1, 7)])
    assert lo <= 0.37 <= hi
    assert hi - lo == approx(2.0 ** -6)


def test_gray_decode_rejects_bad_input():
    with pytest.raises(ValueError):
        gray_decode([])
    with pytest.raises(ValueError):
        gray_decode([0, 2])


def test_gray_roundtrip_exact_on_fine_grid():
    m = 10
    denom = 2 ** (m + 2)
    for i in range(denom + 1):
        x = i / denom
        lo, hi = gray_decode([gray_bit_value(level, x) for level in range(1, m + 1)])
        assert lo <= x <= hi


def test_gray_roundtrip_random_points():
    rng = np.random.default_rng(17)
    for _ in range(1000):
        x = float(rng.random())
        m = int(rng.integers(1, 13))
        lo, hi = gray_decode([gray_bit_value(level, x) for level in range(1, m + 1)])
        assert lo <= x <= hi
        assert hi - lo == approx(2.0 ** -m)


def test_gray_plan_formulas():
    plan = gray_plan(FamilyParams(2.0, 64.0, 1.0), 0.1)
    assert plan.n_bits == 4           # floor(6 - 1 - 1)
    assert plan.votes_per_bit == 36   # ceil(8 ln 80)
    assert plan.total_queries == 144
    plan15 = gray_plan(FamilyParams(1.5, 64.0, 1.0), 0.1)
    assert plan15.n_bits == math.floor(6.0 - 1.0 - 2.0 / 1.5)


def test_gray_plan_bypass_for_narrow_range():
    # lam/sigma below 2**(2 + 2/k) bypasses localization entirely
    params = FamilyParams(2.0, 4.0, 1.0)
    assert gray_plan(params, 0.1) is None
    assert gray_cost(params, 0.1) == 0
    agent = Agent(make_point_mass(0.5), trial_rng(0, "bypass", 0))
    res = localize_gray(agent, params, 0.1)
    assert (res.low, res.high) == (-4.0, 4.0)
    assert res.samples_used == 0


def test_localize_gray_point_mass_noiseless():
    params = FamilyParams(2.0, 64.0, 1.0)
    mu = (0.3 * 2 - 1) * 64.0  # rescaled mean lands at 0.3 on the unit interval
    dist = make_point_mass(mu)
    for trial in range(5):
        agent = Agent(dist, trial_rng(1, "graypm", trial))
        tr = Transcript()
        res = localize_gray(agent, params, 0.1, tr)
        assert res.low <= mu <= res.high
        assert res.samples_used == tr.total == 144
        assert res.length <= 3.0 * 64.0 * 2.0 ** -4 + 1e-12


def test_localize_gray_plan_is_response_independent():
    plan = gray_plan(FamilyParams(2.0, 64.0, 1.0), 0.1)
    queries = plan.queries()
    assert len(queries) == plan.total_queries
    assert queries[0] == GrayBit(1, -64.0, 128.0)
    assert queries == gray_plan(FamilyParams(2.0, 64.0, 1.0), 0.1).queries()


def test_gray_encoding_error_bound():
    # per-bit flip probability is at most (sigma / (2 lam d_l))^k
    params = FamilyParams(1.5, 64.0, 1.0)
    dist = make_two_sided_pareto(1.5, 1.0, mu=11.17, alpha=1.9)
    plan = gray_plan(params, 0.1)
    mu_unit = (dist.mean() + params.lam) / (2 * params.lam)
    rng = trial_rng(2, "grayerr", 0)
    x = dist.sample(rng, 200_000)
    x_unit = (x + params.lam) / (2 * params.lam)
    for level in range(1, plan.n_bits + 1):
        d_l = float(np.min(np.abs(gray_change_points(level) - mu_unit)))
        target = gray_bit_value(level, mu_unit)
        flips = np.array([gray_bit_value(level, u) for u in x_unit[:50_000]]) != target
        rate = float(np.mean(flips))
        bound = (params.sigma / (2 * params.lam * d_l)) ** params.k
        stderr = math.sqrt(max(rate * (1 - rate), 1e-9) / flips.size)
        assert rate <= bound + 4 * stderr


def test_median_cost_formula_and_example():
    params = FamilyParams(2.0, 64.0, 1.0)
    assert median_search_levels(params) == 7
    r = median_votes_per_level(params, 0.1)
    assert r == math.ceil(math.log(8 * 7 / 0.1) / (2 * 0.03 ** 2))
    assert median_search_cost(params, 0.1) == 2 * 7 * r


def test_localize_median_point_mass_always_covered():
    params = FamilyParams(2.0, 64.0, 1.0)
    dist = make_point_mass(3.2)
    for trial in range(10):
        agent = Agent(dist, trial_rng(3, "medpm", trial))
        tr = Transcript()
        res = localize_median(agent, params, 0.1, tr)
        assert res.low <= 3.2 <= res.high
        assert res.length <= 8.0 + 1e-12
        assert res.samples_used == tr.total == median_search_cost(params, 0.1)


def test_localize_median_cost_exact_for_random_parameters():
    rng = np.random.default_rng(9)
    for _ in range(8):
        k = float(rng.uniform(1.2, 3.5))
        sigma = float(rng.uniform(0.5, 3.0))
        lam = sigma * float(rng.uniform(1.0, 40.0))
        delta = float(rng.uniform(0.05, 0.3))
        params = FamilyParams(k, lam, sigma)
        agent = Agent(make_gaussian_budget_tight(k, sigma, mu=0.1 * lam),
                      trial_rng(4, "medcost", _))
        tr = Transcript()
        res = localize_median(agent, params, delta, tr)
        assert res.samples_used == tr.total == median_search_cost(params, delta)


def test_localize_median_coverage_gaussian():
    # narrow Gaussian, lam/sigma = 64, delta = 0.2: coverage >= 0.90
    params = FamilyParams(2.0, 64.0, 1.0)
    from bitmean.distributions import Gaussian

    dist = Gaussian(mu=0.0, scale=0.5)
    covered = 0
    for trial in range(200):
        agent = Agent(dist, trial_rng(5, "medcov", trial))
        res = localize_median(agent, params, 0.2)
        covered += res.low <= 0.0 <= res.high
        assert res.length <= 8.0 + 1e-12
    assert covered / 200 >= 0.90


def test_localize_median_handles_edge_means():
    # mean at the very edge of the search range
    params = FamilyParams(2.0, 16.0, 1.0)
    for mu in (-16.0, 16.0, -15.3):
        dist = make_point_mass(mu)
        agent = Agent(dist, trial_rng(6, f"edge{mu}", 0))
        res = localize_median(agent, params, 0.1)
        assert res.low <= mu <= res.high


def test_delta_validation():
    params = FamilyParams(2.0, 8.0, 1.0)
    agent = Agent(make_point_mass(0.0), trial_rng(7, "val", 0))
    with pytest.raises(ValueError):
        localize_median(agent, params, 0.0)
    with pytest.raises(ValueError):
        gray_plan(params, 1.5)
