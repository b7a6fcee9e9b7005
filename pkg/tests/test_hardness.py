import math

import numpy as np
import pytest
from pytest import approx

from bitmean.channel import Agent
from bitmean.distributions import FamilyParams, validate_family
from bitmean.hardness import (
    baseline_query_plan,
    bernoulli_kl,
    make_k2_pair,
    make_pair_grid,
    nonadaptive_baseline,
    verify_kl_bound,
)
from bitmean.harness import trial_rng


def test_pair_grid_geometry():
    grid = make_pair_grid(4.0, 1.0, 0.1)
    assert grid.n_pairs == 3
    assert grid.centers == (-2.0, 0.0, 2.0)


def test_pair_grid_member_masses_and_mean():
    grid = make_pair_grid(4.0, 1.0, 0.1)
    plus = grid.member(2, 1)
    assert dict(zip(plus.points, plus.probs)) == approx({-0.5: 0.4, 0.5: 0.6})
    assert plus.mean() == approx(0.1, abs=1e-15)
    minus = grid.member(2, -1)
    assert minus.mean() == approx(-0.1, abs=1e-15)


def test_pair_grid_members_bounded_deviation():
    # |X - mean| < sigma always, so the k-th central moment is below sigma^k
    # for every order
    grid = make_pair_grid(8.0, 1.0, 0.2)
    for j, sign, dist in grid.members():
        spread = np.max(np.abs(dist.points - dist.mean()))
        assert spread < 1.0
        for k in (1.1, 2.0, 3.0):
            assert dist.abs_central_moment(k) <= 1.0


def test_pair_grid_members_pass_family_validation():
    grid = make_pair_grid(8.0, 1.0, 0.1)
    for k in (1.2, 2.0, 3.0, 5.0):
        params = FamilyParams(k, 8.0, 1.0)
        assert all(validate_family(dist, params).is_member
                   for _, _, dist in grid.members())


def test_pair_grid_rejects_large_shift():
    with pytest.raises(ValueError):
        make_pair_grid(4.0, 1.0, 0.5)


def test_pair_grid_index_validation():
    grid = make_pair_grid(4.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        grid.member(0, 1)
    with pytest.raises(ValueError):
        grid.member(1, 2)


def test_k2_pair_construction_example():
    pair = make_k2_pair(1.0, 1 / 48)
    assert pair.n_levels == 2
    assert pair.null_masses == (1 / 16, 1 / 64)
    assert pair.shift_masses == (1 / 64, 1 / 128)
    origin = pair.null.probs[int(np.searchsorted(pair.null.points, 0.0))]
    assert origin == approx(27 / 32, abs=1e-15)
    assert pair.null.abs_central_moment(2.0) == approx(1.0, abs=1e-12)
    assert pair.null.mean() == approx(0.0, abs=1e-15)
    assert pair.mixture.mean() == approx(1 / 16, abs=1e-14)


def test_k2_pair_component_means():
    pair = make_k2_pair(1.0, 1 / 48)
    for comp in pair.components:
        assert comp.mean() == approx(3 / 48, abs=1e-14)
        assert comp.abs_central_moment(2.0) <= 1.0 + 1e-12


def test_k2_pair_mixture_equals_uniform_component_draw():
    pair = make_k2_pair(1.0, 1 / 48)
    rng = trial_rng(0, "k2mix", 0)
    n = 400_000
    picks = rng.integers(0, pair.n_levels, size=n)
    samples = np.concatenate([
        pair.components[j].sample(rng, int(np.sum(picks == j)))
        for j in range(pair.n_levels)
    ])
    stderr = float(np.std(samples)) / math.sqrt(n)
    assert float(np.mean(samples)) == approx(3 / 48, abs=4 * stderr)


def test_k2_pair_rejects_oversized_shift():
    with pytest.raises(ValueError, match="grid would be empty"):
        make_k2_pair(1.0, 0.2)
    with pytest.raises(ValueError, match="exceeds lam"):
        make_k2_pair(1.0, 1 / 48, lam=0.05)


def test_kl_bound_value_and_exhaustive_pass():
    pair = make_k2_pair(1.0, 1 / 48)
    res = verify_kl_bound(pair)
    assert res.bound == approx(36 / (2 * 48 ** 2), abs=1e-18)
    assert res.n_subsets == 2 ** (2 * pair.n_levels)
    assert res.all_within_bound


@pytest.mark.parametrize("eps", [1 / 12, 1 / 48, 1 / 192])
def test_kl_bound_across_grid_sizes(eps):
    pair = make_k2_pair(1.0, eps)
    assert pair.n_levels == int(math.floor(0.5 * math.log2(1.0 / (3 * eps))))
    res = verify_kl_bound(pair)
    assert res.all_within_bound


def test_kl_empty_set_and_label_swap():
    assert bernoulli_kl(0.0, 0.0) == 0.0
    p, q = 0.3, 0.2
    assert bernoulli_kl(p, q) == approx(bernoulli_kl(1 - p, 1 - q), rel=1e-12)
    with pytest.raises(ValueError):
        bernoulli_kl(1.2, 0.5)


def test_kl_enumeration_cap():
    pair = make_k2_pair(1.0, 2.0 ** -20 / 3.0)
    assert pair.n_levels > 8
    with pytest.raises(ValueError, match="capped"):
        verify_kl_bound(pair)


def test_baseline_plan_is_pure_and_budgeted():
    plan1 = baseline_query_plan(4.0, 1.0, 0.1, 60)
    plan2 = baseline_query_plan(4.0, 1.0, 0.1, 60)
    assert plan1 == plan2
    assert len(plan1) == 6  # 2N slots
    assert sum(m for _, _, _, m in plan1) == 60
    kinds = {kind for _, kind, _, _ in plan1}
    assert kinds == {"presence", "sign"}


def test_baseline_minimal_budget_runs():
    grid = make_pair_grid(4.0, 1.0, 0.1)
    dist = grid.member(2, 1)
    agent = Agent(dist, trial_rng(1, "base6", 0))
    est = nonadaptive_baseline(agent, 4.0, 1.0, 0.1, 6)
    assert est.samples_used == 6


def test_baseline_rejects_budget_below_slots():
    agent = Agent(make_pair_grid(4.0, 1.0, 0.1).member(1, 1), trial_rng(2, "b", 0))
    with pytest.raises(ValueError):
        nonadaptive_baseline(agent, 4.0, 1.0, 0.1, 5)


def test_baseline_consistent_with_large_budget():
    grid = make_pair_grid(16.0, 1.0, 0.1)
    for trial in range(20):
        rng = trial_rng(3, "haste", trial)
        j = int(rng.integers(1, grid.n_pairs + 1))
        sign = 1 if rng.random() < 0.5 else -1
        dist = grid.member(j, sign)
        agent = Agent(dist, rng)
        est = nonadaptive_baseline(agent, 16.0, 1.0, 0.1, 60_000)
        assert est.pair_index == j
        assert est.sign == sign
        assert abs(est.mu_hat - dist.mean()) <= 1e-12
