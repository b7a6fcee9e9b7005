"""Tour of the estimator variants: anytime, unknown scale, two-stage,
multivariate."""

import numpy as np

from bitmean import (
    Agent,
    FamilyParams,
    anytime_estimate,
    estimate_mean,
    make_gaussian_budget_tight,
    make_point_mass,
    multivariate_estimate,
    predict_cost,
    two_stage_estimate,
    unknown_scale_estimate,
)
from bitmean.harness import trial_rng

params = FamilyParams(2.0, 64.0, 1.0)
dist = make_gaussian_budget_tight(2.0, 1.0, mu=0.4)

# --- anytime: the budget arrives from outside; accuracy adapts to it -------
print("=== anytime (unknown budget) ===")
for budget_eps in (1 / 4, 1 / 16, 1 / 64):
    budget = predict_cost(params, budget_eps, 0.2).total
    res = anytime_estimate(Agent(dist, trial_rng(1, "any", 0)), params, 0.2, budget)
    print(f"budget {budget:>12} (oracle eps {budget_eps:>8}): "
          f"completed {res.rounds_completed} rounds, achieved eps {res.eps_achieved}, "
          f"spent {res.n_total}")

# --- unknown scale: only loose bounds sigma_true in [0.25, 4] --------------
print("\n=== unknown scale (relative accuracy) ===")
sigma_true = 1.0
res = unknown_scale_estimate(Agent(dist, trial_rng(2, "scale", 0)),
                             k=2.0, lam=64.0, sigma_min=0.25, sigma_max=4.0,
                             ratio=0.25, delta=0.2)
print(f"true scale {sigma_true}, guesses tried: "
      f"{[round(r.sigma_guess, 3) for r in res.rounds]}")
print(f"halted early: {res.halted_early}; estimate {res.mu_hat:.4f} "
      f"(true mean 0.4, target 0.25 * sigma_true = 0.25)")

# --- two stages of adaptivity ----------------------------------------------
print("\n=== two-stage (non-adaptive localization via Gray bits) ===")
rep_main = estimate_mean(Agent(dist, trial_rng(3, "ts", 0)), params, 0.25, 0.2)
rep_two = two_stage_estimate(Agent(dist, trial_rng(3, "ts", 1)), params, 0.25, 0.2)
print(f"main estimator:  {rep_main.rounds_of_adaptivity} adaptive rounds, "
      f"estimate {rep_main.mu_hat:.4f}, {rep_main.n_total} samples")
print(f"two-stage:       {rep_two.rounds_of_adaptivity} adaptive rounds, "
      f"estimate {rep_two.mu_hat:.4f}, {rep_two.n_total} samples")

# --- multivariate: one bit per vector sample --------------------------------
print("\n=== multivariate (coordinate-wise) ===")
targets = [0.5, -1.5, 2.5]
dists = [make_point_mass(v) for v in targets]
res = multivariate_estimate(dists, FamilyParams(2.0, 16.0, 1.0), 0.5, 0.2,
                            trial_rng(4, "mv", 0))
print(f"targets {targets} -> estimate {res.mu_hat.tolist()}")
print(f"l2 error {float(np.linalg.norm(res.mu_hat - np.array(targets)))}, "
      f"total samples {res.n_total} (strict 1 bit per vector sample)")
