"""
One behavior policy for many targets
====================================

The arithmetic mean of a policy set is the behavior policy closest to all
of them in average right KL. Its maximal importance weight decides how many
samples a single-barycenter evaluation needs.
"""

import numpy as np

from cklpe import (
    BoundInputs,
    average_right_kl,
    kl_barycenter,
    max_importance_weight,
    measured_eta,
    safe_mix,
    sample_size_klpe,
    sigma_bound_from_eta,
    sigma_safe_bound,
)

gen = np.random.default_rng(0)
targets = gen.dirichlet(np.ones(5), size=8)
bary = kl_barycenter(targets)
print("barycenter:", np.round(bary, 3))

# any other behavior policy has a larger average KL
for b in gen.dirichlet(np.ones(5), size=3):
    print(f"avg KL at barycenter {average_right_kl(targets, bary):.4f}  vs random {average_right_kl(targets, b):.4f}")

# the maximal weight never exceeds N, and the eta-based bound caps it too
sigma = max_importance_weight(targets, bary)
eta = measured_eta(targets)
print(f"sigma_KL = {sigma:.3f}  (N = {len(targets)})")
print(f"eta = {eta:.3f}, bound from eta = {sigma_bound_from_eta(BoundInputs(n_targets=8, eta=eta), bary.min()):.3f}")

# mixing in the uniform policy puts a floor of lam / K under every action
lam = 0.2
mixed = safe_mix(bary, lam)
print(f"safe mixture weight {max_importance_weight(targets, mixed):.3f} <= "
      f"{sigma_safe_bound(BoundInputs(n_targets=8, eta=eta, lam=lam, k_arms=5)):.3f}")

# samples needed for regret below 0.1 with probability 0.95 on unit-variance rewards
print("n(0.1, 0.05) =", sample_size_klpe(BoundInputs(epsilon=0.1, delta=0.05, r_star=1.0, sigma=sigma, n_targets=8)))

# three targets that put 0.99 on different arms push the weight toward N
spiky = np.full((3, 3), 0.005) + np.eye(3) * 0.985
print(f"spiky set: sigma_KL = {max_importance_weight(spiky, kl_barycenter(spiky)):.3f}")
