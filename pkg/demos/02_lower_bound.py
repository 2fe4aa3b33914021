"""
Where a single barycenter is slow
=================================

Two deterministic arms and N targets: one favors the better arm, the rest
favor the other. The barycenter's maximal weight is N/2 and the chance of
picking the wrong policy decays only like exp(-n / (2 sigma^2)).
"""

from cklpe import lower_bound_model, lower_bound_prob
from cklpe.harness import misselection_rate

inst = lower_bound_model(10, r1=1.0)
print("rewards:", inst.model.means, " gap:", round(inst.gap, 5))
print("barycenter:", inst.barycenter, " sigma_KL:", inst.sigma_kl)

for n in (16, 32, 64, 128):
    rate = misselection_rate(inst, n, reps=5000, master_seed=0)
    print(f"n={n:4d}  misselection {rate:.3f}  lower bound {lower_bound_prob(n, inst.sigma_n):.4f}")
