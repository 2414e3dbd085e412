"""
Monte Carlo checks
==================

Orbits are run exactly on the lattice (Z/qZ)^2 with q = 2^61 - 1, from
uniformly drawn starting points. The exact sigma^2 from the covariance
module is then compared with what the simulation sees.
"""

import time

from toruslab import covariance, observable
from toruslab import stats_harness as sh
from toruslab.matrix_core import CAT_MAP, ToralAutomorphism

cat = ToralAutomorphism.from_matrix(CAT_MAP)
f = observable.explicit({(1, 0): 1.0})
cob = covariance.coboundary(f, cat)

t0 = time.perf_counter()
plan = sh.ExperimentPlan(cat, f, n=1000, samples=10_000, seed=0, workers=4)
for row in sh.run_variance_growth(plan, [10, 100, 1000]).rows:
    print(f"n={row.n:5d}  E(S_n^2)/n = {row.empirical:.4f} +- {row.stderr:.4f}  exact {row.exact}")

# Decorrelation: the coboundary has Cov_1 = -2 and nothing after.
for row in sh.run_decorrelation(sh.ExperimentPlan(cat, cob, 10, 10_000, seed=1), [0, 1, 2, 3]).rows:
    print(f"lag {row.lag}: {row.empirical:+.4f} +- {row.stderr:.4f}  exact {row.exact:+.1f}")

# CLT for S_n / (sigma sqrt n).
rep = sh.run_clt(sh.ExperimentPlan(cat, f, n=2000, samples=10_000, seed=0, workers=4))
print(f"KS distance {rep.ks_distance:.4f} < {rep.ks_critical_95:.4f}: {rep.pass_ks}")

# max_k |S_k| grows like sqrt(n) when sigma^2 > 0 and stays bounded for a coboundary.
for obs, name in ((f, "cosine"), (cob, "coboundary")):
    rep = sh.run_scaling(sh.ExperimentPlan(cat, obs, 10_000, 300, seed=0, workers=4), [10, 100, 1000, 10_000])
    print(f"{name}: fitted exponent {rep.fitted_exponent:.3f}")
print(f"done in {time.perf_counter() - t0:.1f} s")
