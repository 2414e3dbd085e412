"""
Exact asymptotic variance
=========================

For a trigonometric polynomial f, composing with T^n moves the coefficient
at frequency k to tS^n k. Once every frequency has left the support for
good, the covariances vanish, and sigma^2 = Cov_0 + 2 sum Cov_n is a finite
sum.
"""

from toruslab import covariance, observable
from toruslab.matrix_core import CAT_MAP, QUASI_HYPERBOLIC_T4, ToralAutomorphism

cat = ToralAutomorphism.from_matrix(CAT_MAP)

# f(x) = 2 cos(2 pi x_1): tS (1, 0) = (2, 1) is already outside the support.
f = observable.explicit({(1, 0): 1.0})
rep = covariance.sigma2(f, cat)
print("cosine:     sigma2 =", rep.sigma2, " N0 =", rep.N0, " covariances", rep.covariances)

# A coboundary g o T - g telescopes, so its Birkhoff sums stay bounded.
cob = covariance.coboundary(f, cat)
rep = covariance.sigma2(cob, cat)
print("coboundary: sigma2 =", rep.sigma2, " degenerate:", rep.degenerate, " covariances", rep.covariances)
for n in (1, 10, 1000):
    print(f"  E(S_{n}^2) = {rep.second_moment(n)}")

# A frequency that returns once: Cov_1 = 2 here.
g = observable.explicit({(1, 0): 1.0, (2, 1): 1.0})
print("two terms:  sigma2 =", covariance.sigma2(g, cat).sigma2)

# The same computation on the non-hyperbolic 4-torus example.
t4 = ToralAutomorphism.from_matrix(QUASI_HYPERBOLIC_T4)
h = observable.explicit({(1, 0, 0, 0): 1.0})
print("T^4 cosine: sigma2 =", covariance.sigma2(h, t4).sigma2)
