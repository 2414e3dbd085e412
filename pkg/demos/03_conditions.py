"""
Coefficient tail conditions
===========================

The invariance principle needs the Fourier coefficients to decay: tails
sum_{|k| >= b} |c_k|^q must fall like a power of log(b). Here a Leonov-type
family, whose coefficients decay only logarithmically faster than
(1 + |k|)^{-3/4}, is checked at p = 4.
"""

from toruslab import observable as ob

f = ob.build_observable("leonov", dim=1, alpha=2.0, radius=4096)
grid = [2 ** j for j in range(4, 13)]

fit = ob.fit_tail_exponent(f, exponent=4 / 3, b_grid=grid)
print(f"fitted theta = {fit.theta_hat:.3f} +- {fit.stderr:.3f}; needed > {ob.theta_threshold(4):.4f}")
print("max residual", max(abs(r) for r in fit.residuals), "poor fit:", fit.poor_fit)

rep = ob.check_conditions(f, ob.ConditionSpec(p=4, theta=1.5, beta=2.5, R=2.0, b_values=tuple(grid)))
for row in rep.condF1_tail:
    print(f"b={row.b:5d}  tail={row.tail:.5f}  bound={row.bound:.5f}  {'ok' if row.ok else 'FAIL'}")
print("condF1:", rep.satisfied_F1, " smallest R that works:", round(rep.min_R_F1, 4))
print("condF2:", rep.satisfied_F2, " smallest R that works:", round(rep.min_R_F2, 4))

# Polynomial decay is too fast for a log-scale model: the fit is flagged.
g = ob.build_observable("product_decay", dim=1, delta=2.0, radius=4096)
print("product decay, poor fit:", ob.fit_tail_exponent(g, 4 / 3, grid).poor_fit)

# With q * delta = 1 the tail diverges, so no R can work.
h = ob.build_observable("product_decay", dim=1, delta=0.75, radius=64)
print("harmonic tail:", ob.check_conditions(h, ob.ConditionSpec(4, 1.5, 2.5, 100.0, (4, 16))).to_json()["min_R_F1"])
