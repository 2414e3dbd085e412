"""
Classifying toral automorphisms
===============================

An integer matrix with determinant +-1 acts on the torus R^d / Z^d. It is
ergodic when no eigenvalue is a root of unity, and hyperbolic when no
eigenvalue has modulus one. Both questions are answered exactly here, from
the characteristic polynomial.
"""

from toruslab.matrix_core import CAT_MAP, QUASI_HYPERBOLIC_T4, char_poly, classify

# The cat map: one expanding and one contracting direction.
print(char_poly(CAT_MAP))
print(classify(CAT_MAP).summary())

# A 4x4 example whose characteristic polynomial x^4 - 2x^3 - 2x + 1 has a pair
# of roots on the unit circle that are not roots of unity: ergodic, but not
# hyperbolic.
cls = classify(QUASI_HYPERBOLIC_T4)
print(char_poly(QUASI_HYPERBOLIC_T4))
print(cls.summary())
print("spectral radius in", cls.spectral_radius.to_json())
print("1 / (smallest expanding modulus) in", cls.rho_u_bound.to_json())

# Things that are not ergodic, or not automorphisms at all.
for rows in [((1, 0), (0, 1)), ((1, 1), (0, 1)), ((0, -1), (1, 0)), ((2, 0), (0, 1))]:
    print(rows, "->", classify(rows).summary())
