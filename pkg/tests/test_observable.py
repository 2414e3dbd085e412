import math
from fractions import Fraction

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_axis_tail, lattice_values, leonov_np, leonov_remainder
from toruslab import observable as ob
from toruslab.errors import BadExponent, DegenerateGrid, NonSymmetricExplicitInput, ZeroRadius


@st.composite
def explicit_obs(draw, dim=2, radius=3, max_terms=5):
    coeffs = {}
    for _ in range(draw(st.integers(1, max_terms))):
        k = tuple(draw(st.integers(-radius, radius)) for _ in range(dim))
        if not any(k):
            continue
        re = draw(st.floats(-2, 2, allow_nan=False))
        im = draw(st.floats(-2, 2, allow_nan=False))
        coeffs[k] = complex(re, im)
        coeffs.pop(tuple(-v for v in k), None)
    return ob.explicit(coeffs, dim=dim)


# -- construction ---------------------------------------------------------------------

def test_explicit_fills_conjugates():
    f = ob.explicit({(1, 2): 1 + 2j})
    assert f.coefficient((-1, -2)) == 1 - 2j
    assert len(f) == 2 and f.support_radius == 2
    assert f.l2_squared == pytest.approx(10.0)


def test_explicit_accepts_consistent_pairs_and_rejects_others():
    ob.explicit({(1, 0): 1j, (-1, 0): -1j})
    with pytest.raises(NonSymmetricExplicitInput):
        ob.explicit({(1, 0): 1j, (-1, 0): 1j})


def test_explicit_rejects_constant_term():
    with pytest.raises(ValueError):
        ob.explicit({(0, 0): 1.0})


def test_zero_observable():
    f = ob.zero(3)
    assert len(f) == 0 and f.support_radius == 0
    assert ob.evaluate(f, (1, 2, 3), q=7) == 0.0


def test_closed_forms():
    f = ob.build_observable("product_decay", 2, delta=1.0, radius=2)
    assert len(f) == 5 * 5 - 1
    assert f.coefficient((1, -2)) == pytest.approx(1 / 6)
    g = ob.build_observable("leonov", 1, alpha=2.0, A=3.0, radius=4)
    assert g.coefficient((4,)) == pytest.approx(3 * 5 ** -0.75 * math.log(6) ** -2)
    assert g.coefficient((5,)) == 0
    with pytest.raises(ZeroRadius):
        ob.build_observable("leonov", 1, alpha=2.0, radius=0)
    with pytest.raises(ValueError):
        ob.build_observable("gaussian", 1, radius=3)


def test_phases_keep_symmetry():
    f = ob.build_observable("product_decay", 2, delta=1.0, radius=2, phases=lambda k: 0.3 * k[0] + k[1])
    for k, c in f.items():
        assert f.coefficient(tuple(-v for v in k)) == pytest.approx(c.conjugate())


@pytest.mark.parametrize("f", [
    ob.explicit({(1, 0): 1.0, (2, -1): 0.5j}),
    ob.build_observable("product_decay", 2, delta=0.75, A=2.0, radius=3),
    ob.build_observable("leonov", 1, alpha=2.0, radius=5),
])
def test_json_round_trip(f, validate):
    obj = f.to_json()
    validate(obj, "observable")
    g = ob.from_json(obj)
    assert g.kind == f.kind
    np.testing.assert_array_equal(g.frequencies, f.frequencies)
    np.testing.assert_allclose(g.coefficients, f.coefficients, rtol=0, atol=0)


def test_from_json_rejects_duplicates():
    with pytest.raises(ValueError):
        ob.from_json({"kind": "explicit", "coeffs": [{"k": [1], "re": 1}, {"k": [1], "re": 2}]})


@pytest.mark.parametrize("obj", [
    {"kind": "explicit", "dim": 2, "support": [[[1, 0], [1.0, 0.0]]]},
    {"kind": "explicit", "dim": 2},
    {"kind": "explicit", "coeffs": [{"k": [1, 0], "real": 1.0}]},
    {"kind": "leonov", "dim": 1, "alpha": 2, "radius": 8, "theta": 1},
    {"kind": "fourier", "dim": 1},
])
def test_from_json_rejects_malformed(obj, validate):
    # a typo must not silently turn into the zero observable
    with pytest.raises((ValueError, KeyError)):
        ob.from_json(obj)
    with pytest.raises(jsonschema.ValidationError):
        validate(obj, "observable")


# -- evaluation -------------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(explicit_obs())
def test_real_centered_parseval_on_prime_lattice(f):
    q = 11  # prime > 2 * radius: differences of support frequencies stay nonzero mod q
    vals = lattice_values(f, q)
    assert np.max(np.abs(vals.imag)) < 1e-8 * max(1.0, f.l1)
    assert abs(vals.real.mean()) < 1e-8
    assert np.mean(vals.real ** 2) == pytest.approx(f.l2_squared, abs=1e-8)
    np.testing.assert_allclose(ob.evaluate_lattice(f, ob.lattice_points(q, 2), q), vals.real, atol=1e-9)


@given(explicit_obs(), st.lists(st.integers(0, 10 ** 30), min_size=2, max_size=2))
def test_evaluate_forms_agree(f, residues):
    q = 10 ** 30 + 57
    a = ob.evaluate(f, residues, q=q)
    b = ob.evaluate(f, [Fraction(r, q) for r in residues])
    assert a == b
    # direct float evaluation loses the phase, but not at this scale of agreement
    x = [Fraction(r, q) for r in residues]
    direct = sum(c * complex(math.cos(2 * math.pi * float(sum(ki * xi for ki, xi in zip(k, x)) % 1)),
                             math.sin(2 * math.pi * float(sum(ki * xi for ki, xi in zip(k, x)) % 1)))
                 for k, c in f.items())
    assert a == pytest.approx(direct.real, abs=1e-9 * max(1.0, f.l1))


def test_evaluate_dimension_check():
    with pytest.raises(ValueError):
        ob.evaluate(ob.explicit({(1, 0): 1.0}), (1, 2, 3), q=5)


def test_evaluate_lattice_overflow_guard():
    with pytest.raises(OverflowError):
        ob.evaluate_lattice(ob.explicit({(1, 0): 1.0}), np.zeros((1, 2)), 2 ** 62)


# -- thresholds and condition specs----------------------------------------------------------------

def test_thresholds_at_p4():
    assert ob.theta_threshold(4) == pytest.approx(7 / 6)
    assert ob.beta_threshold(4) == pytest.approx(2.0)
    assert ob.combined_threshold(4) == pytest.approx(4 / 3)
    assert ob.ConditionSpec(4, 1, 1, 1, (2,)).q == pytest.approx(4 / 3)


@given(st.floats(2.0001, 4.0))
def test_combined_threshold_dominates(p):
    # (3p-4)/(2(p-1)) - (p^2-2)/(p(p-1)) = (p-2)^2 / (2p(p-1))
    diff = ob.combined_threshold(p) - ob.theta_threshold(p)
    assert diff == pytest.approx((p - 2) ** 2 / (2 * p * (p - 1)), abs=1e-12)


@pytest.mark.parametrize("p", [2.0, 1.5, 4.01, 8.0])
def test_bad_exponent(p):
    with pytest.raises(BadExponent):
        ob.ConditionSpec(p, 1.0, 1.0, 1.0, (2,))


def test_bad_b_values():
    with pytest.raises(ValueError):
        ob.ConditionSpec(3, 1.0, 1.0, 1.0, (1, 4))


# -- tails ------------------------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(explicit_obs(radius=4, max_terms=8), st.floats(1.01, 3.0))
def test_tail_profile_monotone_and_exact(f, s):
    prof = ob.tail_profile(f, s)
    assert np.all(np.diff(prof) <= 1e-15)
    norms = np.abs(f.frequencies).max(axis=1)
    for b in range(len(prof)):
        brute = math.fsum(abs(c) ** s for c, n in zip(f.coefficients, norms) if n >= b)
        assert prof[b] == pytest.approx(brute, rel=1e-12, abs=1e-300)
    assert ob.tail_sum(f, f.support_radius + 1, s) == (0.0, False)


@pytest.mark.parametrize("b", [16, 64, 256, 1024, 4096])
def test_leonov_tail_matches_brute_force(b):
    f = ob.build_observable("leonov", 1, alpha=2.0, radius=4096)
    s = 4 / 3
    tail, beyond = ob.tail_sum(f, b, s)
    brute = brute_axis_tail(leonov_np(2.0), s, b, remainder=leonov_remainder(2.0, s))
    assert not beyond
    assert tail >= brute * (1 - 1e-9)  # the analytic remainder is an upper bound
    assert tail == pytest.approx(brute, rel=0.01)


def test_tail_beyond_radius_is_flagged_and_bounds_truth():
    f = ob.build_observable("product_decay", 1, delta=2.0, radius=64)
    tail, beyond = ob.tail_sum(f, 200, 2.0)
    assert beyond
    brute = brute_axis_tail(lambda j: (1.0 + j) ** -2.0, 2.0, 200, cutoff=10 ** 6)
    assert brute <= tail <= 1.05 * brute


def test_remainder_bound_in_two_dimensions():
    f = ob.build_observable("product_decay", 2, delta=1.5, radius=8)
    s = 2.0
    N = 8
    # truth, truncated to a large box, is a lower bound for the infinite remainder
    j = np.arange(-2000, 2001)
    g = (1.0 + np.abs(j)) ** (-1.5 * s)
    box = np.abs(j) > N
    partial = g.sum() ** 2 - g[~box].sum() ** 2
    assert ob.remainder_bound(f, s, N) >= partial


def test_divergent_tail_reports_inf(validate):
    f = ob.build_observable("product_decay", 1, delta=0.75, radius=32)
    rep = ob.check_conditions(f, ob.ConditionSpec(4, 1.5, 2.5, 10.0, (4, 8)))
    assert rep.condF1_tail[0].tail == math.inf
    assert not rep.satisfied_F1 and rep.min_R_F1 == math.inf
    obj = rep.to_json()
    validate(obj, "condition_report")
    assert obj["min_R_F1"] == "inf"


def test_explicit_support_satisfies_conditions_beyond_support():
    f = ob.explicit({(1,): 0.5, (3,): 0.25})
    rep = ob.check_conditions(f, ob.ConditionSpec(4, 1.5, 2.5, 10.0, (2, 4, 8)))
    assert rep.satisfied_F1 and rep.satisfied_F2
    assert [c.tail for c in rep.condF1_tail][1:] == [0.0, 0.0]
    # rates below the thresholds fail even with vanishing tails
    rep = ob.check_conditions(f, ob.ConditionSpec(4, 1.0, 1.5, 10.0, (2, 4, 8)))
    assert not rep.satisfied_F1 and not rep.satisfied_F2


def test_min_R_is_tight():
    f = ob.build_observable("leonov", 1, alpha=2.0, radius=512)
    spec = ob.ConditionSpec(4, 1.5, 2.5, 100.0, (4, 16, 64, 256))
    rep = ob.check_conditions(f, spec)
    tight = ob.check_conditions(f, ob.ConditionSpec(4, 1.5, 2.5, rep.min_R_F1 * (1 + 1e-12), spec.b_values))
    loose = ob.check_conditions(f, ob.ConditionSpec(4, 1.5, 2.5, rep.min_R_F1 * (1 - 1e-6), spec.b_values))
    assert tight.satisfied_F1 and not loose.satisfied_F1


# -- exponent fit -------------------------------------------------------------------------------

def test_fit_leonov():
    f = ob.build_observable("leonov", 1, alpha=2.0, radius=4096)
    fit = ob.fit_tail_exponent(f, 4 / 3, [16, 32, 64, 128, 256, 512, 1024, 2048, 4096])
    assert fit.theta_hat > 7 / 6
    assert not fit.poor_fit
    assert fit.r_squared > 0.99


def test_fit_flags_polynomial_tails():
    f = ob.build_observable("product_decay", 1, delta=2.0, radius=4096)
    fit = ob.fit_tail_exponent(f, 4 / 3, [16, 32, 64, 128, 256, 512, 1024, 2048, 4096])
    assert fit.poor_fit


def test_fit_degenerate():
    f = ob.explicit({(1,): 1.0})
    with pytest.raises(DegenerateGrid):
        ob.fit_tail_exponent(f, 2.0, [2, 4, 8, 16])
    g = ob.build_observable("leonov", 1, alpha=2.0, radius=8)
    with pytest.raises(DegenerateGrid):
        ob.fit_tail_exponent(g, 2.0, [2, 4, 100, 200])  # two points past the radius are dropped


# -- documented examples ------------------------------------------------------------------

def test_build_examples():
    f = ob.build_observable("explicit", 2, coeffs={(1, 0): 1, (-1, 0): 1})
    assert ob.evaluate(f, (0, 0), q=1) == 2.0
    g = ob.build_observable("product_decay", 1, A=1.0, delta=0.75, radius=2)
    assert g.coefficient((1,)) == g.coefficient((-1,)) == pytest.approx(2 ** -0.75)
    assert g.coefficient((2,)) == g.coefficient((-2,)) == pytest.approx(3 ** -0.75)
    h = ob.build_observable("leonov", 1, A=1.0, alpha=2.0, radius=1)
    assert h.coefficient((1,)) == pytest.approx(2 ** -0.75 * math.log(3) ** -2)


def test_evaluate_examples(cosine):
    assert ob.evaluate(cosine, (0, 0), q=1) == 2.0
    assert abs(ob.evaluate(cosine, [Fraction(1, 4), Fraction(0)])) < 1e-12
    f = ob.explicit({(1, 0): 1, (0, 1): 1})
    assert ob.evaluate(f, [Fraction(1, 2), Fraction(1, 2)]) == pytest.approx(-4.0, abs=1e-12)


def test_fit_range_on_leonov_grid():
    f = ob.build_observable("leonov", 1, alpha=2.0, radius=4096)
    grid = [2 ** j for j in range(4, 13)]
    assert 1.3 <= ob.fit_tail_exponent(f, 4 / 3, grid).theta_hat <= 2.0
