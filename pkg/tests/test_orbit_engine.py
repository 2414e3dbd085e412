import gzip
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toruslab import observable as ob
from toruslab import orbit_engine as oe
from toruslab.errors import DimensionMismatch
from toruslab.matrix_core import CAT_MAP, QUASI_HYPERBOLIC_T4

Q_VALUES = [5, 64, 2 ** 31 - 1, 2 ** 32 + 15, oe.MERSENNE61, 2 ** 62 + 1, 2 ** 63 - 25, 2 ** 64 + 13]


@pytest.mark.parametrize("q", [2, 3, 5, 7, 64])
def test_step_is_a_permutation(q):
    pts = list(itertools.product(range(q), repeat=2))
    images = {oe.step(CAT_MAP, oe.ModularState(q, p)).residues for p in pts}
    assert len(images) == q * q


@pytest.mark.parametrize("q", Q_VALUES)
def test_orbit_matches_big_integer_powers(q, cosine):
    x0 = oe.ModularState(q, (q // 3 + 1, q // 7 + 2))
    series = oe.birkhoff(CAT_MAP, cosine, x0, 200, keep_states=True)
    for n in (1, 2, 17, 100, 199, 200):
        direct = CAT_MAP.power(n) @ x0.residues
        assert tuple(int(v) for v in series.states[n - 1]) == tuple(v % q for v in direct)
        assert oe.power_apply(CAT_MAP, n, x0).residues == tuple(v % q for v in direct)
    # values are f at the exact states
    for n in (1, 50, 200):
        state = oe.ModularState(q, [int(v) for v in series.states[n - 1]])
        assert series.values[n - 1] == pytest.approx(ob.evaluate(cosine, state), abs=1e-12)


def test_orbit_t4(cosine4):
    q = oe.MERSENNE61
    x0 = oe.ModularState(q, (1, 2, 3, 4))
    series = oe.birkhoff(QUASI_HYPERBOLIC_T4, cosine4, x0, 200, keep_states=True)
    direct = QUASI_HYPERBOLIC_T4.power(200) @ x0.residues
    assert tuple(int(v) for v in series.states[-1]) == tuple(v % q for v in direct)


def test_small_example(cosine):
    series = oe.birkhoff(CAT_MAP, cosine, oe.ModularState(5, (1, 0)), 2, keep_states=True)
    assert series.states.tolist() == [[2, 1], [0, 3]]
    np.testing.assert_allclose(series.values, [2 * math.cos(4 * math.pi / 5), 2.0], atol=1e-15)
    np.testing.assert_allclose(series.partial_sums, np.cumsum(series.values), atol=1e-15)


def test_float_iteration_is_not_exact():
    # the reason orbits are computed on a lattice: doubles lose the orbit in ~50 steps
    x = np.array([0.1, 0.2])
    exact = oe.ModularState(10, (1, 2))
    S = np.array(CAT_MAP.rows, dtype=float)
    for _ in range(60):
        x = (S @ x) % 1.0
        exact = oe.step(CAT_MAP, exact)
    assert np.max(np.abs(x - np.array(exact.residues) / 10)) > 1e-3


def test_dimension_checks(cosine):
    with pytest.raises(DimensionMismatch):
        oe.step(CAT_MAP, oe.ModularState(5, (1, 2, 3)))
    with pytest.raises(DimensionMismatch):
        oe.birkhoff(CAT_MAP, ob.explicit({(1, 0, 0): 1.0}), oe.ModularState(5, (1, 2)), 3)


@given(st.lists(st.floats(-1e15, 1e15), min_size=1, max_size=300))
def test_neumaier_matches_fsum(xs):
    out = oe.neumaier_cumsum(np.array(xs))
    for k in (0, len(xs) // 2, len(xs) - 1):
        exact = math.fsum(xs[:k + 1])
        assert abs(out[k] - exact) <= 1e-9 * max(1.0, abs(exact))


def test_neumaier_beats_naive():
    xs = np.array([1e16, 1.0, -1e16] * 1000)
    assert oe.neumaier_cumsum(xs)[-1] == 1000.0
    assert np.cumsum(xs)[-1] != 1000.0


# -- modular multiplication ---------------------------------------------------------

@settings(max_examples=300)
@given(st.data())
def test_mulmod_against_python_ints(data):
    q = data.draw(st.sampled_from([
        st.integers(2, 2 ** 32 - 1), st.just(oe.MERSENNE61), st.integers(2 ** 32, 2 ** 63 - 1)]))
    q = data.draw(q)
    a = data.draw(st.integers(0, q - 1))
    b = data.draw(st.integers(0, q - 1))
    mode = oe._mode_for(q)
    got = oe._mulmod(np.uint64(a), np.uint64(b), np.uint64(q), mode)
    assert int(got) == a * b % q


# -- sampling ------------------------------------------------------------------------

def test_sampling_independent_of_split():
    q = oe.MERSENNE61
    full = oe.sample_residues(7, q, 10000, 3)
    assert full.dtype == np.uint64 and int(full.max()) < q
    for a, b in [(0, 1), (4095, 4097), (5000, 10000), (8191, 8193)]:
        np.testing.assert_array_equal(oe.sample_residues(7, q, b - a, 3, start=a), full[a:b])
    assert not np.array_equal(oe.sample_residues(8, q, 100, 3), full[:100])


def test_sampling_uniform_small_q():
    draws = oe.sample_residues(3, 5, 50000, 1).ravel()
    counts = np.bincount(draws.astype(np.int64), minlength=5)
    # chi-square with 4 dof; 0.999 quantile is 18.47
    chi2 = float(np.sum((counts - 10000) ** 2 / 10000))
    assert chi2 < 18.47


@pytest.mark.slow
def test_stationary_mean_and_variance(cosine):
    batch = oe.run_trajectories(CAT_MAP, cosine, oe.MERSENNE61, 11, 10 ** 6, [], lags=[0, 5])
    for j in range(2):
        x = batch.lag_values[:, j]
        assert abs(x.mean()) < 4 * 2 / math.sqrt(10 ** 6)
        assert x.var() == pytest.approx(2.0, abs=4 * math.sqrt(2) * 2 / math.sqrt(10 ** 6) + 0.01)


# -- batches ---------------------------------------------------------------------------

def test_batch_agrees_with_single_orbits(cosine):
    q = oe.MERSENNE61
    batch = oe.run_trajectories(CAT_MAP, cosine, q, 5, 20, [1, 10, 50], lags=[0, 3])
    x0s = oe.sample_initial(5, q, 20, 2)
    for t in (0, 7, 19):
        series = oe.birkhoff(CAT_MAP, cosine, x0s[t], 50)
        np.testing.assert_array_equal(batch.partial_sums[t], series.partial_sums[[0, 9, 49]])
        assert batch.running_max[t, -1] == np.max(np.abs(series.partial_sums))
        assert batch.lag_values[t, 1] == series.values[2]
        assert batch.lag_values[t, 0] == pytest.approx(ob.evaluate(cosine, x0s[t]), abs=1e-12)


@pytest.mark.parametrize("workers", [2, 3, 8])
def test_batch_is_worker_invariant(cosine, workers):
    args = (CAT_MAP, cosine, oe.MERSENNE61, 1, 1000, [10, 100])
    a = oe.run_trajectories(*args, lags=[0, 2], workers=1)
    b = oe.run_trajectories(*args, lags=[0, 2], workers=workers)
    for name in ("partial_sums", "running_max", "lag_values"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


def test_batch_rejects_bad_inputs(cosine):
    with pytest.raises(ValueError):
        oe.run_trajectories(CAT_MAP, cosine, 2 ** 64 + 13, 0, 10, [5])
    with pytest.raises(ValueError):
        oe.run_trajectories(CAT_MAP, cosine, 101, 0, 10, [0])


def test_write_csv(tmp_path, cosine):
    series = oe.birkhoff(CAT_MAP, cosine, oe.ModularState(5, (1, 0)), 3, keep_states=True)
    series.write_csv(tmp_path / "s.csv", with_states=True)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "k,S_k,x_1,x_2"
    assert lines[1].endswith(",2/5,1/5")
    series.write_csv(tmp_path / "s.csv.gz")
    with gzip.open(tmp_path / "s.csv.gz", "rt") as fh:
        assert fh.readline().strip() == "k,S_k"
    with pytest.raises(ValueError):
        oe.birkhoff(CAT_MAP, cosine, oe.ModularState(5, (1, 0)), 3).write_csv(tmp_path / "x", True)
