"""Exact orbits of T on the rational lattice (Z/qZ)^d / q and Birkhoff sums along them.

Points are stored as integer residues, so x -> S x mod q is exact and
bijective (gcd(det S, q) = 1 when |det S| = 1). Floating point only enters
when f is evaluated: the phase <k, x> mod q is exact and then converted to an
angle once.

The hot loop is a numba kernel. It handles q < 2**32 by direct uint64
products, q = 2**61 - 1 with a Mersenne reduction, and any other q < 2**63
with shift-and-add multiplication. Larger q go through a pure Python path.
"""

from __future__ import annotations

import csv
import gzip
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numba
import numpy as np

from .errors import DimensionMismatch
from .matrix_core import IntegerMatrix, ToralAutomorphism, as_matrix
from .observable import FourierObservable

MERSENNE61 = (1 << 61) - 1
DEFAULT_Q = MERSENNE61
SAMPLE_BLOCK = 4096

_MODE_SMALL, _MODE_M61, _MODE_GENERIC = 0, 1, 2


@dataclass(frozen=True)
class ModularState:
    """The point residues / q (mod 1); residues are reduced into [0, q)."""

    q: int
    residues: tuple

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be positive")
        object.__setattr__(self, "residues", tuple(int(r) % self.q for r in self.residues))

    @property
    def dim(self) -> int:
        return len(self.residues)

    def as_fractions(self) -> list:
        return [f"{r}/{self.q}" for r in self.residues]


def _matrix(T) -> IntegerMatrix:
    return T.matrix if isinstance(T, ToralAutomorphism) else as_matrix(T)


def step(T, x: ModularState) -> ModularState:
    S = _matrix(T)
    if S.dim != x.dim:
        raise DimensionMismatch(f"{S.dim}x{S.dim} matrix applied to a {x.dim}-dimensional point")
    return ModularState(x.q, S @ x.residues)


def power_apply(T, n: int, x: ModularState) -> ModularState:
    """S^n x mod q computed directly with big integers (independent of step())."""
    S = _matrix(T)
    return ModularState(x.q, S.power(n) @ x.residues)


# -- numba kernels -------------------------------------------------------------

def _mode_for(q: int) -> int:
    if q < (1 << 32):
        return _MODE_SMALL
    if q == MERSENNE61:
        return _MODE_M61
    if q < (1 << 63):
        return _MODE_GENERIC
    return -1


@numba.njit(inline="always")
def _addmod(a, b, q):
    s = a + b
    if s >= q:
        s -= q
    return s


@numba.njit(inline="always")
def _mulmod(a, b, q, mode):
    if mode == 0:
        return (a * b) % q
    if mode == 1:
        mask31 = np.uint64(0x7FFFFFFF)
        mask30 = np.uint64(0x3FFFFFFF)
        a_hi = a >> np.uint64(31)
        a_lo = a & mask31
        b_hi = b >> np.uint64(31)
        b_lo = b & mask31
        mid = a_hi * b_lo + a_lo * b_hi
        # a*b = a_hi b_hi 2^62 + mid 2^31 + a_lo b_lo, and 2^61 = 1 mod q
        s = (np.uint64(2) * (a_hi * b_hi) + (mid >> np.uint64(30))
             + ((mid & mask30) << np.uint64(31)) + a_lo * b_lo)
        s = (s & q) + (s >> np.uint64(61))
        s = (s & q) + (s >> np.uint64(61))
        if s >= q:
            s -= q
        return s
    r = np.uint64(0)
    while b:
        if b & np.uint64(1):
            r = _addmod(r, a, q)
        a = _addmod(a, a, q)
        b >>= np.uint64(1)
    return r


@numba.njit(inline="always")
def _apply(S, x, y, q, mode):
    d = x.shape[0]
    for i in range(d):
        acc = np.uint64(0)
        for j in range(d):
            acc = _addmod(acc, _mulmod(S[i, j], x[j], q, mode), q)
        y[i] = acc
    for i in range(d):
        x[i] = y[i]


@numba.njit(inline="always")
def _observe(K, cre, cim, x, q, mode, qf, half):
    d = x.shape[0]
    val = 0.0
    for j in range(K.shape[0]):
        r = np.uint64(0)
        for i in range(d):
            r = _addmod(r, _mulmod(K[j, i], x[i], q, mode), q)
        if r > half:
            t = -(np.float64(q - r) / qf)
        else:
            t = np.float64(r) / qf
        ang = 2.0 * np.pi * t
        if cim[j] == 0.0:
            val += 2.0 * cre[j] * np.cos(ang)
        else:
            val += 2.0 * (cre[j] * np.cos(ang) - cim[j] * np.sin(ang))
    return val


@numba.njit(nogil=True, cache=True)
def _orbit_kernel(S, q, mode, x0, n, K, cre, cim, values, states):
    """One trajectory: f(T^k x0) for k = 1..n, optionally the states themselves."""
    d = x0.shape[0]
    x = x0.copy()
    y = np.empty(d, dtype=np.uint64)
    qf = np.float64(q)
    half = q >> np.uint64(1)
    keep = states.shape[0] > 0
    for k in range(n):
        _apply(S, x, y, q, mode)
        values[k] = _observe(K, cre, cim, x, q, mode, qf, half)
        if keep:
            for i in range(d):
                states[k, i] = x[i]


@numba.njit(nogil=True, cache=True)
def _batch_kernel(S, q, mode, x0s, n, K, cre, cim, rec, lags, out_s, out_max, out_x):
    """Many trajectories; only the recorded partial sums, running maxima of |S_k|
    and values at the requested lags are kept."""
    N, d = x0s.shape
    x = np.empty(d, dtype=np.uint64)
    y = np.empty(d, dtype=np.uint64)
    qf = np.float64(q)
    half = q >> np.uint64(1)
    nrec = rec.shape[0]
    nlag = lags.shape[0]
    for t in range(N):
        for i in range(d):
            x[i] = x0s[t, i]
        li = 0
        if nlag > 0 and lags[0] == 0:
            out_x[t, 0] = _observe(K, cre, cim, x, q, mode, qf, half)
            li = 1
        s = 0.0
        comp = 0.0
        mx = 0.0
        ri = 0
        for k in range(1, n + 1):
            _apply(S, x, y, q, mode)
            v = _observe(K, cre, cim, x, q, mode, qf, half)
            tot = s + v
            if abs(s) >= abs(v):
                comp += (s - tot) + v
            else:
                comp += (v - tot) + s
            s = tot
            cur = s + comp
            if abs(cur) > mx:
                mx = abs(cur)
            if ri < nrec and rec[ri] == k:
                out_s[t, ri] = cur
                out_max[t, ri] = mx
                ri += 1
            if li < nlag and lags[li] == k:
                out_x[t, li] = v
                li += 1


def _kernel_args(T, f: FourierObservable, q: int):
    S = _matrix(T)
    if f.dim != S.dim:
        raise DimensionMismatch(f"observable dimension {f.dim} != matrix dimension {S.dim}")
    mode = _mode_for(q)
    freqs, coeffs = f.representatives()
    Smod = np.array(S.mod(q), dtype=np.uint64).reshape(S.dim, S.dim)
    K = np.array([[int(v) % q for v in k] for k in freqs], dtype=np.uint64).reshape(len(freqs), S.dim)
    return Smod, np.uint64(q), mode, K, np.ascontiguousarray(coeffs.real), np.ascontiguousarray(coeffs.imag)


# -- Birkhoff sums along one orbit ------------------------------------------

@numba.njit(cache=True)
def neumaier_cumsum(values):
    out = np.empty(values.shape[0])
    s = 0.0
    comp = 0.0
    for i in range(values.shape[0]):
        v = values[i]
        t = s + v
        if abs(s) >= abs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
        out[i] = s + comp
    return out


@dataclass(frozen=True, eq=False)
class BirkhoffSeries:
    """values[k-1] = f(T^k x0) and partial_sums[k-1] = S_k = X_1 + ... + X_k."""

    x0: ModularState
    values: np.ndarray
    partial_sums: np.ndarray
    states: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return len(self.values)

    def write_csv(self, path, with_states: bool = False) -> None:
        """Trajectory dump with header ``k,S_k`` (plus ``x_1..x_d`` as "a/q")."""
        if with_states and self.states is None:
            raise ValueError("series was computed without states")
        opener = gzip.open if str(path).endswith(".gz") else open
        with opener(path, "wt", newline="") as fh:
            w = csv.writer(fh)
            header = ["k", "S_k"]
            if with_states:
                header += [f"x_{i + 1}" for i in range(self.x0.dim)]
            w.writerow(header)
            q = self.x0.q
            for k, s in enumerate(self.partial_sums, start=1):
                row = [k, repr(float(s))]
                if with_states:
                    row += [f"{int(r)}/{q}" for r in self.states[k - 1]]
                w.writerow(row)


def _python_orbit(S: IntegerMatrix, f, x0: ModularState, n: int, keep_states: bool):
    from .observable import evaluate

    x = x0
    values = np.empty(n)
    states = [] if keep_states else None
    for k in range(n):
        x = ModularState(x.q, S @ x.residues)
        values[k] = evaluate(f, x)
        if keep_states:
            states.append(x.residues)
    return values, (np.array(states, dtype=object) if keep_states else None)


def birkhoff(T, f: FourierObservable, x0: ModularState, n: int,
             keep_states: bool = False) -> BirkhoffSeries:
    """S_k = f(T x0) + ... + f(T^k x0) for k = 1..n, with compensated summation."""
    if n < 1:
        raise ValueError("n must be >= 1")
    S = _matrix(T)
    if f.dim != S.dim or x0.dim != S.dim:
        raise DimensionMismatch(
            f"matrix is {S.dim}-dimensional, observable {f.dim}, initial point {x0.dim}")
    q = x0.q
    if _mode_for(q) < 0:
        values, states = _python_orbit(S, f, x0, n, keep_states)
    else:
        Smod, qq, mode, K, cre, cim = _kernel_args(S, f, q)
        values = np.empty(n)
        states = np.empty((n if keep_states else 0, S.dim), dtype=np.uint64)
        x = np.array(x0.residues, dtype=np.uint64)
        _orbit_kernel(Smod, qq, mode, x, n, K, cre, cim, values, states)
        if not keep_states:
            states = None
    return BirkhoffSeries(x0, values, neumaier_cumsum(values), states)


# -- initial conditions ----------------------------------------------------------

def sample_residues(seed: int, q: int, count: int, dim: int, start: int = 0) -> np.ndarray:
    """Uniform draws from (Z/qZ)^d as a (count, dim) uint64 array.

    Sample i comes from block i // 4096, and each block has its own stream
    SeedSequence(seed, spawn_key=(block,)). A sample therefore depends only on
    (seed, i), never on how trajectories are split across workers.
    """
    if q < 2 or q > (1 << 63):
        raise ValueError("q must satisfy 2 <= q <= 2**63")
    if count < 1:
        raise ValueError("count must be >= 1")
    out = np.empty((count, dim), dtype=np.uint64)
    first, last = start // SAMPLE_BLOCK, (start + count - 1) // SAMPLE_BLOCK
    for block in range(first, last + 1):
        ss = np.random.SeedSequence(seed, spawn_key=(block,))
        draws = np.random.Generator(np.random.PCG64(ss)).integers(
            0, q, size=(SAMPLE_BLOCK, dim), dtype=np.uint64)
        lo = max(start, block * SAMPLE_BLOCK)
        hi = min(start + count, (block + 1) * SAMPLE_BLOCK)
        out[lo - start:hi - start] = draws[lo - block * SAMPLE_BLOCK:hi - block * SAMPLE_BLOCK]
    return out


def sample_initial(rng_seed: int, q: int, count: int, dim: int) -> list:
    return [ModularState(q, tuple(int(v) for v in row))
            for row in sample_residues(rng_seed, q, count, dim)]


# -- many trajectories -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrajectoryBatch:
    record_points: np.ndarray  # step indices k at which S_k was recorded
    lags: np.ndarray
    partial_sums: np.ndarray  # (N, len(record_points))
    running_max: np.ndarray  # max_{j <= k} |S_j|, same shape
    lag_values: np.ndarray  # f(T^lag x0), (N, len(lags))

    @property
    def samples(self) -> int:
        return self.partial_sums.shape[0]


def run_trajectories(T, f: FourierObservable, q: int, seed: int, samples: int,
                     record_points: Sequence[int], lags: Sequence[int] = (),
                     workers: int = 1) -> TrajectoryBatch:
    """Simulate ``samples`` independent orbits from uniform lattice points.

    Trajectories are split into contiguous chunks, one per worker thread; each
    trajectory's output depends only on (seed, index), so results are
    bit-identical for any worker count.
    """
    S = _matrix(T)
    rec = np.array(sorted(set(int(k) for k in record_points)), dtype=np.int64)
    lag_arr = np.array(sorted(set(int(k) for k in lags)), dtype=np.int64)
    if len(rec) and rec[0] < 1:
        raise ValueError("record points must be >= 1")
    n = int(max(rec.max() if len(rec) else 0, lag_arr.max() if len(lag_arr) else 0))
    if _mode_for(q) < 0:
        raise ValueError("batch simulation needs q < 2**63")
    Smod, qq, mode, K, cre, cim = _kernel_args(S, f, q)
    x0s = sample_residues(seed, q, samples, S.dim)
    out_s = np.zeros((samples, len(rec)))
    out_max = np.zeros((samples, len(rec)))
    out_x = np.zeros((samples, len(lag_arr)))

    def work(sl):
        _batch_kernel(Smod, qq, mode, x0s[sl], n, K, cre, cim, rec, lag_arr,
                      out_s[sl], out_max[sl], out_x[sl])

    bounds = np.linspace(0, samples, max(1, min(workers, samples)) + 1).astype(int)
    slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if len(slices) == 1:
        work(slices[0])
    else:
        with ThreadPoolExecutor(max_workers=len(slices)) as pool:
            list(pool.map(work, slices))
    return TrajectoryBatch(rec, lag_arr, out_s, out_max, out_x)
