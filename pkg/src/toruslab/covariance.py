"""Exact covariances Cov(f, f o T^n) and the asymptotic variance sigma^2.

Since exp(2 pi i <k, T^n x>) = exp(2 pi i <tS^n k, x>), composing with T^n
moves the coefficient at k to the frequency tS^n k. For a trigonometric
polynomial f this gives

    Cov(f, f o T^n) = sum_m c_{tS^n m} conj(c_m),

a finite sum that vanishes as soon as every support frequency has been
pushed out of the support for good. For ergodic T this always happens:
a nonzero integer vector cannot have a bounded tS-orbit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import mpmath
from mpmath import mp

from .errors import EscapeCapExceeded, NotErgodic, PrecisionExhausted
from .matrix_core import IntegerMatrix, ToralAutomorphism, as_matrix
from .observable import FourierObservable

DEGENERACY_TOL = 1e-12


def _automorphism(T) -> ToralAutomorphism:
    return T if isinstance(T, ToralAutomorphism) else ToralAutomorphism.from_matrix(T)


def _csum(values) -> complex:
    values = list(values)
    return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))


def covariance_at(f: FourierObservable, T, n: int) -> float:
    """Cov(f, f o T^n), exact up to the final rounding of the coefficient sum."""
    if len(f) == 0:
        return 0.0
    S = T.matrix if isinstance(T, ToralAutomorphism) else as_matrix(T)
    P = S.transpose().power(n)
    terms = []
    for m, cm in f.items():
        c = f.coefficient(P @ m)
        if c:
            terms.append(c * cm.conjugate())
    return _csum(terms).real


class EscapeCertifier:
    """Certifies that tS^n m stays outside the sup-norm ball of radius R for all n >= n0.

    For an eigenvalue lambda of S with |lambda| > 1 and a right eigenvector
    w (S w = lambda w), the linear form v -> <w, v> satisfies
    <w, tS v> = lambda <w, v>, so |<w, tS^n m>| grows geometrically. Since
    |<w, v>| <= ||w||_1 |v|_inf, once |<w, v_n>| > R ||w||_1 (1 + margin)
    every later iterate has sup norm above R.
    """

    def __init__(self, T: ToralAutomorphism, precision: Optional[int] = None):
        cls = T.classification
        self.precision = precision or cls.precision
        self.margin = mpmath.ldexp(1, -(self.precision // 2))
        with mp.workprec(self.precision + 32):
            A = mpmath.matrix([[int(v) for v in r] for r in T.matrix.rows])
            evals, evecs = mpmath.eig(A)
            forms = []
            for j, lam in enumerate(evals):
                if abs(lam) <= 1 + self.margin:
                    continue
                w = evecs[:, j]
                resid = mpmath.norm(A * w - lam * w, 1) / mpmath.norm(w, 1)
                if resid > mpmath.ldexp(1, -(self.precision // 2)):
                    raise PrecisionExhausted(f"eigenvector residual {resid} too large")
                forms.append(([w[i] for i in range(T.dim)], mpmath.norm(w, 1)))
        if len(forms) < min(cls.d_u, 1):
            raise PrecisionExhausted("no expanding eigenvector found")
        self.forms = forms

    def escaped(self, v: Sequence[int], radius: int) -> bool:
        with mp.workprec(self.precision + 32):
            for w, wnorm in self.forms:
                if abs(mpmath.fsum(wi * int(vi) for wi, vi in zip(w, v))) > radius * wnorm * (1 + self.margin):
                    return True
        return False


def default_cap(T: ToralAutomorphism, radius: int) -> int:
    """10 d bitlen(R) / log2(r_lo), where r_lo is the certified lower bound on the spectral radius."""
    r_lo = T.classification.spectral_radius.lo
    bits = max(int(radius).bit_length(), 1)
    return max(math.ceil(10 * T.dim * bits / math.log2(r_lo)), 1)


@dataclass(frozen=True)
class VarianceReport:
    covariances: tuple  # ((n, Cov_n), ...) for n = 0..N0
    escape_horizon: int
    sigma2: float
    absolutely_convergent: bool
    degenerate: bool
    escape_steps: tuple = ()  # per support frequency: first certified escape step

    @property
    def N0(self) -> int:
        return self.escape_horizon

    def cov(self, n: int) -> float:
        n = abs(n)
        return self.covariances[n][1] if n < len(self.covariances) else 0.0

    def second_moment(self, n: int) -> float:
        """E(S_n^2) = sum_{|i| < n} (n - |i|) Cov_i."""
        if n < 1:
            raise ValueError("n must be >= 1")
        terms = [n * self.cov(0)]
        terms += [2.0 * (n - i) * self.cov(i) for i in range(1, min(n, len(self.covariances)))]
        return math.fsum(terms)

    def to_json(self, moments: Sequence[int] = ()) -> dict:
        """``moments`` adds ``partial_sums``: [n, E(S_n^2)] for each requested n."""
        out = {
            "schema": 1,
            "covariances": [[n, c] for n, c in self.covariances],
            "N0": self.escape_horizon,
            "sigma2": self.sigma2,
            "absolutely_convergent": self.absolutely_convergent,
            "degenerate": self.degenerate,
        }
        if moments:
            out["partial_sums"] = [[int(n), self.second_moment(int(n))] for n in moments]
        return out

    def dumps(self, moments: Sequence[int] = ()) -> str:
        return json.dumps(self.to_json(moments), indent=2, sort_keys=True)


def sigma2(f: FourierObservable, T, cap: Optional[int] = None) -> VarianceReport:
    """Exact asymptotic variance sigma^2 = Cov_0 + 2 sum_{n >= 1} Cov_n for a
    trigonometric polynomial f and an ergodic automorphism T.

    Each support frequency is pushed forward by tS until the escape
    certificate holds; every return to the support on the way is recorded.
    """
    T = _automorphism(T)
    if not T.is_ergodic:
        raise NotErgodic("sigma^2 via lattice escape requires an ergodic automorphism")
    if len(f) == 0:
        return VarianceReport(((0, 0.0),), 0, 0.0, True, True)
    if f.dim != T.dim:
        raise ValueError(f"observable dimension {f.dim} != automorphism dimension {T.dim}")
    radius = f.support_radius
    cap = default_cap(T, radius) if cap is None else cap
    certifier = EscapeCertifier(T)
    St = T.matrix.transpose()
    hits: dict = {}
    escape_steps = []
    for m, cm in f.items():
        v = m
        for n in range(1, cap + 1):
            v = St @ v
            c = f.coefficient(v)
            if c:
                hits.setdefault(n, []).append(c * cm.conjugate())
            if max(abs(x) for x in v) > radius and certifier.escaped(v, radius):
                escape_steps.append((m, n))
                break
        else:
            raise EscapeCapExceeded(m, cap)
    n0 = max(hits, default=0) + 1
    covs = [(0, f.l2_squared)] + [(n, _csum(hits.get(n, ())).real) for n in range(1, n0 + 1)]
    s2 = math.fsum([covs[0][1]] + [2.0 * c for _, c in covs[1:]])
    degenerate = s2 <= DEGENERACY_TOL * covs[0][1]
    if degenerate and s2 < 0:
        s2 = 0.0
    return VarianceReport(tuple(covs), n0, s2, True, degenerate, tuple(escape_steps))


def exact_second_moment(f: FourierObservable, T, n: int,
                        report: Optional[VarianceReport] = None) -> float:
    """E(S_n^2) for S_n = f o T + ... + f o T^n."""
    report = sigma2(f, T) if report is None else report
    return report.second_moment(n)


def coboundary(g: FourierObservable, T) -> FourierObservable:
    """The observable g o T - g, whose Birkhoff sums telescope."""
    from .observable import explicit

    S = T.matrix if isinstance(T, ToralAutomorphism) else as_matrix(T)
    St = S.transpose()
    coeffs: dict = {}
    for k, c in g.items():
        pushed = St @ k
        coeffs[pushed] = coeffs.get(pushed, 0j) + c
        coeffs[k] = coeffs.get(k, 0j) - c
    return explicit({k: c for k, c in coeffs.items() if abs(c) > 0}, dim=g.dim)
