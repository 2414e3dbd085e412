"""Real, centered observables on T^d given by Fourier coefficients, and the
tail-sum checks on those coefficients.

Three families are supported:

* ``explicit``: a finite list of frequencies k != 0 with complex c_k;
* ``product_decay``: c_k = A * prod_i (1 + |k_i|)^(-delta);
* ``leonov``: c_k = A * prod_i (1 + |k_i|)^(-3/4) * log(2 + |k_i|)^(-alpha).

Closed-form families are materialized on the sup-norm ball |k| <= radius;
what lies outside is handled by rigorous analytic bounds in
:func:`check_conditions`.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import BadExponent, DegenerateGrid, NonSymmetricExplicitInput, ZeroRadius

KINDS = ("explicit", "product_decay", "leonov")


def is_representative(k: Sequence[int]) -> bool:
    """True for the member of {k, -k} whose first nonzero entry is positive."""
    for v in k:
        if v:
            return v > 0
    return False


@dataclass(frozen=True, eq=False)
class FourierObservable:
    """f(x) = sum_k c_k exp(2 pi i <k, x>) over a finite, conjugate-symmetric support.

    ``frequencies`` is an (m, d) int64 array sorted lexicographically, and
    ``coefficients`` the matching complex128 array. Both k and -k are stored.
    """

    dim: int
    kind: str
    frequencies: np.ndarray
    coefficients: np.ndarray
    params: dict = field(default_factory=dict)
    truncation_radius: Optional[int] = None
    _lookup: dict = field(default=None, repr=False)

    def __post_init__(self):
        lookup = {tuple(int(v) for v in k): complex(c)
                  for k, c in zip(self.frequencies, self.coefficients)}
        object.__setattr__(self, "_lookup", lookup)

    def __len__(self):
        return len(self.coefficients)

    def coefficient(self, k) -> complex:
        """c_k, zero outside the materialized support."""
        return self._lookup.get(tuple(int(v) for v in k), 0j)

    def __contains__(self, k) -> bool:
        return tuple(int(v) for v in k) in self._lookup

    @property
    def support_radius(self) -> int:
        """max |k| (sup norm) over the support, 0 for f = 0."""
        if len(self) == 0:
            return 0
        return int(np.abs(self.frequencies).max())

    @property
    def l2_squared(self) -> float:
        return math.fsum(abs(c) ** 2 for c in self.coefficients)

    @property
    def l1(self) -> float:
        return math.fsum(abs(c) for c in self.coefficients)

    def representatives(self):
        """(frequencies, coefficients) for one member of each {k, -k} pair."""
        mask = np.array([is_representative(k) for k in self.frequencies], dtype=bool)
        return self.frequencies[mask], self.coefficients[mask]

    def items(self):
        return self._lookup.items()

    def to_json(self) -> dict:
        if self.kind == "explicit":
            freqs, coeffs = self.representatives()
            return {
                "kind": "explicit",
                "dim": self.dim,
                "coeffs": [{"k": [int(v) for v in k], "re": c.real, "im": c.imag}
                           for k, c in zip(freqs, coeffs)],
            }
        out = {"kind": self.kind, "dim": self.dim, "A": self.params["A"],
               "radius": self.truncation_radius}
        key = "delta" if self.kind == "product_decay" else "alpha"
        out[key] = self.params[key]
        return out


def _finalize(dim, kind, lookup, params=None, radius=None) -> FourierObservable:
    keys = sorted(lookup)
    freqs = np.array(keys, dtype=np.int64).reshape(len(keys), dim)
    coeffs = np.array([lookup[k] for k in keys], dtype=np.complex128)
    return FourierObservable(dim, kind, freqs, coeffs, dict(params or {}), radius)


def explicit(coeffs: Mapping, dim: Optional[int] = None) -> FourierObservable:
    """Observable from a finite map k -> c_k.

    Giving only one of k, -k is allowed; the other is filled in by conjugation.
    When both are given they must be conjugates of each other.
    """
    lookup = {}
    for k, c in coeffs.items():
        k = tuple(int(v) for v in k)
        if dim is None:
            dim = len(k)
        if len(k) != dim:
            raise ValueError(f"frequency {k} does not have dimension {dim}")
        if not any(k):
            raise ValueError("c_0 must vanish: observables are centered")
        c = complex(c)
        if c == 0:
            continue
        lookup[k] = c
    for k, c in list(lookup.items()):
        neg = tuple(-v for v in k)
        if neg in lookup:
            if abs(lookup[neg] - c.conjugate()) > 1e-12 * max(1.0, abs(c)):
                raise NonSymmetricExplicitInput(
                    f"c{neg} = {lookup[neg]} but conj(c{k}) = {c.conjugate()}")
        else:
            lookup[neg] = c.conjugate()
    if dim is None:
        raise ValueError("dim is required for an empty observable")
    return _finalize(dim, "explicit", lookup)


def zero(dim: int) -> FourierObservable:
    return explicit({}, dim=dim)


def product_profile(delta: float):
    return lambda j: (1.0 + j) ** (-delta)


def leonov_profile(alpha: float):
    return lambda j: (1.0 + j) ** -0.75 * math.log(2.0 + j) ** (-alpha)


def _closed_form(kind, dim, A, profile, radius, phases, params) -> FourierObservable:
    if radius is None or radius < 1:
        raise ZeroRadius("closed-form observables need truncation_radius >= 1")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    axis = np.array([profile(j) for j in range(radius + 1)])
    lookup = {}
    for k in itertools.product(range(-radius, radius + 1), repeat=dim):
        if not is_representative(k):
            continue
        mag = A * float(np.prod(axis[np.abs(k)]))
        c = complex(mag) if phases is None else mag * complex(math.cos(phases(k)), math.sin(phases(k)))
        lookup[k] = c
        lookup[tuple(-v for v in k)] = c.conjugate()
    return _finalize(dim, kind, lookup, params, radius)


def build_observable(kind: str, dim: int, *, coeffs: Optional[Mapping] = None, A: float = 1.0,
                     delta: Optional[float] = None, alpha: Optional[float] = None,
                     radius: Optional[int] = None,
                     phases: Optional[Callable[[tuple], float]] = None) -> FourierObservable:
    """Build an observable of one of the supported kinds.

    ``phases`` optionally maps a representative frequency to the argument of
    its coefficient; by default closed-form coefficients are real and positive.
    """
    if kind == "explicit":
        return explicit(coeffs or {}, dim=dim)
    if kind == "product_decay":
        if delta is None or delta <= 0:
            raise ValueError("product_decay needs delta > 0")
        return _closed_form(kind, dim, A, product_profile(delta), radius, phases,
                            {"A": A, "delta": delta})
    if kind == "leonov":
        if alpha is None or alpha <= 0:
            raise ValueError("leonov needs alpha > 0")
        return _closed_form(kind, dim, A, leonov_profile(alpha), radius, phases,
                            {"A": A, "alpha": alpha})
    raise ValueError(f"unknown observable kind {kind!r}; expected one of {KINDS}")


_SPEC_KEYS = {
    "explicit": {"kind", "dim", "coeffs"},
    "product_decay": {"kind", "dim", "A", "delta", "radius"},
    "leonov": {"kind", "dim", "A", "alpha", "radius"},
}


def from_json(obj) -> FourierObservable:
    """Parse the observable file format (see schemas/observable.schema.json)."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj["kind"]
    allowed = _SPEC_KEYS.get(kind)
    if allowed is None:
        raise ValueError(f"unknown observable kind {kind!r}")
    unknown = set(obj) - allowed
    if unknown:
        raise ValueError(f"unexpected keys for a {kind} observable: {sorted(unknown)}")
    if kind == "explicit":
        entries = obj["coeffs"]
        dim = obj.get("dim", len(entries[0]["k"]) if entries else None)
        coeffs = {}
        for e in entries:
            if set(e) - {"k", "re", "im"}:
                raise ValueError(f"unexpected keys in coefficient entry: {sorted(set(e) - {'k', 're', 'im'})}")
            k = tuple(e["k"])
            c = complex(e.get("re", 0.0), e.get("im", 0.0))
            if k in coeffs:
                raise ValueError(f"duplicate frequency {k}")
            coeffs[k] = c
        return explicit(coeffs, dim=dim)
    return build_observable(kind, obj["dim"], A=obj.get("A", 1.0), delta=obj.get("delta"),
                            alpha=obj.get("alpha"), radius=obj.get("radius"))


# -- evaluation --------------------------------------------------------------

def _phases_mod_q(freqs: np.ndarray, residues: Sequence[int], q: int):
    """<k, a> mod q for every support frequency, exactly, as Python ints."""
    a = [int(v) % q for v in residues]
    return [sum(int(ki) * ai for ki, ai in zip(k, a)) % q for k in freqs]


def _centred_angle(r: int, q: int) -> float:
    if 2 * r > q:
        r -= q
    return 2.0 * math.pi * (r / q)


def evaluate(f: FourierObservable, x, q: Optional[int] = None) -> float:
    """f at a rational point of the torus.

    ``x`` is either a sequence of Fractions, or integer residues with common
    denominator ``q``, or anything with ``residues`` and ``q`` attributes.
    The phase <k, a> mod q is computed exactly before the single cos/sin call.
    """
    if hasattr(x, "residues"):
        residues, q = x.residues, x.q
    elif q is None:
        fr = [Fraction(v) for v in x]
        q = math.lcm(*(v.denominator for v in fr)) if fr else 1
        residues = [int(v * q) for v in fr]
    else:
        residues = x
    if len(residues) != f.dim:
        raise ValueError(f"point of dimension {len(residues)} for a {f.dim}-dimensional observable")
    if len(f) == 0:
        return 0.0
    angles = [_centred_angle(r, q) for r in _phases_mod_q(f.frequencies, residues, q)]
    re = math.fsum(c.real * math.cos(t) - c.imag * math.sin(t) for c, t in zip(f.coefficients, angles))
    im = math.fsum(c.real * math.sin(t) + c.imag * math.cos(t) for c, t in zip(f.coefficients, angles))
    if abs(im) > 1e-10 * f.l1:
        raise ArithmeticError(f"imaginary residue {im} exceeds roundoff; f is not real")
    return re


def evaluate_lattice(f: FourierObservable, residues: np.ndarray, q: int) -> np.ndarray:
    """Vectorized evaluation at the points residues / q (an (N, d) integer array).

    Requires q * d * support_radius < 2**62 so the phases fit in int64.
    """
    residues = np.asarray(residues, dtype=np.int64)
    if q * max(f.dim * f.support_radius, 1) >= 2**62:
        raise OverflowError("use evaluate() for large denominators")
    out = np.zeros(len(residues))
    freqs, coeffs = f.representatives()
    for k, c in zip(freqs, coeffs):
        r = (residues @ k.astype(np.int64)) % q
        r = np.where(2 * r > q, r - q, r)
        t = 2.0 * np.pi * (r / q)
        out += 2.0 * (c.real * np.cos(t) - c.imag * np.sin(t))
    return out


def lattice_points(q: int, dim: int) -> np.ndarray:
    """All of (Z/qZ)^d as an (q**d, d) array."""
    grids = np.meshgrid(*([np.arange(q, dtype=np.int64)] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


# -- coefficient tail conditions -------------------------------------------------

@dataclass(frozen=True)
class ConditionSpec:
    """Exponent p in (2, 4], log-decay rates theta (q-th powers) and beta
    (squares), constant R, and the integers b >= 2 to test."""

    p: float
    theta: float
    beta: float
    R: float
    b_values: tuple

    def __post_init__(self):
        if not (2 < self.p <= 4):
            raise BadExponent(f"p = {self.p} is outside (2, 4]")
        if any(int(b) != b or b < 2 for b in self.b_values):
            raise ValueError("every b must be an integer >= 2")
        object.__setattr__(self, "b_values", tuple(int(b) for b in self.b_values))

    @property
    def q(self) -> float:
        return self.p / (self.p - 1)


def theta_threshold(p: float) -> float:
    return (p * p - 2) / (p * (p - 1))


def beta_threshold(p: float) -> float:
    return (3 * p - 4) / p


def combined_threshold(p: float) -> float:
    """theta above this makes the q-th power condition imply the square one."""
    return (3 * p - 4) / (2 * (p - 1))


@dataclass(frozen=True)
class TailCheck:
    b: int
    tail: float
    bound: float
    beyond_radius: bool

    @property
    def ok(self) -> bool:
        return self.tail <= self.bound


@dataclass(frozen=True)
class ConditionReport:
    p: float
    q: float
    theta: float
    beta: float
    R: float
    condF1_tail: tuple
    condF2_tail: tuple
    satisfied_F1: bool
    satisfied_F2: bool
    theta_required_F1: float
    beta_required_F2: float
    combined_threshold: float
    min_R_F1: float
    min_R_F2: float

    def to_json(self) -> dict:
        def rows(checks):
            return [{"b": c.b, "tail": _json_float(c.tail), "bound": c.bound,
                     "ok": c.ok, "beyond_radius": c.beyond_radius} for c in checks]

        return {
            "schema": 1,
            "p": self.p, "q": self.q, "theta": self.theta, "beta": self.beta, "R": self.R,
            "condF1_tail": rows(self.condF1_tail),
            "condF2_tail": rows(self.condF2_tail),
            "satisfied_F1": self.satisfied_F1,
            "satisfied_F2": self.satisfied_F2,
            "theta_required_F1": self.theta_required_F1,
            "beta_required_F2": self.beta_required_F2,
            "combined_threshold": self.combined_threshold,
            "min_R_F1": _json_float(self.min_R_F1),
            "min_R_F2": _json_float(self.min_R_F2),
        }


def _json_float(x: float):
    return x if math.isfinite(x) else "inf"


def _axis_integral(kind: str, params: dict, s: float, N: float) -> float:
    """Upper bound on sum_{j > N} profile(j)^s by the integral from N to infinity."""
    if kind == "product_decay":
        a = s * params["delta"]
        if a <= 1:
            return math.inf
        return (1.0 + N) ** (1 - a) / (a - 1)
    a = 0.75 * s
    lam = params["alpha"] * s
    if math.isclose(a, 1.0, rel_tol=0, abs_tol=1e-12):
        if lam <= 1:
            return math.inf
        # (1+t)^-1 <= (1 + 1/(1+N)) (2+t)^-1 for t >= N
        return (1.0 + 1.0 / (1.0 + N)) * math.log(2.0 + N) ** (1 - lam) / (lam - 1)
    if a < 1:
        return math.inf
    return math.log(2.0 + N) ** (-lam) * (1.0 + N) ** (1 - a) / (a - 1)


def _profile(kind, params):
    return product_profile(params["delta"]) if kind == "product_decay" else leonov_profile(params["alpha"])


def remainder_bound(f: FourierObservable, s: float, beyond: int) -> float:
    """Rigorous upper bound on sum_{|k| > beyond} |c_k|^s for a closed-form family.

    One axis: sum_{|j| > N} g(j)^s <= 2 * integral_N^inf g^s. In d > 1 the set
    {|k| > N} is covered by the union of {|k_i| > N}, each slab contributing
    the one-axis tail times the full sum over Z on the other axes.
    """
    if f.kind == "explicit":
        return 0.0
    g = _profile(f.kind, f.params)
    one_axis = 2.0 * _axis_integral(f.kind, f.params, s, beyond)
    if f.dim == 1:
        total = one_axis
    else:
        full = g(0) ** s + 2.0 * (g(1) ** s + _axis_integral(f.kind, f.params, s, 1))
        total = f.dim * one_axis * full ** (f.dim - 1)
    return f.params["A"] ** s * total


def tail_profile(f: FourierObservable, s: float) -> np.ndarray:
    """Exact sum_{|k| >= b} |c_k|^s over the materialized support, indexed by b."""
    if len(f) == 0:
        return np.zeros(1)
    norms = np.abs(f.frequencies).max(axis=1)
    weights = np.abs(f.coefficients) ** s
    per_shell = np.bincount(norms, weights=weights, minlength=f.support_radius + 1)
    return np.cumsum(per_shell[::-1])[::-1]


def tail_sum(f: FourierObservable, b: int, s: float, _profile_cache=None) -> tuple:
    """(tail, beyond_radius) for sum_{|k| >= b} |c_k|^s.

    For closed-form kinds the tail is an upper bound: exact materialized part
    plus the analytic remainder. beyond_radius flags b past the materialized
    ball, where only the analytic bound is available.
    """
    prof = tail_profile(f, s) if _profile_cache is None else _profile_cache
    if f.kind == "explicit":
        return (float(prof[b]) if b < len(prof) else 0.0), False
    radius = f.truncation_radius
    if b > radius:
        return remainder_bound(f, s, b - 1), True
    return float(prof[b]) + remainder_bound(f, s, radius), False


def check_conditions(f: FourierObservable, spec: ConditionSpec) -> ConditionReport:
    """Tail-sum verdicts for the q-th power condition (rate theta) and the
    square condition (rate beta) at each b of spec.b_values.

    Each verdict needs both: the tail stays below R log(b)^-rate at every
    tested b, and the rate exceeds its threshold.
    """
    q = spec.q
    checks = {}
    for name, s, rate in (("F1", q, spec.theta), ("F2", 2.0, spec.beta)):
        prof = tail_profile(f, s)
        rows = []
        for b in spec.b_values:
            tail, beyond = tail_sum(f, b, s, prof)
            rows.append(TailCheck(b, tail, spec.R * math.log(b) ** (-rate), beyond))
        min_r = max((r.tail * math.log(r.b) ** rate for r in rows), default=0.0)
        checks[name] = (tuple(rows), min_r)
    t1 = theta_threshold(spec.p)
    b2 = beta_threshold(spec.p)
    return ConditionReport(
        p=spec.p, q=q, theta=spec.theta, beta=spec.beta, R=spec.R,
        condF1_tail=checks["F1"][0], condF2_tail=checks["F2"][0],
        satisfied_F1=all(r.ok for r in checks["F1"][0]) and spec.theta > t1,
        satisfied_F2=all(r.ok for r in checks["F2"][0]) and spec.beta > b2,
        theta_required_F1=t1, beta_required_F2=b2,
        combined_threshold=combined_threshold(spec.p),
        min_R_F1=checks["F1"][1], min_R_F2=checks["F2"][1],
    )


@dataclass(frozen=True)
class TailFit:
    theta_hat: float
    stderr: float
    intercept: float
    residuals: tuple
    r_squared: float
    poor_fit: bool

    def to_json(self) -> dict:
        return {"theta_hat": self.theta_hat, "stderr": self.stderr, "intercept": self.intercept,
                "residuals": list(self.residuals), "r_squared": self.r_squared,
                "poor_fit": self.poor_fit}


POOR_FIT_RESIDUAL = 0.05


def fit_tail_exponent(f: FourierObservable, exponent: float, b_grid: Sequence[int]) -> TailFit:
    """Least-squares fit of log(tail) = c - theta * log(log(b)).

    The fit is flagged poor when any residual exceeds 0.05 in log units,
    which happens when the tail decays polynomially in b rather than in log b.
    """
    prof = tail_profile(f, exponent)
    xs, ys = [], []
    for b in b_grid:
        if b < 2:
            continue
        tail, beyond = tail_sum(f, b, exponent, prof)
        if beyond or not math.isfinite(tail):
            continue
        if tail <= 0:
            raise DegenerateGrid(f"tail vanishes at b = {b}; the exact zero verdict applies")
        xs.append(math.log(math.log(b)))
        ys.append(math.log(tail))
    if len(xs) < 4:
        raise DegenerateGrid(f"only {len(xs)} usable grid points, need at least 4")
    fit = stats.linregress(xs, ys)
    resid = np.asarray(ys) - (fit.intercept + fit.slope * np.asarray(xs))
    return TailFit(
        theta_hat=float(-fit.slope), stderr=float(fit.stderr), intercept=float(fit.intercept),
        residuals=tuple(float(r) for r in resid), r_squared=float(fit.rvalue ** 2),
        poor_fit=bool(np.max(np.abs(resid)) > POOR_FIT_RESIDUAL),
    )
