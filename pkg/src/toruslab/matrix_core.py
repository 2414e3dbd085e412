"""Exact integer linear algebra for toral automorphisms.

Everything here works on Python integers, so no power of S can overflow.
Only the interval bounds on eigenvalue moduli go through floating point, and
those are certified with interval arithmetic (mpmath.iv).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
from mpmath import iv, mp

from . import _poly
from .errors import NotSquare, NotUnimodular, PrecisionExhausted

DEFAULT_PRECISION = 128
_MAX_PRECISION_DOUBLINGS = 4


@dataclass(frozen=True)
class IntegerMatrix:
    """A d x d matrix of arbitrary-precision integers."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in r) for r in self.rows)
        if not rows:
            raise NotSquare("matrix must have at least one row")
        if any(len(r) != len(rows) for r in rows):
            raise NotSquare(f"expected a square matrix, got row lengths {[len(r) for r in rows]}")
        for r, orig in zip(rows, self.rows):
            for v, o in zip(r, orig):
                if v != o:
                    raise ValueError(f"non-integer entry {o!r}")
        object.__setattr__(self, "rows", rows)

    @property
    def dim(self) -> int:
        return len(self.rows)

    @classmethod
    def identity(cls, d: int) -> "IntegerMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(d)) for i in range(d)))

    @classmethod
    def parse(cls, text: str) -> "IntegerMatrix":
        """Parse either the JSON form ``{"dim": d, "rows": [...]}`` or the literal ``"a,b;c,d"``."""
        text = text.strip()
        if text.startswith("{"):
            return cls.from_json(json.loads(text))
        rows = [[int(tok) for tok in row.split(",")] for row in text.split(";") if row.strip()]
        return cls(tuple(map(tuple, rows)))

    @classmethod
    def from_json(cls, obj: dict) -> "IntegerMatrix":
        rows = obj["rows"]
        if any(isinstance(v, bool) or not isinstance(v, int) for r in rows for v in r):
            raise ValueError("matrix entries must be JSON integers")
        m = cls(tuple(map(tuple, rows)))
        if "dim" in obj and obj["dim"] != m.dim:
            raise NotSquare(f"declared dim {obj['dim']} but got {m.dim} rows")
        return m

    def to_json(self) -> dict:
        return {"dim": self.dim, "rows": [list(r) for r in self.rows]}

    def transpose(self) -> "IntegerMatrix":
        return IntegerMatrix(tuple(zip(*self.rows)))

    def __matmul__(self, other):
        if isinstance(other, IntegerMatrix):
            cols = list(zip(*other.rows))
            return IntegerMatrix(
                tuple(tuple(sum(a * b for a, b in zip(r, c)) for c in cols) for r in self.rows)
            )
        return tuple(sum(a * b for a, b in zip(r, other)) for r in self.rows)

    def det(self) -> int:
        return _poly.bareiss_det(self.rows)

    def trace(self) -> int:
        return sum(self.rows[i][i] for i in range(self.dim))

    def inverse(self) -> "IntegerMatrix":
        """Exact integer inverse; requires |det| = 1."""
        det = self.det()
        if abs(det) != 1:
            raise NotUnimodular(f"det = {det}, no integer inverse")
        d = self.dim
        aug = [[Fraction(v) for v in r] + [Fraction(int(i == j)) for j in range(d)]
               for i, r in enumerate(self.rows)]
        for col in range(d):
            piv = next(i for i in range(col, d) if aug[i][col] != 0)
            aug[col], aug[piv] = aug[piv], aug[col]
            pv = aug[col][col]
            aug[col] = [v / pv for v in aug[col]]
            for i in range(d):
                if i != col and aug[i][col] != 0:
                    factor = aug[i][col]
                    aug[i] = [a - factor * b for a, b in zip(aug[i], aug[col])]
        return IntegerMatrix(tuple(tuple(int(v) for v in r[d:]) for r in aug))

    def power(self, n: int) -> "IntegerMatrix":
        """m**n by binary powering; negative n uses the exact inverse."""
        base = self if n >= 0 else self.inverse()
        n = abs(n)
        result = IntegerMatrix.identity(self.dim)
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    def mod(self, q: int) -> tuple:
        return tuple(tuple(v % q for v in r) for r in self.rows)


def as_matrix(m) -> IntegerMatrix:
    if isinstance(m, IntegerMatrix):
        return m
    if isinstance(m, str):
        return IntegerMatrix.parse(m)
    if isinstance(m, dict):
        return IntegerMatrix.from_json(m)
    return IntegerMatrix(tuple(tuple(r) for r in m))


@dataclass(frozen=True)
class IntPolynomial:
    """Integer polynomial, coefficients lowest degree first."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(c) for c in _poly.trim(list(self.coeffs))))

    @property
    def degree(self) -> int:
        return _poly.degree(list(self.coeffs))

    @property
    def is_monic(self) -> bool:
        return self.coeffs[-1] == 1

    def __call__(self, x):
        return _poly.evaluate(list(self.coeffs), x)

    def __str__(self):
        terms = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            mag = abs(c)
            body = "" if (mag == 1 and i > 0) else str(mag)
            if i > 0:
                body += "x" + (f"^{i}" if i > 1 else "")
            sign = "-" if c < 0 else "+"
            terms.append((sign, body))
        if not terms:
            return "0"
        head = ("-" if terms[0][0] == "-" else "") + terms[0][1]
        return head + "".join(f" {s} {b}" for s, b in terms[1:])


def char_poly(m) -> IntPolynomial:
    """det(xI - m) by Faddeev-LeVerrier; every division by k is exact over the integers."""
    m = as_matrix(m)
    d = m.dim
    coeffs = [0] * (d + 1)
    coeffs[d] = 1
    ident = IntegerMatrix.identity(d)
    mk = IntegerMatrix(tuple(tuple(0 for _ in range(d)) for _ in range(d)))
    for k in range(1, d + 1):
        c_prev = coeffs[d - k + 1]
        mk = IntegerMatrix(tuple(
            tuple(a + c_prev * b for a, b in zip(ra, rb))
            for ra, rb in zip((m @ mk).rows, ident.rows)
        ))
        tr = (m @ mk).trace()
        assert tr % k == 0
        coeffs[d - k] = -tr // k
    return IntPolynomial(tuple(coeffs))


def has_root_of_unity_root(p) -> bool:
    """True iff the monic integer polynomial p has a root of unity among its roots.

    Checks res(p, Phi_n) = 0 for every n with phi(n) <= deg p. Since
    phi(n) >= sqrt(n/2), all such n satisfy n <= 2 deg(p)^2.
    """
    coeffs = list(p.coeffs if isinstance(p, IntPolynomial) else p)
    coeffs = _poly.trim([int(c) for c in coeffs])
    d = _poly.degree(coeffs)
    if d < 1:
        raise ValueError("polynomial must have degree >= 1")
    if coeffs[-1] != 1:
        raise ValueError("polynomial must be monic")
    for n in range(1, 2 * d * d + 1):
        if _poly.totient(n) <= d and _poly.resultant(coeffs, _poly.cyclotomic(n)) == 0:
            return True
    return False


@dataclass(frozen=True)
class Interval:
    """Closed real interval [lo, hi] with outward-rounded float endpoints."""

    lo: float
    hi: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def to_json(self) -> list:
        return [self.lo, self.hi]


def _interval(lo_mpf, hi_mpf) -> Interval:
    return Interval(math.nextafter(float(lo_mpf), -math.inf), math.nextafter(float(hi_mpf), math.inf))


@dataclass(frozen=True)
class SpectralClassification:
    dim: int
    det: int
    char_poly: IntPolynomial
    is_automorphism: bool
    is_ergodic: bool
    is_hyperbolic: bool
    d_u: int
    d_e: int
    d_s: int
    spectral_radius: Interval
    rho_u_bound: Optional[Interval]
    precision: int

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "dim": self.dim,
            "det": self.det,
            "char_poly": list(self.char_poly.coeffs),
            "is_automorphism": self.is_automorphism,
            "is_ergodic": self.is_ergodic,
            "is_hyperbolic": self.is_hyperbolic,
            "d_u": self.d_u,
            "d_e": self.d_e,
            "d_s": self.d_s,
            "spectral_radius": self.spectral_radius.to_json(),
            "rho_u_bound": None if self.rho_u_bound is None else self.rho_u_bound.to_json(),
            "precision": self.precision,
        }

    def summary(self) -> str:
        return (
            f"automorphism: {str(self.is_automorphism).lower()}, "
            f"ergodic: {str(self.is_ergodic).lower()}, "
            f"hyperbolic: {str(self.is_hyperbolic).lower()}, "
            f"(d_u,d_e,d_s)=({self.d_u},{self.d_e},{self.d_s})"
        )


# -- exact modulus counting -------------------------------------------------

def _palindromic_to_trace_poly(g):
    """For palindromic g of degree 2m, return h with g(x) = x^m h(x + 1/x)."""
    m = (len(g) - 1) // 2
    # D_j(y) = x^j + x^-j as a polynomial in y = x + 1/x
    dj = [[2], [0, 1]]
    for _ in range(2, m + 1):
        dj.append(_poly.sub(_poly.mul([0, 1], dj[-1]), dj[-2]))
    h = [g[m]]
    for j in range(1, m + 1):
        h = _poly.add(h, _poly.scale(dj[j], g[m - j]))
    return h


def _count_reciprocal_factor(g):
    """Counts (inside, on, outside) of the unit circle for a self-reciprocal g."""
    on = 0
    for root in (1, -1):
        lin = [-root, 1]
        while _poly.degree(g) > 0 and _poly.evaluate(g, root) == 0:
            g = _poly.exact_div(g, lin)
            on += 1
    deg = _poly.degree(g)
    if deg <= 0:
        return 0, on, 0
    g = _poly.primitive(g)
    if g != _poly.reciprocal(g):
        raise ArithmeticError("expected a palindromic factor after removing +-1")
    h = _palindromic_to_trace_poly(g)
    m = _poly.degree(h)
    # each root y of h gives the pair x, 1/x; |x| = 1 exactly when y is real in (-2, 2)
    inside_strip = 0
    for factor, mult in _poly.squarefree_decomposition(h):
        inside_strip += mult * _poly.sturm_count(factor, -2, 2)
    return m - inside_strip, on + 2 * inside_strip, m - inside_strip


def _schur_cohn_inside(p):
    """Number of roots strictly inside the unit disk for an integer polynomial
    coprime to its reciprocal (no root on the circle, no pair z, 1/conj(z)).

    With A and B the lower-triangular Toeplitz matrices whose first columns
    are (a_0, ..., a_{n-1}) and (a_n, ..., a_1), the Schur-Cohn matrix
    C = tB B - tA A is nonsingular exactly under that coprimality, and its
    number of positive eigenvalues is the number of roots inside. C is
    symmetric, so its characteristic polynomial has only real roots and
    Descartes' rule of signs counts the positive ones exactly.
    """
    a = _poly.trim([int(c) for c in p])
    n = len(a) - 1
    if n <= 0:
        return 0
    A = [[a[i - j] if i >= j else 0 for j in range(n)] for i in range(n)]
    B = [[a[n - (i - j)] if i >= j else 0 for j in range(n)] for i in range(n)]
    C = tuple(
        tuple(sum(B[k][i] * B[k][j] - A[k][i] * A[k][j] for k in range(n)) for j in range(n))
        for i in range(n)
    )
    cp = char_poly(IntegerMatrix(C)).coeffs
    if cp[0] == 0:
        raise PrecisionExhausted("singular Schur-Cohn matrix: p shares a root with its reciprocal")
    signs = [c > 0 for c in cp if c != 0]
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def modulus_counts(p) -> tuple:
    """Exact (inside, on, outside) counts of the roots of p, with multiplicity."""
    p = _poly.trim([int(c) for c in p])
    inside = on = outside = 0
    while len(p) > 1 and p[0] == 0:
        p = p[1:]
        inside += 1
    while _poly.degree(p) > 0:
        g = _poly.gcd_poly(p, _poly.reciprocal(p))
        if _poly.degree(g) <= 0:
            total = _poly.degree(p)
            ins = _schur_cohn_inside(p)
            inside += ins
            outside += total - ins
            break
        i, o, u = _count_reciprocal_factor(g)
        inside, on, outside = inside + i, on + o, outside + u
        p = _poly.primitive(_poly.exact_div(p, g))
    return inside, on, outside


# -- certified root moduli --------------------------------------------------

def _certified_moduli(p, precision):
    """Interval enclosures of |root| for the distinct roots of p.

    Uses Weierstrass-correction inclusion disks: with approximations z_i of
    the n simple roots, the disks D(z_i, n |p(z_i) / prod_{j!=i}(z_i - z_j)|)
    cover all roots, and pairwise disjoint disks contain exactly one root each.
    Returns None when the disks are not disjoint at this precision.
    """
    sf = _poly.squarefree_part(p)
    n = _poly.degree(sf)
    if n == 0:
        return []
    lead = sf[-1]
    with mp.workprec(precision + 32):
        try:
            approx = mpmath.polyroots([mpmath.mpf(c) for c in reversed(sf)],
                                      maxsteps=400, extraprec=2 * precision)
        except mpmath.libmp.NoConvergence:
            return None
    iv.prec = precision
    zs = [iv.mpc(iv.mpf(mp.mpf(z.real)), iv.mpf(mp.mpf(z.imag))) if isinstance(z, mpmath.mpc)
          else iv.mpc(iv.mpf(mp.mpf(z)), 0) for z in approx]
    enclosures = []
    for i, zi in enumerate(zs):
        val = iv.mpc(0, 0)
        for c in reversed(sf):
            val = val * zi + c
        denom = iv.mpc(lead, 0)
        for j, zj in enumerate(zs):
            if j != i:
                denom = denom * (zi - zj)
        dmag = abs(denom)
        if _lower(dmag) <= 0:
            return None
        radius = iv.mpf(_upper(n * abs(val) / dmag))
        centre = abs(zi)
        enclosures.append((zi, radius, _lower(centre - radius), _upper(centre + radius)))
    for i in range(n):
        for j in range(i + 1, n):
            gap = _lower(abs(enclosures[i][0] - enclosures[j][0]))
            if gap <= _upper(enclosures[i][1] + enclosures[j][1]):
                return None
    return [(max(lo, mpmath.mpf(0)), hi) for _, _, lo, hi in enclosures]


def _lower(x):
    return mpmath.mpf(x._mpi_[0])


def _upper(x):
    return mpmath.mpf(x._mpi_[1])


def classify(m, precision: int = DEFAULT_PRECISION) -> SpectralClassification:
    """Spectral classification of the integer matrix m.

    Ergodicity and the split (d_u, d_e, d_s) are decided exactly; the spectral
    radius and rho_u = 1 / min{|lambda| : |lambda| > 1} are reported as
    certified intervals.
    """
    m = as_matrix(m)
    cp = char_poly(m)
    det = m.det()
    is_aut = abs(det) == 1
    is_erg = is_aut and not has_root_of_unity_root(cp)
    d_s, d_e, d_u = modulus_counts(list(cp.coeffs))

    # distinct-root counts, used to cross-check the numeric enclosures
    sf = _poly.squarefree_part(list(cp.coeffs))
    sf_in, sf_on, sf_out = modulus_counts(sf)

    prec = precision
    for _ in range(_MAX_PRECISION_DOUBLINGS + 1):
        mods = _certified_moduli(list(cp.coeffs), prec)
        if mods is not None:
            out = [(lo, hi) for lo, hi in mods if lo > 1]
            ins = [(lo, hi) for lo, hi in mods if hi < 1]
            if len(out) == sf_out and len(ins) == sf_in:
                break
        prec *= 2
    else:
        raise PrecisionExhausted(
            f"could not separate eigenvalue moduli from 1 up to {prec // 2} bits"
        )
    radius = _interval(max(lo for lo, _ in mods), max(hi for _, hi in mods))
    rho_u = None
    if out:
        with mp.workprec(prec):
            rho_u = _interval(1 / min(hi for _, hi in out), 1 / min(lo for lo, _ in out))
    return SpectralClassification(
        dim=m.dim, det=det, char_poly=cp, is_automorphism=is_aut, is_ergodic=is_erg,
        is_hyperbolic=d_e == 0, d_u=d_u, d_e=d_e, d_s=d_s,
        spectral_radius=radius, rho_u_bound=rho_u, precision=precision,
    )


def validate_automorphism(m) -> IntegerMatrix:
    m = as_matrix(m)
    det = m.det()
    if abs(det) != 1:
        raise NotUnimodular(f"|det| = {abs(det)} != 1")
    return m


def transpose_power_apply(m, n: int, v: Sequence[int]) -> tuple:
    """Exact t(m^n) v for any integer n (negative n needs |det m| = 1)."""
    m = as_matrix(m)
    if len(v) != m.dim:
        raise ValueError(f"vector of length {len(v)} for a {m.dim}x{m.dim} matrix")
    v = tuple(int(x) for x in v)
    if n == 0:
        return v
    mt = m.transpose()
    if n < 0:
        mt = mt.inverse()
        n = -n
    if n <= 4 * m.dim:
        for _ in range(n):
            v = mt @ v
        return v
    return mt.power(n) @ v


@dataclass(frozen=True)
class ToralAutomorphism:
    """The map x -> S x mod 1 together with its certified classification."""

    matrix: IntegerMatrix
    classification: SpectralClassification

    @classmethod
    def from_matrix(cls, m, precision: int = DEFAULT_PRECISION) -> "ToralAutomorphism":
        m = validate_automorphism(m)
        return cls(m, classify(m, precision))

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def is_ergodic(self) -> bool:
        return self.classification.is_ergodic


CAT_MAP = IntegerMatrix(((2, 1), (1, 1)))
# ergodic, non-hyperbolic example on T^4 (companion matrix of x^4 - 2x^3 - 2x + 1)
QUASI_HYPERBOLIC_T4 = IntegerMatrix(((0, 0, 0, -1), (1, 0, 0, 2), (0, 1, 0, 0), (0, 0, 1, 2)))
