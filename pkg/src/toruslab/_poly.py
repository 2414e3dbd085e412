"""Exact univariate polynomial arithmetic on coefficient lists (lowest degree first).

Integer inputs stay integers wherever the operation allows it; division-based
operations run over ``Fraction`` and are normalised back to primitive integer
polynomials.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache, reduce
from math import gcd

Poly = list  # list[int] or list[Fraction], lowest degree first


def trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p or [0]


def degree(p) -> int:
    p = trim(p)
    return -1 if p == [0] else len(p) - 1


def add(p, q):
    n = max(len(p), len(q))
    return trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def sub(p, q):
    return add(p, [-c for c in q])


def mul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return trim(out)


def scale(p, c):
    return trim([c * a for a in p])


def derivative(p):
    return trim([i * p[i] for i in range(1, len(p))]) if len(p) > 1 else [0]


def evaluate(p, x):
    acc = 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def divmod_poly(p, q):
    """Euclidean division over the rationals."""
    p = [Fraction(c) for c in trim(p)]
    q = [Fraction(c) for c in trim(q)]
    if q == [0]:
        raise ZeroDivisionError("polynomial division by zero")
    dq = len(q) - 1
    quot = [Fraction(0)] * max(len(p) - dq, 1)
    rem = p[:]
    lead = q[-1]
    for i in range(len(p) - 1 - dq, -1, -1):
        c = rem[i + dq] / lead
        quot[i] = c
        if c:
            for j in range(dq + 1):
                rem[i + j] -= c * q[j]
    return trim(quot), trim(rem[:dq] if dq > 0 else [0])


def exact_div(p, q):
    quot, rem = divmod_poly(p, q)
    if rem != [0]:
        raise ArithmeticError("polynomial division is not exact")
    return primitive_or_int(quot)


def primitive_or_int(p):
    """Return p with integer coefficients if it has any, else leave fractions."""
    if all(Fraction(c).denominator == 1 for c in p):
        return [int(c) for c in p]
    return p


def primitive(p):
    """Scale a rational polynomial to a primitive integer one with positive leading coefficient."""
    p = [Fraction(c) for c in trim(p)]
    if p == [0]:
        return [0]
    den = reduce(lambda a, b: a * b // gcd(a, b), (c.denominator for c in p), 1)
    ints = [int(c * den) for c in p]
    g = reduce(gcd, (abs(c) for c in ints if c), 0)
    ints = [c // g for c in ints]
    if ints[-1] < 0:
        ints = [-c for c in ints]
    return ints


def gcd_poly(p, q):
    """Greatest common divisor as a primitive integer polynomial."""
    a, b = trim(p), trim(q)
    while b != [0]:
        _, r = divmod_poly(a, b)
        a, b = b, r
    return primitive(a) if a != [0] else [0]


def reciprocal(p):
    """x^deg(p) * p(1/x)."""
    return trim(list(reversed(trim(p))))


def squarefree_decomposition(p):
    """Yun's algorithm: list of (factor, multiplicity) with primitive integer factors."""
    p = primitive(p)
    if degree(p) <= 0:
        return []
    out = []
    dp = derivative(p)
    a = gcd_poly(p, dp)
    b = exact_div(p, a)
    c = exact_div(dp, a)
    d = sub(c, derivative(b))
    k = 1
    while degree(b) > 0:
        a = gcd_poly(b, d)
        b = exact_div(b, a)
        c = exact_div(d, a)
        d = sub(c, derivative(b))
        if degree(a) > 0:
            out.append((primitive(a), k))
        k += 1
    return out


def squarefree_part(p):
    parts = squarefree_decomposition(p)
    return primitive(reduce(mul, (f for f, _ in parts), [1]))


def sturm_count(p, lo, hi) -> int:
    """Number of distinct real roots of p in the open interval (lo, hi).

    lo and hi must not be roots of p.
    """
    p = [Fraction(c) for c in trim(p)]
    seq = [p, [Fraction(c) for c in derivative(p)]]
    while degree(seq[-1]) > 0:
        _, r = divmod_poly(seq[-2], seq[-1])
        if r == [0]:
            break
        seq.append([-c for c in r])

    def variations(x):
        signs = [s for s in (evaluate(f, x) for f in seq) if s != 0]
        return sum(1 for u, v in zip(signs, signs[1:]) if (u > 0) != (v > 0))

    if evaluate(p, lo) == 0 or evaluate(p, hi) == 0:
        raise ValueError("interval endpoints must not be roots")
    return variations(Fraction(lo)) - variations(Fraction(hi))


@lru_cache(maxsize=None)
def _cyclotomic(n: int) -> tuple:
    num = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            num = exact_div(num, list(_cyclotomic(d)))
    return tuple(int(c) for c in num)


def cyclotomic(n: int) -> list:
    """The n-th cyclotomic polynomial, integer coefficients."""
    if n < 1:
        raise ValueError("n must be positive")
    return list(_cyclotomic(n))


def totient(n: int) -> int:
    result, m, p = n, n, 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            result -= result // p
        p += 1
    if m > 1:
        result -= result // m
    return result


def bareiss_det(rows) -> int:
    """Fraction-free Gaussian elimination; exact for integer matrices."""
    a = [list(r) for r in rows]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def resultant(p, q) -> int:
    """Resultant of two integer polynomials via the Sylvester determinant."""
    p, q = trim(p), trim(q)
    m, n = degree(p), degree(q)
    if m < 0 or n < 0:
        return 0
    if m == 0 and n == 0:
        return 1
    size = m + n
    rows = []
    hp, hq = list(reversed(p)), list(reversed(q))
    for i in range(n):
        rows.append([0] * i + hp + [0] * (size - m - 1 - i))
    for i in range(m):
        rows.append([0] * i + hq + [0] * (size - n - 1 - i))
    return bareiss_det(rows)
