"""Dense integer polynomials as tuples of coefficients, constant term first."""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import zip_longest

Poly = tuple  # tuple[int, ...]


def trim(p) -> Poly:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return tuple(p)


def degree(p) -> int:
    return len(trim(p)) - 1


def add(p, q) -> Poly:
    return trim(x + y for x, y in zip_longest(p, q, fillvalue=0))


def sub(p, q) -> Poly:
    return trim(x - y for x, y in zip_longest(p, q, fillvalue=0))


def scale(p, k) -> Poly:
    return trim(k * x for x in p)


def mul(p, q) -> Poly:
    if not p or not q:
        return ()
    out = [0] * (len(p) + len(q) - 1)
    for i, x in enumerate(p):
        if x:
            for j, y in enumerate(q):
                out[i + j] += x * y
    return trim(out)


def divmod_exact_field(p, q):
    """Long division over the rationals when ``q`` is monic over Z.

    Returns integer quotient and remainder; raises if ``q`` is not monic.
    """
    q = trim(q)
    if not q or q[-1] not in (1, -1):
        raise ValueError("divisor must be monic (up to sign)")
    r = list(trim(p))
    dq = len(q) - 1
    if len(r) - 1 < dq:
        return (), tuple(r)
    quo = [0] * (len(r) - dq)
    lead = q[-1]
    for k in range(len(r) - 1 - dq, -1, -1):
        c = r[k + dq] * lead
        quo[k] = c
        if c:
            for j, y in enumerate(q):
                r[k + j] -= c * y
    return trim(quo), trim(r[:dq])


def rem(p, q) -> Poly:
    return divmod_exact_field(p, q)[1]


def content(p) -> int:
    return math.gcd(*p) if p else 0


def primitive(p) -> Poly:
    """Divide out the content and make the leading coefficient positive."""
    p = trim(p)
    if not p:
        return p
    g = content(p)
    if p[-1] < 0:
        g = -g
    return tuple(x // g for x in p)


def derivative(p) -> Poly:
    return trim(i * x for i, x in enumerate(p) if i)


def evaluate(p, x):
    """Horner evaluation; works for ints, Fractions and mpmath numbers."""
    acc = 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def height_l1(p) -> int:
    return sum(abs(x) for x in p)


def euler_phi(n: int) -> int:
    result = n
    m = n
    k = 2
    while k * k <= m:
        if m % k == 0:
            while m % k == 0:
                m //= k
            result -= result // k
        k += 1
    if m > 1:
        result -= result // m
    return result


@lru_cache(maxsize=None)
def cyclotomic(n: int) -> Poly:
    """The n-th cyclotomic polynomial, by exact division of ``x^n - 1``."""
    if n < 1:
        raise ValueError("n must be positive")
    p = (-1,) + (0,) * (n - 1) + (1,)
    for d in range(1, n):
        if n % d == 0:
            p, r = divmod_exact_field(p, cyclotomic(d))
            assert not r
    return p


def to_string(p, var: str = "x") -> str:
    p = trim(p)
    if not p:
        return "0"
    terms = []
    for i in range(len(p) - 1, -1, -1):
        c = p[i]
        if not c:
            continue
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if i == 0:
            body = str(a)
        else:
            mono = var if i == 1 else f"{var}^{i}"
            body = mono if a == 1 else f"{a}*{mono}"
        terms.append((sign, body))
    first_sign, first = terms[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in terms[1:]:
        out += f" {sign} {body}"
    return out
