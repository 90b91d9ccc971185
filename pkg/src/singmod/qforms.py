"""Imaginary quadratic discriminants, reduced binary quadratic forms and CM points.

A positive definite form ``(a, b, c)`` stands for ``a x^2 + b x y + c y^2`` and,
equivalently, for its root ``tau = (-b + i sqrt|D|) / (2a)`` in the upper
half-plane.  Matrices act on points by Moebius transformations, so the
reduction routines below return both the reduced form and the integer matrix
``gamma`` in SL2(Z) with ``gamma . tau = tau_reduced``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import mpmath

from .errors import DomainError

__all__ = [
    "DomainError",
    "QuadForm",
    "CMPoint",
    "check_discriminant",
    "is_discriminant",
    "enumerate_discriminants",
    "reduced_forms",
    "class_number",
    "is_reduced",
    "reduce_form",
    "form_of_point",
    "cm_point",
]


def is_discriminant(D: int) -> bool:
    return D < 0 and D % 4 in (0, 1)


def check_discriminant(D: int) -> int:
    if not isinstance(D, int) or isinstance(D, bool):
        raise DomainError(f"discriminant must be an integer, got {D!r}")
    if not is_discriminant(D):
        raise DomainError(f"{D} is not a negative discriminant (D < 0, D = 0,1 mod 4)")
    return D


class QuadForm(NamedTuple):
    a: int
    b: int
    c: int

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def is_primitive(self) -> bool:
        return math.gcd(math.gcd(self.a, self.b), self.c) == 1

    def __str__(self) -> str:
        return f"({self.a},{self.b},{self.c})"


def is_reduced(f: QuadForm) -> bool:
    a, b, c = f
    if a <= 0 or f.discriminant >= 0:
        return False
    if not (abs(b) <= a <= c):
        return False
    if (abs(b) == a or a == c) and b < 0:
        return False
    return True


def enumerate_discriminants(bound: int) -> list[int]:
    """All negative discriminants with ``|D| <= bound``, ordered by ``|D|``."""
    if bound < 3:
        raise DomainError(f"bound must be at least 3, got {bound}")
    return [-n for n in range(3, bound + 1) if (-n) % 4 in (0, 1)]


def reduced_forms(D: int) -> list[QuadForm]:
    """Reduced primitive forms of discriminant ``D``, sorted by ``(a, b)``."""
    check_discriminant(D)
    forms = []
    a_max = math.isqrt(-D // 3)
    for a in range(1, a_max + 1):
        for b in range(-a + 1, a + 1):
            if (b - D) % 2:
                continue
            num = b * b - D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            f = QuadForm(a, b, c)
            if f.is_primitive():
                forms.append(f)
    return forms


def class_number(D: int) -> int:
    """Class number of the order of discriminant ``D``.

    Counted by running over the middle coefficient first and splitting
    ``(b^2 - D) / 4`` as ``a * c``; this deliberately does not share code with
    :func:`reduced_forms`.
    """
    check_discriminant(D)
    count = 0
    b = D % 2
    while 3 * b * b <= -D:
        m = (b * b - D) // 4
        a = max(b, 1)
        while a * a <= m:
            if m % a == 0:
                c = m // a
                if math.gcd(math.gcd(a, b), c) == 1:
                    # b and -b are distinct classes unless on the boundary
                    if b == 0 or b == a or a == c:
                        count += 1
                    else:
                        count += 2
            a += 1
        b += 2
    return count


def _matmul(x, y):
    return (
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    )


def reduce_form(f: QuadForm) -> tuple[QuadForm, tuple[int, int, int, int]]:
    """Reduce a positive definite form exactly.

    Returns ``(g, gamma)`` with ``g`` reduced and ``gamma = (p, q, r, s)`` in
    SL2(Z) such that ``gamma . tau_f = tau_g`` as Moebius maps.
    """
    a, b, c = f
    if a <= 0 or b * b - 4 * a * c >= 0:
        raise DomainError(f"{f} is not positive definite")
    gamma = (1, 0, 0, 1)
    while True:
        # translate tau -> tau + k so that b lands in (-a, a]
        k = -((a - b) // (2 * a))
        if k:
            a, b, c = a, b - 2 * a * k, a * k * k - b * k + c
            gamma = _matmul((1, k, 0, 1), gamma)
        if a > c or (a == c and b < 0):
            # tau -> -1/tau
            a, b, c = c, -b, a
            gamma = _matmul((0, -1, 1, 0), gamma)
            continue
        return QuadForm(a, b, c), gamma


def form_of_point(re: Fraction, im_sq: Fraction) -> QuadForm:
    """Primitive form whose upper root is ``re + i sqrt(im_sq)``.

    The point must be quadratic: its minimal polynomial
    ``x^2 - 2 re x + re^2 + im_sq`` has rational coefficients.
    """
    re, im_sq = Fraction(re), Fraction(im_sq)
    if im_sq <= 0:
        raise DomainError("point is not in the upper half-plane")
    coeffs = [Fraction(1), -2 * re, re * re + im_sq]
    den = math.lcm(*(q.denominator for q in coeffs))
    ints = [int(q * den) for q in coeffs]
    g = math.gcd(*ints)
    a, b, c = (x // g for x in ints)
    return QuadForm(a, b, c)


@dataclass(frozen=True)
class CMPoint:
    """The quadratic point ``tau = (-b + i sqrt|D|) / (2a)``."""

    a: int
    b: int
    D: int

    @property
    def form(self) -> QuadForm:
        return QuadForm(self.a, self.b, (self.b * self.b - self.D) // (4 * self.a))

    @property
    def real(self) -> Fraction:
        return Fraction(-self.b, 2 * self.a)

    @property
    def imag_squared(self) -> Fraction:
        return Fraction(-self.D, 4 * self.a * self.a)

    def value(self, prec: int = 53) -> mpmath.mpc:
        with mpmath.workprec(prec + 10):
            z = mpmath.mpc(-self.b, mpmath.sqrt(-self.D)) / (2 * self.a)
        return z

    def absolute_height(self) -> float:
        """Absolute multiplicative Weil height of tau.

        The minimal polynomial is the form itself; its Mahler measure is
        ``a * max(1, |tau|)^2 = max(a, c)``.
        """
        return math.sqrt(max(self.a, self.form.c))

    def in_fundamental_domain(self) -> bool:
        # |Re tau| <= 1/2 and |tau|^2 = c/a >= 1, checked exactly
        return abs(self.b) <= self.a and self.form.c >= self.a

    def __str__(self) -> str:
        return f"({-self.b} + i*sqrt({-self.D}))/{2 * self.a}"


def cm_point(f: QuadForm) -> CMPoint:
    if not is_reduced(f) or not f.is_primitive():
        raise DomainError(f"{f} is not a reduced primitive form")
    return CMPoint(f.a, f.b, f.discriminant)
