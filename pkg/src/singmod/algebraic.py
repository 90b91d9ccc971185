"""Exact algebraic numbers: a minimal polynomial plus an isolating disk.

Numerical values are always carried together with an error radius.  Radii of
polynomial roots come from the inclusion bound ``|z - root| <= n |p(z)/p'(z)|``
(some root lies in that disk), with the floating-point evaluation error of
``p(z)`` folded in.  Pairwise disjoint inclusion disks for all ``n`` roots
isolate each root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath
import sympy

from . import polyutil
from .errors import DomainError, PrecisionExhaustedError

MAX_PRECISION = 1 << 17


@dataclass(frozen=True)
class BigComplex:
    """A complex ball ``{w : |w - center| <= radius}``."""

    center: mpmath.mpc
    radius: mpmath.mpf = field(default_factory=lambda: mpmath.mpf(0))

    @property
    def real(self):
        return self.center.real

    @property
    def imag(self):
        return self.center.imag

    @property
    def error_radius(self):
        return self.radius

    def contains(self, w) -> bool:
        return abs(mpmath.mpc(w) - self.center) <= self.radius

    def overlaps(self, other: "BigComplex") -> bool:
        return abs(self.center - other.center) <= self.radius + other.radius

    def abs_upper(self):
        return abs(self.center) + self.radius

    def abs_lower(self):
        return max(mpmath.mpf(0), abs(self.center) - self.radius)

    def __str__(self) -> str:
        return f"{mpmath.nstr(self.center, 20)} +/- {mpmath.nstr(self.radius, 3)}"


def _abs_coeff_eval(poly, r):
    return polyutil.evaluate([abs(c) for c in poly], r)


def inclusion_radius(poly, z):
    """Radius of a disk around ``z`` that provably contains a root of ``poly``.

    Must be called inside the working-precision context used to compute ``z``.
    """
    n = len(poly) - 1
    dpoly = polyutil.derivative(poly)
    u = mpmath.mpf(2) ** (1 - mpmath.mp.prec)
    az = abs(z)
    val = abs(polyutil.evaluate(poly, z)) + 4 * (n + 1) * u * _abs_coeff_eval(poly, az)
    dval = abs(polyutil.evaluate(dpoly, z)) - 4 * (n + 1) * u * _abs_coeff_eval(dpoly, az)
    if dval <= 0:
        return mpmath.inf
    return n * val / dval * (1 + 2 ** -20)


@lru_cache(maxsize=4096)
def isolate_roots(poly: tuple, prec: int = 128) -> tuple:
    """All complex roots of a squarefree integer polynomial, isolated.

    Returns a tuple of ``(center, tight_radius)`` pairs sorted by real then
    imaginary part.  Real roots get a real center.  Raises
    :class:`PrecisionExhaustedError` if isolation fails up to the cap.
    """
    poly = polyutil.trim(poly)
    n = len(poly) - 1
    if n < 1:
        raise DomainError("constant polynomial has no roots")
    wp = max(prec, 64)
    while wp <= MAX_PRECISION:
        with mpmath.workprec(wp):
            try:
                roots = mpmath.polyroots(list(reversed(poly)), maxsteps=50 + 4 * n,
                                         extraprec=wp, roots_init=None)
            except mpmath.libmp.NoConvergence:
                wp *= 2
                continue
            if n == 1:
                roots = [roots] if not isinstance(roots, list) else roots
            roots = [mpmath.mpc(r) for r in roots]
            radii = [inclusion_radius(poly, r) for r in roots]
            if _disjoint(roots, radii):
                out = []
                for i, (r, e) in enumerate(zip(roots, radii)):
                    if r.imag != 0 and abs(r.imag) <= e:
                        # symmetric ball around the real projection still isolates
                        # => the root equals its own conjugate
                        cand = mpmath.mpc(r.real, 0)
                        rad = e + abs(r.imag)
                        others = [(roots[k], radii[k]) for k in range(n) if k != i]
                        if all(abs(cand - rk) > rad + ek for rk, ek in others):
                            r, e = cand, rad
                    out.append((r, e))
                out.sort(key=lambda t: (t[0].real, t[0].imag))
                return tuple(out)
        wp *= 2
    raise PrecisionExhaustedError(f"could not isolate roots of {polyutil.to_string(poly)}")


def _disjoint(centers, radii) -> bool:
    for i in range(len(centers)):
        if not mpmath.isfinite(radii[i]):
            return False
        for k in range(i):
            if abs(centers[i] - centers[k]) <= radii[i] + radii[k]:
                return False
    return True


def isolation_radii(centers, tight):
    """Generous radii: each ball still contains exactly one root."""
    n = len(centers)
    out = []
    for i in range(n):
        if n == 1:
            out.append(max(mpmath.mpf(1), 2 * tight[i]))
            continue
        sep = min(abs(centers[i] - centers[k]) for k in range(n) if k != i)
        rho = sep / 3
        if rho < tight[i] or any(
            rho + tight[k] >= abs(centers[i] - centers[k]) for k in range(n) if k != i
        ):
            raise PrecisionExhaustedError("roots too close for the given precision")
        out.append(rho)
    return out


@lru_cache(maxsize=8192)
def _refine(poly: tuple, center, radius, prec: int):
    """Newton-refine the unique root inside ``B(center, radius)``."""
    dpoly = polyutil.derivative(poly)
    wp = prec + 32
    while wp <= MAX_PRECISION:
        with mpmath.workprec(wp):
            x = mpmath.mpc(center)
            real = x.imag == 0
            for _ in range(400):
                step = polyutil.evaluate(poly, x) / polyutil.evaluate(dpoly, x)
                x -= step
                if real:
                    x = mpmath.mpc(x.real, 0)
                if abs(step) <= mpmath.mpf(2) ** (-wp + 8) * max(1, abs(x)):
                    break
            eps = inclusion_radius(poly, x)
            inside = abs(x - center) + eps <= radius
            if inside and eps <= mpmath.mpf(2) ** (-prec) * max(1, abs(x)):
                return x, eps
        wp *= 2
    raise PrecisionExhaustedError("root refinement failed")


@dataclass(frozen=True)
class FactoredRational:
    """A rational number as sign and prime factorisation.

    ``sign`` is +1 or -1; zero is represented by ``sign == 0`` with no primes.
    """

    sign: int
    exponents: tuple = ()  # sorted ((prime, exponent), ...), exponents nonzero

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise DomainError("sign must be -1, 0 or 1")
        if self.sign == 0 and self.exponents:
            raise DomainError("zero has no prime factorisation")
        primes = [p for p, _ in self.exponents]
        if len(set(primes)) != len(primes) or any(e == 0 for _, e in self.exponents):
            raise DomainError("primes must be distinct with nonzero exponents")
        object.__setattr__(self, "exponents", tuple(sorted(self.exponents)))

    @classmethod
    def from_rational(cls, q) -> "FactoredRational":
        q = Fraction(q)
        if q == 0:
            return cls(0)
        exps = dict(sympy.factorint(abs(q.numerator)))
        for p, e in sympy.factorint(q.denominator).items():
            exps[p] = exps.get(p, 0) - e
        return cls(1 if q > 0 else -1, tuple((int(p), int(e)) for p, e in exps.items() if e))

    @property
    def exponent_map(self) -> dict:
        return dict(self.exponents)

    def value(self) -> Fraction:
        out = Fraction(self.sign)
        for p, e in self.exponents:
            out *= Fraction(p) ** e
        return out

    def __mul__(self, other: "FactoredRational") -> "FactoredRational":
        exps = dict(self.exponents)
        for p, e in other.exponents:
            exps[p] = exps.get(p, 0) + e
        return FactoredRational(self.sign * other.sign,
                                tuple((p, e) for p, e in exps.items() if e))

    def __pow__(self, k: int) -> "FactoredRational":
        if self.sign == 0:
            if k <= 0:
                raise ZeroDivisionError("zero to a nonpositive power")
            return self
        return FactoredRational(self.sign ** (k % 2) if self.sign < 0 else 1,
                                tuple((p, e * k) for p, e in self.exponents if k))

    def is_one(self) -> bool:
        return self.sign == 1 and not self.exponents

    def __str__(self) -> str:
        if self.sign == 0:
            return "0"
        body = "*".join(f"{p}^{e}" if e != 1 else str(p) for p, e in self.exponents)
        if not body:
            body = "1"
        return ("-" if self.sign < 0 else "") + body


@dataclass(frozen=True)
class AlgebraicNumber:
    """A root of an irreducible primitive integer polynomial.

    ``min_poly`` lists coefficients constant term first with positive leading
    coefficient.  The ball ``B(center, radius)`` contains exactly one root.
    """

    min_poly: tuple
    center: mpmath.mpc
    radius: mpmath.mpf

    @property
    def degree(self) -> int:
        return len(self.min_poly) - 1

    @classmethod
    def from_rational(cls, q) -> "AlgebraicNumber":
        q = Fraction(q)
        with mpmath.workprec(256):
            c = mpmath.mpc(mpmath.mpf(q.numerator) / q.denominator)
        return cls((-q.numerator, q.denominator), c, mpmath.mpf(1))

    @classmethod
    def from_factored(cls, f: FactoredRational) -> "AlgebraicNumber":
        return cls.from_rational(f.value())

    @classmethod
    def roots_of(cls, poly, prec: int = 128) -> list["AlgebraicNumber"]:
        """Every root of an irreducible polynomial, sorted by real then imaginary part."""
        poly = polyutil.primitive(poly)
        if len(poly) == 2:
            return [cls.from_rational(Fraction(-poly[0], poly[1]))]
        iso = isolate_roots(poly, prec)
        centers = [c for c, _ in iso]
        radii = isolation_radii(centers, [e for _, e in iso])
        return [cls(poly, c, r) for c, r in zip(centers, radii)]

    @classmethod
    def from_poly(cls, poly, near, prec: int = 128) -> "AlgebraicNumber":
        """The root of ``poly`` nearest to ``near``, with its minimal polynomial.

        ``poly`` need not be irreducible; the factor vanishing at the chosen
        root is extracted first.
        """
        poly = polyutil.primitive(poly)
        x = sympy.Symbol("x")
        factors = sympy.factor_list(sympy.Poly(list(reversed(poly)), x))[1]
        near = mpmath.mpc(near)
        best = None
        for fac, _ in factors:
            coeffs = polyutil.primitive(tuple(int(c) for c in reversed(fac.all_coeffs())))
            if len(coeffs) < 2:
                continue
            for root in cls.roots_of(coeffs, prec):
                d = abs(root.center - near)
                if best is None or d < best[0]:
                    best = (d, root)
        if best is None:
            raise DomainError("polynomial has no roots")
        return best[1]

    def is_rational(self) -> bool:
        return self.degree == 1

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise DomainError("not a rational number")
        return Fraction(-self.min_poly[0], self.min_poly[1])

    def is_zero(self) -> bool:
        return self.min_poly == (0, 1)

    def approx(self, prec: int = 128) -> BigComplex:
        """Ball of radius at most ``2^-prec * max(1, |alpha|)`` around the value."""
        if self.is_rational():
            q = self.to_fraction()
            with mpmath.workprec(prec + 64):
                v = mpmath.mpf(q.numerator) / q.denominator
                err = abs(v) * mpmath.mpf(2) ** (-prec - 60)
            return BigComplex(mpmath.mpc(v), err)
        x, eps = _refine(self.min_poly, self.center, self.radius, prec)
        return BigComplex(x, eps)

    def is_real(self) -> bool:
        return self.center.imag == 0

    def conjugates(self, prec: int = 128) -> list["AlgebraicNumber"]:
        return AlgebraicNumber.roots_of(self.min_poly, prec)

    def check(self) -> None:
        """Validate the invariants (irreducible, primitive, isolating ball)."""
        p = self.min_poly
        if polyutil.primitive(p) != p:
            raise DomainError("minimal polynomial must be primitive with positive lead")
        x = sympy.Symbol("x")
        if not sympy.Poly(list(reversed(p)), x).is_irreducible:
            raise DomainError("minimal polynomial is reducible")
        if self.degree > 1:
            iso = isolate_roots(p, 128)
            inside = [c for c, e in iso if abs(c - self.center) <= self.radius - e]
            touching = [c for c, e in iso if abs(c - self.center) <= self.radius + e]
            if len(inside) != 1 or len(touching) != 1:
                raise DomainError("ball does not isolate exactly one root")

    def to_dict(self) -> dict:
        return {
            "min_poly": [str(c) for c in self.min_poly],
            "center": [mpmath.nstr(self.center.real, 60, strip_zeros=False),
                       mpmath.nstr(self.center.imag, 60, strip_zeros=False)],
            "radius": mpmath.nstr(self.radius, 20),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AlgebraicNumber":
        poly = tuple(int(c) for c in d["min_poly"])
        if len(poly) == 2:
            return cls.from_rational(Fraction(-poly[0], poly[1]))
        with mpmath.workprec(256):
            center = mpmath.mpc(mpmath.mpf(d["center"][0]), mpmath.mpf(d["center"][1]))
            radius = mpmath.mpf(d["radius"])
        return cls(poly, center, radius)

    def __str__(self) -> str:
        if self.is_rational():
            return str(self.to_fraction())
        return f"root of {polyutil.to_string(self.min_poly)} near {mpmath.nstr(self.center, 15)}"


def log_abs_and_arg(alpha: AlgebraicNumber, prec: int):
    """Balls for ``log|alpha|`` and ``arg(alpha)`` (principal branch)."""
    if alpha.is_zero():
        raise DomainError("log of zero")
    ball = alpha.approx(prec + 16)
    with mpmath.workprec(prec + 32):
        lo = ball.abs_lower()
        if lo <= 0:
            raise PrecisionExhaustedError("value too close to zero")
        la = mpmath.log(abs(ball.center))
        la_err = ball.radius / lo * 2 + mpmath.mpf(2) ** (-prec - 24)
        ang = mpmath.arg(ball.center)
        ang_err = ball.radius / lo * 2 + mpmath.mpf(2) ** (-prec - 24)
    return (la, la_err), (ang, ang_err)


def bits(x) -> int:
    """Rough base-2 size of a positive real."""
    if x <= 0:
        return 0
    return int(math.ceil(float(mpmath.log(x, 2))))
