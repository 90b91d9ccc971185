"""The modular j-function, Hilbert class polynomials and singular moduli.

Two evaluation routes for j are kept deliberately separate:

* ``"eisenstein"``: ``j = 1728 E4^3 / (E4^3 - E6^2)`` from divisor-sum series,
* ``"qexp"``: ``j = 1/q + 744 + sum c(n) q^n`` with the integer coefficients
  obtained from ``E4^3 / Delta`` (``Delta`` from the pentagonal-number series).

Both run after reduction to the fundamental domain, where
``|q| <= exp(-pi sqrt 3) < 0.0044``.  Error bounds cover series truncation,
Horner rounding and the rounding of ``q`` itself.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import sympy

from .algebraic import (
    MAX_PRECISION,
    AlgebraicNumber,
    BigComplex,
    FactoredRational,
    isolation_radii,
)
from .errors import DomainError, PrecisionError, PrecisionExhaustedError, TruncationError
from .qforms import (
    CMPoint,
    check_discriminant,
    class_number,
    cm_point,
    enumerate_discriminants,
    reduce_form,
    reduced_forms,
)

log = logging.getLogger(__name__)

Q_MAX = 0.0044  # exp(-pi*sqrt(3)) = 0.004333..., with slack for the reduction tolerance
INTEGRALITY_THRESHOLD = Fraction(1, 4)
MAX_RETRIES = 8


# --- integer series --------------------------------------------------------

@lru_cache(maxsize=None)
def _divisor_sums(n_max: int, k: int) -> tuple:
    s = [0] * (n_max + 1)
    for d in range(1, n_max + 1):
        dk = d ** k
        for m in range(d, n_max + 1, d):
            s[m] += dk
    return tuple(s)


def eisenstein_coefficients(weight: int, n_max: int) -> tuple:
    """Integer q-expansion of E4 or E6 up to ``q^n_max``."""
    if weight == 4:
        scale, k = 240, 3
    elif weight == 6:
        scale, k = -504, 5
    else:
        raise DomainError("only weights 4 and 6 are supported")
    sig = _divisor_sums(n_max, k)
    return (1,) + tuple(scale * sig[n] for n in range(1, n_max + 1))


def _series_mul(a, b, n_max):
    out = [0] * (n_max + 1)
    for i, x in enumerate(a[: n_max + 1]):
        if x:
            for j, y in enumerate(b[: n_max + 1 - i]):
                out[i + j] += x * y
    return out


def _series_inv(a, n_max):
    # a[0] must be 1
    out = [0] * (n_max + 1)
    out[0] = 1
    for n in range(1, n_max + 1):
        out[n] = -sum(a[k] * out[n - k] for k in range(1, min(n, len(a) - 1) + 1))
    return out


def _euler_product_24(n_max):
    """Coefficients of prod_{n>=1} (1 - q^n)^24 via the pentagonal series."""
    eta = [0] * (n_max + 1)
    k = 0
    while True:
        done = True
        for kk in ((k,) if k == 0 else (k, -k)):
            e = kk * (3 * kk - 1) // 2
            if e <= n_max:
                eta[e] += -1 if kk % 2 else 1
                done = False
        if done:
            break
        k += 1
    out = [1] + [0] * n_max
    for _ in range(24):
        out = _series_mul(out, eta, n_max)
    return out


_J_CACHE: list = []


def j_coefficients(n_max: int) -> tuple:
    """``(c(-1), c(0), c(1), ..., c(n_max))`` for ``j = sum c(n) q^n``.

    ``c(-1) = 1``, ``c(0) = 744``.  Computed from ``E4^3 / prod(1 - q^n)^24``.
    """
    global _J_CACHE
    if len(_J_CACHE) < n_max + 2:
        m = max(n_max + 1, 2 * len(_J_CACHE))
        e4 = list(eisenstein_coefficients(4, m))
        e4cubed = _series_mul(_series_mul(e4, e4, m), e4, m)
        prod = _euler_product_24(m)
        _J_CACHE = _series_mul(e4cubed, _series_inv(prod, m), m)
    return tuple(_J_CACHE[: n_max + 2])


# --- numeric reduction -----------------------------------------------------

def _matmul(x, y):
    return (
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    )


def moebius(g, z):
    a, b, c, d = g
    return (a * z + b) / (c * z + d)


def reduce_to_fundamental_domain(z, tolerance=None):
    """Move ``z`` into the closed fundamental domain of SL2(Z).

    Works at the current mpmath precision.  Returns ``(z_reduced, gamma)``
    with ``gamma = (a, b, c, d)``, ``ad - bc = 1`` and ``gamma . z = z_reduced``.
    For an exact CM point use :func:`reduce_cm_point`.
    """
    if isinstance(z, BigComplex):
        z = z.center
    z = mpmath.mpc(z)
    if z.imag <= 0:
        raise DomainError("point is not in the upper half-plane")
    prec = mpmath.mp.prec
    if tolerance is None:
        tolerance = mpmath.mpf(2) ** (-prec // 2)
    gamma = (1, 0, 0, 1)
    for _ in range(4 * prec + 64):
        if z.imag < mpmath.mpf(2) ** (-prec // 3):
            raise PrecisionExhaustedError(
                f"Im z = {mpmath.nstr(z.imag, 5)} too small for {prec}-bit reduction")
        k = int(mpmath.floor(z.real + mpmath.mpf(1) / 2))
        if k:
            z = z - k
            gamma = _matmul((1, -k, 0, 1), gamma)
        if abs(z) < 1 - tolerance:
            z = -1 / z
            gamma = _matmul((0, -1, 1, 0), gamma)
            continue
        return z, gamma
    raise PrecisionExhaustedError("reduction did not terminate")


def reduce_cm_point(tau: CMPoint) -> tuple[CMPoint, tuple]:
    """Exact reduction of a quadratic point: no tolerance involved."""
    f, gamma = reduce_form(tau.form)
    return cm_point(f), gamma


# --- j evaluation -----------------------------------------------------------

def _horner_with_bound(coeffs, q, aq):
    """Evaluate ``sum coeffs[n] q^n``; return value, rounding bound, and
    ``sum n |coeffs[n]| |q|^n`` (sensitivity to a relative error in q)."""
    acc = mpmath.mpc(0)
    for c in reversed(coeffs):
        acc = acc * q + c
    abs_sum = mpmath.mpf(0)
    sens = mpmath.mpf(0)
    p = mpmath.mpf(1)
    for n, c in enumerate(coeffs):
        t = abs(c) * p
        abs_sum += t
        sens += n * t
        p *= aq
    u = mpmath.mpf(2) ** (1 - mpmath.mp.prec)
    return acc, (4 * len(coeffs) + 8) * u * abs_sum, sens


def _tail_bound(scale, power, K, aq):
    # sum_{n > K} scale * n^power * |q|^n, using ratio ((n+1)/n)^power |q| <= 2^power |q|
    rho = (mpmath.mpf(1) + mpmath.mpf(1) / (K + 1)) ** power * aq
    if rho >= 1:
        return mpmath.inf
    return scale * mpmath.mpf(K + 1) ** power * aq ** (K + 1) / (1 - rho)


def _terms_needed(aq, wp, power=5):
    if aq == 0:
        return 1
    K = max(8, int(wp * math.log(2) / -float(mpmath.log(aq))) + 2)
    while _tail_bound(1, power, K, aq) > mpmath.mpf(2) ** (-wp):
        K += 4
    return K


def _j_eisenstein(q, aq, q_rel):
    wp = mpmath.mp.prec
    K = _terms_needed(aq, wp + 20)
    e4c = eisenstein_coefficients(4, K)
    e6c = eisenstein_coefficients(6, K)
    e4, r4, s4 = _horner_with_bound(e4c, q, aq)
    e6, r6, s6 = _horner_with_bound(e6c, q, aq)
    # |sigma_3(n)| <= zeta(3) n^3, |sigma_5(n)| <= zeta(5) n^5
    err4 = r4 + _tail_bound(240 * 1.21, 3, K, aq) + s4 * q_rel
    err6 = r6 + _tail_bound(504 * 1.04, 5, K, aq) + s6 * q_rel
    a4, a6 = abs(e4), abs(e6)
    num = e4 ** 3
    den = num - e6 ** 2
    num_err = 3 * (a4 + err4) ** 2 * err4
    den_err = num_err + 2 * (a6 + err6) * err6 + err6 ** 2
    ad = abs(den)
    if ad <= den_err:
        return None, mpmath.inf
    j = 1728 * num / den
    err = 1728 * (num_err + abs(num) * den_err / ad) / (ad - den_err)
    err += 16 * abs(j) * mpmath.mpf(2) ** (1 - wp)
    return j, err


def _j_qexp(q, aq, q_rel):
    wp = mpmath.mp.prec
    K = _terms_needed(aq, wp + 20, power=0)
    # c(n) <= exp(4 pi sqrt n); bound the tail term by term ratio
    while True:
        t = mpmath.exp(4 * mpmath.pi * mpmath.sqrt(K + 1)) * aq ** (K + 1)
        ratio = mpmath.exp(4 * mpmath.pi * (mpmath.sqrt(K + 2) - mpmath.sqrt(K + 1))) * aq
        if ratio < 1 and t / (1 - ratio) <= mpmath.mpf(2) ** (-wp):
            tail = t / (1 - ratio)
            break
        K += 4
    c = j_coefficients(K)
    pos = c[1:]  # c(0), c(1), ..., c(K)
    s, r, sens = _horner_with_bound(pos, q, aq)
    j = 1 / q + s
    err = r + tail + sens * q_rel + (q_rel + mpmath.mpf(2) ** (2 - wp)) / aq
    err += 16 * abs(j) * mpmath.mpf(2) ** (1 - wp)
    return j, err


def _point_at(z, wp):
    if isinstance(z, CMPoint):
        return z.value(wp)
    if isinstance(z, BigComplex):
        return z.center
    return mpmath.mpc(z)


def j_eval(z, target_precision: int = 64, method: str = "eisenstein") -> BigComplex:
    """Evaluate ``j(z)`` with absolute error at most ``2^-target_precision``.

    ``z`` may be a number, a :class:`BigComplex` (its center is used as the
    exact argument) or a :class:`CMPoint`, which is reduced exactly first.
    """
    if target_precision < 32:
        raise DomainError("target_precision must be at least 32 bits")
    if method not in ("eisenstein", "qexp"):
        raise DomainError(f"unknown method {method!r}")
    if isinstance(z, CMPoint):
        z, _ = reduce_cm_point(z)
    with mpmath.workprec(64):
        z0 = _point_at(z, 64)
        if z0.imag <= 0:
            raise DomainError("j is only defined on the upper half-plane")
        zr, _ = reduce_to_fundamental_domain(z0, tolerance=mpmath.mpf(2) ** -20)
        size_bits = int(2 * math.pi * float(zr.imag) / math.log(2)) + 12
    # E4^3 - E6^2 ~ 1728 q cancels, so the Eisenstein route needs twice the size
    wp = target_precision + (2 if method == "eisenstein" else 1) * size_bits + 32
    target = mpmath.mpf(2) ** (-target_precision)
    while wp <= MAX_PRECISION:
        with mpmath.workprec(wp):
            zz = _point_at(z, wp)
            zr, _ = reduce_to_fundamental_domain(zz)
            q = mpmath.expjpi(2 * zr)
            aq = abs(q)
            if aq > Q_MAX:
                raise TruncationError("reduced point outside the convergence region")
            q_rel = 8 * (1 + 2 * mpmath.pi * abs(zr)) * mpmath.mpf(2) ** (1 - wp)
            if method == "eisenstein":
                j, err = _j_eisenstein(q, aq, q_rel)
            else:
                j, err = _j_qexp(q, aq, q_rel)
            if j is not None and err <= target:
                return BigComplex(+j, +err)
        wp *= 2
    raise TruncationError(f"j({z}) not reachable to 2^-{target_precision}")


# --- Hilbert class polynomials ---------------------------------------------

@dataclass(frozen=True)
class ClassPolyResult:
    coefficients: tuple  # constant term first
    residual: Fraction  # max distance of a computed coefficient to its rounding
    precision: int
    attempts: int


def initial_class_poly_precision(D: int) -> int:
    """A-priori bit size of the largest coefficient plus a margin."""
    s = sum(1 / f.a for f in reduced_forms(D))
    return int(math.pi * math.sqrt(-D) * s / math.log(2)) + 2 * class_number(D) + 64


def _expand_roots(roots):
    poly = [mpmath.mpc(1)]
    for r in roots:
        new = [mpmath.mpc(0)] * (len(poly) + 1)
        for i, c in enumerate(poly):
            new[i + 1] += c
            new[i] -= r * c
        poly = new
    return poly


def hilbert_class_poly_detailed(D: int, precision: int | None = None) -> ClassPolyResult:
    """Multiply out ``prod (x - j(tau_f))`` and round; see :func:`hilbert_class_poly`."""
    check_discriminant(D)
    forms = reduced_forms(D)
    prec = precision or initial_class_poly_precision(D)
    for attempt in range(1, MAX_RETRIES + 1):
        with mpmath.workprec(prec + 32):
            balls = [j_eval(cm_point(f), prec) for f in forms]
            roots = [b.center for b in balls]
            coeffs = _expand_roots(roots)
            # coefficient error from root errors: prod(1+|r|+e) - prod(1+|r|)
            up = mpmath.mpf(1)
            lo = mpmath.mpf(1)
            for b in balls:
                up *= 1 + abs(b.center) + b.radius
                lo *= 1 + abs(b.center)
            bound = (up - lo) + up * mpmath.mpf(2) ** (-prec)
            ints = [int(mpmath.nint(c.real)) for c in coeffs]
            residual = max(abs(c - i) for c, i in zip(coeffs, ints))
            res_frac = Fraction(str(mpmath.nstr(residual, 30))) if residual else Fraction(0)
        if residual < mpmath.mpf(1) / 4 and bound < mpmath.mpf(1) / 4:
            return ClassPolyResult(tuple(ints), res_frac, prec, attempt)
        log.debug("D=%d: residual %s at %d bits, doubling", D, residual, prec)
        prec *= 2
    raise PrecisionError(f"class polynomial for D={D} failed to round after {MAX_RETRIES} tries")


@lru_cache(maxsize=None)
def hilbert_class_poly(D: int, precision: int | None = None) -> tuple:
    """The Hilbert class polynomial of ``D``, constant term first."""
    return hilbert_class_poly_detailed(D, precision).coefficients


# --- singular moduli ---------------------------------------------------------

@dataclass(frozen=True)
class SingularModulus:
    value: AlgebraicNumber
    discriminant: int
    cm: CMPoint

    @property
    def complexity(self) -> int:
        return -self.discriminant

    def __str__(self) -> str:
        return f"j({self.cm}) [D={self.discriminant}] = {self.value}"


@lru_cache(maxsize=None)
def _singular_moduli(D: int) -> tuple:
    H = hilbert_class_poly(D)
    forms = reduced_forms(D)
    points = [cm_point(f) for f in forms]
    if len(H) == 2:
        val = AlgebraicNumber.from_rational(Fraction(-H[0], H[1]))
        return (SingularModulus(val, D, points[0]),)
    prec = 160
    while prec <= MAX_PRECISION:
        balls = [j_eval(t, prec) for t in points]
        with mpmath.workprec(prec + 16):
            # real singular moduli come from ambiguous forms; snap them to the axis
            snapped = []
            radii = []
            for b, t in zip(balls, points):
                f = t.form
                ambiguous = f.b == 0 or f.a == f.b or f.a == f.c
                c = mpmath.mpc(b.center.real, 0) if ambiguous else b.center
                snapped.append(c)
                radii.append(b.radius + (abs(b.center.imag) if ambiguous else 0))
            try:
                iso = isolation_radii(snapped, radii)
            except PrecisionExhaustedError:
                prec *= 2
                continue
        return tuple(SingularModulus(AlgebraicNumber(H, c, r), D, t)
                     for c, r, t in zip(snapped, iso, points))
    raise PrecisionExhaustedError(f"could not isolate singular moduli of D={D}")


def singular_moduli(D: int) -> list[SingularModulus]:
    """One singular modulus per reduced form of discriminant ``D``."""
    check_discriminant(D)
    return list(_singular_moduli(D))


def rational_singular_moduli(bound: int = 200) -> list[tuple[int, FactoredRational]]:
    """Class-number-one discriminants with ``|D| <= bound`` and their j-values."""
    out = []
    for D in enumerate_discriminants(bound):
        if class_number(D) != 1:
            continue
        H = hilbert_class_poly(D)
        out.append((D, FactoredRational.from_rational(Fraction(-H[0], H[1]))))
    return out


def is_singular_modulus(alpha: AlgebraicNumber, bound: int) -> int | None:
    """Smallest ``|D| <= bound`` whose class polynomial has ``alpha`` as a root.

    Membership is decided exactly: the minimal polynomial of ``alpha`` must
    equal the (irreducible) Hilbert class polynomial.
    """
    deg = alpha.degree
    for D in enumerate_discriminants(bound):
        if class_number(D) != deg:
            continue
        if hilbert_class_poly(D) == alpha.min_poly:
            return D
    return None


def factor_int_poly(poly) -> list[tuple]:
    x = sympy.Symbol("x")
    _, facs = sympy.factor_list(sympy.Poly(list(reversed(poly)), x))
    return [tuple(int(c) for c in reversed(f.all_coeffs())) for f, _ in facs]
