from fractions import Fraction

import mpmath
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from singmod import polyutil
from singmod.algebraic import AlgebraicNumber, FactoredRational, isolate_roots
from singmod.errors import DomainError

small_polys = st.lists(st.integers(-20, 20), min_size=2, max_size=6).filter(lambda p: p[-1] != 0)


@settings(max_examples=100, deadline=None)
@given(small_polys, small_polys)
def test_poly_mul_matches_sympy(p, q):
    x = sympy.Symbol("x")
    P = sympy.Poly(list(reversed(p)), x)
    Q = sympy.Poly(list(reversed(q)), x)
    got = polyutil.mul(tuple(p), tuple(q))
    assert got == tuple(int(c) for c in reversed((P * Q).all_coeffs()))


def test_cyclotomic_against_sympy():
    x = sympy.Symbol("x")
    for n in range(1, 40):
        ref = sympy.Poly(sympy.cyclotomic_poly(n, x), x).all_coeffs()
        assert polyutil.cyclotomic(n) == tuple(int(c) for c in reversed(ref))
        assert polyutil.euler_phi(n) == sympy.totient(n)


def test_rem_and_evaluate():
    p = (1, 0, 0, 0, 0, 1)  # x^5 + 1
    r = polyutil.rem(p, polyutil.cyclotomic(3))
    # x^5 = x^2 = -x - 1 mod x^2 + x + 1, so x^5 + 1 = -x
    assert r == (0, -1)
    assert polyutil.evaluate((1, 2, 3), 2) == 17


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-30, 30), min_size=2, max_size=5))
def test_isolated_roots_contain_roots(roots):
    x = sympy.Symbol("x")
    if len(set(roots)) != len(roots):
        return
    P = sympy.Poly(sympy.prod([x - r for r in roots]), x)
    poly = tuple(int(c) for c in reversed(P.all_coeffs()))
    iso = isolate_roots(poly, 100)
    assert len(iso) == len(roots)
    for r in roots:
        assert sum(1 for c, e in iso if abs(c - r) <= e) == 1


def test_factored_rational():
    f = FactoredRational.from_rational(Fraction(-32768))
    assert f.sign == -1 and f.exponent_map == {2: 15}
    g = FactoredRational.from_rational(Fraction(3, 4))
    assert (f * g).value() == Fraction(-32768 * 3, 4)
    assert (g ** -2).value() == Fraction(16, 9)
    assert (f ** 2).sign == 1
    assert FactoredRational.from_rational(0).sign == 0
    assert str(FactoredRational.from_rational(287496)) == "2^3*3^3*11^3"
    with pytest.raises(DomainError):
        FactoredRational(2)
    with pytest.raises(DomainError):
        FactoredRational(1, ((2, 1), (2, 3)))


def test_algebraic_number_from_poly():
    golden = AlgebraicNumber.from_poly((-1, -1, 1), 1.6)
    golden.check()
    assert golden.degree == 2
    with mpmath.workprec(300):
        assert abs(golden.approx(200).center - (1 + mpmath.sqrt(5)) / 2) < mpmath.mpf(2) ** -190
    # reducible input: x^4 - 4 = (x^2 - 2)(x^2 + 2), keep the factor of the chosen root
    a = AlgebraicNumber.from_poly((-4, 0, 0, 0, 1), 1.4)
    assert a.min_poly == (-2, 0, 1)
    a.check()
    b = AlgebraicNumber.from_poly((-4, 0, 0, 0, 1), 1.4j)
    assert b.min_poly == (2, 0, 1)


def test_approx_error_bound():
    alpha = AlgebraicNumber.from_poly((-2, 0, 0, 1), 1.26)
    ball = alpha.approx(300)
    with mpmath.workprec(400):
        true = mpmath.cbrt(2)
        assert abs(ball.center - true) <= ball.radius
        assert ball.radius <= mpmath.mpf(2) ** -300 * 2


def test_dict_roundtrip():
    alpha = AlgebraicNumber.from_poly((1, 1, 1), mpmath.mpc(-0.5, 0.9))
    beta = AlgebraicNumber.from_dict(alpha.to_dict())
    assert beta.min_poly == alpha.min_poly
    beta.check()
    assert abs(beta.center - alpha.center) < 1e-40


def test_check_rejects_bad_ball():
    alpha = AlgebraicNumber((-2, 0, 1), mpmath.mpc(0), mpmath.mpf(5))
    with pytest.raises(DomainError):
        alpha.check()
    with pytest.raises(DomainError):
        AlgebraicNumber((-4, 0, 1), mpmath.mpc(2), mpmath.mpf(0.1)).check()
