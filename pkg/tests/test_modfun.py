import random

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from singmod.algebraic import FactoredRational
from singmod.errors import DomainError
from singmod.modfun import (
    eisenstein_coefficients,
    hilbert_class_poly,
    hilbert_class_poly_detailed,
    is_singular_modulus,
    j_coefficients,
    j_eval,
    moebius,
    rational_singular_moduli,
    reduce_to_fundamental_domain,
    singular_moduli,
)
from singmod.qforms import CMPoint, class_number, enumerate_discriminants
from singmod.relations import is_root_of_unity

H23 = (12771880859375, -5151296875, 3491750, 1)


def test_j_coefficients_known():
    # c(-1) = 1, c(0) = 744, c(1) = 196884, c(2) = 21493760, c(3) = 864299970
    c = j_coefficients(4)
    assert c[:5] == (1, 744, 196884, 21493760, 864299970)
    assert eisenstein_coefficients(4, 3) == (1, 240, 2160, 6720)


def test_j_at_zeta_is_zero():
    with mpmath.workprec(200):
        zeta = mpmath.mpc(-0.5, mpmath.sqrt(3) / 2)
    ball = j_eval(zeta, 100)
    assert abs(ball.center) <= ball.radius + mpmath.mpf(2) ** -90
    exact = j_eval(CMPoint(1, 1, -3), 100)
    assert exact.contains(0)


def test_j_at_i_two_routes():
    for method in ("eisenstein", "qexp"):
        ball = j_eval(CMPoint(1, 0, -4), 128, method=method)
        assert ball.contains(1728)
        assert ball.radius <= mpmath.mpf(2) ** -128


def test_j_163():
    ball = j_eval(CMPoint(1, 1, -163), 80)
    assert ball.contains(-262537412640768000)
    assert -262537412640768000 == -640320 ** 3


def test_j_eval_errors():
    with pytest.raises(DomainError):
        j_eval(mpmath.mpc(0, -1))
    with pytest.raises(DomainError):
        j_eval(mpmath.mpc(0, 1), 16)
    with pytest.raises(DomainError):
        j_eval(mpmath.mpc(0, 1), 64, method="bogus")


def test_reduction_examples():
    z, g = reduce_to_fundamental_domain(mpmath.mpc(5, 1))
    assert abs(z - 1j) < 1e-12 and g == (1, -5, 0, 1)
    z, g = reduce_to_fundamental_domain(mpmath.mpc(0, 0.25))
    assert abs(z - 4j) < 1e-12 and g == (0, -1, 1, 0)
    with mpmath.workprec(100):
        zeta = mpmath.mpc(-0.5, mpmath.sqrt(3) / 2)
        z, g = reduce_to_fundamental_domain(zeta + 1)
        assert abs(z - zeta) < mpmath.mpf(2) ** -60


points = st.tuples(st.floats(-0.5, 0.5), st.floats(0.87, 3.0))


@settings(max_examples=25, deadline=None)
@given(points)
def test_two_routes_agree(xy):
    x, y = xy
    z = mpmath.mpc(x, y)
    a = j_eval(z, 100, method="eisenstein")
    b = j_eval(z, 100, method="qexp")
    assert a.overlaps(b)


def _random_sl2(rng):
    while True:
        a, b = rng.randint(-6, 6), rng.randint(-6, 6)
        if a or b:
            break
    from math import gcd
    g = gcd(a, b)
    a, b = a // g, b // g
    # complete (a, b) to a matrix with ad - bc = 1 using the bottom row (c, d)
    for c in range(-12, 13):
        for d in range(-12, 13):
            if a * d - b * c == 1:
                return (a, b, c, d)


def test_modular_invariance():
    rng = random.Random(11)
    for _ in range(20):
        z = mpmath.mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 2.0))
        g = _random_sl2(rng)
        with mpmath.workprec(300):
            w = moebius(g, z)
        a = j_eval(z, 80)
        b = j_eval(w, 80)
        assert a.overlaps(b)


def test_class_poly_examples():
    assert hilbert_class_poly(-3) == (0, 1)
    assert hilbert_class_poly(-4) == (-1728, 1)
    assert hilbert_class_poly(-23) == H23


def test_class_poly_two_precisions():
    low = hilbert_class_poly_detailed(-23, precision=200)
    high = hilbert_class_poly_detailed(-23, precision=400)
    assert high.precision - low.precision >= 64
    assert low.coefficients == high.coefficients == H23
    assert low.residual < 0.25 and high.residual < 0.25


def test_class_poly_degree_and_roots():
    for D in enumerate_discriminants(80):
        H = hilbert_class_poly(D)
        assert len(H) - 1 == class_number(D)
        assert H[-1] == 1
        for s in singular_moduli(D):
            ball = s.value.approx(200)
            with mpmath.workprec(2000):
                v = sum(mpmath.mpf(c) * ball.center ** k for k, c in enumerate(H))
                deriv = sum(k * abs(c) * (abs(ball.center) + ball.radius) ** (k - 1)
                            for k, c in enumerate(H) if k)
                assert abs(v) <= deriv * ball.radius * 2 + mpmath.mpf(2) ** -150


def test_singular_moduli_examples():
    (s,) = singular_moduli(-11)
    assert s.value.to_fraction() == -32768
    (s,) = singular_moduli(-16)
    assert s.value.to_fraction() == 287496 == 2 ** 3 * 3 ** 3 * 11 ** 3
    ss = singular_moduli(-23)
    assert len(ss) == 3
    for i in range(3):
        ss[i].value.check()
        for j in range(i + 1, 3):
            a, b = ss[i].value, ss[j].value
            assert abs(a.center - b.center) > a.radius + b.radius


def test_rational_singular_moduli():
    table = dict(rational_singular_moduli(200))
    assert len(table) == 13
    assert table[-11] == FactoredRational(-1, ((2, 15),))
    assert table[-4] == FactoredRational(1, ((2, 6), (3, 3)))
    assert table[-16].value() == 287496
    assert table[-3].sign == 0
    assert table[-163].value() == -262537412640768000


def test_singular_moduli_are_not_roots_of_unity():
    for D in enumerate_discriminants(60):
        for s in singular_moduli(D):
            if not s.value.is_zero():
                assert not is_root_of_unity(s.value)


def test_recognition():
    from singmod.algebraic import AlgebraicNumber
    assert is_singular_modulus(AlgebraicNumber.from_rational(287496), 100) == -16
    assert is_singular_modulus(AlgebraicNumber.from_rational(7), 500) is None
    s = singular_moduli(-23)[1]
    assert is_singular_modulus(s.value, 100) == -23
