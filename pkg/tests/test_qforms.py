import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from singmod.errors import DomainError
from singmod.qforms import (
    QuadForm,
    class_number,
    cm_point,
    enumerate_discriminants,
    form_of_point,
    is_reduced,
    reduce_form,
    reduced_forms,
)


def brute_reduced(D):
    """Naive scan over all (a, b) with |b| <= a <= sqrt(|D|/3)."""
    out = []
    a = 1
    while 3 * a * a <= -D:
        for b in range(-a, a + 1):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            if c < a or math.gcd(math.gcd(a, b), c) != 1:
                continue
            if b < 0 and (-b == a or a == c):
                continue
            out.append((a, b, c))
        a += 1
    return sorted(out)


def test_enumerate_small_bounds():
    assert enumerate_discriminants(4) == [-3, -4]
    assert enumerate_discriminants(8) == [-3, -4, -7, -8]
    oracle = [-n for n in range(1, 21) if (-n) % 4 in (0, 1)]
    assert enumerate_discriminants(20) == oracle
    assert len(oracle) == 10


def test_enumerate_rejects_small_bound():
    with pytest.raises(DomainError):
        enumerate_discriminants(2)


def test_reduced_forms_examples():
    assert reduced_forms(-3) == [(1, 1, 1)]
    assert reduced_forms(-4) == [(1, 0, 1)]
    assert reduced_forms(-23) == [(1, 1, 6), (2, -1, 3), (2, 1, 3)]


def test_reduced_forms_match_brute_force():
    for D in enumerate_discriminants(400):
        forms = reduced_forms(D)
        assert [tuple(f) for f in forms] == brute_reduced(D)
        assert all(f.discriminant == D and is_reduced(f) for f in forms)


def test_class_number_examples():
    assert class_number(-3) == 1
    assert class_number(-23) == 3
    assert class_number(-163) == 1


def test_class_number_two_code_paths_agree():
    for D in enumerate_discriminants(1000):
        assert class_number(D) == len(reduced_forms(D))


def test_class_number_one_census():
    found = [D for D in enumerate_discriminants(200) if class_number(D) == 1]
    assert found == [-3, -4, -7, -8, -11, -12, -16, -19, -27, -28, -43, -67, -163]


def test_invalid_discriminant():
    with pytest.raises(DomainError):
        class_number(-5)
    with pytest.raises(DomainError):
        reduced_forms(12)


def test_cm_point_examples():
    t = cm_point(QuadForm(1, 0, 1))
    assert t.real == 0 and t.imag_squared == 1
    t = cm_point(QuadForm(1, 1, 1))
    assert t.real == Fraction(-1, 2) and t.imag_squared == Fraction(3, 4)
    t = cm_point(QuadForm(2, 1, 3))
    assert t.real == Fraction(-1, 4) and t.imag_squared == Fraction(23, 16)
    assert t.absolute_height() <= 46


def test_cm_point_rejects_unreduced():
    with pytest.raises(DomainError):
        cm_point(QuadForm(3, 1, 2))
    with pytest.raises(DomainError):
        cm_point(QuadForm(2, 0, 2))  # not primitive


def test_cm_points_in_fundamental_domain():
    for D in enumerate_discriminants(300):
        for f in reduced_forms(D):
            t = cm_point(f)
            assert t.in_fundamental_domain()
            z = t.value(80)
            assert abs(z.real) <= 0.5 and abs(z) >= 1 - 1e-20
            assert t.absolute_height() <= 2 * abs(D)


forms = st.tuples(st.integers(1, 60), st.integers(-200, 200), st.integers(1, 3000))


@settings(max_examples=200, deadline=None)
@given(forms)
def test_reduce_form_property(abc):
    a, b, c = abc
    if b * b - 4 * a * c >= 0:
        return
    f = QuadForm(a, b, c)
    g, gamma = reduce_form(f)
    assert is_reduced(g)
    assert g.discriminant == f.discriminant
    p, q, r, s = gamma
    assert p * s - q * r == 1
    with mpmath.workprec(200):
        tau = (-b + mpmath.sqrt(mpmath.mpf(4 * a * c - b * b)) * 1j) / (2 * a)
        moved = (p * tau + q) / (r * tau + s)
        target = (-g.b + mpmath.sqrt(mpmath.mpf(-g.discriminant)) * 1j) / (2 * g.a)
        assert abs(moved - target) < mpmath.mpf(2) ** -150


@settings(max_examples=100, deadline=None)
@given(st.fractions(max_denominator=50), st.fractions(min_value=Fraction(1, 50),
                                                       max_value=100, max_denominator=50))
def test_form_of_point_roundtrip(re, im_sq):
    f = form_of_point(re, im_sq)
    assert f.is_primitive() and f.a > 0
    # the upper root of f is re + i sqrt(im_sq)
    assert Fraction(-f.b, 2 * f.a) == re
    assert Fraction(-f.discriminant, 4 * f.a * f.a) == im_sq
