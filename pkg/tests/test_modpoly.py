import math
import random

import mpmath
import pytest

from singmod.algebraic import AlgebraicNumber
from singmod.errors import DomainError
from singmod.modfun import j_eval, singular_moduli
from singmod.modpoly import (
    DEFAULT_FALTINGS_C,
    ModularPairCertificate,
    ModularPolynomial,
    _cyclotomic_value,
    faltings_window,
    is_isogenous,
    isogeny_height_drift,
    modular_pair_search,
    modular_polynomial,
    modular_polynomial_interpolated,
    pellarin_degree_bound,
    psi,
    roots_of_unity,
)
from singmod.relations import HeightValue

PHI2 = {
    (3, 0): 1, (0, 3): 1, (2, 2): -1, (2, 1): 1488, (1, 2): 1488,
    (2, 0): -162000, (0, 2): -162000, (1, 1): 40773375,
    (1, 0): 8748000000, (0, 1): 8748000000, (0, 0): -157464000000000,
}


def test_psi():
    assert [psi(n) for n in range(1, 11)] == [1, 3, 4, 6, 6, 12, 8, 12, 12, 18]


def test_phi1_and_phi2():
    phi1 = modular_polynomial(1)
    assert {(i, j): c for i, j, c in phi1.terms()} == {(1, 0): 1, (0, 1): -1}
    phi2 = modular_polynomial(2)
    assert {(i, j): c for i, j, c in phi2.terms()} == PHI2


def test_phi3_shape():
    phi3 = modular_polynomial(3)
    assert phi3.degree == 4
    assert phi3.coeff(4, 0) == 1 and phi3.coeff(3, 3) == -1
    assert phi3.is_symmetric()


def test_symmetry_and_degree():
    for N in range(2, 11):
        phi = modular_polynomial(N)
        assert phi.is_symmetric()
        assert phi.degree == psi(N)
        assert phi.coeff(psi(N), 0) == 1


def test_interpolation_agrees():
    for N in (2, 3):
        assert modular_polynomial_interpolated(N).coefficients == modular_polynomial(N).coefficients


def test_level_bound():
    with pytest.raises(DomainError):
        modular_polynomial(11)
    with pytest.raises(DomainError):
        modular_polynomial(0)


def _ball_check(N, z, phi):
    with mpmath.workprec(300):
        zN = N * z
    x = j_eval(z, 200)
    y = j_eval(zN, 200)
    with mpmath.workprec(600):
        return phi.evaluate_ball(x, y)


def test_vanishes_on_graph_of_multiplication():
    rng = random.Random(3)
    for N in range(1, 6):
        phi = modular_polynomial(N)
        for _ in range(4):
            z = mpmath.mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.87, 1.8))
            v = _ball_check(N, z, phi)
            assert v.contains(0)


def test_ball_check_negative_control():
    phi = modular_polynomial(2)
    coeffs = dict(((i, j), c) for i, j, c in phi.terms())
    coeffs[(1, 1)] += 1
    bad = ModularPolynomial.from_text(
        ModularPolynomial(2, _dense(coeffs, phi.degree)).to_text())
    v = _ball_check(2, mpmath.mpc(0.1, 1.1), bad)
    assert not v.contains(0)


def _dense(coeffs, deg):
    return tuple(tuple(coeffs.get((i, j), 0) for j in range(deg + 1)) for i in range(deg + 1))


def test_text_roundtrip():
    for N in (1, 2, 5):
        phi = modular_polynomial(N)
        assert ModularPolynomial.from_text(phi.to_text()) == phi


def test_is_isogenous_examples():
    assert is_isogenous(1728, 1728) == 1
    assert is_isogenous(1728, 287496) == 2
    assert is_isogenous(287496, 1728) == 2
    assert is_isogenous(0, 1, N_max=5) is None


def test_is_isogenous_on_cm_pairs():
    # j(sqrt(-2)) = 8000 and j(2 sqrt(-2)) lie over the same order chain
    x = singular_moduli(-8)[0].value
    y = singular_moduli(-32)[0].value
    assert is_isogenous(x, y, 4) == 2
    assert is_isogenous(y, x, 4) == 2
    # j((1+sqrt(-3))/2) = 0 and j(sqrt(-3)) = 54000 are 2-isogenous
    assert is_isogenous(0, 54000, 3) == 2
    assert is_isogenous(54000, 0, 3) == 2


def test_faltings_window():
    w = faltings_window(0.0)
    assert w.center == 0
    assert math.isclose(w.upper, DEFAULT_FALTINGS_C * math.log(2))
    assert math.isclose(faltings_window(12.0).center, 1.0)
    widths = [faltings_window(float(h)) for h in range(2, 40)]
    w_sizes = [w.upper - w.lower for w in widths]
    assert all(a <= b for a, b in zip(w_sizes, w_sizes[1:]))
    w = faltings_window(HeightValue(5.0, 0.5))
    assert w.upper - w.lower > 2 * DEFAULT_FALTINGS_C * math.log(5)


def test_height_drift():
    assert isogeny_height_drift(1) == 0
    assert math.isclose(isogeny_height_drift(4), math.log(2))
    assert math.isclose(isogeny_height_drift(9), math.log(3))
    with pytest.raises(DomainError):
        isogeny_height_drift(0)


def test_pellarin_bound():
    b = pellarin_degree_bound(2, 1.0)
    assert b.exact == 16 * 10 ** 78
    vals = [pellarin_degree_bound(d, 1.0).exact for d in range(2, 12)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    vals = [pellarin_degree_bound(3, h).exact for h in (1.0, 1.5, 2.0, 3.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    with pytest.raises(DomainError):
        pellarin_degree_bound(1, 1.0)


def _exhaustive_pairs(M_max, N_max):
    zetas = roots_of_unity(M_max)
    out = []
    for N in range(2, N_max + 1):
        phi = modular_polynomial(N)
        for a in range(len(zetas)):
            for b in range(a + 1, len(zetas)):
                r, _ = _cyclotomic_value(phi, zetas[a], zetas[b])
                if not r:
                    out.append((N, zetas[a], zetas[b]))
    return out


def test_modular_pair_search_fixture():
    res = modular_pair_search(12, 6)
    assert res.certificates == []
    assert res.examined == 5175
    assert res.caveats
    assert _exhaustive_pairs(12, 6) == []
    again = modular_pair_search(12, 6, prescreen_bits=160)
    assert again.certificates == res.certificates and again.examined == res.examined


def test_cyclotomic_evaluation_detects_zero():
    # Phi_1 vanishes at equal points; the search itself never emits such pairs
    r, L = _cyclotomic_value(modular_polynomial(1), (1, 3), (1, 3))
    assert not r and L == 3
    r, _ = _cyclotomic_value(modular_polynomial(1), (1, 3), (2, 3))
    assert r
    c = ModularPairCertificate(3, 1, 3, 1, 1, 3)
    assert not c.verify()


def test_pair_certificate_roundtrip():
    c = ModularPairCertificate(4, 1, 6, 1, 2, 12, (5, 7))
    assert ModularPairCertificate.from_dict(c.to_dict()) == c
    assert not c.verify()


def test_small_search_matches_oracle():
    for M, N in ((6, 3), (8, 4)):
        got = [(c.level, (c.index1, c.order1), (c.index2, c.order2))
               for c in modular_pair_search(M, N).certificates]
        assert got == _exhaustive_pairs(M, N)


def test_algebraic_inputs_numeric_route():
    r2 = AlgebraicNumber.from_poly((-2, 0, 1), 1.41)
    assert is_isogenous(r2, 3, 2) is None
