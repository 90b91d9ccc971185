import itertools
import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from oracles import make_rng, numeric_j_is_zero, random_element_set, separation_agrees
from singmod.errors import DomainError
from singmod.modfun import j_eval
from singmod.trees import (
    IDENTITY,
    GL2QElement,
    LatticeClass,
    act_on_zeta,
    base_node,
    bad_directions,
    bfs_distance,
    canonicalize,
    exact_j_zero_test,
    lattice_class,
    lift_sl2,
    local_class,
    matmul,
    neighbors,
    parse_matrix,
    separate,
    tree_distance,
)


def test_canonicalize_examples():
    assert canonicalize(IDENTITY) == GL2QElement(1, 0, 1)
    assert canonicalize((2, 0, 0, 2)) == GL2QElement(1, 0, 1)
    assert canonicalize((0, -1, 1, 0)) == GL2QElement(1, 0, 1)
    with pytest.raises(DomainError):
        canonicalize((0, 1, 1, 0))
    assert canonicalize(parse_matrix("1/2, 0, 0, 1")) == canonicalize((1, 0, 0, 2))


def test_canonicalize_absorbs_sl2z():
    rng = make_rng(2)
    gammas = [(1, 1, 0, 1), (0, -1, 1, 0), (2, 1, 1, 1), (3, 2, 4, 3)]
    for _ in range(50):
        (g,) = random_element_set(rng, max_size=1)
        for gam in gammas:
            a, b, c, d = gam
            m = g.matrix
            prod = (a * m[0] + b * m[2], a * m[1] + b * m[3],
                    c * m[0] + d * m[2], c * m[1] + d * m[3])
            assert canonicalize(prod) == g
            assert canonicalize(tuple(7 * x for x in m)) == g


def test_local_class_examples():
    for p in (2, 3, 5):
        assert local_class(IDENTITY, p) == base_node(p)
    u = local_class((1, 0, 0, 2), 2)
    assert tree_distance(base_node(2), u) == 1
    assert local_class((1, 0, 0, 2), 3) == base_node(3)
    assert local_class((4, 0, 0, 8), 2) == u
    with pytest.raises(DomainError):
        local_class(IDENTITY, 4)


def test_distance_examples():
    for p in (2, 3, 5, 7):
        b = base_node(p)
        assert tree_distance(b, b) == 0
        assert tree_distance(b, local_class((1, 0, 0, p), p)) == 1
        far = local_class((1, 0, 0, p * p), p)
        assert tree_distance(b, far) == 2 == bfs_distance(b, far)
    with pytest.raises(DomainError):
        tree_distance(base_node(2), base_node(3))


def test_neighbors_examples():
    for p in (2, 3, 5, 7):
        nb = neighbors(base_node(p))
        assert len(nb) == p + 1
        assert len(set(nb)) == p + 1
        for u in nb:
            assert base_node(p) in neighbors(u)


def test_bad_directions():
    assert bad_directions(2) == set()
    assert len(bad_directions(3)) == 1
    assert len(bad_directions(7)) == 2
    assert len(bad_directions(13)) == 2
    assert bad_directions(5) == set() and bad_directions(11) == set()
    with pytest.raises(DomainError):
        bad_directions(9)


def test_exact_zero_examples():
    assert exact_j_zero_test(IDENTITY)
    assert exact_j_zero_test((1, 1, 0, 1))
    assert not exact_j_zero_test((1, 0, 0, 2))
    z = act_on_zeta((1, 0, 0, 2))
    assert z.form.discriminant == -12
    with mpmath.workprec(200):
        w = mpmath.mpc(-0.5, mpmath.sqrt(3) / 2) / 2
    assert j_eval(w, 80).contains(54000)


def test_separate_examples():
    w = separate([IDENTITY])
    assert w.gamma == IDENTITY and w.per_index == (True,)
    elems = [canonicalize(IDENTITY), canonicalize((1, 0, 0, 2))]
    w = separate(elems)
    assert sum(w.per_index) == 1
    assert separation_agrees(elems, w) == w.per_index
    with pytest.raises(DomainError):
        separate([IDENTITY, (2, 0, 0, 2)])


def test_separate_random_sets():
    rng = make_rng(17)
    for _ in range(30):
        elems = random_element_set(rng)
        w = separate(elems)
        assert sum(w.per_index) == 1 and w.per_index[w.survivor]
        for i, e in enumerate(elems):
            prod = matmul(e.matrix, w.translation)
            assert exact_j_zero_test(prod, w.gamma) == w.per_index[i]


def test_witness_to_dict():
    elems = [canonicalize(IDENTITY), canonicalize((1, 0, 0, 2)), canonicalize((3, 1, 0, 1))]
    d = separate(elems).to_dict()
    assert d["kind"] == "separation" and d["verification"]["mode"] == "exact"
    assert sum(d["verification"]["per_index"]) == 1


@settings(max_examples=100, deadline=None)
@given(st.tuples(*[st.integers(-50, 50)] * 4), st.integers(1, 60))
def test_lift_sl2(m, n):
    a, b, c, _ = m
    # force determinant 1 mod n
    if math.gcd(a, n) != 1:
        a = 1
    d = (pow(a, -1, n) * (1 + b * c)) % n if n > 1 else 0
    g = lift_sl2((a, b, c, d), n)
    assert g[0] * g[3] - g[1] * g[2] == 1
    assert all((x - y) % n == 0 for x, y in zip(g, (a, b, c, d)))


def _random_node(rng, p, depth=4):
    u = base_node(p)
    for _ in range(rng.randint(0, depth)):
        u = rng.choice(neighbors(u))
    return u


def test_metric_properties():
    rng = make_rng(23)
    for p in (2, 3, 5, 7):
        for _ in range(40):
            u, v, w = (_random_node(rng, p, 3) for _ in range(3))
            duv = tree_distance(u, v)
            assert duv >= 0 and (duv == 0) == (u == v)
            assert duv == tree_distance(v, u)
            assert tree_distance(u, w) <= duv + tree_distance(v, w)
            assert (duv == 1) == (v in neighbors(u))
            if duv <= 6:
                assert duv == bfs_distance(u, v)


def test_class_normalisation():
    for p in (2, 3):
        for r, s in itertools.product(range(3), repeat=2):
            for x in range(p ** s):
                u = lattice_class((p ** r, x, 0, p ** s), p)
                assert min(u.r, u.s) == 0 or (u.x and u.x % p)
                assert 0 <= u.x < p ** u.s or u.s == 0
                assert lattice_class(u.basis, p) == u
    assert isinstance(base_node(2), LatticeClass)


def test_numeric_oracle_controls():
    assert numeric_j_is_zero(IDENTITY)
    assert numeric_j_is_zero((1, 1, 0, 1))
    assert not numeric_j_is_zero((1, 0, 0, 2))
    assert not numeric_j_is_zero((40, 0, 0, 1))
