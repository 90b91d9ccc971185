"""Lattice classes in the trees T_p and separation of j(g_i z) at zeros of j.

Conventions.  A matrix ``g = (a, b; c, d)`` acts on the upper half-plane by
Moebius maps and on lattices through its rows: ``g`` corresponds to the
lattice spanned by ``(a, b)`` and ``(c, d)`` in the basis ``(z, 1)``.  Left
multiplication by SL2(Z) is a change of basis, so ``SL2(Z) g`` is the same
lattice; right multiplication moves lattices around (the tree action).

``j(g z) = 0`` for ``z = gamma . zeta``, ``zeta = exp(2 pi i / 3)``, exactly
when the lattice of ``g gamma`` (in the basis ``(zeta, 1)``) is a module over
``Z[zeta]``, i.e. is stable under the matrix of multiplication by ``zeta``.
That condition is local, which is what makes the tree argument work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import sympy

from .errors import DomainError
from .qforms import QuadForm, form_of_point, reduce_form

# multiplication by zeta in the basis (zeta, 1): zeta*zeta = -1 - zeta, zeta*1 = zeta
ZETA_MULT = (-1, -1, 1, 0)
IDENTITY = (1, 0, 0, 1)


def _mat(g) -> tuple:
    if len(g) == 2:
        g = (g[0][0], g[0][1], g[1][0], g[1][1])
    if len(g) != 4:
        raise DomainError("expected a 2x2 matrix")
    return tuple(Fraction(x) for x in g)


def matmul(x, y):
    return (
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    )


def det(m):
    return m[0] * m[3] - m[1] * m[2]


def adjugate(m):
    return (m[3], -m[1], -m[2], m[0])


def _integral_primitive(m) -> tuple:
    m = _mat(m)
    den = math.lcm(*(x.denominator for x in m))
    ints = [int(x * den) for x in m]
    g = math.gcd(*ints)
    return tuple(x // g for x in ints)


def _hermite(m) -> tuple[int, int, int]:
    """Row Hermite form ``(a, b; 0, d)``, ``a, d > 0``, ``0 <= b < d`` of an integer matrix."""
    p, q, r, s = m
    if p == 0 and r == 0:
        raise DomainError("singular matrix")
    g, u, v = _xgcd(p, r)
    row1 = (u * p + v * r, u * q + v * s)
    row2 = ((-r // g) * p + (p // g) * r, (-r // g) * q + (p // g) * s)
    a, b = row1
    d = row2[1]
    if a < 0:
        a, b = -a, -b
    if d < 0:
        d = -d
    if d == 0:
        raise DomainError("singular matrix")
    return a, b % d, d


def _xgcd(a, b):
    """``(g, u, v)`` with ``u a + v b = g = gcd(a, b) > 0``."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


@dataclass(frozen=True, order=True)
class GL2QElement:
    """The coset ``PSL2(Z) g`` in PGL2+(Q), stored as ``(a, b; 0, d)``."""

    a: int
    b: int
    d: int

    @property
    def matrix(self) -> tuple:
        return (self.a, self.b, 0, self.d)

    @property
    def determinant(self) -> int:
        return self.a * self.d

    def __str__(self) -> str:
        return f"({self.a},{self.b};0,{self.d})"


def canonicalize(g) -> GL2QElement:
    """Unique representative of ``PSL2(Z) g`` up to scaling, for ``det g > 0``."""
    m = _mat(g)
    if det(m) <= 0:
        raise DomainError("determinant must be positive")
    a, b, d = _hermite(_integral_primitive(m))
    return GL2QElement(a, b, d)


def parse_matrix(text: str) -> tuple:
    parts = [Fraction(p.strip()) for p in text.split(",")]
    if len(parts) != 4:
        raise DomainError(f"expected four comma-separated entries, got {text!r}")
    return tuple(parts)


# --- local trees -------------------------------------------------------------------

def vp(x, p: int) -> float:
    """p-adic valuation of a rational (``inf`` for zero)."""
    x = Fraction(x)
    if x == 0:
        return math.inf
    v = 0
    n, dd = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while dd % p == 0:
        dd //= p
        v -= 1
    return v


@dataclass(frozen=True, order=True)
class LatticeClass:
    """Homothety class of a Z_p-lattice with basis rows ``(p^r, x; 0, p^s)``.

    Normalised so ``min(r, s, v_p(x)) = 0`` and ``0 <= x < p^s``.
    """

    prime: int
    r: int
    s: int
    x: int

    @property
    def basis(self) -> tuple:
        return (self.prime ** self.r, self.x, 0, self.prime ** self.s)

    def __str__(self) -> str:
        return f"T_{self.prime}[{self.prime}^{self.r}, {self.x}; 0, {self.prime}^{self.s}]"


def lattice_class(m, p: int) -> LatticeClass:
    """Class in T_p of the lattice spanned by the rows of a rational matrix."""
    if not sympy.isprime(p):
        raise DomainError(f"{p} is not prime")
    ints = _integral_primitive(m)
    if det(ints) == 0:
        raise DomainError("singular matrix")
    a, b, d = _hermite(ints)
    r = int(vp(a, p))
    s = int(vp(d, p))
    ua = a // p ** r
    mod = p ** s
    x = (b * pow(ua, -1, mod)) % mod if mod > 1 else 0
    k = min(r, s, vp(x, p) if x else math.inf)
    k = int(k)
    r, s = r - k, s - k
    x = (x // p ** k) % (p ** s) if s else 0
    return LatticeClass(p, r, s, x)


def base_node(p: int) -> LatticeClass:
    return LatticeClass(p, 0, 0, 0)


def local_class(g, p: int) -> LatticeClass:
    if isinstance(g, GL2QElement):
        g = g.matrix
    return lattice_class(g, p)


def tree_distance(u: LatticeClass, v: LatticeClass) -> int:
    """``v_p(det M) - 2 min v_p(M)`` for ``M`` taking a basis of u to one of v."""
    if u.prime != v.prime:
        raise DomainError("nodes live in different trees")
    p = u.prime
    bu = _mat(u.basis)
    bv = _mat(v.basis)
    du = det(bu)
    inv = tuple(x / du for x in adjugate(bu))
    M = matmul(bv, inv)
    return int(vp(det(M), p) - 2 * min(vp(x, p) for x in M))


def neighbor_matrices(p: int) -> list[tuple]:
    """Index-p sublattice matrices: ``(1, k; 0, p)`` for ``k < p``, then ``(p, 0; 0, 1)``."""
    return [(1, k, 0, p) for k in range(p)] + [(p, 0, 0, 1)]


def neighbors(u: LatticeClass) -> list[LatticeClass]:
    """The ``p + 1`` adjacent classes, in the order of :func:`neighbor_matrices`."""
    p = u.prime
    return [lattice_class(matmul(_mat(n), _mat(u.basis)), p) for n in neighbor_matrices(p)]


def bfs_distance(u: LatticeClass, v: LatticeClass, limit: int = 12) -> int:
    """Distance by breadth-first search over :func:`neighbors` (test oracle)."""
    if u == v:
        return 0
    frontier = {u}
    seen = {u}
    for dist in range(1, limit + 1):
        nxt = set()
        for w in frontier:
            for nb in neighbors(w):
                if nb == v:
                    return dist
                if nb not in seen:
                    seen.add(nb)
                    nxt.add(nb)
        frontier = nxt
    raise DomainError(f"nodes further apart than {limit}")


def _is_stable(basis, op, p: int) -> bool:
    b = _mat(basis)
    inv = tuple(x / det(b) for x in adjugate(b))
    conj = matmul(matmul(b, _mat(op)), inv)
    return all(vp(x, p) >= 0 for x in conj)


def zeta_operator(gamma=IDENTITY) -> tuple:
    """Multiplication by zeta in the basis ``(gamma . zeta, 1)``: ``gamma Z gamma^-1``."""
    g = _mat(gamma)
    inv = tuple(x / det(g) for x in adjugate(g))
    return matmul(matmul(g, _mat(ZETA_MULT)), inv)


def is_cm_node(u: LatticeClass, gamma=IDENTITY) -> bool:
    """Whether the node represents a curve isomorphic to ``E_0`` (j = 0)."""
    return _is_stable(u.basis, zeta_operator(gamma), u.prime)


def bad_directions(p: int, gamma=IDENTITY) -> set[int]:
    """Indices of base-node neighbours that represent curves isomorphic to E_0."""
    if not sympy.isprime(p):
        raise DomainError(f"{p} is not prime")
    return {k for k, nb in enumerate(neighbors(base_node(p))) if is_cm_node(nb, gamma)}


# --- exact zero test -------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticPoint:
    """``re + i sqrt(im_sq)`` with rational data."""

    re: Fraction
    im_sq: Fraction

    @property
    def form(self) -> QuadForm:
        return form_of_point(self.re, self.im_sq)

    def __str__(self) -> str:
        return f"{self.re} + i*sqrt({self.im_sq})"


def act_on_zeta(m) -> QuadraticPoint:
    """Exact value of ``m . zeta`` in Q(sqrt -3)."""
    a, b, c, d = _mat(m)
    half = Fraction(1, 2)
    # numbers u + v*s with s = sqrt(-3); zeta = -1/2 + s/2
    nu, nv = b - a * half, a * half
    du, dv = d - c * half, c * half
    norm = du * du + 3 * dv * dv
    # num * conj(den) / norm
    ru = (nu * du + 3 * nv * dv) / norm
    rv = (nv * du - nu * dv) / norm
    if rv <= 0:
        raise DomainError("matrix does not preserve the upper half-plane")
    return QuadraticPoint(ru, 3 * rv * rv)


def exact_j_zero_test(g, gamma=IDENTITY) -> bool:
    """``j(g gamma zeta) == 0``, decided by exact reduction of the quadratic point."""
    if isinstance(g, GL2QElement):
        g = g.matrix
    w = act_on_zeta(matmul(_mat(g), _mat(gamma)))
    reduced, _ = reduce_form(w.form)
    return tuple(reduced) == (1, 1, 1)


# --- separation --------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparationStep:
    prime: int
    extremal: LatticeClass
    survivors: tuple  # input indices whose image is the extremal node
    direction: int | None  # neighbour index N_q after translation (None: no split)


@dataclass(frozen=True)
class SeparationWitness:
    gamma: tuple  # in SL2(Z)
    translation: tuple  # integer matrix proportional to g_s^{-1}
    survivor: int
    per_index: tuple  # per input i: j(g_i . translation . gamma . zeta) == 0
    z: QuadraticPoint
    steps: tuple

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "separation",
            "parameters": {"zeta": "exp(2*pi*i/3)"},
            "payload": {
                "gamma": [str(x) for x in self.gamma],
                "translation": [str(x) for x in self.translation],
                "survivor": self.survivor,
                "z": {"re": str(self.z.re), "im_squared": str(self.z.im_sq)},
                "steps": [{"prime": s.prime, "survivors": list(s.survivors),
                           "direction": s.direction} for s in self.steps],
            },
            "verification": {"mode": "exact", "per_index": list(self.per_index)},
        }


def _line_of_neighbor(k: int, p: int) -> tuple[int, int]:
    return (1, k) if k < p else (0, 1)


def _is_eigenline(v, op, p) -> bool:
    a, b, c, d = (int(x) % p for x in op)
    w = ((v[0] * a + v[1] * c) % p, (v[0] * b + v[1] * d) % p)
    return (v[0] * w[1] - v[1] * w[0]) % p == 0


def _complete_sl2(v, p):
    """Matrix in SL2(F_p) with first row ``v``."""
    x, y = v
    if x % p:
        return (x % p, y % p, 0, pow(x, -1, p))
    return (0, y % p, (-pow(y, -1, p)) % p, 0)


def _mat_mod(m, p):
    return tuple(int(x) % p for x in m)


def _inv_mod(m, p):
    a, b, c, d = m
    return (d % p, -b % p, -c % p, a % p)  # det 1


def _local_gamma(k: int, p: int) -> tuple:
    """gamma_p in SL2(F_p) sending the neighbour line k to a line that is not an
    eigenline of multiplication by zeta."""
    op = _mat_mod(ZETA_MULT, p)
    targets = [(1, t) for t in range(p)] + [(0, 1)]
    good = next(t for t in targets if not _is_eigenline(t, op, p))
    v = _line_of_neighbor(k, p)
    A = _complete_sl2(v, p)
    B = _complete_sl2(good, p)
    return tuple(x % p for x in matmul(_inv_mod(A, p), B))


def _crt(residues, moduli):
    x, n = 0, 1
    for r, m in zip(residues, moduli):
        # x' = x mod n, r mod m
        t = ((r - x) * pow(n, -1, m)) % m
        x, n = x + n * t, n * m
    return x % n, n


def lift_sl2(m, n: int) -> tuple:
    """Lift a matrix with determinant 1 mod ``n`` to SL2(Z)."""
    a, b, c, d = (int(x) % n for x in m)
    if (a * d - b * c - 1) % n:
        raise DomainError("determinant is not 1 modulo n")
    if n == 1:
        return IDENTITY
    if c == 0:
        c = n
    t = 0
    while math.gcd(c, d + t * n) != 1:
        t += 1
    d = d + t * n
    g, x0, y0 = _xgcd(d, -c)  # x0 d - y0 c = 1
    assert g == 1
    da, db = a - x0, b - y0
    _, u, v = _xgcd(c, d)  # u c + v d = 1
    k = u * da + v * db
    a2, b2 = x0 + k * c, y0 + k * d
    out = (a2, b2, c, d)
    assert a2 * d - b2 * c == 1
    assert all((x - y) % n == 0 for x, y in zip(out, m))
    return out


def separate(gs: Sequence) -> SeparationWitness:
    """Find ``z`` with ``j(g_i z) = 0`` for exactly one index ``i``.

    Primes are scanned in increasing order; at each one the current subset is
    cut down to the elements sitting at an extremal node of its image (ties
    broken by the smallest node).  The survivor is moved to the identity by a
    right translation, and ``gamma`` is assembled prime by prime so that every
    recorded direction ``N_q`` lands on a neighbour not representing ``E_0``.
    """
    elems = [g if isinstance(g, GL2QElement) else canonicalize(g) for g in gs]
    if not elems:
        raise DomainError("need at least one element")
    if len(set(elems)) != len(elems):
        raise DomainError("elements must be pairwise distinct cosets")
    idx = list(range(len(elems)))
    dets = math.prod(e.determinant for e in elems)
    top = max(sympy.primefactors(dets), default=1)
    raw_steps = []
    q = 2
    while len(idx) > 1:
        if q > top:
            raise DomainError("elements not separated by any prime")
        nodes = {i: local_class(elems[i], q) for i in idx}
        distinct = sorted(set(nodes.values()))
        if len(distinct) > 1:
            best = -1
            extremal = set()
            for x in range(len(distinct)):
                for y in range(x + 1, len(distinct)):
                    dd = tree_distance(distinct[x], distinct[y])
                    if dd > best:
                        best, extremal = dd, {distinct[x], distinct[y]}
                    elif dd == best:
                        extremal |= {distinct[x], distinct[y]}
            u = min(extremal)
            prev = list(idx)
            idx = [i for i in idx if nodes[i] == u]
            raw_steps.append((q, u, tuple(prev), tuple(idx)))
        q = int(sympy.nextprime(q))
    s = idx[0]
    T = adjugate(elems[s].matrix)
    translated = [matmul(e.matrix, T) for e in elems]
    steps = []
    residues = []
    moduli = []
    for q, u, prev, survivors in raw_steps:
        base = base_node(q)
        others = [lattice_class(translated[i], q) for i in prev]
        others = [v for v in others if v != base]
        nbrs = neighbors(base)
        k = next(k for k, nb in enumerate(nbrs)
                 if all(tree_distance(nb, v) == tree_distance(base, v) - 1 for v in others))
        steps.append(SeparationStep(q, u, survivors, k))
        residues.append(_local_gamma(k, q))
        moduli.append(q)
    if moduli:
        entries = []
        for pos in range(4):
            x, n = _crt([r[pos] for r in residues], moduli)
            entries.append(x)
        gamma = lift_sl2(tuple(entries), n)
    else:
        gamma = IDENTITY
    per_index = tuple(exact_j_zero_test(t, gamma) for t in translated)
    z = act_on_zeta(matmul(_mat(T), _mat(gamma)))
    witness = SeparationWitness(gamma, T, s, per_index, z, tuple(steps))
    if sum(per_index) != 1 or not per_index[s]:
        raise ArithmeticError(f"separation failed: {per_index}")
    return witness
