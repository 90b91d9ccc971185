"""Heights, roots of unity, and multiplicative relations among algebraic numbers.

A relation is an integer vector ``a`` with ``prod alpha_i^a_i == 1`` exactly.
Candidates come from lattice reduction on ``(log|alpha_i|, arg alpha_i)`` with
a ``2 pi`` generator for the argument; every candidate is then proved or
refuted by :func:`verify_relation`.  Rational inputs also have an exact route
through the prime-exponent matrix (:func:`find_relation_exact`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
from sympy import ZZ
from sympy.polys.matrices import DomainMatrix

from . import polyutil
from .algebraic import (
    AlgebraicNumber,
    FactoredRational,
    isolate_roots,
    log_abs_and_arg,
)
from .errors import DomainError, IndeterminateError, PrecisionExhaustedError

SCHEMA_VERSION = 1

EXACT = "exact"
CERTIFIED_NUMERIC = "certified_numeric"
REFUTED = "refuted"

# Surrogate for the unspecified constant in the dependence-height estimate;
# sizes searches only.
DEFAULT_C7 = 1.0


@dataclass(frozen=True)
class HeightValue:
    value: float
    error_bound: float

    def __post_init__(self):
        if self.error_bound < 0 or (self.value - self.error_bound < 0 and self.value != 0):
            raise DomainError("height ball must lie in [0, inf)")

    @property
    def upper(self) -> float:
        return self.value + self.error_bound

    @property
    def lower(self) -> float:
        return max(0.0, self.value - self.error_bound)


def _as_algebraic(x) -> AlgebraicNumber:
    if isinstance(x, AlgebraicNumber):
        return x
    if isinstance(x, FactoredRational):
        return AlgebraicNumber.from_factored(x)
    if hasattr(x, "value") and isinstance(getattr(x, "value"), AlgebraicNumber):
        return x.value  # SingularModulus
    return AlgebraicNumber.from_rational(Fraction(x))


# --- heights and roots of unity ---------------------------------------------

def cyclotomic_order(alpha) -> int | None:
    """The order ``m`` if ``alpha`` is a primitive m-th root of unity, else None.

    Exact: the minimal polynomial must coincide with a cyclotomic polynomial
    ``Phi_m`` with ``phi(m) = deg``; ``phi(m) >= sqrt(m/2)`` caps the search.
    """
    alpha = _as_algebraic(alpha)
    p = alpha.min_poly
    d = alpha.degree
    if p[-1] != 1 or abs(p[0]) != 1:
        return None
    for m in range(1, 2 * d * d + 1):
        if polyutil.euler_phi(m) == d and polyutil.cyclotomic(m) == p:
            return m
    return None


def is_root_of_unity(alpha) -> bool:
    alpha = _as_algebraic(alpha)
    if alpha.is_zero():
        raise DomainError("zero is not a valid argument")
    return cyclotomic_order(alpha) is not None


def root_of_unity_index(alpha) -> tuple[int, int]:
    """``(k, m)`` with ``alpha = exp(2 pi i k / m)``, ``gcd(k, m) = 1``."""
    alpha = _as_algebraic(alpha)
    m = cyclotomic_order(alpha)
    if m is None:
        raise DomainError(f"{alpha} is not a root of unity")
    if m == 1:
        return 0, 1
    with mpmath.workprec(128):
        t = mpmath.arg(alpha.center) / (2 * mpmath.pi) * m
        k = int(mpmath.nint(t)) % m
        zeta = mpmath.expjpi(mpmath.mpf(2 * k) / m)
        ball = alpha.approx(64)
        if math.gcd(k, m) != 1 or abs(zeta - ball.center) > ball.radius + mpmath.mpf(2) ** -100 \
                and abs(zeta - alpha.center) > alpha.radius:
            raise PrecisionExhaustedError("could not identify root of unity")
    return k, m


def weil_height(alpha, prec: int = 64) -> HeightValue:
    """Absolute logarithmic Weil height via the Mahler measure of the minimal polynomial."""
    alpha = _as_algebraic(alpha)
    if alpha.is_zero():
        raise DomainError("the height is taken of nonzero numbers only")
    if alpha.is_rational():
        q = alpha.to_fraction()
        m = max(abs(q.numerator), q.denominator)
        with mpmath.workprec(prec + 20):
            v = mpmath.log(m)
        return HeightValue(float(v), float(abs(v)) * 2.0 ** (-prec) if m > 1 else 0.0)
    if is_root_of_unity(alpha):
        return HeightValue(0.0, 0.0)
    p = alpha.min_poly
    d = alpha.degree
    roots = isolate_roots(p, prec + 16)
    with mpmath.workprec(prec + 32):
        total = mpmath.log(p[-1])
        err = mpmath.mpf(0)
        for c, e in roots:
            r = abs(c)
            total += mpmath.log(max(1, r))
            # log max(1, |z|) has Lipschitz constant 1 / max(1, |z|) on the disk
            err += e / max(1, r - e)
        total /= d
        err = err / d + abs(total) * mpmath.mpf(2) ** (-prec)
    # float rounding of the published value
    v = float(total)
    e = float(err) + abs(v) * 2.0 ** -50
    if v - e < 0:
        e = v
    return HeightValue(v, e)


def bound_lehmer(d: int) -> float:
    """Lower bound ``1 / (37 d^2 log d)`` for heights of non-torsion numbers of degree d."""
    if d < 2:
        raise DomainError("degree must be at least 2")
    return 1.0 / (37 * d * d * math.log(d))


def exponent_search_radius_real(n: int, d: int, heights: Sequence[float],
                                c7: float = DEFAULT_C7) -> float:
    """``c7 d^n log d prod(h) / min(h)``: largest per-coordinate bound over i."""
    if n < 2 or d < 2:
        raise DomainError("need n >= 2 and d >= 2")
    if len(heights) != n:
        raise DomainError("need one height per member")
    if any(h <= 0 for h in heights):
        raise DomainError("heights must be positive")
    if c7 <= 0:
        raise DomainError("surrogate constant must be positive")
    return c7 * d ** n * math.log(d) * math.prod(heights) / min(heights)


def exponent_search_radius(n: int, d: int, heights: Sequence[float],
                           c7: float = DEFAULT_C7) -> int:
    return max(1, math.ceil(exponent_search_radius_real(n, d, heights, c7)))


# --- certificates -------------------------------------------------------------

@dataclass(frozen=True)
class RelationCertificate:
    """``prod members[i] ** exponents[i] == 1``.

    When the shortest vector of the dependence lattice only reaches ``-1``,
    it is kept as ``signed_generator`` and ``exponents`` is its double.
    """

    members: tuple
    exponents: tuple
    mode: str
    numeric_precision: int | None = None
    minimal: bool = False
    signed_generator: tuple | None = None
    signed_value: int = 1
    rank: int = 1

    def __post_init__(self):
        if not any(self.exponents):
            raise DomainError("exponent vector must be nonzero")
        if len(self.exponents) != len(self.members):
            raise DomainError("one exponent per member")
        if self.mode not in (EXACT, CERTIFIED_NUMERIC):
            raise DomainError(f"bad mode {self.mode!r}")

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "relation",
            "parameters": {"numeric_precision": self.numeric_precision},
            "payload": {
                "members": [_as_algebraic(m).to_dict() for m in self.members],
                "exponents": [str(e) for e in self.exponents],
                "minimal": self.minimal,
                "rank": self.rank,
                "signed_generator": (None if self.signed_generator is None
                                     else [str(e) for e in self.signed_generator]),
                "signed_value": self.signed_value,
            },
            "verification": {"mode": self.mode},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RelationCertificate":
        if d.get("schema_version") != SCHEMA_VERSION or d.get("kind") != "relation":
            raise DomainError("not a relation certificate of a known schema version")
        pl = d["payload"]
        sg = pl.get("signed_generator")
        return cls(
            members=tuple(AlgebraicNumber.from_dict(m) for m in pl["members"]),
            exponents=tuple(int(e) for e in pl["exponents"]),
            mode=d["verification"]["mode"],
            numeric_precision=d["parameters"].get("numeric_precision"),
            minimal=bool(pl.get("minimal", False)),
            signed_generator=None if sg is None else tuple(int(e) for e in sg),
            signed_value=int(pl.get("signed_value", 1)),
            rank=int(pl.get("rank", 1)),
        )


# --- exact route ----------------------------------------------------------------

def _to_factored(x) -> FactoredRational:
    if isinstance(x, FactoredRational):
        return x
    a = _as_algebraic(x)
    if not a.is_rational():
        raise DomainError(f"{a} is not rational")
    return FactoredRational.from_rational(a.to_fraction())


def _prime_matrix(members: Sequence[FactoredRational]):
    primes = sorted({p for m in members for p, _ in m.exponents})
    rows = [[m.exponent_map.get(p, 0) for m in members] for p in primes]
    return primes, rows


def integer_kernel(rows: list[list[int]], n: int) -> list[list[int]]:
    """Basis of ``{a in Z^n : rows . a = 0}`` by unimodular column operations."""
    A = [list(r) for r in rows]
    U = [[int(i == j) for j in range(n)] for i in range(n)]  # columns of U track ops
    pivot_col = 0
    for r in range(len(A)):
        if pivot_col >= n:
            break
        # gcd-reduce row r over columns pivot_col..n-1
        while True:
            nz = [c for c in range(pivot_col, n) if A[r][c]]
            if len(nz) <= 1:
                break
            c_min = min(nz, key=lambda c: abs(A[r][c]))
            for c in nz:
                if c != c_min:
                    q = A[r][c] // A[r][c_min]
                    for row in A:
                        row[c] -= q * row[c_min]
                    for row in U:
                        row[c] -= q * row[c_min]
        nz = [c for c in range(pivot_col, n) if A[r][c]]
        if not nz:
            continue
        c = nz[0]
        for row in A:
            row[c], row[pivot_col] = row[pivot_col], row[c]
        for row in U:
            row[c], row[pivot_col] = row[pivot_col], row[c]
        pivot_col += 1
    return [[U[i][c] for i in range(n)] for c in range(pivot_col, n)]


def lll(basis: list[list[int]]) -> list[list[int]]:
    if not basis:
        return []
    M = DomainMatrix([[ZZ(x) for x in row] for row in basis], (len(basis), len(basis[0])), ZZ)
    red = M.lll()
    return [[int(x) for x in row] for row in red.to_Matrix().tolist()]


def _parity_sublattice(kernel, eps):
    """Sublattice of ``kernel`` with ``sum a_i eps_i`` even (product sign +1)."""
    par = [sum(a * e for a, e in zip(v, eps)) % 2 for v in kernel]
    odd = [i for i, p in enumerate(par) if p]
    if not odd:
        return [list(v) for v in kernel], None
    w = kernel[odd[0]]
    out = []
    for i, v in enumerate(kernel):
        if i == odd[0]:
            out.append([2 * x for x in w])
        elif par[i]:
            out.append([x - y for x, y in zip(v, w)])
        else:
            out.append(list(v))
    return out, w


def _canonical_sign(v):
    for x in v:
        if x:
            return tuple(v) if x > 0 else tuple(-y for y in v)
    return tuple(v)


def find_relation_exact(members: Sequence) -> RelationCertificate | None:
    """Exact relation among nonzero rationals from the prime-exponent matrix.

    The kernel of the matrix intersected with the sign-parity condition is the
    full relation lattice.  For rank one the primitive generator is returned;
    otherwise the first vector of an LLL-reduced basis.
    """
    facs = [_to_factored(m) for m in members]
    if not facs:
        raise DomainError("need at least one member")
    if any(f.sign == 0 for f in facs):
        raise DomainError("members must be nonzero")
    n = len(facs)
    _, rows = _prime_matrix(facs)
    kernel = integer_kernel(rows, n)
    if not kernel:
        return None
    eps = [1 if f.sign < 0 else 0 for f in facs]
    kernel = lll(kernel)
    rank = len(kernel)
    lat, _ = _parity_sublattice(kernel, eps)
    lat = lll(lat)
    best = min(lat, key=lambda v: (max(map(abs, v)), sum(map(abs, v))))
    best = _canonical_sign(best)
    signed = None
    signed_value = 1
    if rank == 1:
        g = math.gcd(*kernel[0])
        gen = _canonical_sign([x // g for x in kernel[0]])
        if sum(a * e for a, e in zip(gen, eps)) % 2:
            signed, signed_value = gen, -1
            best = tuple(2 * x for x in gen)
        else:
            best = gen
    cert = RelationCertificate(
        members=tuple(AlgebraicNumber.from_factored(f) for f in facs),
        exponents=best,
        mode=EXACT,
        signed_generator=signed,
        signed_value=signed_value,
        rank=rank,
    )
    return cert


def relation_rank(members: Sequence) -> int:
    """Rank of the relation lattice of nonzero rationals."""
    facs = [_to_factored(m) for m in members]
    _, rows = _prime_matrix(facs)
    return len(integer_kernel(rows, len(facs)))


# --- verification ------------------------------------------------------------------

def _exact_representation(alpha: AlgebraicNumber):
    if alpha.is_rational():
        return ("q", alpha.to_fraction())
    if cyclotomic_order(alpha) is not None:
        return ("zeta", root_of_unity_index(alpha))
    return None


def _verify_exact(reps, exponents):
    q = Fraction(1)
    phase = Fraction(0)
    for rep, a in zip(reps, exponents):
        if not a:
            continue
        if rep[0] == "q":
            if rep[1] == 0:
                raise DomainError("members must be nonzero")
            q *= rep[1] ** a
        else:
            k, m = rep[1]
            phase += Fraction(k * a, m)
    phase -= math.floor(phase)
    return (q == 1 and phase == 0) or (q == -1 and phase == Fraction(1, 2))


def liouville_separation_log(members, exponents, heights) -> float:
    """``log`` of a lower bound for ``|prod alpha_i^a_i - 1|`` when it is nonzero."""
    D = math.prod(m.degree for m, a in zip(members, exponents) if a)
    h = sum(abs(a) * hv.upper for a, hv in zip(exponents, heights)) + math.log(2)
    return -D * h


def verify_relation(members: Sequence, exponents: Sequence[int],
                    max_precision: int = 1 << 15) -> tuple[str, int | None]:
    """Decide ``prod members[i] ** exponents[i] == 1``.

    Returns ``(mode, precision)`` with mode ``"exact"``, ``"certified_numeric"``
    or ``"refuted"``.  Raises :class:`IndeterminateError` if neither a proof nor
    a refutation is reached by ``max_precision`` bits.
    """
    members = [_as_algebraic(m) for m in members]
    exponents = [int(a) for a in exponents]
    if len(members) != len(exponents):
        raise DomainError("one exponent per member")
    if not any(exponents):
        raise DomainError("exponent vector must be nonzero")
    if any(m.is_zero() for m in members):
        raise DomainError("members must be nonzero")
    reps = [_exact_representation(m) for m, a in zip(members, exponents)]
    if all(r is not None for r in reps):
        return (EXACT if _verify_exact(reps, exponents) else REFUTED), None
    heights = [weil_height(m) for m in members]
    sep_log = liouville_separation_log(members, exponents, heights)
    prec = 64
    while prec <= max_precision:
        with mpmath.workprec(prec + 32):
            logsum = mpmath.mpf(0)
            argsum = mpmath.mpf(0)
            err = mpmath.mpf(0)
            for m, a in zip(members, exponents):
                if not a:
                    continue
                (la, le), (ar, ae) = log_abs_and_arg(m, prec)
                logsum += a * la
                argsum += a * ar
                err += abs(a) * (le + ae)
            # |exp(w) - 1| for w = logsum + i*argsum, known within err
            w = mpmath.mpc(logsum, argsum)
            val = abs(mpmath.expm1(w))
            # |exp(w+d) - exp(w)| <= |exp(w)| (e^|d| - 1)
            val_err = mpmath.exp(logsum) * mpmath.expm1(err) + mpmath.mpf(2) ** (-prec)
            if val > val_err:
                return REFUTED, prec
            if mpmath.log(val + val_err) < sep_log:
                return CERTIFIED_NUMERIC, prec
        prec *= 2
    raise IndeterminateError(f"relation {exponents} undecided at {max_precision} bits")


# --- lattice search ------------------------------------------------------------------

def _gram_schmidt(basis):
    n = len(basis)
    bstar = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    norms = []
    for i in range(n):
        v = [Fraction(x) for x in basis[i]]
        for j in range(i):
            mu[i][j] = sum(Fraction(x) * y for x, y in zip(basis[i], bstar[j])) / norms[j]
            v = [x - mu[i][j] * y for x, y in zip(v, bstar[j])]
        bstar.append(v)
        norms.append(sum(x * x for x in v))
    return mu, norms


def enumerate_short_vectors(basis, radius_sq, limit: int = 200000):
    """All nonzero lattice vectors of squared norm ``<= radius_sq`` (up to sign).

    Fincke-Pohst enumeration with exact rational Gram-Schmidt data.  Raises
    :class:`IndeterminateError` past ``limit`` visited nodes.
    """
    n = len(basis)
    mu, norms = _gram_schmidt(basis)
    radius_sq = Fraction(radius_sq)
    out = []
    coords = [0] * n
    visited = 0

    def rec(i, remaining):
        nonlocal visited
        visited += 1
        if visited > limit:
            raise IndeterminateError("short-vector enumeration exceeded its budget")
        c = -sum(coords[j] * mu[j][i] for j in range(i + 1, n))
        s = math.isqrt(int(remaining / norms[i])) + 1
        lo = math.floor(c) - s
        hi = math.ceil(c) + s
        for x in range(lo, hi + 1):
            t = (x - c) ** 2 * norms[i]
            if t > remaining:
                continue
            coords[i] = x
            if i == 0:
                if any(coords):
                    out.append(list(coords))
            else:
                rec(i - 1, remaining - t)
        coords[i] = 0

    rec(n - 1, radius_sq)
    vecs = []
    seen = set()
    for cf in out:
        v = [sum(cf[k] * basis[k][j] for k in range(n)) for j in range(len(basis[0]))]
        key = _canonical_sign(v)
        if key not in seen:
            seen.add(key)
            vecs.append(list(key))
    return vecs


@dataclass
class RelationSearchStats:
    candidates: int = 0
    refuted: int = 0
    precision: int = 0


def find_relation(members: Sequence, exponent_bound: int, *,
                  stats: RelationSearchStats | None = None,
                  max_precision: int = 1 << 12) -> RelationCertificate | None:
    """Find ``a`` with ``prod members[i]^a[i] == 1`` and ``max |a_i| <= exponent_bound``.

    Every lattice vector that could come from such a relation is enumerated,
    so ``None`` means no relation within the bound exists (given the rigorous
    error balls of the inputs).  The returned exponents are minimal in
    ``(max |a_i|, sum |a_i|)``.
    """
    members = [_as_algebraic(m) for m in members]
    if not members:
        raise DomainError("need at least one member")
    if any(m.is_zero() for m in members):
        raise DomainError("members must be nonzero")
    if exponent_bound < 1:
        raise DomainError("exponent bound must be positive")
    stats = stats if stats is not None else RelationSearchStats()
    n = len(members)
    B = exponent_bound
    k = 2 * (n + 1) * max(1, B.bit_length()) + 48
    while k <= max_precision:
        try:
            found = _lattice_round(members, B, k, stats)
        except (IndeterminateError, PrecisionExhaustedError):
            k *= 2
            continue
        stats.precision = k
        return found
    raise IndeterminateError(f"relation search undecided at {max_precision} bits")


def _lattice_round(members, B, k, stats):
    n = len(members)
    C = 1 << k
    rows = []
    err_max = mpmath.mpf(0)
    with mpmath.workprec(k + 64):
        for i, m in enumerate(members):
            (la, le), (ar, ae) = log_abs_and_arg(m, k + 8)
            err_max = max(err_max, le, ae)
            rows.append([int(i == j) for j in range(n)]
                        + [int(mpmath.nint(C * la)), int(mpmath.nint(C * ar))])
        rows.append([0] * n + [0, int(mpmath.nint(C * 2 * mpmath.pi))])
        slack = float(C * err_max) + 0.5 + 2.0 ** -30
    # coordinates of a true relation: |a_i| <= B, |b| <= n B / 2 + 1
    nb = n * B
    extra = nb * slack + (nb / 2 + 1) * (0.5 + 2.0 ** -30)
    radius_sq = Fraction(n * B * B) + 2 * Fraction(math.ceil(extra)) ** 2
    red = [r for r in lll(rows) if any(r)]
    vecs = enumerate_short_vectors(red, radius_sq, limit=50000 * n)
    found = []
    for v in vecs:
        a = v[:n]
        if not any(a) or max(map(abs, a)) > B:
            continue
        stats.candidates += 1
        mode, prec = verify_relation(members, a)
        if mode == REFUTED:
            stats.refuted += 1
            continue
        found.append((a, mode, prec))
    if not found:
        return None
    a, mode, prec = min(found, key=lambda t: (max(map(abs, t[0])), sum(map(abs, t[0])),
                                             _canonical_sign(t[0])))
    return RelationCertificate(tuple(members), _canonical_sign(a), mode, numeric_precision=prec)


# --- minimality ----------------------------------------------------------------------

def _all_rational(members) -> bool:
    for m in members:
        if isinstance(m, FactoredRational):
            continue
        if not _as_algebraic(m).is_rational():
            return False
    return True


def is_dependent(members: Sequence, exponent_bound: int | None = None) -> bool:
    if _all_rational(members):
        return relation_rank(members) > 0
    algs = [_as_algebraic(m) for m in members]
    if exponent_bound is None:
        exponent_bound = default_exponent_bound(algs)
    return find_relation(algs, exponent_bound) is not None


def default_exponent_bound(members: Sequence[AlgebraicNumber], c7: float = DEFAULT_C7) -> int:
    """Search radius from the dependence-height estimate (surrogate constant ``c7``)."""
    n = len(members)
    if n == 1:
        return 2 * members[0].degree * members[0].degree + 2
    d = max(2, math.prod(m.degree for m in members))
    hs = []
    torsion = 1
    for m in members:
        order = cyclotomic_order(m)
        if order is not None:
            torsion = math.lcm(torsion, order)
        h = weil_height(m)
        hs.append(max(h.upper, bound_lehmer(max(2, m.degree))))
    # a relation up to a root of unity of order L becomes exact after raising to L
    radius = exponent_search_radius(n, d, hs, c7) * torsion
    return min(max(radius, torsion), 10 ** 6)


def is_minimal_dependent(members: Sequence, exponent_bound: int | None = None) -> bool:
    """Dependent, with every proper nonempty subset independent."""
    n = len(members)
    if n < 1:
        raise DomainError("need at least one member")
    if not is_dependent(members, exponent_bound):
        return False
    for size in range(1, n):
        for idx in itertools.combinations(range(n), size):
            if is_dependent([members[i] for i in idx], exponent_bound):
                return False
    return True
