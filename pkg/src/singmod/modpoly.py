"""Classical modular polynomials, isogeny predicates and modular pairs of roots of unity.

``Phi_N(X, j(tau)) = prod_A (X - j(A tau))`` over the ``psi(N)`` upper
triangular matrices ``A = (a, b; 0, d)``, ``ad = N``, ``0 <= b < d``,
``gcd(a, b, d) = 1``.  The power sums ``sum_A j(A tau)^k`` have integer
q-expansions (the sum over ``b`` is a Ramanujan-type sum); only their
principal parts and constant terms are needed to write them as polynomials
in ``j``.  Newton's identities then give the coefficients of ``Phi_N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import sympy

from . import polyutil
from .algebraic import MAX_PRECISION, AlgebraicNumber, BigComplex
from .errors import BudgetExhaustedError, DomainError, IndeterminateError, PrecisionError
from .modfun import j_coefficients, j_eval, moebius
from .relations import (
    CERTIFIED_NUMERIC,
    EXACT,
    HeightValue,
    _as_algebraic,
    cyclotomic_order,
    root_of_unity_index,
    weil_height,
)

DEFAULT_N_MAX = 10
DEFAULT_FALTINGS_C = 1.0
DEFAULT_PRACTICAL_SCALE = 1.0


def psi(N: int) -> int:
    out = N
    for p in sympy.primefactors(N):
        out = out // p * (p + 1)
    return out


def level_representatives(N: int) -> list[tuple[int, int, int, int]]:
    """Upper triangular ``(a, b, 0, d)`` with ``ad = N``, ``0 <= b < d``, ``gcd(a, b, d) = 1``."""
    reps = []
    for a in sympy.divisors(N):
        d = N // a
        for b in range(d):
            if math.gcd(math.gcd(a, b), d) == 1:
                reps.append((a, b, 0, d))
    return reps


@dataclass(frozen=True)
class ModularPolynomial:
    level: int
    coefficients: tuple  # coefficients[i][j] multiplies X^i Y^j

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def coeff(self, i: int, j: int) -> int:
        if i < len(self.coefficients) and j < len(self.coefficients[i]):
            return self.coefficients[i][j]
        return 0

    def is_symmetric(self) -> bool:
        n = len(self.coefficients)
        return all(self.coeff(i, j) == self.coeff(j, i) for i in range(n) for j in range(n))

    def terms(self):
        for i, row in enumerate(self.coefficients):
            for j, c in enumerate(row):
                if c:
                    yield i, j, c

    def evaluate(self, x, y):
        """Horner in X with Y-polynomials; exact for ints/Fractions."""
        acc = 0
        for row in reversed(self.coefficients):
            acc = acc * x + polyutil.evaluate(row, y)
        return acc

    def evaluate_ball(self, x: BigComplex, y: BigComplex) -> BigComplex:
        """Enclosure of ``Phi(x', y')`` over all ``x'`` in ``x`` and ``y'`` in ``y``.

        Uses ``|x'^i y'^j - x^i y^j| <= (|x|+r)^i (|y|+s)^j - |x|^i |y|^j``
        plus a bound for rounding in the working precision.
        """
        wp = mpmath.mp.prec
        ax, ay = abs(x.center), abs(y.center)
        ux, uy = ax + x.radius, ay + y.radius
        val = self.evaluate(x.center, y.center)
        spread = mpmath.mpf(0)
        size = mpmath.mpf(0)
        for i, j, c in self.terms():
            spread += abs(c) * (ux ** i * uy ** j - ax ** i * ay ** j)
            size += abs(c) * ux ** i * uy ** j
        rounding = 4 * (2 * self.degree + 2) * size * mpmath.mpf(2) ** (1 - wp)
        return BigComplex(val, spread + rounding)

    def l1_norm(self) -> int:
        return sum(abs(c) for _, _, c in self.terms())

    def to_text(self) -> str:
        lines = [f"level {self.level}"]
        for i, j, c in sorted(self.terms()):
            lines.append(f"{i} {j} {c}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ModularPolynomial":
        lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
        if lines[0][0] != "level":
            raise DomainError("missing level header")
        level = int(lines[0][1])
        entries = [(int(i), int(j), int(c)) for i, j, c in lines[1:]]
        n = max(max(i, j) for i, j, _ in entries) + 1
        rows = [[0] * n for _ in range(n)]
        for i, j, c in entries:
            rows[i][j] = c
        return cls(level, tuple(polyutil.trim(r) for r in rows))

    def __str__(self) -> str:
        parts = []
        for i, j, c in sorted(self.terms(), reverse=True):
            mono = "*".join(s for s in (
                "" if i == 0 else ("X" if i == 1 else f"X^{i}"),
                "" if j == 0 else ("Y" if j == 1 else f"Y^{j}")) if s)
            parts.append(f"{c}*{mono}" if mono else str(c))
        return " + ".join(parts).replace("+ -", "- ")


# --- q-expansion construction ---------------------------------------------------

@lru_cache(maxsize=None)
def _j_power_table(m_max: int):
    """``T[m][t]`` = coefficient of ``q^(t - m)`` in ``j^m`` for ``0 <= t <= m``."""
    c = j_coefficients(m_max + 1)
    f = list(c[: m_max + 1])  # q*j = 1 + 744 q + ...
    table = [[1]]
    cur = [1] + [0] * m_max
    for m in range(1, m_max + 1):
        nxt = [0] * (m_max + 1)
        for i, x in enumerate(cur):
            if x:
                for k in range(0, m_max + 1 - i):
                    nxt[i + k] += x * f[k]
        cur = nxt
        table.append(cur[: m + 1])
    return table


def _mobius(n: int) -> int:
    fac = sympy.factorint(n)
    if any(e > 1 for e in fac.values()):
        return 0
    return -1 if len(fac) % 2 else 1


def _ramanujan_like(n: int, d: int, g: int) -> int:
    # sum over 0 <= b < d with gcd(b, g) = 1 of exp(2 pi i b n / d)
    total = 0
    for e in sympy.divisors(g):
        mu = _mobius(e)
        if mu and n % (d // e) == 0:
            total += mu * (d // e)
    return total


def _laurent_to_j_poly(series: dict, top: int, table) -> tuple:
    """Write a Laurent series (exponent -> coeff, exponents <= 0) as a polynomial in j."""
    s = dict(series)
    out = [0] * (top + 1)
    for m in range(top, 0, -1):
        a = s.get(-m, 0)
        if a:
            out[m] = a
            for t, cf in enumerate(table[m]):
                e = t - m
                s[e] = s.get(e, 0) - a * cf
        if s.get(-m, 0):
            raise ArithmeticError("principal part did not cancel")
    out[0] = s.get(0, 0)
    if any(v for e, v in s.items() if e < 0):
        raise ArithmeticError("series is not a polynomial in j")
    return polyutil.trim(out)


@lru_cache(maxsize=None)
def _modular_polynomial_qexp(N: int) -> ModularPolynomial:
    reps = level_representatives(N)
    n = len(reps)
    table = _j_power_table(n * N)
    power_sums = []
    for k in range(1, n + 1):
        series: dict = {}
        for a in sympy.divisors(N):
            d = N // a
            g = math.gcd(a, d)
            for t, cf in enumerate(table[k]):
                nn = t - k  # exponent of q in j^k
                if nn > 0:
                    break
                r = _ramanujan_like(nn, d, g)
                if r:
                    e = a * nn
                    assert e % d == 0
                    series[e // d] = series.get(e // d, 0) + cf * r
        power_sums.append(_laurent_to_j_poly(series, k * N, table))
    # Newton: k e_k = sum_{i=1}^k (-1)^(i-1) e_{k-i} p_i
    elem = [(1,)]
    for k in range(1, n + 1):
        acc: tuple = ()
        for i in range(1, k + 1):
            term = polyutil.mul(elem[k - i], power_sums[i - 1])
            acc = polyutil.add(acc, term if i % 2 else polyutil.scale(term, -1))
        if any(c % k for c in acc):
            raise ArithmeticError("Newton identity produced non-integral coefficients")
        elem.append(tuple(c // k for c in acc))
    rows = [()] * (n + 1)
    for k in range(n + 1):
        e = elem[k] if k % 2 == 0 else polyutil.scale(elem[k], -1)
        rows[n - k] = polyutil.trim(e)
    return ModularPolynomial(N, tuple(rows))


def modular_polynomial(N: int, N_max: int = DEFAULT_N_MAX) -> ModularPolynomial:
    if N < 1:
        raise DomainError("level must be positive")
    if N > N_max:
        raise DomainError(f"level {N} exceeds the configured maximum {N_max}")
    return _modular_polynomial_qexp(N)


def modular_polynomial_interpolated(N: int, start_precision: int = 256) -> ModularPolynomial:
    """Independent construction: interpolate through values at CM points.

    At ``psi(N) + 1`` points ``tau_t = i (1 + t/4)`` the polynomial
    ``prod_A (X - j(A tau_t))`` is formed numerically; each X-coefficient is
    then interpolated as a polynomial in ``Y = j(tau_t)`` and rounded.  The
    result is accepted once two successive precisions agree.
    """
    reps = level_representatives(N)
    n = len(reps)
    prec = start_precision
    previous = None
    while prec <= MAX_PRECISION:
        with mpmath.workprec(prec):
            taus = [mpmath.mpc(0, 1 + mpmath.mpf(t) / 4) for t in range(n + 1)]
            ys = [j_eval(t, prec).center for t in taus]
            colvals = []
            for t in taus:
                roots = [j_eval(moebius(A, t), prec).center for A in reps]
                poly = [mpmath.mpc(1)]
                for r in roots:
                    new = [mpmath.mpc(0)] * (len(poly) + 1)
                    for i, c in enumerate(poly):
                        new[i + 1] += c
                        new[i] -= r * c
                    poly = new
                colvals.append(poly)
            V = mpmath.matrix([[y ** k for k in range(n + 1)] for y in ys])
            rows = []
            ok = True
            for i in range(n + 1):
                rhs = mpmath.matrix([colvals[t][i] for t in range(n + 1)])
                sol = mpmath.lu_solve(V, rhs)
                ints = [int(mpmath.nint(mpmath.re(s))) for s in sol]
                if any(abs(s - k) > mpmath.mpf(1) / 4 for s, k in zip(sol, ints)):
                    ok = False
                rows.append(polyutil.trim(ints))
        cand = ModularPolynomial(N, tuple(rows))
        if ok and cand == previous:
            return cand
        previous = cand if ok else None
        prec *= 2
    raise PrecisionError(f"interpolation of Phi_{N} did not stabilise")


# --- evaluation and isogeny -------------------------------------------------------

def _cyclotomic_value(phi: ModularPolynomial, z1: tuple[int, int], z2: tuple[int, int]):
    """``Phi(zeta1, zeta2)`` reduced in ``Z[t]/Phi_L(t)``, ``L = lcm(m1, m2)``.

    Returns the remainder (empty tuple means zero) and ``L``.
    """
    (k1, m1), (k2, m2) = z1, z2
    L = math.lcm(m1, m2)
    e1 = k1 * (L // m1)
    e2 = k2 * (L // m2)
    arr = [0] * L
    for i, j, c in phi.terms():
        arr[(i * e1 + j * e2) % L] += c
    return polyutil.rem(arr, polyutil.cyclotomic(L)), L


def _exact_kind(alpha: AlgebraicNumber):
    if alpha.is_rational():
        return ("q", alpha.to_fraction())
    if cyclotomic_order(alpha) is not None:
        return ("zeta", root_of_unity_index(alpha))
    return None


def _height_of_value_bound(phi: ModularPolynomial, hx: HeightValue, hy: HeightValue) -> float:
    return math.log(phi.l1_norm()) + phi.degree * (hx.upper + hy.upper)


def phi_vanishes(phi: ModularPolynomial, x, y, max_precision: int = 1 << 14) -> tuple[bool, str]:
    """Decide ``Phi(x, y) == 0``; returns ``(vanishes, mode)``."""
    x, y = _as_algebraic(x), _as_algebraic(y)
    kx, ky = _exact_kind(x), _exact_kind(y)
    if kx and ky:
        if kx[0] == "q" and ky[0] == "q":
            return phi.evaluate(kx[1], ky[1]) == 0, EXACT
        zx = kx[1] if kx[0] == "zeta" else None
        zy = ky[1] if ky[0] == "zeta" else None
        # rational +-1 and 0 are cyclotomic-compatible; other rationals go numeric
        def as_zeta(kind):
            if kind[0] == "zeta":
                return kind[1]
            if kind[1] == 1:
                return (0, 1)
            if kind[1] == -1:
                return (1, 2)
            return None
        zx, zy = as_zeta(kx), as_zeta(ky)
        if zx and zy:
            r, _ = _cyclotomic_value(phi, zx, zy)
            return not r, EXACT
    if x.degree * y.degree <= 12 and not _resultant_allows(phi, x, y):
        return False, EXACT
    hx, hy = weil_height(x), weil_height(y)
    D = x.degree * y.degree
    sep_log = -D * _height_of_value_bound(phi, hx, hy)
    prec = 64
    while prec <= max_precision:
        bx, by = x.approx(prec), y.approx(prec)
        with mpmath.workprec(prec + 32):
            v = phi.evaluate(bx.center, by.center)
            # crude Lipschitz bound: L1 * deg * max(1,|x|,|y|)^(2 deg - 1) * radius
            big = max(1, bx.abs_upper(), by.abs_upper())
            err = phi.l1_norm() * 2 * phi.degree * big ** (2 * phi.degree) * (bx.radius + by.radius)
            err += phi.l1_norm() * big ** (2 * phi.degree) * mpmath.mpf(2) ** (-prec)
            if abs(v) > err:
                return False, CERTIFIED_NUMERIC
            if abs(v) + err > 0 and mpmath.log(abs(v) + err) < sep_log:
                return True, CERTIFIED_NUMERIC
        prec *= 2
    raise IndeterminateError("modular equation undecided within the precision budget")


def _resultant_allows(phi, x, y) -> bool:
    """False when no conjugate pair of (x, y) satisfies Phi (exact refutation)."""
    X, Y = sympy.symbols("X Y")
    P = sum(c * X ** i * Y ** j for i, j, c in phi.terms())
    f = sum(c * X ** i for i, c in enumerate(x.min_poly))
    g = sympy.Poly(sum(c * Y ** i for i, c in enumerate(y.min_poly)), Y)
    R = sympy.Poly(sympy.resultant(f, P, X), Y)
    if R.is_zero:
        return True
    return R.rem(g).is_zero


def is_isogenous(x, y, N_max: int = DEFAULT_N_MAX) -> int | None:
    """Smallest ``N <= N_max`` with ``Phi_N(x, y) = 0``, or None."""
    if N_max > DEFAULT_N_MAX * 4:
        raise DomainError("N_max beyond the supported range")
    x, y = _as_algebraic(x), _as_algebraic(y)
    for N in range(1, N_max + 1):
        phi = modular_polynomial(N, N_max=max(N_max, DEFAULT_N_MAX))
        vanishes, _ = phi_vanishes(phi, x, y)
        if vanishes:
            return N
    return None


# --- height estimates ----------------------------------------------------------------

@dataclass(frozen=True)
class FaltingsWindow:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise DomainError("empty window")

    @property
    def center(self) -> float:
        return (self.lower + self.upper) / 2


def faltings_window(h_j, c: float = DEFAULT_FALTINGS_C) -> FaltingsWindow:
    """Window for the stable Faltings height given the height of the j-invariant.

    Centered at ``h(j)/12`` with radius ``c log max(2, h(j))``; the constant is
    a configurable surrogate.
    """
    h = h_j.value if isinstance(h_j, HeightValue) else float(h_j)
    slack = h_j.error_bound / 12 if isinstance(h_j, HeightValue) else 0.0
    if not math.isfinite(h):
        raise DomainError("height must be finite")
    r = c * math.log(max(2.0, h)) + slack
    return FaltingsWindow(h / 12 - r, h / 12 + r)


def isogeny_height_drift(N: int) -> float:
    """Bound ``log(N) / 2`` on the change of Faltings height along a cyclic N-isogeny."""
    if N < 1:
        raise DomainError("degree must be positive")
    return 0.5 * math.log(N)


@dataclass(frozen=True)
class DegreeBound:
    exact: int
    practical: int


def pellarin_degree_bound(d: int, h_F_upper: float,
                          practical_scale: float = DEFAULT_PRACTICAL_SCALE) -> DegreeBound:
    """``10^78 d^4 max(1, log d)^2 max(1, h_F)^2`` rounded up, plus a small surrogate.

    The practical value drops the ``10^78`` and multiplies by ``practical_scale``.
    """
    if d < 2:
        raise DomainError("degree must be at least 2")
    with mpmath.workprec(400):
        core = (mpmath.mpf(d) ** 4 * max(mpmath.mpf(1), mpmath.log(d)) ** 2
                * max(mpmath.mpf(1), mpmath.mpf(h_F_upper)) ** 2)
        exact = int(mpmath.ceil(mpmath.mpf(10) ** 78 * core))
        practical = max(1, int(mpmath.ceil(practical_scale * core)))
    return DegreeBound(exact, practical)


# --- modular pairs of roots of unity --------------------------------------------------

@dataclass(frozen=True)
class ModularPairCertificate:
    order1: int
    index1: int
    order2: int
    index2: int
    level: int
    modulus: int  # L = lcm(order1, order2): evaluation took place in Z[t]/Phi_L
    remainder: tuple = ()

    def verify(self) -> bool:
        if (self.index1, self.order1) == (self.index2, self.order2):
            return False
        phi = modular_polynomial(self.level, N_max=max(self.level, DEFAULT_N_MAX))
        r, L = _cyclotomic_value(phi, (self.index1, self.order1), (self.index2, self.order2))
        return not r and L == self.modulus

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "modular_pair",
            "parameters": {"level": self.level},
            "payload": {"zeta1": [self.index1, self.order1], "zeta2": [self.index2, self.order2]},
            "verification": {"mode": EXACT, "modulus": self.modulus,
                             "remainder": [str(c) for c in self.remainder]},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModularPairCertificate":
        pl = d["payload"]
        return cls(order1=int(pl["zeta1"][1]), index1=int(pl["zeta1"][0]),
                   order2=int(pl["zeta2"][1]), index2=int(pl["zeta2"][0]),
                   level=int(d["parameters"]["level"]),
                   modulus=int(d["verification"]["modulus"]),
                   remainder=tuple(int(c) for c in d["verification"]["remainder"]))


def roots_of_unity(M_max: int) -> list[tuple[int, int]]:
    """``(k, m)`` for every primitive m-th root of unity, ``m <= M_max``."""
    return [(k, m) for m in range(1, M_max + 1) for k in range(m) if math.gcd(k, m) == 1]


@dataclass
class ModularPairSearch:
    certificates: list
    examined: int
    prescreen_hits: int
    caveats: list


def modular_pair_search(M_max: int, N_max: int, budget: int = 10 ** 7,
                        prescreen_bits: int = 96) -> ModularPairSearch:
    """All modular pairs with orders ``<= M_max`` at levels ``<= N_max``.

    Each pair is screened numerically on the unit circle; every screen hit is
    then settled in exact cyclotomic arithmetic.  Level 1 never vanishes on
    distinct points.  Raises :class:`BudgetExhaustedError` carrying the levels
    already completed when ``budget`` evaluations are used up.
    """
    if M_max < 1 or N_max < 1:
        raise DomainError("bounds must be positive")
    zetas = roots_of_unity(M_max)
    certs = []
    examined = 0
    hits = 0
    completed = []
    for N in range(2, N_max + 1):
        phi = modular_polynomial(N, N_max=max(N_max, DEFAULT_N_MAX))
        norm = phi.l1_norm()
        with mpmath.workprec(prescreen_bits):
            pts = {z: mpmath.expjpi(mpmath.mpf(2 * z[0]) / z[1]) for z in zetas}
            threshold = norm * mpmath.mpf(2) ** (-prescreen_bits // 2)
            for a in range(len(zetas)):
                for b in range(a + 1, len(zetas)):
                    examined += 1
                    if examined > budget:
                        raise BudgetExhaustedError(
                            f"budget of {budget} evaluations exhausted at level {N}",
                            completed={"levels": completed, "M_max": M_max})
                    z1, z2 = zetas[a], zetas[b]
                    if abs(phi.evaluate(pts[z1], pts[z2])) > threshold:
                        continue
                    hits += 1
                    r, L = _cyclotomic_value(phi, z1, z2)
                    if not r:
                        certs.append(ModularPairCertificate(z1[1], z1[0], z2[1], z2[0], N, L, r))
        completed.append(N)
    certs.sort(key=lambda c: (c.level, c.order1, c.index1, c.order2, c.index2))
    caveats = [
        f"levels 2..{N_max} only: the level bound needed for exhaustiveness in terms of "
        f"max order involves an unspecified constant",
        "level 1 omitted: Phi_1 = X - Y does not vanish on distinct points",
    ]
    return ModularPairSearch(certs, examined, hits, caveats)
