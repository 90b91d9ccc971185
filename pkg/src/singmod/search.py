"""Bounded searches: singular-dependent tuples, pair products, mixed triples.

Everything here runs over explicit finite ranges.  A report says what range
it covered and claims nothing beyond it.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

from . import polyutil
from .algebraic import AlgebraicNumber, FactoredRational
from .errors import BudgetExhaustedError, DomainError
from .modfun import (SingularModulus, hilbert_class_poly, is_singular_modulus,
                     rational_singular_moduli, singular_moduli)
from .modpoly import (DEFAULT_N_MAX, is_isogenous, modular_pair_search, modular_polynomial,
                      phi_vanishes)
from .qforms import enumerate_discriminants
from .relations import (REFUTED, RelationCertificate, _as_algebraic, cyclotomic_order,
                        default_exponent_bound, find_relation, find_relation_exact, is_dependent,
                        is_minimal_dependent, verify_relation)

SCHEMA_VERSION = 1

# which components enter the max, per kind
_AGGREGATED = {
    "tuple_6_2": None,  # all of them
    "pair_8_6": ("N", "a", "b", "c"),
    "triple_8_2": ("M", "N1", "N2"),
    "triple_8_4": ("D", "M", "N"),
}


@dataclass(frozen=True)
class ComplexityReport:
    kind: str
    components: tuple  # ((name, int), ...)
    delta: int

    def __post_init__(self):
        if self.kind not in _AGGREGATED:
            raise DomainError(f"unknown complexity kind {self.kind!r}")
        if self.delta != self.expected_delta():
            raise DomainError("delta does not match its components")

    def expected_delta(self) -> int:
        names = _AGGREGATED[self.kind]
        vals = [abs(v) for k, v in self.components if names is None or k in names]
        return max(vals)

    def component(self, name: str) -> int:
        return dict(self.components)[name]

    def to_dict(self) -> dict:
        return {"kind": self.kind,
                "components": [[k, str(v)] for k, v in self.components],
                "delta": str(self.delta)}

    @classmethod
    def build(cls, kind: str, components) -> "ComplexityReport":
        comps = tuple((k, int(v)) for k, v in components)
        names = _AGGREGATED[kind]
        delta = max(abs(v) for k, v in comps if names is None or k in names)
        return cls(kind, comps, delta)


@dataclass
class SearchReport:
    kind: str
    parameters: dict
    findings: list = field(default_factory=list)
    exclusions: int = 0
    caveats: list = field(default_factory=list)
    complete: bool = True
    examined: int = 0

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "parameters": self.parameters,
            "payload": {
                "findings": [f.to_dict() for f in self.findings],
                "examined": self.examined,
                "exclusions": self.exclusions,
                "complete": self.complete,
            },
            "verification": {"caveats": list(self.caveats)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


# --- singular-dependent tuples -----------------------------------------------------------

@dataclass(frozen=True)
class DependentTuple:
    """A minimal multiplicatively dependent set of singular moduli."""

    discriminants: tuple
    certificate: RelationCertificate

    @property
    def size(self) -> int:
        return len(self.discriminants)

    @property
    def complexity(self) -> ComplexityReport:
        return complexity_of_tuple(self.discriminants)

    def verify(self) -> bool:
        cert = self.certificate
        mode, _ = verify_relation(cert.members, cert.exponents)
        if mode == REFUTED:
            return False
        if cert.signed_generator is not None:
            mode, _ = verify_relation(cert.members, cert.signed_generator)
            if mode != REFUTED:
                return False  # generator reaches +1, so the doubled vector is not minimal
        return is_minimal_dependent(cert.members)

    def to_dict(self) -> dict:
        return {"discriminants": [str(D) for D in self.discriminants],
                "delta": str(self.complexity.delta),
                "certificate": self.certificate.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "DependentTuple":
        return cls(tuple(int(D) for D in d["discriminants"]),
                   RelationCertificate.from_dict(d["certificate"]))


def _minimal_rational_relation(values: Sequence[FactoredRational]):
    """The relation certificate if ``values`` is minimal dependent, else None.

    Minimal dependence of nonzero rationals means a rank-one relation lattice
    whose generator has no zero entry.
    """
    cert = find_relation_exact(values)
    if cert is None or cert.rank != 1 or not all(cert.exponents):
        return None
    return RelationCertificate(cert.members, cert.exponents, cert.mode, minimal=True,
                               signed_generator=cert.signed_generator,
                               signed_value=cert.signed_value, rank=1)


def _nonzero_singular_moduli(delta_max: int, rational_only: bool):
    out = []
    if rational_only:
        for D, v in rational_singular_moduli(delta_max):
            if v.sign != 0:
                out.append((D, v))
        return out
    for D in enumerate_discriminants(delta_max):
        for s in singular_moduli(D):
            if not s.value.is_zero():
                out.append((D, s))
    return out


def singular_dependent_search(delta_max: int, n_max: int, rational_only: bool = False,
                              budget: int = 10 ** 6) -> SearchReport:
    """Minimal dependent subsets of size ``<= n_max`` among singular moduli with ``|D| <= delta_max``.

    On rational values the test is exact.  Otherwise each subset goes through
    the lattice relation finder with the default exponent radius.  Zero is
    left out.  Subsets are taken in a fixed order, so reports are reproducible;
    a ``budget`` of subsets caps the work and yields a partial report.
    """
    if not 1 <= n_max <= 8:
        raise DomainError("n_max must lie in 1..8")
    if delta_max < 3:
        raise DomainError("delta_max must be at least 3")
    pool = _nonzero_singular_moduli(delta_max, rational_only)
    report = SearchReport(
        "singular_dependent",
        {"delta_max": delta_max, "n_max": n_max, "rational_only": rational_only,
         "budget": budget},
    )
    report.caveats.append(
        f"range: |D| <= {delta_max}, subsets of size <= {n_max}; nothing is claimed "
        "beyond this range")
    report.caveats.append(
        "a relation whose primitive generator gives -1 is reported with that generator "
        "and its double, which gives exactly 1")
    if not rational_only:
        report.caveats.append(
            "non-rational subsets use the exponent radius from the surrogate constant c7")
    examined = 0
    for size in range(1, n_max + 1):
        for combo in itertools.combinations(range(len(pool)), size):
            if examined >= budget:
                report.complete = False
                report.caveats.append(
                    f"budget exhausted: sizes < {size} complete, size {size} partial")
                report.examined = examined
                return report
            examined += 1
            Ds = tuple(pool[i][0] for i in combo)
            vals = [pool[i][1] for i in combo]
            if all(isinstance(v, FactoredRational) or v.value.is_rational() for v in vals):
                facs = [v if isinstance(v, FactoredRational)
                        else FactoredRational.from_rational(v.value.to_fraction()) for v in vals]
                cert = _minimal_rational_relation(facs)
            else:
                cert = _minimal_general_relation([v.value for v in vals])
            if cert is None:
                report.exclusions += 1
            else:
                report.findings.append(DependentTuple(Ds, cert))
    report.examined = examined
    return report


def _minimal_general_relation(values):
    if not is_minimal_dependent(values):
        return None
    cert = find_relation(values, default_exponent_bound(values))
    return RelationCertificate(cert.members, cert.exponents, cert.mode,
                               numeric_precision=cert.numeric_precision, minimal=True)


def pair_product_check(delta_max: int) -> SearchReport:
    """Search singular moduli ``s1, s2`` (``|D| <= delta_max``) with ``s1 s2 = 1``.

    ``s1 s2 = 1`` forces the minimal polynomial of ``s2`` to be the reversed
    minimal polynomial of ``s1``.  Pairs failing that exact comparison are
    refuted as a block; any survivor is settled by the relation verifier.
    """
    if delta_max < 3:
        raise DomainError("delta_max must be at least 3")
    report = SearchReport("pair_product", {"delta_max": delta_max})
    report.caveats.append(f"range: |D| <= {delta_max}, unordered pairs including s1 = s2")
    Ds = enumerate_discriminants(delta_max)
    polys = {D: hilbert_class_poly(D) for D in Ds}
    by_poly = {p: D for D, p in polys.items()}
    sizes = {D: len(p) - 1 for D, p in polys.items()}
    examined = 0
    excluded = 0
    for i, D1 in enumerate(Ds):
        p1 = polys[D1]
        recip = polyutil.primitive(tuple(reversed(p1))) if p1[0] != 0 else None
        D_match = by_poly.get(recip) if recip is not None else None
        for D2 in Ds[i:]:
            h1, h2 = sizes[D1], sizes[D2]
            block = h1 * (h1 + 1) // 2 if D1 == D2 else h1 * h2
            examined += block
            if D2 != D_match:
                excluded += block
                continue
            # same minimal polynomial up to reversal: check individual pairs
            s1s = singular_moduli(D1)
            s2s = singular_moduli(D2)
            for a, s1 in enumerate(s1s):
                for b, s2 in enumerate(s2s):
                    if D1 == D2 and b < a:
                        continue
                    mode, _ = verify_relation([s1.value, s2.value], [1, 1])
                    if mode == REFUTED:
                        excluded += 1
                    else:
                        cert = RelationCertificate((s1.value, s2.value), (1, 1), mode)
                        report.findings.append(DependentTuple((D1, D2), cert))
                        report.caveats.append("FOUND A PAIR WITH s1 * s2 = 1")
    report.examined = examined
    report.exclusions = excluded
    return report


def modular_pairs_report(M_max: int, N_max: int, budget: int = 10 ** 7) -> SearchReport:
    """Wrap :func:`modpoly.modular_pair_search` as a report."""
    report = SearchReport("modular_pairs", {"M_max": M_max, "N_max": N_max, "budget": budget})
    try:
        res = modular_pair_search(M_max, N_max, budget)
    except BudgetExhaustedError as e:
        report.complete = False
        report.caveats.append(f"budget exhausted; completed levels {e.completed}")
        return report
    report.findings = list(res.certificates)
    report.examined = res.examined
    report.exclusions = res.examined - len(res.certificates)
    report.caveats.extend(res.caveats)
    return report


# --- complexities -------------------------------------------------------------------------

def complexity_of_tuple(sigmas: Sequence) -> ComplexityReport:
    """Per-entry ``|D|`` and their maximum.

    Entries may be :class:`SingularModulus`, discriminants, or algebraic
    numbers (recognised by Hilbert class polynomial membership, ``|D| <= 1000``).
    """
    if not sigmas:
        raise DomainError("need a nonempty tuple")
    comps = []
    for i, s in enumerate(sigmas):
        if isinstance(s, SingularModulus):
            D = s.discriminant
        elif isinstance(s, int):
            D = s
        else:
            D = is_singular_modulus(_as_algebraic(s), 1000)
            if D is None:
                raise DomainError(f"{s} is not a singular modulus with |D| <= 1000")
        comps.append((f"D{i + 1}", abs(D)))
    return ComplexityReport.build("tuple_6_2", comps)


def _root_position(alpha: AlgebraicNumber) -> int:
    if alpha.is_rational():
        return 0
    conj = alpha.conjugates(128)
    return min(range(len(conj)), key=lambda k: abs(conj[k].center - alpha.center))


def same_number(x, y) -> bool:
    x, y = _as_algebraic(x), _as_algebraic(y)
    return x.min_poly == y.min_poly and _root_position(x) == _root_position(y)


def _relation_exists(x, y, a: int, b: int, c: int) -> bool:
    ea, eb = c * a, c * b
    if ea == 0 and eb == 0:
        return False
    if ea == 0:
        return verify_relation([y], [eb])[0] != REFUTED
    if eb == 0:
        return verify_relation([x], [ea])[0] != REFUTED
    return verify_relation([x, y], [ea, eb])[0] != REFUTED


def modular_dependent_complexity(x, y, N_budget: int = 6, exponent_budget: int = 6):
    """Least ``max(N, |a|, |b|, c)`` with ``Phi_N(x, y) = 0`` and ``(x^a y^b)^c = 1``.

    ``gcd(a, b) = 1`` and ``N, c >= 1``.  Only witnesses with every entry
    within its budget are considered; returns None if there is none.
    """
    x, y = _as_algebraic(x), _as_algebraic(y)
    if x.is_zero() or y.is_zero():
        raise DomainError("x and y must be nonzero")
    levels = [N for N in range(1, N_budget + 1)
              if phi_vanishes(modular_polynomial(N, max(N_budget, DEFAULT_N_MAX)), x, y)[0]]
    if not levels:
        return None
    top = max(N_budget, exponent_budget)
    for delta in range(1, top + 1):
        N_ok = [N for N in levels if N <= delta]
        if not N_ok:
            continue
        E = min(delta, exponent_budget)
        order = sorted(range(-E, E + 1), key=lambda t: (abs(t), -t))
        for c in range(1, E + 1):
            for a in order:
                for b in order:
                    if math.gcd(a, b) != 1:
                        continue
                    if max(N_ok[0], abs(a), abs(b), c) != delta:
                        continue
                    if _relation_exists(x, y, a, b, c):
                        return ComplexityReport.build(
                            "pair_8_6", [("N", N_ok[0]), ("a", a), ("b", b), ("c", c)])
    return None


def _require_distinct_nonzero(xs):
    xs = [_as_algebraic(x) for x in xs]
    if any(x.is_zero() for x in xs):
        raise DomainError("entries must be nonzero")
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            if same_number(xs[i], xs[j]):
                raise DomainError("entries must be distinct")
    return xs


def _min_isogeny(x, y, N_max):
    return is_isogenous(x, y, N_max)


def verify_triple_8_2(x1, x2, x3, N_max: int = DEFAULT_N_MAX, exponent_bound: int | None = None):
    """``x3`` a root of unity, ``x1, x2`` dependent, all three pairwise isogenous.

    Returns the complexity (order ``M`` of ``x3``, least isogeny degrees
    ``N1``, ``N2`` from ``x3`` to ``x1``, ``x2``) or None.
    """
    x1, x2, x3 = _require_distinct_nonzero([x1, x2, x3])
    M = cyclotomic_order(x3)
    if M is None:
        return None
    if not is_dependent([x1, x2], exponent_bound):
        return None
    N1 = _min_isogeny(x3, x1, N_max)
    N2 = _min_isogeny(x3, x2, N_max)
    if N1 is None or N2 is None or _min_isogeny(x1, x2, N_max) is None:
        return None
    return ComplexityReport.build("triple_8_2", [("M", M), ("N1", N1), ("N2", N2)])


def verify_triple_8_4(x1, x2, x3, D_max: int = 500, N_max: int = DEFAULT_N_MAX,
                      exponent_bound: int = 50):
    """``x1`` singular, ``x2, x3`` isogenous, ``x3`` a root of unity, ``x1, x2`` dependent.

    Singular-modulus recognition only covers ``|D| <= D_max``.  The returned
    complexity has components ``D, M, N`` (aggregated) and ``B``, the least
    ``max(|b1|, |b2|)`` of a relation ``x1^b1 x2^b2 = 1``.
    """
    x1, x2, x3 = _require_distinct_nonzero([x1, x2, x3])
    D = is_singular_modulus(x1, D_max)
    if D is None:
        return None
    M = cyclotomic_order(x3)
    if M is None:
        return None
    N = _min_isogeny(x2, x3, N_max)
    if N is None:
        return None
    cert = find_relation([x1, x2], exponent_bound)
    if cert is None:
        return None
    B = max(abs(e) for e in cert.exponents)
    return ComplexityReport.build("triple_8_4", [("D", abs(D)), ("M", M), ("N", N), ("B", B)])


def recognise_singular_modulus(x, D_max: int = 500) -> int | None:
    """Discriminant of ``x`` if it is a singular modulus with ``|D| <= D_max``."""
    return is_singular_modulus(_as_algebraic(x), D_max)
