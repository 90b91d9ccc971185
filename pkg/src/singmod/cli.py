"""Command-line interface.

Exit codes:

    0  completed, nothing found (or the verification succeeded)
    1  completed with findings (search commands)
    2  invalid flags or arguments
    3  unknown subcommand
    4  budget exhausted; a partial report was produced
    5  verification refuted, or a numeric question stayed undecided

Configuration is read from, in increasing priority: built-in defaults, a
key-value config file (``--config`` or ``SINGMOD_CONFIG``, section
``[singmod]``), environment variables ``SINGMOD_<KEY>``, and flags.
"""

from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import mpmath

from . import polyutil
from .algebraic import AlgebraicNumber
from .errors import BudgetExhaustedError, DomainError, PrecisionError
from .modfun import (hilbert_class_poly, hilbert_class_poly_detailed, j_eval,
                     rational_singular_moduli, singular_moduli)
from .modpoly import ModularPairCertificate, is_isogenous, modular_polynomial
from .qforms import QuadForm, class_number, cm_point, enumerate_discriminants, reduced_forms
from .relations import (REFUTED, RelationCertificate, default_exponent_bound, find_relation,
                        find_relation_exact, verify_relation)
from . import search as _search
from . import trees

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_USAGE = 2
EXIT_UNKNOWN = 3
EXIT_BUDGET = 4
EXIT_FAILED = 5

ENV_PREFIX = "SINGMOD_"
VERSION = "0.1.0"


@dataclass
class Config:
    precision_bits: int = 128
    delta_max: int = 200
    n_max: int = 5
    N_max: int = 6
    M_max: int = 12
    worker_count: int = 1
    output_dir: str = "."
    surrogate_constants: dict = field(default_factory=lambda: {"c7": Fraction(1)})

    def validate(self) -> None:
        if self.precision_bits < 64:
            raise DomainError("precision_bits must be at least 64")
        for name in ("delta_max", "n_max", "N_max", "M_max", "worker_count"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be positive")
        for k, v in self.surrogate_constants.items():
            if v <= 0:
                raise DomainError(f"surrogate constant {k} must be positive")


def _parse_constants(text: str) -> dict:
    out = {}
    for part in text.split(","):
        if part.strip():
            k, v = part.split("=", 1)
            out[k.strip()] = Fraction(v.strip())
    return out


def _coerce(name: str, raw):
    if name == "surrogate_constants":
        return raw if isinstance(raw, dict) else _parse_constants(str(raw))
    if name == "output_dir":
        return str(raw)
    return int(raw)


def load_config(flags: dict, environ=None) -> Config:
    """Merge defaults, config file, environment and flags (flags win)."""
    environ = os.environ if environ is None else environ
    cfg = Config()
    names = [f.name for f in fields(Config)]
    path = flags.get("config") or environ.get(ENV_PREFIX + "CONFIG")
    if path:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        if not parser.read(path):
            raise DomainError(f"cannot read config file {path}")
        section = parser["singmod"] if parser.has_section("singmod") else {}
        for name in names:
            if name in section:
                setattr(cfg, name, _coerce(name, section[name]))
    for name in names:
        key = ENV_PREFIX + name.upper()
        if key in environ:
            setattr(cfg, name, _coerce(name, environ[key]))
    for name in names:
        if flags.get(name) is not None:
            setattr(cfg, name, _coerce(name, flags[name]))
    cfg.validate()
    return cfg


# --- argument parsing -----------------------------------------------------------------

class UsageError(Exception):
    def __init__(self, message, unknown=False):
        super().__init__(message)
        self.unknown = unknown


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}", unknown="invalid choice" in message)


def _common(p):
    p.add_argument("--json", action="store_true", help="also write a JSON report to output_dir")
    p.add_argument("--config", help="key-value config file")
    p.add_argument("--precision-bits", dest="precision_bits", type=int)
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--workers", dest="worker_count", type=int)
    p.add_argument("--constants", dest="surrogate_constants",
                   help="surrogate constants, e.g. c7=1")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="singmod", description="Singular moduli and multiplicative relations.")
    ap.add_argument("--version", action="version", version=VERSION)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("discriminants", help="list discriminants with class numbers")
    p.add_argument("--bound", type=int, default=None)
    p.add_argument("--delta-max", dest="delta_max", type=int)
    p.add_argument("--class-number", type=int, default=None)
    _common(p)

    p = sub.add_parser("forms", help="reduced forms of a discriminant")
    p.add_argument("-D", type=int, required=True)
    _common(p)

    p = sub.add_parser("class-poly", help="Hilbert class polynomial")
    p.add_argument("-D", type=int, required=True)
    _common(p)

    p = sub.add_parser("j-eval", help="evaluate j with a certified error bound")
    p.add_argument("--form", help="reduced form a,b,c of a CM point")
    p.add_argument("--z", help="complex point, e.g. 0.1+1.2j")
    _common(p)

    p = sub.add_parser("moduli", help="singular moduli up to a bound")
    p.add_argument("--delta-max", dest="delta_max", type=int)
    p.add_argument("--rational-only", action="store_true")
    _common(p)

    p = sub.add_parser("relation", help="find or verify multiplicative relations")
    rs = p.add_subparsers(dest="action", parser_class=_Parser)
    q = rs.add_parser("find")
    q.add_argument("values", nargs="+", help="numbers: 3/4, zeta:1/3, j:a,b,c, poly:c0,c1,..@re,im")
    q.add_argument("--bound", type=int, default=None, help="exponent bound (non-rational input)")
    _common(q)
    q = rs.add_parser("verify")
    q.add_argument("file")
    _common(q)

    p = sub.add_parser("modpoly", help="classical modular polynomials")
    ms = p.add_subparsers(dest="action", parser_class=_Parser)
    q = ms.add_parser("build")
    q.add_argument("-N", type=int, required=True)
    q.add_argument("--full", action="store_true", help="print every coefficient")
    _common(q)
    q = ms.add_parser("eval")
    q.add_argument("-N", type=int, required=True)
    q.add_argument("--x", required=True)
    q.add_argument("--y", required=True)
    _common(q)

    p = sub.add_parser("isogeny", help="least N with Phi_N(x, y) = 0")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--n-max", dest="N_max", type=int)
    _common(p)

    p = sub.add_parser("tree", help="Bruhat-Tits tree utilities")
    ts = p.add_subparsers(dest="action", parser_class=_Parser)
    q = ts.add_parser("distance")
    q.add_argument("-p", type=int, required=True)
    q.add_argument("--g", action="append", required=True, help="matrix a,b,c,d (twice)")
    _common(q)
    q = ts.add_parser("separate")
    q.add_argument("--g", action="append", required=True, help="matrix a,b,c,d (repeatable)")
    _common(q)

    p = sub.add_parser("search", help="bounded searches")
    ss = p.add_subparsers(dest="action", parser_class=_Parser)
    q = ss.add_parser("singular-dependent")
    q.add_argument("--delta-max", dest="delta_max", type=int)
    q.add_argument("--n-max", dest="n_max", type=int)
    q.add_argument("--rational-only", action="store_true")
    q.add_argument("--budget", type=int, default=10 ** 6)
    _common(q)
    q = ss.add_parser("pair-product")
    q.add_argument("--delta-max", dest="delta_max", type=int)
    _common(q)
    q = ss.add_parser("modular-pairs")
    q.add_argument("--m-max", dest="M_max", type=int)
    q.add_argument("--n-max", dest="N_max", type=int)
    q.add_argument("--budget", type=int, default=10 ** 7)
    _common(q)

    p = sub.add_parser("complexity", help="complexity of a tuple or a modular-dependent pair")
    p.add_argument("--discriminants", help="comma-separated discriminants")
    p.add_argument("--pair", nargs=2, metavar=("X", "Y"))
    p.add_argument("--n-max", dest="N_max", type=int)
    p.add_argument("--exponent-max", type=int, default=6)
    _common(p)
    return ap


# --- input parsing ------------------------------------------------------------------------

def parse_number(text: str) -> AlgebraicNumber:
    """``3/4``, ``zeta:k/m``, ``j:a,b,c`` (reduced form) or ``poly:c0,c1,...@re,im``."""
    text = text.strip()
    if text.startswith("zeta:"):
        k, m = (int(t) for t in text[5:].split("/"))
        with mpmath.workprec(128):
            near = mpmath.expjpi(mpmath.mpf(2 * k) / m)
        return AlgebraicNumber.from_poly(polyutil.cyclotomic(m), near)
    if text.startswith("j:"):
        a, b, c = (int(t) for t in text[2:].split(","))
        f = QuadForm(a, b, c)
        pt = cm_point(f)
        for s in singular_moduli(f.discriminant):
            if s.cm == pt:
                return s.value
        raise DomainError(f"no singular modulus for {f}")
    if text.startswith("poly:"):
        body, _, near = text[5:].partition("@")
        coeffs = tuple(int(t) for t in body.split(","))
        re_, im_ = (near.split(",") + ["0"])[:2] if near else ("0", "0")
        return AlgebraicNumber.from_poly(coeffs, mpmath.mpc(mpmath.mpf(re_), mpmath.mpf(im_)))
    return AlgebraicNumber.from_rational(Fraction(text))


def _flags(args) -> dict:
    keys = ["config", "precision_bits", "output_dir", "worker_count", "surrogate_constants",
            "delta_max", "n_max", "N_max", "M_max"]
    return {k: getattr(args, k, None) for k in keys}


# --- output -----------------------------------------------------------------------------------

def write_report(cfg: Config, report: dict, out=sys.stdout) -> Path:
    """Write ``report`` under a content-hash name; only the header holds the time."""
    body = json.dumps(report, sort_keys=True, indent=2)
    digest = hashlib.sha256(body.encode()).hexdigest()
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
           else _dt.datetime.now(_dt.timezone.utc))
    doc = {"header": {"created": now.isoformat(timespec="seconds"), "tool": f"singmod {VERSION}",
                      "sha256": digest},
           "report": report}
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"{report.get('kind', 'report')}-{digest[:16]}.json"
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    print(f"report: {path}", file=out)
    return path


def _table(rows, headers, out):
    rows = [[str(c) for c in r] for r in rows]
    widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(headers)]
    print("  ".join(h.ljust(w) for h, w in zip(headers, widths)), file=out)
    for r in rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)), file=out)


def _envelope(kind, parameters, payload, verification=None) -> dict:
    return {"schema_version": 1, "kind": kind, "parameters": parameters,
            "payload": payload, "verification": verification or {}}


# --- commands ---------------------------------------------------------------------------------

def cmd_discriminants(args, cfg, out):
    bound = args.bound or cfg.delta_max
    rows = [(D, class_number(D)) for D in enumerate_discriminants(bound)]
    if args.class_number is not None:
        rows = [r for r in rows if r[1] == args.class_number]
    _table(rows, ["D", "h(D)"], out)
    print(f"{len(rows)} discriminants", file=out)
    if args.json:
        write_report(cfg, _envelope("discriminants", {"bound": bound, "class_number": args.class_number},
                                    {"rows": [[str(D), h] for D, h in rows]}), out)
    return EXIT_OK


def cmd_forms(args, cfg, out):
    forms = reduced_forms(args.D)
    _table([(f.a, f.b, f.c) for f in forms], ["a", "b", "c"], out)
    print(f"h({args.D}) = {len(forms)}", file=out)
    if args.json:
        write_report(cfg, _envelope("forms", {"D": args.D},
                                    {"forms": [[str(x) for x in f] for f in forms]}), out)
    return EXIT_OK


def cmd_class_poly(args, cfg, out):
    res = hilbert_class_poly_detailed(args.D)
    print(f"H_{args.D}(x) = {polyutil.to_string(res.coefficients)}", file=out)
    print(f"degree {len(res.coefficients) - 1}, precision {res.precision} bits, "
          f"rounding residual {float(res.residual):.3g}", file=out)
    if args.json:
        write_report(cfg, _envelope(
            "class_poly", {"D": args.D},
            {"coefficients": [str(c) for c in res.coefficients]},
            {"precision": res.precision, "residual": str(res.residual)}), out)
    return EXIT_OK


def cmd_j_eval(args, cfg, out):
    if bool(args.form) == bool(args.z):
        raise UsageError("j-eval: give exactly one of --form or --z")
    if args.form:
        a, b, c = (int(t) for t in args.form.split(","))
        z = cm_point(QuadForm(a, b, c))
    else:
        with mpmath.workprec(cfg.precision_bits + 64):
            z = mpmath.mpc(*_split_complex(args.z))
    ball = j_eval(z, cfg.precision_bits)
    digits = max(15, int(cfg.precision_bits * 0.30103))
    print(f"j = {mpmath.nstr(ball.center, digits)}", file=out)
    print(f"error <= {mpmath.nstr(ball.radius, 5)}", file=out)
    if args.json:
        write_report(cfg, _envelope(
            "j_eval", {"point": args.form or args.z, "precision_bits": cfg.precision_bits},
            {"re": mpmath.nstr(ball.center.real, digits), "im": mpmath.nstr(ball.center.imag, digits)},
            {"radius": mpmath.nstr(ball.radius, 10)}), out)
    return EXIT_OK


def _split_complex(text: str):
    text = text.replace(" ", "").rstrip("j").rstrip("i")
    for k in range(len(text) - 1, 0, -1):
        if text[k] in "+-" and text[k - 1] not in "eE":
            return mpmath.mpf(text[:k]), mpmath.mpf(text[k:])
    return mpmath.mpf(0), mpmath.mpf(text)


def cmd_moduli(args, cfg, out):
    rows = []
    if args.rational_only:
        for D, v in rational_singular_moduli(cfg.delta_max):
            rows.append((D, 1, str(v), v.value()))
    else:
        for D in enumerate_discriminants(cfg.delta_max):
            for s in singular_moduli(D):
                rows.append((D, s.value.degree, str(s.cm), mpmath.nstr(s.value.center, 12)))
    _table(rows, ["D", "deg", "point/factored", "value"], out)
    if args.json:
        write_report(cfg, _envelope("moduli", {"delta_max": cfg.delta_max,
                                               "rational_only": args.rational_only},
                                    {"rows": [[str(c) for c in r] for r in rows]}), out)
    return EXIT_OK


def cmd_relation(args, cfg, out):
    if args.action == "find":
        vals = [parse_number(v) for v in args.values]
        if all(v.is_rational() for v in vals):
            cert = find_relation_exact([v.to_fraction() for v in vals])
        else:
            bound = args.bound or default_exponent_bound(vals, float(cfg.surrogate_constants.get("c7", 1)))
            cert = find_relation(vals, bound)
        if cert is None:
            print("no relation", file=out)
            return EXIT_OK
        print(f"exponents {list(cert.exponents)} ({cert.mode})", file=out)
        if cert.signed_generator is not None:
            print(f"primitive generator {list(cert.signed_generator)} gives "
                  f"{cert.signed_value}", file=out)
        if args.json:
            write_report(cfg, cert.to_dict(), out)
        return EXIT_FINDINGS
    if args.action == "verify":
        doc = json.loads(Path(args.file).read_text())
        report = doc.get("report", doc)
        ok = verify_document(report)
        print("verified" if ok else "REFUTED", file=out)
        return EXIT_OK if ok else EXIT_FAILED
    raise UsageError("relation: expected find or verify")


def verify_document(report: dict) -> bool:
    """Re-verify a certificate or report produced by this tool."""
    kind = report.get("kind")
    if kind == "relation":
        cert = RelationCertificate.from_dict(report)
        mode, _ = verify_relation(cert.members, cert.exponents)
        return mode != REFUTED
    if kind == "modular_pair":
        return ModularPairCertificate.from_dict(report).verify()
    if kind == "separation":
        gamma = tuple(Fraction(x) for x in report["payload"]["gamma"])
        T = tuple(Fraction(x) for x in report["payload"]["translation"])
        gs = [tuple(Fraction(x) for x in g) for g in report["parameters"]["elements"]]
        per = [trees.exact_j_zero_test(trees.matmul(trees._mat(g), T), gamma) for g in gs]
        return per == report["verification"]["per_index"] and sum(per) == 1
    if kind in ("singular_dependent", "pair_product"):
        for f in report["payload"]["findings"]:
            if not _search.DependentTuple.from_dict(f).verify():
                return False
        return True
    if kind == "modular_pairs":
        return all(ModularPairCertificate.from_dict(f).verify()
                   for f in report["payload"]["findings"])
    if kind == "class_poly":
        D = int(report["parameters"]["D"])
        return [str(c) for c in hilbert_class_poly(D)] == report["payload"]["coefficients"]
    raise DomainError(f"cannot verify documents of kind {kind!r}")


def cmd_modpoly(args, cfg, out):
    if args.N < 1:
        raise DomainError("N must be positive")
    phi = modular_polynomial(args.N, max(args.N, 10))
    if args.action == "build":
        nterms = len(list(phi.terms()))
        print(f"Phi_{args.N}: degree {phi.degree} in each variable, {nterms} nonzero terms, "
              f"symmetric: {phi.is_symmetric()}", file=out)
        if args.full or args.N <= 2:
            print(str(phi), file=out)
        if args.json:
            write_report(cfg, _envelope("modular_polynomial", {"N": args.N},
                                        {"text": phi.to_text()}), out)
        return EXIT_OK
    if args.action == "eval":
        x, y = Fraction(args.x), Fraction(args.y)
        v = phi.evaluate(x, y)
        print(f"Phi_{args.N}({x}, {y}) = {v}", file=out)
        if args.json:
            write_report(cfg, _envelope("modular_polynomial_value",
                                        {"N": args.N, "x": str(x), "y": str(y)},
                                        {"value": str(v)}), out)
        return EXIT_OK
    raise UsageError("modpoly: expected build or eval")


def cmd_isogeny(args, cfg, out):
    x, y = parse_number(args.x), parse_number(args.y)
    N = is_isogenous(x, y, cfg.N_max)
    print(f"least N = {N}" if N else f"not isogenous with N <= {cfg.N_max}", file=out)
    if args.json:
        write_report(cfg, _envelope("isogeny", {"x": args.x, "y": args.y, "N_max": cfg.N_max},
                                    {"N": N}), out)
    return EXIT_FINDINGS if N else EXIT_OK


def cmd_tree(args, cfg, out):
    gs = [trees.parse_matrix(g) for g in args.g]
    if args.action == "distance":
        if len(gs) != 2:
            raise UsageError("tree distance: give --g exactly twice")
        u, v = (trees.local_class(g, args.p) for g in gs)
        d = trees.tree_distance(u, v)
        print(f"{u}\n{v}\ndistance {d}", file=out)
        if args.json:
            write_report(cfg, _envelope("tree_distance",
                                        {"p": args.p, "elements": [[str(x) for x in g] for g in gs]},
                                        {"distance": d}), out)
        return EXIT_OK
    if args.action == "separate":
        w = trees.separate(gs)
        print(f"gamma = {w.gamma}", file=out)
        print(f"translation = {tuple(str(x) for x in w.translation)}", file=out)
        print(f"z = translation . gamma . zeta = {w.z}", file=out)
        _table([(i, args.g[i], w.per_index[i]) for i in range(len(gs))],
               ["i", "g_i", "j(g_i z) = 0"], out)
        if args.json:
            doc = w.to_dict()
            doc["parameters"]["elements"] = [[str(x) for x in g] for g in gs]
            write_report(cfg, doc, out)
        return EXIT_OK
    raise UsageError("tree: expected distance or separate")


def _print_findings(report, out):
    for f in report.findings:
        if isinstance(f, _search.DependentTuple):
            c = f.certificate
            line = f"D = {list(f.discriminants)}  exponents {list(c.exponents)}"
            if c.signed_generator is not None:
                line += f"  (generator {list(c.signed_generator)} gives -1)"
            print(line, file=out)
        else:
            print(f.to_dict()["payload"], f"level {f.level}", file=out)
    print(f"examined {report.examined}, excluded {report.exclusions}, "
          f"findings {len(report.findings)}", file=out)
    for c in report.caveats:
        print(f"note: {c}", file=out)


def cmd_search(args, cfg, out):
    if args.action == "singular-dependent":
        if cfg.n_max > 8:
            raise DomainError("n_max must be at most 8")
        report = _search.singular_dependent_search(cfg.delta_max, cfg.n_max,
                                                   rational_only=args.rational_only,
                                                   budget=args.budget)
    elif args.action == "pair-product":
        report = _search.pair_product_check(cfg.delta_max)
    elif args.action == "modular-pairs":
        report = _search.modular_pairs_report(cfg.M_max, cfg.N_max, budget=args.budget)
    else:
        raise UsageError("search: expected singular-dependent, pair-product or modular-pairs")
    _print_findings(report, out)
    if args.json:
        write_report(cfg, report.to_dict(), out)
    if not report.complete:
        return EXIT_BUDGET
    return EXIT_FINDINGS if report.findings else EXIT_OK


def cmd_complexity(args, cfg, out):
    if args.discriminants:
        Ds = [int(t) for t in args.discriminants.split(",")]
        rep = _search.complexity_of_tuple(Ds)
    elif args.pair:
        x, y = (parse_number(t) for t in args.pair)
        rep = _search.modular_dependent_complexity(x, y, cfg.N_max, args.exponent_max)
        if rep is None:
            print("no modular-dependent witness within the budgets", file=out)
            return EXIT_OK
    else:
        raise UsageError("complexity: give --discriminants or --pair")
    _table(list(rep.components), ["component", "value"], out)
    print(f"delta = {rep.delta}", file=out)
    if args.json:
        write_report(cfg, _envelope("complexity", {}, rep.to_dict()), out)
    return EXIT_OK


COMMANDS = {
    "discriminants": cmd_discriminants,
    "forms": cmd_forms,
    "class-poly": cmd_class_poly,
    "j-eval": cmd_j_eval,
    "moduli": cmd_moduli,
    "relation": cmd_relation,
    "modpoly": cmd_modpoly,
    "isogeny": cmd_isogeny,
    "tree": cmd_tree,
    "search": cmd_search,
    "complexity": cmd_complexity,
}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(err)
            return EXIT_USAGE
        cfg = load_config(_flags(args))
        return COMMANDS[args.command](args, cfg, out)
    except UsageError as e:
        print(str(e), file=err)
        return EXIT_UNKNOWN if e.unknown else EXIT_USAGE
    except BudgetExhaustedError as e:
        print(f"budget exhausted: {e}", file=err)
        return EXIT_BUDGET
    except (DomainError, ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=err)
        return EXIT_USAGE
    except PrecisionError as e:
        print(f"undecided: {e}", file=err)
        return EXIT_FAILED


def main() -> None:
    sys.exit(run())
