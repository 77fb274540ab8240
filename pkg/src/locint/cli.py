"""Command-line front end: invariants, intersection reports, density/series
evaluation, building geometry reports, and batch grid verification.

Report schema (json): {input, invariants, values, agreement, provenance}.
Integers and rationals are emitted as exact decimal strings ("12", "-160/81")
so that parsing and re-emitting a report is byte-identical; key order is
canonical (sorted) and no floats ever appear.

Exit codes: 0 success; 1 usage or input errors; 2 inadmissible input;
3 budget exhausted; 4 consistency violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import building as bld
from . import density as dens
from . import intersect as isc
from . import quadform as qf
from . import siegel as sg
from .errors import (BudgetExceeded, ConsistencyViolation, Inadmissible,
                     LocintError, NoStabilization, SearchExhausted,
                     SingularMatrix)
from .padic import chi_int, default_precision

EXIT_USAGE = 1
EXIT_INADMISSIBLE = 2
EXIT_BUDGET = 3
EXIT_CONSISTENCY = 4


@dataclass
class RunConfig:
    prime: int
    matrix: "qf.SymMatrix3" = None
    r: int = 0
    oracle: bool = False
    max_a: int = 5
    radius: int = None
    precision: int = None
    budget: int = dens.DEFAULT_BUDGET
    seed: int = None
    fmt: str = "json"
    global_multiplier: int = None
    input_text: str = ""


# ---------------------------------------------------------------- serialization
def _num(x) -> str:
    """Exact decimal-string form of an integer or rational."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, int):
        return str(x)
    f = Fraction(x)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def render_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _flatten(prefix: str, obj, out: dict):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    elif isinstance(obj, (list, tuple)):
        out[prefix] = ";".join(str(v) for v in obj)
    else:
        out[prefix] = obj


def render_csv(rows) -> str:
    flat_rows = []
    keys = []
    for row in rows:
        flat = {}
        _flatten("", row, flat)
        for k in flat:
            if k not in keys:
                keys.append(k)
        flat_rows.append(flat)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for flat in flat_rows:
        w.writerow(flat)
    return buf.getvalue()


def _render_text(obj, indent: int = 0) -> list:
    lines = []
    pad = "  " * indent
    if isinstance(obj, dict):
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}{k}:")
                lines.extend(_render_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)):
                lines.extend(_render_text(v, indent + 1))
                lines.append(pad + "-")
            else:
                lines.append(f"{pad}- {v}")
    else:
        lines.append(f"{pad}{obj}")
    return lines


def render(report, fmt: str, rows=None) -> str:
    if fmt == "json":
        return render_json(report)
    if fmt == "csv":
        return render_csv(rows if rows is not None else [report])
    return "\n".join(_render_text(report)) + "\n"


# ---------------------------------------------------------------- input parsing
def _parse_entries(text: str, p: int):
    """Comma-separated rationals; denominators must be prime to p and are
    cleared by a global unit scaling (which changes no invariant)."""
    entries = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            entries.append(Fraction(tok))
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"bad matrix entry {tok!r}: {e}") from None
    lcm = 1
    for x in entries:
        if x.denominator % p == 0:
            raise ValueError(f"entry {x} has a denominator divisible by p={p}")
        lcm = lcm * x.denominator // _gcd(lcm, x.denominator)
    return [int(x * lcm) for x in entries], lcm


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def matrix_from_args(cfg_p: int, diag: str, matrix: str):
    if (diag is None) == (matrix is None):
        raise ValueError("exactly one of --diag or --matrix is required")
    if diag is not None:
        ents, _ = _parse_entries(diag, cfg_p)
        if len(ents) != 3:
            raise ValueError("--diag needs exactly 3 entries")
        return qf.SymMatrix3.diag(*ents, prime=cfg_p), f"diag({diag})"
    ents, _ = _parse_entries(matrix, cfg_p)
    if len(ents) != 9:
        raise ValueError("--matrix needs exactly 9 row-major entries")
    rows = tuple(tuple(ents[3 * i + j] for j in range(3)) for i in range(3))
    return qf.SymMatrix3(rows, cfg_p), f"matrix({matrix})"


def _provenance(cfg: RunConfig, *, precision: int, radius=None) -> dict:
    return {
        "p": _num(cfg.prime),
        "precision": _num(precision),
        "ball_radius": _num(radius) if radius is not None else None,
        "seed": _num(cfg.seed) if cfg.seed is not None else None,
        "budget": _num(cfg.budget),
    }


def _invariants_block(inv: "qf.TInvariants") -> dict:
    return {
        "exponents": [_num(a) for a in inv.exponents],
        "unit_classes": [_num(c) for c in inv.classes],
        "sigma": _num(inv.sigma),
        "xi_tilde": _num(inv.xi_tilde),
        "eta": _num(inv.eta),
        "eps_sign": _num(inv.eps_sign),
        "admissible": inv.admissible,
    }


# ---------------------------------------------------------------- subcommands
def cmd_invariants(cfg: RunConfig):
    inv = qf.invariants_of_matrix(cfg.matrix)
    prec = cfg.precision or default_precision(max(inv.exponents))
    report = {
        "input": cfg.input_text,
        "invariants": _invariants_block(inv),
        "provenance": _provenance(cfg, precision=prec),
    }
    return report, [report], 0


def cmd_intersect(cfg: RunConfig):
    inv = qf.invariants_of_matrix(cfg.matrix)
    prec = cfg.precision or default_precision(max(inv.exponents))
    with_comb = cfg.radius is not None
    ball = bld.TreeBall(cfg.prime, cfg.radius) if with_comb else None
    rep = isc.full_intersection(
        inv, with_combinatorial=with_comb, ball=ball, seed=cfg.seed,
        global_multiplier=cfg.global_multiplier, strict=False)
    values = {
        "closed": _num(rep.value_closed),
        "density": _num(rep.value_density),
        "case_table": _num(rep.value_case_table),
        "combinatorial": _num(rep.value_combinatorial)
        if rep.value_combinatorial is not None else None,
    }
    if rep.value_scaled is not None:
        values["scaled"] = _num(rep.value_scaled)
        values["global_multiplier"] = _num(rep.global_multiplier)
    report = {
        "input": cfg.input_text,
        "invariants": _invariants_block(inv),
        "values": values,
        "agreement": rep.agreement,
        "notes": list(rep.notes),
        "provenance": _provenance(cfg, precision=prec,
                                  radius=cfg.radius if with_comb else None),
    }
    return report, [report], 0 if rep.agreement else EXIT_CONSISTENCY


def cmd_density(cfg: RunConfig):
    inv = qf.invariants_of_matrix(cfg.matrix)
    prec = cfg.precision or default_precision(max(inv.exponents))
    F = sg.ftilde(inv)
    A = sg.a_series(inv)
    p = cfg.prime
    r = cfg.r
    at_r = A(Fraction(1, p**r))
    report = {
        "input": cfg.input_text,
        "invariants": _invariants_block(inv),
        "values": {
            "ftilde_coefficients": [_num(c) for c in F.coefficients],
            "a_series_coefficients": [_num(c) for c in A.coefficients],
            "alpha_prime": _num(sg.alpha_prime(inv)),
            "a_at_p^-r": _num(at_r),
            "r": _num(r),
            "closed": _num(sg.closed_intersection(inv)) if inv.admissible else None,
        },
        "agreement": True,
        "provenance": _provenance(cfg, precision=prec),
    }
    code = 0
    if cfg.oracle:
        S = dens.extend_S_r(dens.ambient_form(p), r)
        U = dens.GramMatrix(tuple(tuple(x for x in row) for row in cfg.matrix.entries), p)
        res = dens.stabilized_density(S, U, budget=cfg.budget)
        agree = res.normalized == at_r
        report["values"]["oracle_density"] = _num(res.normalized)
        report["values"]["oracle_level"] = _num(res.t)
        report["values"]["oracle_rule"] = res.rule
        report["agreement"] = agree
        if not agree:
            code = EXIT_CONSISTENCY
    return report, [report], code


def _divisor_table(div: "bld.FiberDivisor") -> dict:
    hist = {}
    for m in div.lines.values():
        hist[m] = hist.get(m, 0) + 1
    return {
        "line_count": _num(len(div.lines)),
        "multiplicity_histogram": {_num(k): _num(v) for k, v in sorted(hist.items())},
        "s_part_multiplicity": _num(div.s_part_multiplicity),
        "s_attach": [" ".join(map(str, K)) for K in div.s_attach] if div.s_attach else None,
    }


def cmd_building(cfg: RunConfig):
    inv = qf.invariants_of_matrix(cfg.matrix)
    if not inv.admissible:
        raise Inadmissible(f"exponents {inv.exponents} carry sign +1")
    p = cfg.prime
    radius = cfg.radius or max(2, (max(inv.exponents) + 4) // 2)
    targets = tuple((a, chi_int(c, p)) for a, c in zip(inv.exponents, inv.classes))
    js = bld.sample_orthogonal_triple(p, targets, seed=cfg.seed)
    ball = bld.TreeBall(p, radius)
    slots = []
    for j in js:
        loc = bld.fixed_locus(j, ball)
        slots.append({
            "coords": [_num(x) for x in j.coords],
            "exponent": _num(j.exponent),
            "unit_class": _num(chi_int(j.unit, p)),
            "fixed_locus": loc.kind,
            "special_fiber": _divisor_table(bld.special_fiber_divisor(j, ball)),
            "difference_fiber": _divisor_table(bld.difference_fiber_divisor(j, ball)),
        })
    pairs = {}
    for i in range(3):
        for l in range(i + 1, 3):
            a_i, a_l = js[i].exponent, js[l].exponent
            if a_i % 2 == 0 and a_l % 2 == 0:
                pairs[f"{i}{l}"] = "unclassified-even-pair"
            else:
                pairs[f"{i}{l}"] = bld.classify_pair_geometry(js[i], js[l], ball)
    comb = isc.triple_combinatorial(*js, ball)
    closed = sg.closed_intersection(inv)
    agree = comb == closed
    report = {
        "input": cfg.input_text,
        "invariants": _invariants_block(inv),
        "slots": slots,
        "pair_geometry": pairs,
        "values": {"combinatorial": _num(comb), "closed": _num(closed)},
        "agreement": agree,
        "provenance": _provenance(cfg, precision=bld.PRECISION, radius=radius),
    }
    return report, [report], 0 if agree else EXIT_CONSISTENCY


def cmd_verify(cfg: RunConfig):
    p = cfg.prime
    rows = []
    failures = 0
    for inv in qf.admissible_grid(p, cfg.max_a):
        closed = sg.closed_intersection(inv)
        density = sg.density_intersection(inv)
        cases = isc.case_table_intersection(p, inv.exponents, inv.classes)
        ok = closed == density == cases
        failures += 0 if ok else 1
        rows.append({
            "p": _num(p),
            "exponents": [_num(a) for a in inv.exponents],
            "unit_classes": [_num(c) for c in inv.classes],
            "values": {
                "closed": _num(closed),
                "density": _num(density),
                "case_table": _num(cases),
            },
            "agreement": ok,
        })
    rows.sort(key=lambda r: (r["exponents"], r["unit_classes"]))
    report = {
        "input": f"grid p={p} max_a={cfg.max_a}",
        "tuples": rows,
        "total": _num(len(rows)),
        "failures": _num(failures),
        "agreement": failures == 0,
        "provenance": _provenance(cfg, precision=default_precision(cfg.max_a)),
    }
    return report, rows, 0 if failures == 0 else EXIT_CONSISTENCY


# ---------------------------------------------------------------- entry point
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-p", type=int, required=True, help="odd prime")
    common.add_argument("--diag", help="three diagonal entries, comma-separated")
    common.add_argument("--matrix", help="nine row-major entries, comma-separated")
    common.add_argument("--r", type=int, default=0, help="series evaluation index")
    common.add_argument("--oracle", action="store_true",
                        help="run the brute-force density oracle")
    common.add_argument("--max-a", type=int, default=5, dest="max_a",
                        help="grid bound on the largest exponent")
    common.add_argument("--radius", type=int, help="tree ball radius")
    common.add_argument("--precision", type=int, help="p-adic working precision")
    common.add_argument("--budget", type=int, default=dens.DEFAULT_BUDGET,
                        help="operation budget for brute-force counting")
    common.add_argument("--seed", type=int, help="sampling seed")
    common.add_argument("--format", choices=("json", "csv", "text"),
                        default="json", dest="fmt")
    common.add_argument("--global-multiplier", type=int, default=None,
                        dest="global_multiplier",
                        help="labeled external factor applied to the result")
    parser = _Parser(prog="locint",
                     description="local intersection numbers of special-cycle "
                                 "triples: invariants, closed/density/"
                                 "case-table/tree routes, and grid checks")
    sub = parser.add_subparsers(dest="command", required=True)
    needs_matrix = {"invariants": cmd_invariants, "intersect": cmd_intersect,
                    "density": cmd_density, "building": cmd_building}
    for name, fn in needs_matrix.items():
        sp = sub.add_parser(name, parents=[common])
        sp.set_defaults(fn=fn, needs_matrix=True)
    sp = sub.add_parser("verify", parents=[common])
    sp.set_defaults(fn=cmd_verify, needs_matrix=False)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    cfg = RunConfig(prime=args.p, r=args.r, oracle=args.oracle,
                    max_a=args.max_a, radius=args.radius,
                    precision=args.precision, budget=args.budget,
                    seed=args.seed, fmt=args.fmt,
                    global_multiplier=args.global_multiplier)
    try:
        if args.p < 3 or args.p % 2 == 0:
            raise ValueError(f"p must be an odd prime, got {args.p}")
        if args.needs_matrix:
            cfg.matrix, cfg.input_text = matrix_from_args(
                args.p, args.diag, args.matrix)
        report, rows, code = args.fn(cfg)
    except Inadmissible as e:
        print(f"inadmissible: {e}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except (BudgetExceeded, NoStabilization) as e:
        print(f"budget: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except ConsistencyViolation as e:
        print(f"consistency: {e}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except (ValueError, SingularMatrix, SearchExhausted, LocintError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(render(report, cfg.fmt, rows))
    return code


if __name__ == "__main__":
    sys.exit(main())
