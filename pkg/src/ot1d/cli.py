"""Command-line interface: ``ot1d solve`` and ``ot1d bench``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path

from .bench import INSTANCE_KINDS, BenchConfig, run_bench
from .cost import CostSpec
from .decomposition import solve_detailed
from .model import Problem, ValidationError, canonicalize
from .oracle import OracleSizeError, expand_to_unitary, oracle_unitary

EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_ORACLE_GUARD = 4
EXIT_ORACLE_MISMATCH = 5


class ParseError(ValueError):
    pass


def _pairs(records, side: str) -> list[tuple[float, float]]:
    if not isinstance(records, list):
        raise ParseError(f"{side} must be a list")
    out = []
    for rec in records:
        if not (isinstance(rec, (list, tuple)) and len(rec) == 2):
            raise ParseError(f"bad {side} record {rec!r}; expected [position, mass]")
        try:
            out.append((float(rec[0]), float(rec[1])))
        except (TypeError, ValueError):
            raise ParseError(f"non-numeric {side} record {rec!r}") from None
    return out


def parse_problem_text(text: str) -> Problem:
    """Parse a JSON document or the ``s <pos> <mass>`` / ``d <pos> <mass>`` line format.

    Returns the raw problem (input order preserved); see :func:`parse_problem`.
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from None
        if not isinstance(doc, dict) or "supplies" not in doc or "demands" not in doc:
            raise ParseError("JSON input needs 'supplies' and 'demands'")
        return Problem(tuple(_pairs(doc["supplies"], "supplies")),
                       tuple(_pairs(doc["demands"], "demands")))
    sup, dem = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in ("s", "d"):
            raise ParseError(f"line {lineno}: expected 's <pos> <mass>' or 'd <pos> <mass>'")
        try:
            rec = (float(parts[1]), float(parts[2]))
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric value") from None
        (sup if parts[0] == "s" else dem).append(rec)
    return Problem(tuple(sup), tuple(dem))


def parse_problem(source: str | Path) -> Problem:
    """Read a problem file (or literal text) and canonicalize it."""
    path = Path(source) if not isinstance(source, Path) else source
    try:
        text = path.read_text() if path.exists() else str(source)
    except OSError:
        text = str(source)
    return canonicalize(parse_problem_text(text))


def _denominator(problem: Problem, limit: int = 64) -> int | None:
    """Smallest denominator making every mass an integer, if it is small."""
    den = 1
    for _, m in problem.supplies + problem.demands:
        frac = Fraction(m).limit_denominator(limit)
        if abs(float(frac) - m) > 1e-12:
            return None
        den = den * frac.denominator // math.gcd(den, frac.denominator)
    return den


def run_solve(args) -> int:
    try:
        cost = CostSpec.parse(args.cost)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        text = Path(args.input).read_text()
    except OSError as exc:
        print(f"error: cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        raw = parse_problem_text(text)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    sol = solve_detailed(raw, cost)
    doc = {
        "plan": [[i, j, m] for i, j, m in sol.plan.entries],
        "total_cost": sol.plan.total_cost,
        "stats": sol.stats.as_dict(),
        "orientation_swapped": sol.decomposition.problem.orientation_swapped,
        "diagnostics": sol.diagnostics(),
    }

    code = 0
    if args.check_oracle:
        den = args.oracle_denominator or _denominator(raw)
        if den is None:
            print("oracle: masses are not small rationals; pass --oracle-denominator",
                  file=sys.stderr)
            return EXIT_ORACLE_GUARD
        try:
            ref = oracle_unitary(expand_to_unitary(raw, den), cost)
        except OracleSizeError as exc:
            print(f"oracle: {exc}", file=sys.stderr)
            return EXIT_ORACLE_GUARD
        except ValueError as exc:
            print(f"oracle: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        want = ref.min_cost / den
        got = sol.plan.total_cost
        agree = want == got or abs(got - want) <= 1e-9 * max(abs(want), 1e-300)
        doc["oracle"] = {"min_cost": want, "denominator": den, "agree": agree}
        if not agree:
            code = EXIT_ORACLE_MISMATCH

    text_out = json.dumps(doc, indent=2)
    if args.output:
        Path(args.output).write_text(text_out + "\n")
    else:
        print(text_out)
    if args.stats:
        d = doc["diagnostics"]
        print(f"additions={sol.stats.additions} cost_evaluations={sol.stats.cost_evaluations} "
              f"strata={d['strata']} chains={d['chains']}", file=sys.stderr)
    if code == EXIT_ORACLE_MISMATCH:
        print(f"oracle mismatch: solver {doc['total_cost']} vs oracle {doc['oracle']['min_cost']}",
              file=sys.stderr)
    return code


def _sizes(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None


def run_bench_cmd(args) -> int:
    try:
        config = BenchConfig(args.sizes, args.reps, CostSpec.parse(args.cost), args.seed,
                             Path(args.csv) if args.csv else None, args.instance)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        result = run_bench(config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for row in result.rows:
        print(f"N={row.N:5d}  mean additions={row.mean_additions:12.1f}  "
              f"mean cost evaluations={row.mean_cost_evals:10.1f}")
    print(f"slope additions: {result.additions_slope:.3f}")
    print(f"slope cost evaluations: {result.evals_slope:.3f}")
    violations = result.bound_violations()
    if violations:
        print(f"{len(violations)} runs exceed the operation-count bounds; first: {violations[0]}",
              file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ot1d",
                                     description="1D optimal transport with concave costs")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one problem file")
    s.add_argument("--input", required=True)
    s.add_argument("--cost", required=True, help="power:<alpha> or log")
    s.add_argument("--output")
    s.add_argument("--check-oracle", action="store_true",
                   help="compare with exhaustive enumeration on unit atoms")
    s.add_argument("--oracle-denominator", type=int,
                   help="split masses into atoms of size 1/K")
    s.add_argument("--stats", action="store_true", help="print counters to stderr")
    s.set_defaults(func=run_solve)

    b = sub.add_parser("bench", help="operation counts on random instances")
    b.add_argument("--sizes", type=_sizes, default=[100, 200, 300, 400, 500])
    b.add_argument("--reps", type=int, default=100)
    b.add_argument("--cost", default="power:0.5")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--csv")
    b.add_argument("--instance", choices=INSTANCE_KINDS, default="chain")
    b.set_defaults(func=run_bench_cmd)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
