"""Command-line interface.

Subcommands:

* ``table MAX_N MAX_D {counts,probabilities}``: grid of matching-pair counts
  or match probabilities for n = 0..MAX_N and d = 1..MAX_D.
* ``prob``: match probability for one pack shape, by any or all counting
  routes, with the exact fraction and decimal renderings.
* ``expect``: expected number of packs until the first match, under the
  pairwise closed form, the exact oracle, or both.
* ``mixture``: match probability when pack sizes follow a distribution file.
* ``simulate``: seeded Monte Carlo estimates with confidence intervals.

Exit codes: 0 success; 2 usage or validation error (bad arguments, malformed
distribution file); 3 precision alarm from the decimal-mode oracle; 4
internal invariant breach (for example the counting routes disagreeing).

Output formats: ``plain`` (human readable), ``csv``, and ``json``. JSON
renders exact rationals as numerator/denominator digit strings so no
precision is lost; repeated runs with the same arguments and seed produce
byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from typing import Any, Callable

from .coincidence import (
    PackSpec,
    coincidence_probability,
    count_closed,
    count_gf,
    count_recursive,
    distinct_pack_count,
)
from .exactmath import decimal_string, significant_string
from .firstmatch import (
    DEFAULT_TOLERANCE,
    PackSizeDistribution,
    endpoint_spectrum,
    exact_pmf_and_expectation,
    mixture_match_probability,
    pairwise_expectation,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PRECISION = 3
EXIT_INTERNAL = 4

DEFAULT_SEED = 0
_REFERENCE_ENDPOINT_LIMIT = 10**6  # skip the oracle reference above this

_ROUTES: dict[str, Callable[[PackSpec], int]] = {
    "closed": count_closed,
    "recursive": count_recursive,
    "gf": count_gf,
}


def _fraction_record(value: Fraction) -> dict[str, str]:
    return {"numerator": str(value.numerator), "denominator": str(value.denominator)}


def _add_output_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format",
        choices=["plain", "csv", "json"],
        default="plain",
        help="output format (default: plain)",
    )
    parser.add_argument(
        "--digits",
        type=int,
        default=4,
        help="decimal digits in rendered probabilities (default: 4)",
    )


def _add_spec_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, required=True, help="items per pack")
    parser.add_argument("--d", type=int, required=True, help="number of colors")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="packmatch",
        description=(
            "Exact match probabilities and first-duplicate statistics for "
            "randomly filled packs."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    table = sub.add_parser(
        "table", help="grid of match counts or probabilities over n and d"
    )
    table.add_argument("max_n", type=int, help="largest pack size (rows 1..max_n)")
    table.add_argument("max_d", type=int, help="largest color count (columns 1..max_d)")
    table.add_argument(
        "which", choices=["counts", "probabilities"], help="what to tabulate"
    )
    _add_output_arguments(table)
    table.set_defaults(handler=_cmd_table)

    prob = sub.add_parser("prob", help="match probability for one pack shape")
    _add_spec_arguments(prob)
    prob.add_argument(
        "--route",
        choices=["closed", "recursive", "gf", "all"],
        default="all",
        help="counting route to use (default: all, cross-checked)",
    )
    _add_output_arguments(prob)
    prob.set_defaults(handler=_cmd_prob)

    expect = sub.add_parser(
        "expect", help="expected packs bought until the first duplicate"
    )
    _add_spec_arguments(expect)
    expect.add_argument(
        "--model",
        choices=["pairwise", "exact", "both"],
        default="both",
        help="pairwise closed form, exact oracle, or both (default: both)",
    )
    expect.add_argument(
        "--tol",
        type=float,
        default=DEFAULT_TOLERANCE,
        help="series truncation tolerance (default: 1e-12)",
    )
    _add_output_arguments(expect)
    expect.set_defaults(handler=_cmd_expect)

    mixture = sub.add_parser(
        "mixture", help="match probability under a pack size distribution"
    )
    mixture.add_argument("file", help="distribution file: 'SIZE WEIGHT' lines")
    mixture.add_argument("--d", type=int, required=True, help="number of colors")
    _add_output_arguments(mixture)
    mixture.set_defaults(handler=_cmd_mixture)

    simulate = sub.add_parser("simulate", help="seeded Monte Carlo estimates")
    simulate.add_argument(
        "kind",
        choices=["pair", "firstmatch"],
        help="pair match rate or first-match times",
    )
    _add_spec_arguments(simulate)
    simulate.add_argument("--trials", type=int, required=True, help="number of trials")
    simulate.add_argument(
        "--seed",
        type=int,
        default=DEFAULT_SEED,
        help=f"RNG seed, recorded in the report (default: {DEFAULT_SEED})",
    )
    _add_output_arguments(simulate)
    simulate.set_defaults(handler=_cmd_simulate)

    return parser


def _cmd_table(args: argparse.Namespace) -> tuple[dict[str, Any], bool]:
    if args.max_n < 1:
        raise ValueError(f"max_n must be positive, got {args.max_n}")
    if args.max_d < 1:
        raise ValueError(f"max_d must be positive, got {args.max_d}")
    if args.max_n > 1000 or args.max_d > 100:
        raise ValueError(
            f"table bounds {args.max_n}x{args.max_d} exceed the resource guard "
            "(max_n <= 1000, max_d <= 100)"
        )
    columns = list(range(1, args.max_d + 1))
    rows = []
    for n in range(1, args.max_n + 1):
        cells = []
        for d in columns:
            spec = PackSpec(n, d)
            if args.which == "counts":
                cells.append(str(count_recursive(spec)))
            else:
                cells.append(decimal_string(coincidence_probability(spec), args.digits))
        rows.append({"n": n, "values": cells})
    record = {
        "command": "table",
        "which": args.which,
        "max_n": args.max_n,
        "max_d": args.max_d,
        "digits": args.digits,
        "columns": columns,
        "rows": rows,
    }
    return record, False


def _cmd_prob(args: argparse.Namespace) -> tuple[dict[str, Any], bool]:
    spec = PackSpec(args.n, args.d)
    names = list(_ROUTES) if args.route == "all" else [args.route]
    counts = {name: _ROUTES[name](spec) for name in names}
    distinct = set(counts.values())
    if len(distinct) != 1:
        raise AssertionError(f"counting routes disagree for {spec}: {counts}")
    count = distinct.pop()
    probability = Fraction(count, spec.d ** (2 * spec.n))
    record = {
        "command": "prob",
        "n": spec.n,
        "d": spec.d,
        "route": args.route,
        "counts": {name: str(value) for name, value in counts.items()},
        "count": str(count),
        "sample_space": str(spec.d ** (2 * spec.n)),
        "probability": _fraction_record(probability),
        "decimal": decimal_string(probability, args.digits),
        "scientific": significant_string(probability, max(args.digits, 1)),
        "digits": args.digits,
    }
    return record, False


def _cmd_expect(args: argparse.Namespace) -> tuple[dict[str, Any], bool]:
    spec = PackSpec(args.n, args.d)
    if args.tol <= 0 or args.tol >= 1:
        raise ValueError(f"tol must lie strictly between 0 and 1, got {args.tol}")
    record: dict[str, Any] = {
        "command": "expect",
        "n": spec.n,
        "d": spec.d,
        "model": args.model,
        "tol": repr(args.tol),
    }
    alarm = False
    pairwise_value = None
    exact_value = None
    if args.model in ("pairwise", "both"):
        pair_probability = coincidence_probability(spec)
        series = pairwise_expectation(pair_probability, tol=args.tol)
        pairwise_value = Fraction(series.value)
        record["pairwise"] = {
            "pair_probability": _fraction_record(pair_probability),
            "expectation": str(series.value),
            "tail_bound": str(series.tail_bound),
            "last_index": series.last_index,
        }
    if args.model in ("exact", "both"):
        spectrum = endpoint_spectrum(spec, max_power=2)
        law = exact_pmf_and_expectation(spectrum, tol=args.tol)
        exact_value = Fraction(law.expectation)
        record["exact"] = {
            "expectation": str(law.expectation),
            "tail_bound": str(law.tail_bound),
            "last_index": law.last_index,
            "mode": law.mode,
            "precision": law.precision,
            "precision_alarm": law.precision_alarm,
            "survival_error": (
                str(law.survival_error) if law.survival_error is not None else None
            ),
        }
        alarm = law.precision_alarm
    if pairwise_value is not None and exact_value is not None and exact_value > 0:
        relative = abs(pairwise_value - exact_value) / exact_value
        record["relative_difference"] = significant_string(relative, 4)
    return record, alarm


def _cmd_mixture(args: argparse.Namespace) -> tuple[dict[str, Any], bool]:
    if args.d < 1:
        raise ValueError(f"color count must be positive, got {args.d}")
    distribution = PackSizeDistribution.from_file(args.file)
    probability = mixture_match_probability(distribution, args.d)
    record = {
        "command": "mixture",
        "d": args.d,
        "file": args.file,
        "sizes": [
            {"n": size, "weight": _fraction_record(weight)}
            for size, weight in distribution.weights
        ],
        "probability": _fraction_record(probability),
        "decimal": decimal_string(probability, args.digits),
        "scientific": significant_string(probability, max(args.digits, 1)),
        "digits": args.digits,
    }
    return record, False


def _cmd_simulate(args: argparse.Namespace) -> tuple[dict[str, Any], bool]:
    # numpy import deferred so the exact subcommands start fast.
    from . import montecarlo

    spec = PackSpec(args.n, args.d)
    record: dict[str, Any] = {
        "command": "simulate",
        "kind": args.kind,
        "n": spec.n,
        "d": spec.d,
        "trials": args.trials,
        "seed": args.seed,
    }
    if args.kind == "pair":
        reference = float(coincidence_probability(spec))
        report = montecarlo.pair_match_rate(
            spec, args.trials, args.seed, analytic_reference=reference
        )
        record.update(
            {
                "algorithm": report.algorithm,
                "matches": report.matches,
                "estimate": report.estimate,
                "ci_low": report.ci_low,
                "ci_high": report.ci_high,
                "analytic_reference": report.analytic_reference,
            }
        )
    else:
        reference = None
        if distinct_pack_count(spec) <= _REFERENCE_ENDPOINT_LIMIT:
            law = exact_pmf_and_expectation(
                endpoint_spectrum(spec, max_power=2), tol=1e-9
            )
            reference = float(law.expectation)
        report = montecarlo.first_match_experiment(
            spec, args.trials, args.seed, analytic_reference=reference
        )
        record.update(
            {
                "algorithm": report.algorithm,
                "mean": report.mean,
                "std_error": report.std_error,
                "ci_low": report.ci_low,
                "ci_high": report.ci_high,
                "histogram": {str(k): v for k, v in report.histogram.items()},
                "analytic_reference": report.analytic_reference,
            }
        )
    return record, False


def _render_table_plain(record: dict[str, Any]) -> str:
    header = ["n\\d"] + [str(c) for c in record["columns"]]
    body = [[str(row["n"])] + list(row["values"]) for row in record["rows"]]
    widths = [
        max(len(line[i]) for line in [header] + body) for i in range(len(header))
    ]
    lines = []
    for line in [header] + body:
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(line, widths)))
    return "\n".join(lines)


def _flatten(value: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(value, dict):
        items: list[tuple[str, Any]] = []
        for key, sub in value.items():
            path = f"{prefix}.{key}" if prefix else str(key)
            items.extend(_flatten(sub, path))
        return items
    if isinstance(value, list):
        items = []
        for index, sub in enumerate(value):
            items.extend(_flatten(sub, f"{prefix}.{index}"))
        return items
    return [(prefix, value)]


def _render_plain(record: dict[str, Any]) -> str:
    if record.get("command") == "table":
        meta = (
            f"table of {record['which']} for n=1..{record['max_n']}, "
            f"d=1..{record['max_d']}"
        )
        return meta + "\n" + _render_table_plain(record)
    lines = []
    for key, value in _flatten(record):
        lines.append(f"{key}: {value}")
    return "\n".join(lines)


def _render_csv(record: dict[str, Any]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if record.get("command") == "table":
        writer.writerow(["n"] + [str(c) for c in record["columns"]])
        for row in record["rows"]:
            writer.writerow([str(row["n"])] + list(row["values"]))
    else:
        writer.writerow(["key", "value"])
        for key, value in _flatten(record):
            writer.writerow([key, "" if value is None else str(value)])
    return buffer.getvalue().rstrip("\n")


def _render(record: dict[str, Any], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(record, indent=2)
    if fmt == "csv":
        return _render_csv(record)
    return _render_plain(record)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        record, alarm = args.handler(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as exc:
        print(f"internal check failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    print(_render(record, args.format))
    if alarm:
        print(
            "precision alarm: decimal-mode error bounds exceeded the threshold; "
            "rerun with higher precision",
            file=sys.stderr,
        )
        return EXIT_PRECISION
    return EXIT_OK


def entrypoint() -> None:
    sys.exit(main())
