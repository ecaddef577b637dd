"""Command-line entry point: ``pattern-retention {mine,perturb,evaluate,experiment,correlate}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .cart import MinerParams, mine_patterns
from .errors import DataError, InvariantViolation
from .harness import (
    ExperimentConfig,
    ExperimentError,
    ResultTable,
    correlation_matrix,
    delta_normalize,
    parse_grid,
    run_experiment,
    write_correlations,
)
from .measures import PLD_MIN_SUPPORT, evaluate
from .noise import NoiseSpec, PerturbAudit, perturb
from .patterns import parse_patterns, serialize_patterns
from .tabular import dump_dataset, infer_schema, load_dataset, load_schema

log = logging.getLogger("pattern_retention")

EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _schema(args, data_path):
    if args.schema:
        return load_schema(args.schema)
    if not args.class_attr:
        raise DataError("give --schema, or --class for schema inference")
    return infer_schema(data_path, args.class_attr)


def _add_schema_args(p):
    p.add_argument("--schema", help="schema sidecar JSON")
    p.add_argument("--class", dest="class_attr",
                   help="class attribute name (infers the schema when --schema is absent)")


def cmd_mine(args):
    data = load_dataset(args.data, _schema(args, args.data))
    zs = mine_patterns(data, MinerParams(args.min_leaf_frac, args.max_depth))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(serialize_patterns(zs))
    log.info("mined %d patterns from %d records", len(zs), len(data))


def cmd_perturb(args):
    data = load_dataset(args.data, _schema(args, args.data))
    audit = PerturbAudit()
    m = perturb(data, NoiseSpec(args.noise, args.p, args.seed), workers=args.workers, audit=audit)
    dump_dataset(m, args.out)
    print(f"{audit.cells_changed} / {audit.cells_total}", file=sys.stderr)


def cmd_evaluate(args):
    schema = _schema(args, args.original)
    d = load_dataset(args.original, schema)
    m = load_dataset(args.modified, schema)
    with open(args.patterns, encoding="utf-8") as fh:
        zs = parse_patterns(fh.read())
    t = load_dataset(args.test, schema) if args.test else None
    report = evaluate(zs, d, m, t, args.positive_label, args.min_support)
    doc = report.to_json()
    doc["metadata"].update({"tool_version": __version__, "patterns": args.patterns,
                            "schema_fingerprint": schema.fingerprint()})
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_experiment(args):
    config = ExperimentConfig(
        data_path=args.data, schema_path=args.schema,
        noise_kinds=tuple(k.strip() for k in args.noise.split(",")),
        p_grid=parse_grid(args.p_grid), folds=args.folds, repeats=args.repeats,
        master_seed=args.seed, miner=MinerParams(args.min_leaf_frac, args.max_depth),
        positive_label=args.positive_label, workers=args.workers)
    data = load_dataset(args.data, _schema(args, args.data))
    table = run_experiment(config, data)
    table.write(args.out)
    log.info("wrote %d rows to %s", len(table.rows), args.out)


def cmd_correlate(args):
    table = ResultTable.read(args.results)
    if not args.raw:
        table = delta_normalize(table)
    kinds = sorted({r[0] for r in table.rows})
    measures = args.measures.split(",") if args.measures else None
    mats = [correlation_matrix(table, k, measures, by_p=not args.per_cell) for k in kinds]
    write_correlations(mats, args.out or sys.stdout)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pattern-retention", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mine", help="mine a partition pattern set with CART")
    p.add_argument("--data", required=True)
    _add_schema_args(p)
    p.add_argument("--min-leaf-frac", type=float, default=0.02)
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("perturb", help="add UN or GN noise to a dataset")
    p.add_argument("--data", required=True)
    _add_schema_args(p)
    p.add_argument("--noise", type=str.upper, choices=["UN", "GN"], required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("evaluate", help="score a modified dataset against a pattern set")
    p.add_argument("--original", required=True)
    p.add_argument("--modified", required=True)
    p.add_argument("--patterns", required=True)
    _add_schema_args(p)
    p.add_argument("--test")
    p.add_argument("--positive-label")
    p.add_argument("--min-support", type=int, default=PLD_MIN_SUPPORT)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="run the noise sweep with repeated CV")
    p.add_argument("--data", required=True)
    _add_schema_args(p)
    p.add_argument("--noise", default="un,gn")
    p.add_argument("--p-grid", default="0:0.30:0.02")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--min-leaf-frac", type=float, default=0.02)
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--positive-label")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("correlate", help="Pearson correlation matrices from a results file")
    p.add_argument("--results", required=True)
    p.add_argument("--measures", help="comma-separated measure names")
    p.add_argument("--per-cell", action="store_true",
                   help="correlate individual (p, repeat, fold) cells instead of per-p means")
    p.add_argument("--raw", action="store_true", help="skip zero-noise delta normalization")
    p.add_argument("--out")
    p.set_defaults(func=cmd_correlate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except InvariantViolation as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (DataError, ExperimentError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
