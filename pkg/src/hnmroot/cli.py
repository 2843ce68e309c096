"""Command-line tools for error-term recovery and root-cause attribution on CSV data.

Exit status is 0 on success, 2 for unusable input and 3 when the data are
degenerate (a constant column, a single-class label).
"""

import argparse
import json
import sys

import numpy as np

from . import benchmark
from .graph import Skeleton, skeleton_stable
from .io import InputError, read_table
from .ordering import extract_errors
from .shapley import BoostConfig, fit_logodds, root_causes, tree_shap

EXIT_INPUT = 2
EXIT_DEGENERATE = 3
MIN_ROWS = 100


class Degenerate(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _unit_interval(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("must lie strictly between 0 and 1")
    return v


def _common(p):
    p.add_argument("--alpha", type=_unit_interval, default=0.1,
                   help="CI test significance level (default 0.1)")
    p.add_argument("--k", type=_positive_int, default=10, help="MI neighbours (default 10)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-cond", type=int, default=3, dest="max_cond",
                   help="largest conditioning set in skeleton search")
    p.add_argument("--out", help="write CSV here instead of stdout")


def build_parser():
    parser = argparse.ArgumentParser(prog="hnmroot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("direction", help="orient a single cause-effect pair")
    p.add_argument("input", help="CSV with a header and two numeric columns")
    _common(p)
    p.add_argument("--json", action="store_true", help="print a JSON record")

    p = sub.add_parser("extract-errors", help="recover error terms and a removal order")
    p.add_argument("input")
    _common(p)

    p = sub.add_parser("root-causes", help="per-row Shapley attributions of a binary label")
    p.add_argument("input", help="CSV with feature columns and a binary column D")
    _common(p)
    p.add_argument("--holdout", type=_unit_interval,
                   help="fraction of rows held out as the test set (default: fit and attribute on all)")
    p.add_argument("--rounds", type=_positive_int, default=100)
    p.add_argument("--depth", type=_positive_int, default=3)
    p.add_argument("--learning-rate", type=float, default=0.1, dest="learning_rate")
    p.add_argument("--json", action="store_true", help="print the ranked report as JSON")

    p = sub.add_parser("benchmark", help="run a seeded simulation suite")
    p.add_argument("--suite", choices=("pairs", "rootcause", "pnl"), default="rootcause")
    p.add_argument("--reps", type=_positive_int, default=1)
    p.add_argument("--p", type=_positive_int, default=10)
    p.add_argument("--n", type=_positive_int)
    _common(p)
    return parser


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _numeric_input(path, min_cols):
    table = read_table(path, min_rows=MIN_ROWS, min_cols=min_cols)
    const = [n for n, col in zip(table.names, table.values.T) if np.ptp(col) == 0]
    if const:
        raise Degenerate(f"constant column(s): {', '.join(const)}")
    return table


def cmd_direction(args):
    table = _numeric_input(args.input, 2)
    if len(table.names) != 2:
        raise InputError(f"expected exactly 2 columns, got {len(table.names)}")
    res = extract_errors(table.values, Skeleton.complete(2), rng=args.seed, k=args.k)
    first = res.step_scores[0]
    forward = res.order[0] == 1
    direction = "X->Y" if forward else "Y->X"
    gap = abs(first[0] - first[1])
    if args.json:
        record = {
            "direction": direction,
            "cause": table.names[0] if forward else table.names[1],
            "effect": table.names[1] if forward else table.names[0],
            "score_x": first[0],
            "score_y": first[1],
            "score_gap": gap,
            "seed": args.seed,
        }
        sys.stdout.write(json.dumps(record, sort_keys=True) + "\n")
    else:
        sys.stdout.write(f"{direction}\n")
        sys.stdout.write(f"# residual dependence gap {gap:.4g} nats "
                         f"(smaller score marks the effect)\n")
    return 0


def _extract(table, args):
    skel = skeleton_stable(table.values, alpha=args.alpha, max_cond=args.max_cond,
                           rng=args.seed, k=args.k)
    return extract_errors(table.values, skel, rng=args.seed, k=args.k)


def cmd_extract_errors(args):
    table = _numeric_input(args.input, 2)
    _emit(_extract(table, args).to_csv(table.names), args.out)
    return 0


def cmd_root_causes(args):
    table = read_table(args.input, min_rows=MIN_ROWS, min_cols=3)
    d = table.column("D")
    if not np.isin(d, (0.0, 1.0)).all():
        raise InputError("column D must be 0/1")
    if np.unique(d).size < 2:
        raise Degenerate("column D has a single class")
    features = table.without("D")
    const = [n for n, col in zip(features.names, features.values.T) if np.ptp(col) == 0]
    if const:
        raise Degenerate(f"constant column(s): {', '.join(const)}")
    E = _extract(features, args).errors
    n = E.shape[0]
    if args.holdout:
        perm = np.random.default_rng([args.seed, 0x484F]).permutation(n)
        n_test = max(1, int(round(args.holdout * n)))
        test, train = np.sort(perm[:n_test]), np.sort(perm[n_test:])
        if np.unique(d[train]).size < 2:
            raise Degenerate("training split has a single class")
    else:
        test = train = np.arange(n)
    config = BoostConfig(rounds=args.rounds, max_depth=args.depth, learning_rate=args.learning_rate)
    model = fit_logodds(E[train], d[train].astype(int), config)
    S = tree_shap(model, E[test])
    report = root_causes(S)
    names = features.names
    lines = ["row," + ",".join(f"S.{c}" for c in names) + ",root_causes"]
    for r, row, causes in zip(test, S.values, report):
        ranked = ";".join(names[i] for i, _ in causes)
        lines.append(f"{r}," + ",".join(repr(float(v)) for v in row) + f",{ranked}")
    if args.out or not args.json:
        _emit("\n".join(lines) + "\n", args.out)
    if args.json:
        record = {
            "base": S.base,
            "rows": [{"row": int(r), "root_causes": [[names[i], v] for i, v in c]}
                     for r, c in zip(test, report)],
        }
        sys.stdout.write(json.dumps(record, sort_keys=True) + "\n")
    elif args.out:
        sys.stdout.write(f"# {len(test)} rows attributed, base log-odds {S.base:.6g}\n")
    return 0


def cmd_benchmark(args):
    rows = benchmark.run_suite(args.suite, args.reps, p=args.p, n=args.n, seed=args.seed,
                               alpha=args.alpha, max_cond=args.max_cond, k=args.k)
    _emit(benchmark.rows_to_csv(rows), args.out)
    return 0


COMMANDS = {
    "direction": cmd_direction,
    "extract-errors": cmd_extract_errors,
    "root-causes": cmd_root_causes,
    "benchmark": cmd_benchmark,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"hnmroot: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Degenerate as exc:
        print(f"hnmroot: degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except BrokenPipeError:
        # reader went away (e.g. piped into head); nothing left to report
        sys.stderr.close()
        return 0


if __name__ == "__main__":
    sys.exit(main())
