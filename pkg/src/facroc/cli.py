"""Command-line driver.

Exit codes: 0 success, 2 usage or schema error, 3 data error (including
degenerate slices), 4 infeasible fairness target.
"""

import argparse
import sys
from pathlib import Path

from .exceptions import DataError, FacrocError, InfeasibleFairnessError, SchemaError
from .ingest import load_dataset
from .models import MODEL_NAMES, Workspace
from .oracles import SUITES, run_suite
from .pipeline import atomic_write, evaluate_dataset
from .report import emit_table, render_slice_plot
from .selection import DEFAULT_RANGE, parse_range, select_k

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 0, 2, 3, 4


def exit_code(exc):
    if isinstance(exc, InfeasibleFairnessError):
        return EXIT_INFEASIBLE
    if isinstance(exc, SchemaError):
        return EXIT_USAGE
    if isinstance(exc, (DataError, OSError)):
        return EXIT_DATA
    return EXIT_USAGE


def _diag(prefix, exc):
    kind = {
        EXIT_INFEASIBLE: "infeasible fairness target",
        EXIT_USAGE: "bad schema" if isinstance(exc, SchemaError) else "usage error",
        EXIT_DATA: "degenerate slice" if getattr(exc, "group", None) else "data error",
    }[exit_code(exc)]
    msg = " ".join(str(exc).split())
    print(f"facroc: {prefix}{kind}: {msg}", file=sys.stderr)


def _k_arg(text):
    if text == "auto":
        return text
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"k must be an integer or 'auto', got {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError("k must be positive")
    return k


def build_parser():
    parser = argparse.ArgumentParser(prog="facroc", description="Fairness-aware ROC evaluation of clusterings.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data-root", help="directory holding dataset files (default: $FACROC_DATA_ROOT or ./data)")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", parents=[common], help="cluster a dataset and write reports, a table and slice plots")
    ev.add_argument("--dataset", required=True, help="packaged schema name or path to a schema file")
    ev.add_argument("--model", default="all", choices=MODEL_NAMES + ("all",))
    ev.add_argument("--k", type=_k_arg, default="auto", help="number of clusters or 'auto'")
    ev.add_argument("--seed", type=int, default=42)
    ev.add_argument("--out", default="out", help="output directory")

    sk = sub.add_parser("select-k", parents=[common], help="sweep k and write the (k, AUCC) curve")
    sk.add_argument("--dataset", required=True)
    sk.add_argument("--range", default=f"{DEFAULT_RANGE[0]}..{DEFAULT_RANGE[1]}", help="inclusive range a..b")
    sk.add_argument("--model", default="kmeans", choices=MODEL_NAMES)
    sk.add_argument("--seed", type=int, default=42)
    sk.add_argument("--out", default="out")

    orc = sub.add_parser("oracle", help="run brute-force verification oracles")
    orc.add_argument("--suite", default="all", choices=sorted(SUITES) + ["all"])
    orc.add_argument("--seed", type=int, default=0)
    return parser


def cmd_evaluate(args):
    models = MODEL_NAMES if args.model == "all" else (args.model,)
    failures = []

    def on_error(name, exc):
        failures.append(exc)
        _diag(f"{name}: ", exc)

    reports, k, _ = evaluate_dataset(args.dataset, models, args.k, args.seed, root=args.data_root, on_error=on_error)
    out = Path(args.out)
    for r in reports:
        stem = f"{r.dataset}_{r.model}_k{k}"
        atomic_write(out / f"{stem}.json", r.to_json())
        atomic_write(out / f"{stem}.svg", render_slice_plot(r))
    if reports:
        table = out / f"{reports[0].dataset}_k{k}_table.csv"
        atomic_write(table, emit_table(reports, "csv"))
        print(emit_table(reports, "csv").replace("\r\n", "\n"), end="")
    return exit_code(failures[0]) if failures else EXIT_OK


def cmd_select_k(args):
    k_range = parse_range(args.range)
    schema, _, features = load_dataset(args.dataset, args.data_root)
    ws = Workspace(features.X, features.groups)
    sel = select_k(None, args.model, k_range, args.seed, workspace=ws)
    path = Path(args.out) / f"{schema.name}_{args.model}_select_k.csv"
    atomic_write(path, sel.to_csv())
    for k, msg in sel.failed.items():
        print(f"facroc: k={k} failed: {msg}", file=sys.stderr)
    print(f"k* = {sel.k_star}")
    return EXIT_OK


def cmd_oracle(args):
    results = run_suite(args.suite, args.seed)
    for suite, name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} [{suite}] {name}" + (f" ({detail})" if detail else ""))
    return EXIT_OK if all(ok for _, _, ok, _ in results) else 1


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"evaluate": cmd_evaluate, "select-k": cmd_select_k, "oracle": cmd_oracle}[args.command]
    try:
        return handler(args)
    except (FacrocError, OSError) as exc:
        _diag("", exc)
        return exit_code(exc)
    except ValueError as exc:
        _diag("", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
