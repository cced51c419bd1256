import argparse
import json
import logging
import sys
from pathlib import Path

from rich import print
from rich.logging import RichHandler
from rich.table import Table

from . import perturb
from .cache import ExecutionCache
from .config import (
    DEFAULT_CONFIG,
    Algorithm,
    load_analysis_config,
    load_config,
)
from .corpus import validate_corpus
from .errors import CorpusError, MRForgeError
from .experiment import run_plan
from .report import compare

log = logging.getLogger(__name__)


def comma_separated_list(arg_value: str, choices=None):
    separated = arg_value.split(",")
    for e in separated:
        if choices and e not in choices:
            raise argparse.ArgumentTypeError(
                f"invalid element '{e}'. Must be one of '{','.join(choices)}'"
            )
    return separated


def algorithm_list(arg_value: str):
    return comma_separated_list(arg_value, [str(a) for a in Algorithm])


def run_overrides(
    seed=None, algorithms=None, reps=None, out=None, executor=None
):
    overrides = {"plan": {}, "search": {}, "executor": {}}
    if seed is not None:
        overrides["search"]["seed"] = seed
    if algorithms:
        overrides["plan"]["algorithms"] = algorithms
    if reps is not None:
        overrides["plan"]["repetitions"] = reps
    if out is not None:
        overrides["plan"]["output_dir"] = str(out)
    if executor:
        overrides["executor"]["kind"] = executor
    return {k: v for k, v in overrides.items() if v}


def cmd_run(config, seed, algorithms, reps, out, executor):
    cfg = load_config(
        config, run_overrides(seed, algorithms, reps, out, executor)
    )
    done = run_plan(cfg)
    print(
        f"[green]Finished {len(done)} repetitions in "
        f"[bold]{cfg.plan.output_dir}[/bold].[/green]"
    )


def cmd_compare(dirs, out, config):
    out = out or Path(dirs[0]) / "report"
    comparison = compare(dirs, out, load_analysis_config(config))
    tables = comparison.tables()
    mwu = tables["mwu"]
    if not mwu.empty:
        table = Table(title="Pairwise comparison")
        for column in ("task", "metric", "a", "b", "p", "a12", "magnitude"):
            table.add_column(column)
        for row in mwu.itertuples():
            style = "bold green" if row.significant else ""
            table.add_row(
                row.task,
                row.metric,
                row.a,
                row.b,
                f"{row.p:.4g}",
                f"{row.a12:.3f}",
                row.magnitude,
                style=style,
            )
        print(table)
    print(f"Report written to [bold]{out}[/bold].")


def cmd_corpus_validate(path):
    summary = validate_corpus(path)
    table = Table()
    table.add_column(justify="right", style="green")
    table.add_column()
    table.add_row("Corpus: ", summary.path)
    table.add_row("Records: ", str(summary.records))
    table.add_row("Valid: ", str(summary.valid))
    table.add_row("Violations: ", str(summary.violations))
    print(table)
    if summary.violations:
        ids = ", ".join(sorted(summary.duplicates))
        message = f"{summary.violations} violations in {path}"
        if ids:
            message += f"; duplicate ids: {ids}"
        raise CorpusError(message, lines=summary.violation_lines)


def cmd_cache_stats(path):
    with ExecutionCache(path) as cache:
        stats = cache.stats()
    table = Table()
    table.add_column(justify="right", style="green")
    table.add_column()
    for key, value in stats.items():
        table.add_row(f"{key}: ", str(value))
    print(table)


def cmd_catalog_export(out):
    payload = perturb.catalog_json()
    if out is None:
        sys.stdout.write(payload + "\n")
        return
    Path(out).write_text(payload + "\n", encoding="utf-8")
    print(f"Catalog written to [bold]{out}[/bold].")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrforge",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.set_defaults(func="print_usage")
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log at debug level"
    )
    subparsers = parser.add_subparsers(help="subcommand help")

    parser_run = subparsers.add_parser(
        "run", help="execute an experiment plan"
    )
    parser_run.add_argument("--config", type=Path, default=DEFAULT_CONFIG)
    parser_run.add_argument("--seed", type=int, help="master seed")
    parser_run.add_argument(
        "--algorithms",
        type=algorithm_list,
        help="comma separated subset of the plan's algorithms",
    )
    parser_run.add_argument("--reps", type=int, help="repetitions")
    parser_run.add_argument("--out", type=Path, help="output directory")
    parser_run.add_argument("--executor", choices=["surrogate", "remote"])
    parser_run.set_defaults(func=cmd_run)

    parser_compare = subparsers.add_parser(
        "compare", help="statistical comparison of finished runs"
    )
    parser_compare.add_argument("dirs", type=Path, nargs="+")
    parser_compare.add_argument(
        "--out", type=Path, help="report directory (default: DIRS[0]/report)"
    )
    parser_compare.add_argument(
        "--config",
        type=Path,
        default=DEFAULT_CONFIG,
        help="read the [analysis] section from here when it exists",
    )
    parser_compare.set_defaults(func=cmd_compare)

    parser_corpus = subparsers.add_parser("corpus", help="corpus tools")
    corpus_sub = parser_corpus.add_subparsers()
    parser_validate = corpus_sub.add_parser(
        "validate", help="check a JSONL corpus"
    )
    parser_validate.add_argument("path", help="file or builtin:<name>")
    parser_validate.set_defaults(func=cmd_corpus_validate)

    parser_cache = subparsers.add_parser("cache", help="cache tools")
    cache_sub = parser_cache.add_subparsers()
    parser_stats = cache_sub.add_parser("stats", help="cache statistics")
    parser_stats.add_argument("path", type=Path)
    parser_stats.set_defaults(func=cmd_cache_stats)

    parser_catalog = subparsers.add_parser(
        "catalog", help="perturbation catalog"
    )
    catalog_sub = parser_catalog.add_subparsers()
    parser_export = catalog_sub.add_parser("export", help="export as JSON")
    parser_export.add_argument("--out", type=Path)
    parser_export.set_defaults(func=cmd_catalog_export)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level="DEBUG" if args.verbose else "INFO",
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler()],
    )
    func = args.func
    if func == "print_usage":
        parser.print_usage()
        sys.exit(1)

    kwargs = dict(args._get_kwargs())
    del kwargs["func"]
    del kwargs["verbose"]
    try:
        func(**kwargs)
    except MRForgeError as e:
        sys.stderr.write(json.dumps(e.as_dict()) + "\n")
        sys.exit(e.exit_code)
    except KeyboardInterrupt:
        print("[red]Aborted.[/red]")
        sys.exit(130)


if __name__ == "__main__":
    main()
