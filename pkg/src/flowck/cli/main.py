import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Optional

import click
from pydantic import ValidationError
from tqdm import tqdm

from .. import __version__
from ..checker import DiagnosticKind, Severity, dump_diagnostics, sort_diagnostics
from ..pipelines import FileReport, FlowCheckConfig, FlowCheckPipeline
from .config import ColorMode, OutputMode, RunConfig, load_io_alias
from .render import SourceCache, render_diagnostic, render_summary

logger = logging.getLogger(__name__)

EXIT_CLEAN = 0
EXIT_DIAGNOSTICS = 1
EXIT_FAILURE = 2


def _check_all(pipeline: FlowCheckPipeline, paths: list[str], jobs: Optional[int]) -> list[FileReport]:
    results: dict[str, FileReport] = {}
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = {pool.submit(pipeline.check_file, path): path for path in dict.fromkeys(paths)}
        with tqdm(
            total=len(futures), desc="Checking", unit="file", file=sys.stderr, disable=len(futures) < 2
        ) as progress:
            for future in as_completed(futures):
                results[futures[future]] = future.result()
                progress.update(1)
    # report in input order whatever the completion order
    return [results[path] for path in dict.fromkeys(paths)]


def run(config: RunConfig) -> int:
    """Check every input file, print diagnostics and return the exit code."""
    io_alias = None
    if config.io_alias is not None:
        try:
            io_alias = sorted(load_io_alias(config.io_alias))
        except (OSError, UnicodeDecodeError) as err:
            click.echo(f"flowck: cannot read io alias file {config.io_alias}: {err}", err=True)
            return EXIT_FAILURE

    keep_reports = config.dump_policy or config.dump_deps
    pipeline = FlowCheckPipeline(FlowCheckConfig(io_alias=io_alias, keep_reports=keep_reports))
    reports = _check_all(pipeline, [str(path) for path in config.inputs], config.jobs)

    exit_code = EXIT_CLEAN
    diagnostics = []
    for report in reports:
        if report.error is not None:
            click.echo(f"flowck: {report.error}", err=True)
            exit_code = EXIT_FAILURE
        diagnostics.extend(report.diagnostics)
        if keep_reports:
            dumps = report.dumps(config.dump_policy, config.dump_deps)
            click.echo(json.dumps(dumps, indent=2, sort_keys=True), err=True)
    diagnostics = sort_diagnostics(diagnostics)

    if any(d.kind == DiagnosticKind.PARSE_ERROR or d.severity == Severity.INTERNAL for d in diagnostics):
        exit_code = EXIT_FAILURE
    elif diagnostics and exit_code == EXIT_CLEAN:
        exit_code = EXIT_DIAGNOSTICS

    shown = diagnostics
    if config.max_errors is not None and len(diagnostics) > config.max_errors:
        shown = diagnostics[: config.max_errors]
        click.echo(f"flowck: {len(diagnostics) - len(shown)} more diagnostics suppressed by --max-errors", err=True)

    if config.output == OutputMode.JSON:
        click.echo(dump_diagnostics(shown))
    else:
        color = config.color == ColorMode.AUTO and sys.stdout.isatty()
        sources = SourceCache()
        for diag in shown:
            click.echo(render_diagnostic(diag, sources.lines, color))
            click.echo()
        summary = render_summary(len(diagnostics), color)
        if summary:
            click.echo(summary)
    logger.info("checked %d files: %d diagnostics, exit %d", len(reports), len(diagnostics), exit_code)
    return exit_code


@click.group()
@click.version_option(version=__version__, prog_name="flowck")
@click.option("-v", "--verbose", count=True, help="Log more; repeat for debug output")
def main(verbose):
    """flowck: static information-flow checking for `.ifc` programs."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.argument("files", nargs=-1, required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--json", "as_json", is_flag=True, default=False, help="Emit diagnostics as a JSON array")
@click.option("--max-errors", type=int, default=None, help="Report at most N diagnostics")
@click.option("--dump-policy", is_flag=True, default=False, help="Dump policy environments to stderr")
@click.option("--dump-deps", is_flag=True, default=False, help="Dump dependency environments to stderr")
@click.option(
    "--io-alias",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Newline-separated functions `fn io!()` expands to",
)
@click.option("--jobs", "-j", type=int, default=None, help="Worker threads")
@click.pass_context
def check(ctx, files, as_json, max_errors, dump_policy, dump_deps, io_alias, jobs):
    """Check FILES against their declared flow rules."""
    try:
        config = RunConfig(
            inputs=list(files),
            output=OutputMode.JSON if as_json else OutputMode.HUMAN,
            max_errors=max_errors,
            dump_policy=dump_policy,
            dump_deps=dump_deps,
            io_alias=io_alias,
            jobs=jobs,
        )
    except ValidationError as err:
        raise click.UsageError(str(err), ctx=ctx)
    ctx.exit(run(config))


if __name__ == "__main__":
    main()
