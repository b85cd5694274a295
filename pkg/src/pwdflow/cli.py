"""Command-line front end.

Exit codes are a scripting contract: 0 success, 1 validation or
diagnostic failure, 2 usage error, 3 execution failure.
"""

from __future__ import annotations

import json
import os
import shlex
import sys
import tempfile
from pathlib import Path

import click

from .convert import DotStyle, UnsupportedFeatureError, to_cwl, to_dot
from .diagnostics import DiagnosticSet, DocumentError
from .engine import CacheMode, RunConfig, RunReport, execute, read_envelope
from .graph import ready_schedule, topo_sort
from .io import parse_document
from .model import WorkflowDocument

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_EXECUTION = 3


def _emit_diagnostics(diags: DiagnosticSet) -> None:
    if diags:
        click.echo(diags.to_json_lines(), err=True)


def _load(path: str) -> tuple[WorkflowDocument, DiagnosticSet]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        click.echo(f"error: cannot read {path}: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    diags = DiagnosticSet()
    try:
        doc = parse_document(data, diagnostics=diags)
    except DocumentError:
        _emit_diagnostics(diags)
        sys.exit(EXIT_INVALID)
    return doc, diags


@click.group()
def main() -> None:
    """Validate, inspect, execute, and export PWD workflow documents."""


@main.command()
@click.argument("file", type=click.Path())
@click.option("--strict", is_flag=True, help="Treat warnings as failures.")
def validate(file: str, strict: bool) -> None:
    """Check FILE against the format and structural rules.

    Diagnostics go to stderr as JSON lines; the exit code tells the story.
    """
    doc, diags = _load(file)
    _emit_diagnostics(diags)
    if strict and diags.warnings:
        sys.exit(EXIT_INVALID)
    sys.exit(EXIT_OK)


@main.command()
@click.argument("file", type=click.Path())
def info(file: str) -> None:
    """Print version, node/edge counts, topological order, and depth as JSON."""
    doc, _ = _load(file)
    levels = ready_schedule(doc)
    summary = {
        "version": str(doc.version),
        "inputs": len(doc.input_nodes()),
        "functions": len(doc.function_nodes()),
        "outputs": len(doc.output_nodes()),
        "edges": len(doc.edges),
        "topo": topo_sort(doc),
        "depth": len(levels),
    }
    click.echo(json.dumps(summary))


def _parse_overrides(pairs: tuple[str, ...]) -> dict:
    overrides = {}
    for pair in pairs:
        name, sep, raw = pair.partition("=")
        if not sep or not name:
            click.echo(f"error: --set expects NAME=VALUE, got {pair!r}", err=True)
            sys.exit(EXIT_USAGE)
        try:
            value = json.loads(raw)
        except ValueError:
            value = raw  # unquoted strings are taken literally
        overrides[name] = value
    return overrides


def _report_json(report: RunReport) -> dict:
    outputs = {}
    for name, artifact in report.outputs.items():
        entry: dict = {"digest": artifact.digest, "path": str(artifact.path)}
        envelope = read_envelope(artifact.path)
        entry["encoding"] = envelope.encoding
        if envelope.encoding == "json":
            entry["payload"] = envelope.payload
        outputs[name] = entry
    tasks = {}
    for nid, task in sorted(report.tasks.items()):
        tasks[str(nid)] = {
            "phase": task.phase.value,
            "cache_hit": task.cache_hit,
            "error": task.error,
        }
    return {
        "succeeded": report.succeeded,
        "outputs": outputs,
        "tasks": tasks,
        "executed_count": report.executed_count,
        "cache_hit_count": report.cache_hit_count,
        "wall_time": report.wall_time,
        "workdir": str(report.workdir),
        "event_log": str(report.event_log),
    }


@main.command()
@click.argument("file", type=click.Path())
@click.option("--set", "set_values", multiple=True, metavar="NAME=JSON", help="Override an input value.")
@click.option("--workdir", type=click.Path(), default=None, help="Run directory (default: fresh temp dir).")
@click.option("--jobs", type=int, default=1, show_default=True, help="Max concurrent runner processes.")
@click.option("--runner", default=None, help="Runner command line; default from $PWD_RUNNER.")
@click.option(
    "--cache",
    "cache_mode",
    type=click.Choice(["enabled", "disabled", "readonly"]),
    default="disabled",
    show_default=True,
)
@click.option("--cache-dir", type=click.Path(), default=None, help="Cache directory; default from $PWD_CACHE_DIR.")
@click.option(
    "--module-dir",
    "module_dirs",
    multiple=True,
    type=click.Path(),
    help="Directory searched for workflow modules (repeatable; default: the document's directory).",
)
@click.option("--timeout", type=float, default=None, help="Per-node timeout in seconds.")
def run(
    file: str,
    set_values: tuple[str, ...],
    workdir: str | None,
    jobs: int,
    runner: str | None,
    cache_mode: str,
    cache_dir: str | None,
    module_dirs: tuple[str, ...],
    timeout: float | None,
) -> None:
    """Execute FILE and print the run report as JSON."""
    doc, _ = _load(file)
    overrides = _parse_overrides(set_values)

    runner_text = runner or os.environ.get("PWD_RUNNER")
    if not runner_text:
        click.echo("error: no runner configured (use --runner or $PWD_RUNNER)", err=True)
        sys.exit(EXIT_USAGE)
    if jobs < 1:
        click.echo("error: --jobs must be >= 1", err=True)
        sys.exit(EXIT_USAGE)

    cache_dir = cache_dir or os.environ.get("PWD_CACHE_DIR")
    config = RunConfig(
        workdir=Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="pwdflow-run-")),
        runner_command=shlex.split(runner_text),
        module_search_paths=[Path(d) for d in module_dirs] or [Path(file).resolve().parent],
        max_parallel=jobs,
        input_overrides=overrides,
        cache_dir=Path(cache_dir) if cache_dir else None,
        cache_mode=CacheMode.from_string(cache_mode),
        timeout=timeout,
    )
    try:
        report = execute(doc, config)
    except DocumentError as exc:
        _emit_diagnostics(exc.diagnostics)
        codes = exc.diagnostics.codes()
        sys.exit(EXIT_USAGE if codes <= {"UnknownOverrideName"} else EXIT_INVALID)

    click.echo(json.dumps(_report_json(report)))
    sys.exit(EXIT_OK if report.succeeded else EXIT_EXECUTION)


@main.command()
@click.argument("file", type=click.Path())
@click.option("-o", "--out", type=click.Path(), default=None, help="Output path (default: stdout).")
def dot(file: str, out: str | None) -> None:
    """Render FILE as a Graphviz DOT graph."""
    doc, _ = _load(file)
    text = to_dot(doc, DotStyle())
    if out is None:
        click.echo(text, nl=False)
        return
    try:
        Path(out).write_text(text, "utf-8")
    except OSError as exc:
        click.echo(f"error: cannot write {out}: {exc}", err=True)
        sys.exit(EXIT_USAGE)


@main.command()
@click.argument("file", type=click.Path())
@click.option("-o", "--out-dir", required=True, type=click.Path(), help="Directory for the CWL files.")
@click.option("--runner", default=None, help="Runner command embedded as each tool's baseCommand.")
def cwl(file: str, out_dir: str, runner: str | None) -> None:
    """Export FILE as CWL v1.2 (one tool per function node plus a workflow)."""
    doc, _ = _load(file)
    try:
        paths = to_cwl(doc, out_dir, shlex.split(runner) if runner else None)
    except UnsupportedFeatureError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INVALID)
    except OSError as exc:
        click.echo(f"error: cannot write to {out_dir}: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    for path in paths:
        click.echo(str(path))


if __name__ == "__main__":
    main()
