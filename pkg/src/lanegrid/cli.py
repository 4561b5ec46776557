"""Command-line interface.

Exit codes: 0 success, 1 validation error (bad map or scenario), 2 runtime
error, 3 oracle divergence beyond tolerance.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .errors import LaneGridError, ValidationError
from .pipeline import (bench as run_bench, execute, format_report, load_scenario,
                       oracle_check, parse_report, run as run_pipeline)
from .render import render_svg
from .roadmap import load_map

ORACLE_MAX_DEVIATION = 0.03
ORACLE_MIN_AGREEMENT = 0.99


def _fail(exc: Exception) -> int:
    click.echo(f"error: {exc}", err=True)
    return 1 if isinstance(exc, ValidationError) else 2


@click.group()
def main():
    """Lane-level occupancy context engine."""


@main.command("run")
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="report file")
@click.option("--svg", "svg_path", type=click.Path(dir_okay=False), help="rendered SVG file")
@click.option("--workers", default=1, show_default=True, help="cell classification threads")
def run_cmd(scenario, output, svg_path, workers):
    """Classify every cell of the scenario's area of interest."""
    try:
        scn = load_scenario(scenario)
        report = run_pipeline(scn, workers=workers)
    except LaneGridError as e:
        sys.exit(_fail(e))
    for cls, count in report.summary.items():
        if count:
            click.echo(f"{cls.value:>10}: {count}")
    click.echo(f"{'total':>10}: {len(report.cells)}")
    if output:
        Path(output).write_text(format_report(report))
        click.echo(f"report written to {output}")
    if svg_path:
        Path(svg_path).write_text(render_svg(report, scn))
        click.echo(f"svg written to {svg_path}")


@main.command("oracle-check")
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--samples", default=2000, show_default=True, help="sample points per cell")
@click.option("--seed", default=0, show_default=True)
def oracle_cmd(scenario, samples, seed):
    """Compare the report against an independent point-sampling oracle."""
    try:
        scn = load_scenario(scenario)
        result = oracle_check(scn, samples_per_cell=samples, seed=seed)
    except LaneGridError as e:
        sys.exit(_fail(e))
    click.echo(result.summary_line())
    for m in result.mismatches:
        flag = " (near threshold)" if m.near_threshold else ""
        click.echo(f"  {m.lane_id}[{m.index}]: report={m.report_label.value} "
                   f"oracle={m.oracle_label.value}{flag}")
    if (result.max_fraction_deviation > ORACLE_MAX_DEVIATION
            or result.agreement_excluding_margin < ORACLE_MIN_AGREEMENT):
        click.echo("oracle divergence beyond tolerance", err=True)
        sys.exit(3)


@main.command("render")
@click.argument("report_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
def render_cmd(report_file, scenario, output):
    """Render a previously written report to SVG."""
    try:
        scn = load_scenario(scenario)
        records = parse_report(Path(report_file).read_text())
        art = execute(scn)
        by_key = {(r.cell.lane_id, r.cell.index): r for r in art.report.cells}
        if set(by_key) != {(rec["lane_id"], rec["index"]) for rec in records}:
            raise ValidationError("report does not match the scenario's grid")
        from dataclasses import replace
        cells = tuple(replace(by_key[(rec["lane_id"], rec["index"])], label=rec["label"])
                      for rec in records)
        report = replace(art.report, cells=cells)
    except LaneGridError as e:
        sys.exit(_fail(e))
    Path(output).write_text(render_svg(report, scn))
    click.echo(f"svg written to {output}")


@main.command("validate-map")
@click.argument("map_file", type=click.Path(exists=True, dir_okay=False))
def validate_cmd(map_file):
    """Load a map file and report whether it passes validation."""
    try:
        road_map = load_map(Path(map_file).read_text())
    except LaneGridError as e:
        sys.exit(_fail(e))
    click.echo(f"ok: {len(road_map.lanes)} lanes")


@main.command("bench")
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--iters", default=100, show_default=True)
@click.option("--workers", default=1, show_default=True)
def bench_cmd(scenario, iters, workers):
    """Measure per-stage and end-to-end wall times."""
    try:
        scn = load_scenario(scenario)
        stats = run_bench(scn, iterations=iters, workers=workers)
    except LaneGridError as e:
        sys.exit(_fail(e))
    for name, vals in stats.items():
        if name == "iterations":
            continue
        click.echo(f"{name:>18}: median {vals['median_us']:10.1f} us   "
                   f"p95 {vals['p95_us']:10.1f} us")


if __name__ == "__main__":
    main()
