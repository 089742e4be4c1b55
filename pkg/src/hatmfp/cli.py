"""Command-line interface.

Exit codes: 0 on success, 2 on invalid configuration or flags, 3 on
domain errors raised while solving (singular evaluation points, missing
reference solutions, exponent violations, ...).
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from .engine import HatmConfig, ProblemSpec, partial_sum, residual, run, run_report
from .engine import h_curve as engine_h_curve
from .errors import ConfigError, HatmError, SingularityError
from .fokker_planck import PRESET_IDS, load_problem, preset
from .oracles import reference_solution
from .series import FracSeries


@dataclass(frozen=True)
class RunRequest:
    """Validated CLI invocation: one problem source plus a config."""

    problem: ProblemSpec
    config: HatmConfig
    label: str
    preset_id: str | None
    fmt: str
    out: str | None


def _build_request(preset_id, problem_path, alpha, hbar, order, taylor_terms, fmt, out):
    if (preset_id is None) == (problem_path is None):
        raise click.UsageError("give exactly one of --preset or --problem")
    try:
        if preset_id is not None:
            spec = preset(preset_id)
            label = f"preset:{preset_id}"
        else:
            spec = load_problem(problem_path)
            label = f"file:{Path(problem_path).name}"
        config = HatmConfig(alpha=alpha, hbar=hbar, order=order, taylor_terms=taylor_terms)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    return RunRequest(spec, config, label, preset_id, fmt, out)


def _problem_options(fn):
    fn = click.option(
        "--problem",
        "problem_path",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="Problem definition JSON file.",
    )(fn)
    fn = click.option(
        "--preset",
        "preset_id",
        type=click.Choice(PRESET_IDS),
        default=None,
        help="Built-in problem id.",
    )(fn)
    return fn


def _config_options(fn):
    fn = click.option("--taylor-terms", type=int, default=12, show_default=True,
                      help="Powers of t kept when expanding exp(c*t).")(fn)
    fn = click.option("--order", type=int, default=10, show_default=True,
                      help="Number of deformation steps M.")(fn)
    fn = click.option("--hbar", type=float, default=-1.0, show_default=True,
                      help="Convergence-control parameter.")(fn)
    fn = click.option("--alpha", type=float, default=1.0, show_default=True,
                      help="Caputo order in (0, 1].")(fn)
    return fn


def _output_options(fn):
    fn = click.option("--out", type=click.Path(dir_okay=False), default=None,
                      help="Write output here instead of stdout.")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(("json", "csv")),
                      default="json", show_default=True)(fn)
    return fn


def _fail_domain(exc: HatmError) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(3)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _csv_text(header: list[str], rows: list[list], trailer: str | None = None) -> str:
    sink = io.StringIO()
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    if trailer is not None:
        sink.write(trailer + "\n")
    return sink.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _grid(lo: float, hi: float, count: int) -> list[float]:
    if count < 1:
        raise click.UsageError("grid counts must be >= 1")
    if count == 1:
        return [lo]
    return [lo + i * (hi - lo) / (count - 1) for i in range(count)]


def _parse_point(text: str, dim: int) -> tuple[float, float, float]:
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise click.UsageError(f"bad point {text!r}; expected x[,y],t") from None
    if len(parts) == 2:
        if dim == 2:
            raise click.UsageError(f"point {text!r} needs x,y,t for a 2-d problem")
        return (parts[0], 0.0, parts[1])
    if len(parts) == 3:
        return (parts[0], parts[1], parts[2])
    raise click.UsageError(f"bad point {text!r}; expected x[,y],t")


def _grid_options(fn):
    for name, default in (
        ("--t-count", 5), ("--t-max", 1.0), ("--t-min", 0.0),
        ("--y-count", 1), ("--y-max", 1.0), ("--y-min", 1.0),
        ("--x-count", 4), ("--x-max", 2.0), ("--x-min", 0.5),
    ):
        kind = int if name.endswith("count") else float
        fn = click.option(name, type=kind, default=default, show_default=True)(fn)
    return fn


@click.group()
def main() -> None:
    """Series solver for time-fractional drift-diffusion equations.

    Builds homotopy iterates symbolically, then evaluates, compares
    against reference solutions, or sweeps the convergence-control
    parameter.

    \b
    Examples:
      hatmfp solve --preset 4.3 --alpha 0.5 --order 3
      hatmfp eval --preset 4.2 --order 12 --format csv
      hatmfp hcurve --preset 4.3 --probe 1,0.2 --format csv
      hatmfp compare --preset 4.1 --alpha 0.75 --order 10
    """


@main.command()
@_problem_options
@_config_options
@_output_options
def solve(preset_id, problem_path, alpha, hbar, order, taylor_terms, fmt, out):
    """Run the deformation recursion and write the iterate report."""
    req = _build_request(preset_id, problem_path, alpha, hbar, order, taylor_terms, fmt, out)
    try:
        report = run_report(req.problem, req.config, req.label)
    except HatmError as exc:
        _fail_domain(exc)
    if req.fmt == "json":
        _emit(_json_text(report), req.out)
        return
    rows = []
    for m, series_obj in enumerate(report["iterates"]):
        for i, term in enumerate(series_obj):
            series = FracSeries.from_obj([term])
            coef = series.terms[0].coef.value(req.config.alpha) if series.terms else 0.0
            rows.append([m, i, term["p"], term["q"], term["c"], repr(coef), term["spatial"]])
    _emit(_csv_text(["iterate", "term", "p", "q", "c", "coef", "spatial"], rows), req.out)


@main.command(name="eval")
@_problem_options
@_config_options
@_output_options
@_grid_options
def eval_cmd(preset_id, problem_path, alpha, hbar, order, taylor_terms, fmt, out,
             x_min, x_max, x_count, y_min, y_max, y_count, t_min, t_max, t_count):
    """Evaluate the partial sum on a grid."""
    req = _build_request(preset_id, problem_path, alpha, hbar, order, taylor_terms, fmt, out)
    try:
        iterates = run(req.problem, req.config)
        total = partial_sum(iterates, req.config.order)
    except HatmError as exc:
        _fail_domain(exc)

    two_d = req.problem.dim == 2
    with_exact = req.preset_id is not None and req.config.alpha == 1.0
    ys = _grid(y_min, y_max, y_count) if two_d else [0.0]
    rows = []
    for x in _grid(x_min, x_max, x_count):
        for y in ys:
            for t in _grid(t_min, t_max, t_count):
                place = [repr(x)] + ([repr(y)] if two_d else []) + [repr(t)]
                try:
                    value = total.evaluate(x=x, y=y, t=t, alpha=req.config.alpha)
                except SingularityError:
                    pad = 3 if with_exact else 1
                    rows.append(place + [""] * pad + ["singular"])
                    continue
                row = place + [repr(value)]
                if with_exact:
                    exact = reference_solution(req.preset_id, x, t, req.config.alpha, y)
                    row += [repr(exact), repr(abs(value - exact))]
                rows.append(row + ["ok"])

    header = ["x"] + (["y"] if two_d else []) + ["t", "u"]
    if with_exact:
        header += ["u_exact", "abs_err"]
    header += ["status"]
    if req.fmt == "csv":
        _emit(_csv_text(header, rows), req.out)
    else:
        _emit(_json_text({"rows": [dict(zip(header, r)) for r in rows]}), req.out)


@main.command(name="residual")
@_problem_options
@_config_options
@_output_options
@click.option("--point", "points", multiple=True, required=True,
              help="Probe point x[,y],t; repeatable.")
def residual_cmd(preset_id, problem_path, alpha, hbar, order, taylor_terms, fmt, out, points):
    """Residual of the full equation at probe points."""
    req = _build_request(preset_id, problem_path, alpha, hbar, order, taylor_terms, fmt, out)
    probe_list = [_parse_point(p, req.problem.dim) for p in points]
    try:
        iterates = run(req.problem, req.config)
        total = partial_sum(iterates, req.config.order)
        values = residual(req.problem, total, req.config, probe_list)
    except HatmError as exc:
        _fail_domain(exc)

    two_d = req.problem.dim == 2
    rows = []
    for (x, y, t), value in zip(probe_list, values):
        rows.append([repr(x)] + ([repr(y)] if two_d else []) + [repr(t), repr(value)])
    header = ["x"] + (["y"] if two_d else []) + ["t", "residual"]
    if req.fmt == "csv":
        _emit(_csv_text(header, rows), req.out)
    else:
        _emit(_json_text({"rows": [dict(zip(header, r)) for r in rows]}), req.out)


@main.command(name="hcurve")
@_problem_options
@_config_options
@_output_options
@click.option("--probe", required=True, help="Probe point x[,y],t.")
@click.option("--h-min", type=float, default=-2.0, show_default=True)
@click.option("--h-max", type=float, default=-0.2, show_default=True)
@click.option("--h-count", type=int, default=19, show_default=True)
def hcurve_cmd(preset_id, problem_path, alpha, hbar, order, taylor_terms, fmt, out,
               probe, h_min, h_max, h_count):
    """Sweep the convergence-control parameter at a probe point."""
    req = _build_request(preset_id, problem_path, alpha, hbar, order, taylor_terms, fmt, out)
    point = _parse_point(probe, req.problem.dim)
    h_values = _grid(h_min, h_max, h_count)
    if any(h == 0.0 for h in h_values):
        raise click.UsageError("hbar sweep must not include 0")
    try:
        curve = engine_h_curve(req.problem, req.config, point, h_values)
    except HatmError as exc:
        _fail_domain(exc)
    rows = [[repr(h), repr(v)] for h, v in curve]
    if req.fmt == "csv":
        _emit(_csv_text(["hbar", "value"], rows), req.out)
    else:
        _emit(_json_text({"rows": [{"hbar": h, "value": v} for h, v in curve]}), req.out)


@main.command(name="compare")
@_problem_options
@_config_options
@_output_options
@_grid_options
def compare_cmd(preset_id, problem_path, alpha, hbar, order, taylor_terms, fmt, out,
                x_min, x_max, x_count, y_min, y_max, y_count, t_min, t_max, t_count):
    """Compare the partial sum against the registered reference solution."""
    req = _build_request(preset_id, problem_path, alpha, hbar, order, taylor_terms, fmt, out)
    try:
        if req.preset_id is None:
            raise HatmError(
                "compare needs a preset; no reference solution is registered for files"
            )
        iterates = run(req.problem, req.config)
        total = partial_sum(iterates, req.config.order)

        two_d = req.problem.dim == 2
        ys = _grid(y_min, y_max, y_count) if two_d else [0.0]
        rows = []
        worst = 0.0
        for x in _grid(x_min, x_max, x_count):
            for y in ys:
                for t in _grid(t_min, t_max, t_count):
                    value = total.evaluate(x=x, y=y, t=t, alpha=req.config.alpha)
                    exact = reference_solution(req.preset_id, x, t, req.config.alpha, y)
                    err = abs(value - exact)
                    worst = max(worst, err)
                    rows.append(
                        [repr(x)] + ([repr(y)] if two_d else [])
                        + [repr(t), repr(value), repr(exact), repr(err)]
                    )
    except HatmError as exc:
        _fail_domain(exc)

    header = ["x"] + (["y"] if two_d else []) + ["t", "u", "u_ref", "abs_err"]
    if req.fmt == "csv":
        _emit(_csv_text(header, rows, trailer=f"# max_abs_err={worst!r}"), req.out)
    else:
        _emit(_json_text({"rows": [dict(zip(header, r)) for r in rows],
                          "max_abs_err": worst}), req.out)


if __name__ == "__main__":  # pragma: no cover
    main()
