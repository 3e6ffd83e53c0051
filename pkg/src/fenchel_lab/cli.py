"""Command-line surface: instance ingestion, dispatch, deterministic reports.

Five commands share one calling shape::

    fenchel-lab <command> <path> [--splits N] [--box-radius R] [--directions D]
                [--tol T] [--format human|machine] [--out FILE]

``path`` is one instance file or a directory of them (a corpus).  Exit codes:
0 all expected verdicts match, 1 verdict mismatch, 2 schema/format violation
(including an empty corpus directory), 3 a module refused the computation
(the error name is printed).  ``FENCHEL_LAB_THREADS`` caps corpus concurrency.
"""

from __future__ import annotations

import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

import click
import numpy as np

from . import __version__
from .errors import FenchelLabError, InstanceSchemaError
from .functions import (
    AnyFunction,
    ConvexPolyhedralFunction,
    GridFunction,
    PiecewiseMinFunction,
)
from .geometry import is_empty
from .instances import InstanceFile, SolverParams, load_instance
from .relaxation import MinProblem, relax_and_compare
from .reporting import csv_text, human_text, machine_text, to_jsonable
from .subgradients import brondsted_rockafellar, eps_subdiff_set, eps_threshold
from .sumrules import (
    _box_vertices,
    equivalence_harness,
    qualification_check,
    sequential_witnesses,
)
from .transforms import (
    _slope_ranges,
    auto_dual_grid,
    conjugate,
    conjugate_grid,
    convex_envelope,
)

COMMANDS = ("transform", "subdiff", "verify", "witnesses", "relax")

CsvData = tuple[tuple[str, ...], list[tuple[Any, ...]]]


@dataclass(frozen=True)
class RunReport:
    """One command's outcome on one instance; the CLI's unit of output."""

    instance: str
    command: str
    parameters: Mapping[str, Any]
    results: Mapping[str, Any]
    verdicts: Mapping[str, bool]
    expected: Mapping[str, bool] | None
    matches: bool
    mismatches: Mapping[str, Mapping[str, bool]]
    wall_time: float
    csv: CsvData = field(repr=False, default=((), []))

    def payload(self) -> dict[str, Any]:
        """The serializable body; timing stays out so reports are byte-stable."""
        return {
            "instance": self.instance,
            "command": self.command,
            "parameters": to_jsonable(self.parameters),
            "results": to_jsonable(self.results),
            "verdicts": to_jsonable(self.verdicts),
            "expected": to_jsonable(self.expected),
            "matches": self.matches,
            "mismatches": to_jsonable(self.mismatches),
        }


def _parameter_echo(params: SolverParams) -> dict[str, Any]:
    return {
        "splits": params.splits,
        "box_radius": params.box_radius,
        "directions": params.directions,
        "tolerance": params.tolerance,
    }


def _sorted_vertices(vertices) -> list[list[float]]:
    rounded = [[float(round(c, 12)) for c in np.asarray(v)] for v in vertices]
    return sorted(rounded)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InstanceSchemaError(message)


def _polyhedral(f: AnyFunction) -> bool:
    return isinstance(f, (ConvexPolyhedralFunction, PiecewiseMinFunction))


def _function_block(f: AnyFunction, inst: InstanceFile) -> tuple[dict[str, Any], list[tuple[Any, ...]]]:
    """Conjugate + envelope of one function, plus its CSV rows."""
    rows: list[tuple[Any, ...]] = []
    if isinstance(f, GridFunction):
        dual = inst.dual_grid if inst.dual_grid is not None else auto_dual_grid(f)
        conj = conjugate_grid(f, dual)
        env = convex_envelope(f, dual)
        assert isinstance(env, GridFunction)
        for point, value in zip(conj.grid.node_coordinates(), conj.values.ravel()):
            rows.append(("conjugate_sample", *point, float(value)))
        for point, value in zip(env.grid.node_coordinates(), env.values.ravel()):
            rows.append(("envelope_sample", *point, float(value)))
        return {"conjugate": conj, "envelope": env}, rows
    conj = conjugate(f)
    env = convex_envelope(f)
    assert isinstance(conj, ConvexPolyhedralFunction)
    assert isinstance(env, ConvexPolyhedralFunction)
    for p in conj.pieces:
        rows.append(("conjugate_piece", *p.slope, p.intercept))
    for h in conj.domain.halfspaces:
        rows.append(("conjugate_domain", *h.normal, h.offset))
    for p in env.pieces:
        rows.append(("envelope_piece", *p.slope, p.intercept))
    for h in env.domain.halfspaces:
        rows.append(("envelope_domain", *h.normal, h.offset))
    return {"conjugate": conj, "envelope": env}, rows


def _run_transform(inst: InstanceFile, params: SolverParams) -> tuple[dict, dict, CsvData]:
    d = (
        inst.f.grid.dim if isinstance(inst.f, GridFunction) else inst.f.dim
    )
    header = ("row_type", *(f"a_{i + 1}" for i in range(d)), "b")
    f_block, rows = _function_block(inst.f, inst)
    results: dict[str, Any] = {"f": f_block}
    if inst.g is not None:
        g_block, g_rows = _function_block(inst.g, inst)
        results["g"] = g_block
        rows += [("g_" + r[0], *r[1:]) for r in g_rows]
    return results, {}, (header, rows)


def _run_subdiff(inst: InstanceFile, params: SolverParams) -> tuple[dict, dict, CsvData]:
    _require(_polyhedral(inst.f), "subdiff needs a polyhedral f")
    _require(bool(inst.probes), "subdiff needs at least one probe")
    d = inst.f.dim
    header = ("probe", "epsilon", *(f"v_{i + 1}" for i in range(d)))
    rows: list[tuple[Any, ...]] = []
    probe_reports = []
    for idx, (point, eps) in enumerate(inst.probes):
        threshold = eps_threshold(inst.f, point)
        subdiff = eps_subdiff_set(inst.f, point, eps)
        empty = is_empty(subdiff)
        vertices = [] if empty else _sorted_vertices(
            _box_vertices(subdiff, params.box_radius)
        )
        for v in vertices:
            rows.append((idx, eps, *v))
        entry: dict[str, Any] = {
            "point": list(point),
            "epsilon": eps,
            "threshold": threshold,
            "empty": empty,
            "set": subdiff,
            "vertices_in_box": vertices,
        }
        if (
            inst.witness is not None
            and isinstance(inst.f, ConvexPolyhedralFunction)
            and eps > 0.0
        ):
            witness = brondsted_rockafellar(
                inst.f, inst.witness.x, inst.witness.xstar, eps
            )
            entry["relocated"] = witness
        probe_reports.append(entry)
    return {"probes": probe_reports}, {}, (header, rows)


def _run_verify(inst: InstanceFile, params: SolverParams) -> tuple[dict, dict, CsvData]:
    _require(inst.g is not None, "verify needs a g function")
    _require(bool(inst.probes), "verify needs at least one probe")
    assert inst.g is not None
    report = equivalence_harness(
        inst.f,
        inst.g,
        inst.probes,
        splits=params.splits,
        box_radius=params.box_radius,
        n_directions=params.directions,
        tol=params.tolerance,
        probe_grid=inst.probe_grid,
    )
    results: dict[str, Any] = {"statuses": list(report.statuses)}
    if _polyhedral(inst.f) and _polyhedral(inst.g):
        env_f = convex_envelope(inst.f)
        env_g = convex_envelope(inst.g)
        assert isinstance(env_f, ConvexPolyhedralFunction)
        assert isinstance(env_g, ConvexPolyhedralFunction)
        results["qualification"] = qualification_check(env_f, env_g)
    verdicts = {
        "equality": report.statuses[0].holds,
        "summ1": report.statuses[1].holds,
        "sum1b": report.statuses[2].holds,
        "sum1d": report.statuses[3].holds,
        "consistent": report.consistent,
    }
    header = ("rule", "holds", "residual", "tolerance")
    rows = [
        (s.rule.name, s.holds, s.residual, s.tolerance) for s in report.statuses
    ]
    return results, verdicts, (header, rows)


def _run_witnesses(inst: InstanceFile, params: SolverParams) -> tuple[dict, dict, CsvData]:
    _require(inst.g is not None, "witnesses needs a g function")
    _require(inst.witness is not None, "witnesses needs a witness block (x, xstar)")
    _require(
        isinstance(inst.f, ConvexPolyhedralFunction)
        and isinstance(inst.g, ConvexPolyhedralFunction),
        "witnesses needs closed convex polyhedral f and g",
    )
    assert inst.witness is not None
    assert isinstance(inst.f, ConvexPolyhedralFunction)
    assert isinstance(inst.g, ConvexPolyhedralFunction)
    table = sequential_witnesses(
        inst.f, inst.g, inst.witness.x, inst.witness.xstar, inst.witness.rows
    )
    d = len(inst.witness.x)
    bounds = [table.chain_bound(row.n) for row in table.rows]
    within = [
        row.sum_deviation <= bound + 1e-12 for row, bound in zip(table.rows, bounds)
    ]
    results = {
        "x": list(table.x),
        "xstar": list(table.xstar),
        "rows": list(table.rows),
        "chain_bounds": bounds,
        "within_bound": within,
        "split_residuals": list(table.split_residuals),
    }
    verdicts = {"bounds_hold": all(within)}
    header = (
        "n",
        *(f"x_{i + 1}" for i in range(d)),
        *(f"y_{i + 1}" for i in range(d)),
        *(f"xstar_{i + 1}" for i in range(d)),
        *(f"ystar_{i + 1}" for i in range(d)),
        "sum_deviation",
        "inner_f",
        "inner_g",
        "value_gap_f",
        "value_gap_g",
        "chain_bound",
    )
    rows = [
        (
            row.n,
            *row.x_n,
            *row.y_n,
            *row.xstar_n,
            *row.ystar_n,
            row.sum_deviation,
            row.inner_f,
            row.inner_g,
            row.value_gap_f,
            row.value_gap_g,
            bound,
        )
        for row, bound in zip(table.rows, bounds)
    ]
    return results, verdicts, (header, rows)


def _run_relax(inst: InstanceFile, params: SolverParams) -> tuple[dict, dict, CsvData]:
    _require(inst.feasible is not None, "relax needs a feasible block")
    assert inst.feasible is not None
    problem = MinProblem(inst.f, inst.feasible, inst.name)
    report = relax_and_compare(problem, inst.probe_grid, params.tolerance)
    value_tol = params.tolerance
    if isinstance(inst.f, GridFunction):
        spans = _slope_ranges(inst.f)
        slope_scale = max((max(abs(lo), abs(hi)) for lo, hi in spans), default=1.0)
        value_tol = max(value_tol, max(inst.f.grid.spacing) * max(slope_scale, 1.0))
    value_identity = (
        report.gap <= value_tol if np.isfinite(report.gap) else False
    )
    results = {"report": report, "value_tolerance": value_tol}
    verdicts = {
        "decomposition": report.decomposition_holds,
        "value_identity": bool(value_identity),
    }
    header = (
        "name",
        "v_original",
        "v_relaxed",
        "gap",
        "decomposition_holds",
        "decomposition_residual",
    )
    rows = [
        (
            report.name,
            report.v_original,
            report.v_relaxed,
            report.gap,
            report.decomposition_holds,
            report.decomposition_residual,
        )
    ]
    return results, verdicts, (header, rows)


_RUNNERS: dict[str, Callable[[InstanceFile, SolverParams], tuple[dict, dict, CsvData]]] = {
    "transform": _run_transform,
    "subdiff": _run_subdiff,
    "verify": _run_verify,
    "witnesses": _run_witnesses,
    "relax": _run_relax,
}


def run_instance(
    path: str | Path,
    command: str,
    overrides: Mapping[str, Any] | None = None,
) -> RunReport:
    """Load, dispatch, and assemble the report for one instance file."""
    if command not in _RUNNERS:
        raise ValueError(f"unknown command {command!r}")
    inst = load_instance(path)
    params = inst.params.merged(**dict(overrides or {}))
    start = time.perf_counter()
    results, verdicts, csv = _RUNNERS[command](inst, params)
    wall = time.perf_counter() - start
    mismatches: dict[str, dict[str, bool]] = {}
    if inst.expected:
        for key, want in inst.expected.items():
            if key in verdicts and bool(verdicts[key]) != bool(want):
                mismatches[key] = {"expected": bool(want), "got": bool(verdicts[key])}
    return RunReport(
        instance=inst.name,
        command=command,
        parameters=_parameter_echo(params),
        results=results,
        verdicts=verdicts,
        expected=inst.expected,
        matches=not mismatches,
        mismatches=mismatches,
        wall_time=wall,
        csv=csv,
    )


def _thread_cap() -> int:
    raw = os.environ.get("FENCHEL_LAB_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        n = min(8, os.cpu_count() or 1)
    return n


def corpus_run(
    directory: str | Path,
    command: str,
    overrides: Mapping[str, Any] | None = None,
) -> tuple[dict[str, Any], int]:
    """Run every ``*.json`` instance under ``directory``; aggregate by name.

    Returns the aggregate payload and the exit code (worst per-instance code;
    an empty corpus is a format error, code 2).
    """
    files = sorted(Path(directory).glob("*.json"))
    if not files:
        return (
            {
                "command": command,
                "corpus": [],
                "summary": {"instances": 0, "error": "no instance files found"},
            },
            2,
        )

    def one(fp: Path) -> tuple[str, dict[str, Any], int]:
        try:
            report = run_instance(fp, command, overrides)
        except InstanceSchemaError as err:
            return (
                fp.stem,
                {"instance": fp.stem, "error": {"type": type(err).__name__, "message": str(err)}},
                2,
            )
        except FenchelLabError as err:
            return (
                fp.stem,
                {"instance": fp.stem, "error": {"type": type(err).__name__, "message": str(err)}},
                3,
            )
        return report.instance, report.payload(), 0 if report.matches else 1

    with ThreadPoolExecutor(max_workers=_thread_cap()) as pool:
        entries = list(pool.map(one, files))
    entries.sort(key=lambda item: item[0])
    codes = [code for _, _, code in entries]
    if any(c == 2 for c in codes):
        exit_code = 2
    elif any(c == 3 for c in codes):
        exit_code = 3
    elif any(c == 1 for c in codes):
        exit_code = 1
    else:
        exit_code = 0
    matched = sum(1 for c in codes if c == 0)
    payload = {
        "command": command,
        "corpus": [entry for _, entry, _ in entries],
        "summary": {
            "instances": len(entries),
            "matched": matched,
            "mismatched": [name for (name, _, code) in entries if code == 1],
            "errored": [name for (name, _, code) in entries if code >= 2],
        },
    }
    return payload, exit_code


def _corpus_table(payload: Mapping[str, Any]) -> str:
    lines = [f"corpus: {payload['summary']['instances']} instance(s), command {payload['command']}"]
    if "error" in payload["summary"]:
        lines.append(f"  {payload['summary']['error']}")
        return "\n".join(lines) + "\n"
    for entry in payload["corpus"]:
        name = entry.get("instance", "?")
        if "error" in entry:
            err = entry["error"]
            lines.append(f"  {name}: ERROR {err['type']}: {err['message']}")
            continue
        verdicts = entry.get("verdicts", {})
        verdict_text = (
            " ".join(f"{k}={'yes' if v else 'no'}" for k, v in sorted(verdicts.items()))
            or "-"
        )
        residuals = [
            s.get("residual")
            for s in entry.get("results", {}).get("statuses", [])
            if isinstance(s, dict)
        ]
        residual_text = ""
        finite = [r for r in residuals if isinstance(r, (int, float))]
        if residuals:
            worst = max(finite) if finite else "inf"
            residual_text = f"  worst_residual={worst:.3e}" if finite else "  worst_residual=inf"
        match_text = "ok" if entry.get("matches", True) else "MISMATCH"
        lines.append(f"  {name}: {match_text}  {verdict_text}{residual_text}")
    summary = payload["summary"]
    lines.append(
        f"matched {summary['matched']}/{summary['instances']}"
        + (f", mismatched: {', '.join(summary['mismatched'])}" if summary["mismatched"] else "")
        + (f", errored: {', '.join(summary['errored'])}" if summary["errored"] else "")
    )
    return "\n".join(lines) + "\n"


def _write_out(out: Path | None, text: str, csv: CsvData) -> None:
    if out is None:
        return
    if out.suffix.lower() == ".csv":
        header, rows = csv
        out.write_text(csv_text(header, rows), encoding="utf-8")
    else:
        out.write_text(text, encoding="utf-8")


def _dispatch(
    command: str,
    path: Path,
    splits: int | None,
    box_radius: float | None,
    directions: int | None,
    tol: float | None,
    output_format: str,
    out: Path | None,
) -> None:
    overrides = {
        "splits": splits,
        "box_radius": box_radius,
        "directions": directions,
        "tolerance": tol,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if path.is_dir():
        start = time.perf_counter()
        payload, code = corpus_run(path, command, overrides)
        wall = time.perf_counter() - start
        if output_format == "machine":
            text = machine_text(payload)
        else:
            text = _corpus_table(payload) + f"wall_time_s: {wall:.3f}\n"
        click.echo(text, nl=False)
        if out is not None and out.suffix.lower() != ".csv":
            out.write_text(text, encoding="utf-8")
        sys.exit(code)
    try:
        report = run_instance(path, command, overrides)
    except InstanceSchemaError as err:
        click.echo(f"schema error: {err}", err=True)
        sys.exit(2)
    except FenchelLabError as err:
        click.echo(f"{type(err).__name__}: {err}", err=True)
        sys.exit(3)
    payload = report.payload()
    if output_format == "machine":
        text = machine_text(payload)
    else:
        text = human_text(payload, report.wall_time)
    click.echo(text, nl=False)
    _write_out(out, text, report.csv)
    sys.exit(0 if report.matches else 1)


def _common_options(fn):
    options = [
        click.option("--splits", type=int, default=None, help="Budget splits per probe (default 32)."),
        click.option("--box-radius", type=float, default=None, help="Half-width of the comparison box (default 10)."),
        click.option("--directions", type=int, default=None, help="Support directions per comparison (default by dimension)."),
        click.option("--tol", type=float, default=None, help="Verdict tolerance (default 1e-6)."),
        click.option(
            "--format",
            "output_format",
            type=click.Choice(["human", "machine"]),
            default="human",
            show_default=True,
            help="Report rendering.",
        ),
        click.option(
            "--out",
            type=click.Path(dir_okay=False, writable=True, path_type=Path),
            default=None,
            help="Also write the report here (.csv writes the tabular export).",
        ),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


_PATH_ARG = click.argument(
    "path", type=click.Path(exists=True, path_type=Path)
)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="fenchel-lab")
def main() -> None:
    """Verification laboratory for convex regularization and approximate subdifferentials."""


@main.command()
@_PATH_ARG
@_common_options
def transform(path, splits, box_radius, directions, tol, output_format, out):
    """Conjugate and envelope of the instance's functions."""
    _dispatch("transform", path, splits, box_radius, directions, tol, output_format, out)


@main.command()
@_PATH_ARG
@_common_options
def subdiff(path, splits, box_radius, directions, tol, output_format, out):
    """Approximate subdifferential sets and thresholds at the probes."""
    _dispatch("subdiff", path, splits, box_radius, directions, tol, output_format, out)


@main.command()
@_PATH_ARG
@_common_options
def verify(path, splits, box_radius, directions, tol, output_format, out):
    """The four equivalent statements on a pair (f, g) over the probes."""
    _dispatch("verify", path, splits, box_radius, directions, tol, output_format, out)


@main.command()
@_PATH_ARG
@_common_options
def witnesses(path, splits, box_radius, directions, tol, output_format, out):
    """Relocated approximate-subgradient sequences for a sum decomposition."""
    _dispatch("witnesses", path, splits, box_radius, directions, tol, output_format, out)


@main.command()
@_PATH_ARG
@_common_options
def relax(path, splits, box_radius, directions, tol, output_format, out):
    """Convex relaxation of min f over the feasible set, with the split test."""
    _dispatch("relax", path, splits, box_radius, directions, tol, output_format, out)


if __name__ == "__main__":
    main()
