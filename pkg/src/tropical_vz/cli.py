"""Command line entry point: ``tvz`` / ``python -m tropical_vz``.

stdout carries only the payload (JSON, DOT or TikZ); logs go to stderr.
Exit codes: 0 pass, 1 domain failure, 2 I/O or parse failure, 3 discrepancy.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from collections.abc import Sequence
from fractions import Fraction
from pathlib import Path
from typing import get_args

import pandas as pd
from loguru import logger
from tqdm import tqdm

from tropical_vz import threads_from_env
from tropical_vz.canonical_pl import enumerate_admissible, lambda_at, lifts_at
from tropical_vz.documents import FanDocument, load_cover, rational_map
from tropical_vz.errors import DocumentError, DomainError, TvzError
from tropical_vz.export import to_dot, to_tikz
from tropical_vz.fan_engine import a_align, check_fan, coarsen, equidim_reducedness_check
from tropical_vz.hyperelliptic_cover import validate
from tropical_vz.linform import format_rational, parse_rational
from tropical_vz.local_algebra import DEFAULT_TRUNCATION, GermKind, germ_report, load_corpus, table_germ

PASS, DOMAIN, DOCUMENT, DISCREPANCY = 0, 1, 2, 3


def _write(args: argparse.Namespace, payload: str) -> None:
    text = payload if payload.endswith("\n") else payload + "\n"
    if args.out is None:
        sys.stdout.write(text)
        return
    try:
        Path(args.out).write_text(text)
    except OSError as e:
        raise DocumentError(f"cannot write {args.out}: {e}") from e


def _dump(data: object) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False)


def _point(text: str | None, dim: int) -> tuple[Fraction, ...] | None:
    if text is None:
        return None
    try:
        point = tuple(parse_rational(x.strip()) for x in text.split(","))
    except ValueError as e:
        raise DomainError(f"cannot read the base point {text!r}") from e
    if len(point) != dim:
        raise DomainError(f"the base point needs {dim} coordinates, got {len(point)}")
    return point


def cmd_validate(args: argparse.Namespace) -> int:
    report = validate(load_cover(args.input))
    _write(args, report.model_dump_json(indent=2))
    return PASS if report.passed else DOMAIN


def cmd_enumerate(args: argparse.Namespace) -> int:
    cover = load_cover(args.input)
    names = list(cover.coordinates)
    functions = enumerate_admissible(cover)
    point = _point(args.point, cover.dim)
    rows = []
    for f in functions:
        row = {
            "support": f.support_vertex,
            "D": rational_map(f.D.as_dict()),
            "target_slopes": rational_map({k: p.slopes[0] for k, p in f.target_shadow.profiles.items()}),
            "source_slopes": rational_map({k: p.slopes[0] for k, p in f.source_function.profiles.items()}),
            "values": {v: f.source_function.vertex_values[v].to_json(names) for v in sorted(cover.source.vertex_ids)},
        }
        rows.append(row)
    payload: dict[str, object] = {"cover": cover.name, "functions": rows}
    if point is not None:
        payload["point"] = [format_rational(x) for x in point]
        payload["lifts"] = [
            {
                "support": lifted.label,
                "rule": lifted.rule,
                "trivial": lifted.is_trivial,
                "zero_vertex": lifted.zero_vertex,
            }
            for lifted in lifts_at(cover, functions, point)
        ]
    _write(args, _dump(payload))
    return PASS


def _fan(args: argparse.Namespace):
    cover = load_cover(args.input)
    threads = threads_from_env()
    fan = asyncio.run(a_align(cover, threads=threads))
    return coarsen(fan) if args.coarsen else fan


def cmd_subdivide(args: argparse.Namespace) -> int:
    fan = _fan(args)
    report = check_fan(fan)
    checks = equidim_reducedness_check(fan)
    document = FanDocument.from_fan(fan)
    problems = [
        *document.discrepancies,
        *report.problems,
        *(f"c{c.cone}: equidimensionality or reducedness fails" for c in checks if not c.passed),
    ]
    document = document.model_copy(update={"discrepancies": problems})
    _write(args, document.model_dump_json(indent=2))
    for problem in problems:
        logger.error(problem)
    return DISCREPANCY if problems else PASS


def cmd_classify(args: argparse.Namespace) -> int:
    fan = _fan(args)
    names = list(fan.cover.coordinates)
    rows = []
    for i, fan_cone in enumerate(tqdm(fan.cones, desc="classifying", disable=not args.verbose)):
        label = fan_cone.label
        delta = label.delta
        rows.append({
            "cone": f"c{i}",
            "rays": ";".join(",".join(map(str, r)) for r in fan_cone.cone.rays),
            "fiber": label.fiber.render(),
            "attachment": label.fiber.attachment,
            "d1_component": delta.d1_component,
            "non_geometric": label.fiber.non_geometric,
            "rho1": delta.rho1.render(names),
            "interior_weight": delta.interior_weight,
            "delta_weight": delta.delta_weight,
            "violations": "; ".join(delta.violations),
        })
    table = pd.DataFrame(rows, dtype=object)
    _write(args, _dump(table.to_dict(orient="records")))
    failed = bool(fan.discrepancies) or any(row["violations"] for row in rows)
    return DISCREPANCY if failed else PASS


def cmd_algebra(args: argparse.Namespace) -> int:
    order = args.truncation
    if args.corpus:
        entries = load_corpus()
        reports, mismatches = [], []
        for entry in tqdm(entries, desc="germs", disable=not args.verbose):
            report = germ_report(entry.algebra(order))
            reports.append(report.as_row())
            mismatches.extend(entry.mismatches(report))
        _write(args, _dump(pd.DataFrame(reports, dtype=object).to_dict(orient="records")))
        for problem in mismatches:
            logger.error(problem)
        return DISCREPANCY if mismatches else PASS
    kind, m = args.germ
    if kind not in get_args(GermKind):
        raise DomainError(f"unknown germ kind {kind!r}; choose one of {', '.join(get_args(GermKind))}")
    try:
        multiplicity = int(m)
    except ValueError as e:
        raise DomainError(f"the branch count must be an integer, got {m!r}") from e
    report = germ_report(table_germ(kind, multiplicity, order))
    _write(args, _dump(report.as_row()))
    return PASS


def cmd_export(args: argparse.Namespace) -> int:
    cover = load_cover(args.input)
    point = _point(args.point, cover.dim)
    region_data = lambda_at(cover, point) if point is not None else None
    render = to_dot if args.format == "dot" else to_tikz
    _write(args, render(cover, region_data))
    return PASS


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="write the payload to this file instead of stdout")
    common.add_argument("--verbose", action="store_true", help="log debug output to stderr")
    common.add_argument(
        "--truncation", type=int, default=DEFAULT_TRUNCATION, help="truncation order N for local algebra"
    )

    parser = argparse.ArgumentParser(prog="tvz", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("validate", parents=[common], help="check a cover document")
    p.add_argument("input")
    p.set_defaults(handler=cmd_validate)

    p = commands.add_parser("enumerate", parents=[common], help="list admissible functions")
    p.add_argument("input")
    p.add_argument("--point", default=None, help="base point p1,p2,... at which to lift")
    p.set_defaults(handler=cmd_enumerate)

    p = commands.add_parser("subdivide", parents=[common], help="build the fan Σ (or Σ′)")
    p.add_argument("input")
    p.add_argument("--coarsen", action="store_true", help="coarsen to Σ′")
    p.set_defaults(handler=cmd_subdivide)

    p = commands.add_parser("classify", parents=[common], help="fibre type of every cone")
    p.add_argument("input")
    p.add_argument("--coarsen", action="store_true", help="classify the cones of Σ′")
    p.set_defaults(handler=cmd_classify)

    p = commands.add_parser("algebra", parents=[common], help="invariants of curve germs")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--germ", nargs=2, metavar=("KIND", "M"))
    group.add_argument("--corpus", action="store_true")
    p.set_defaults(handler=cmd_algebra)

    p = commands.add_parser("export", parents=[common], help="draw a cover as DOT or TikZ")
    p.add_argument("input")
    p.add_argument("--format", choices=("dot", "tikz"), default="dot")
    p.add_argument("--point", default=None, help="base point at which to draw the levels of λ")
    p.set_defaults(handler=cmd_export)
    return parser


def _configure_logging(verbose: bool) -> None:
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else "WARNING")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return DOCUMENT if e.code else PASS
    _configure_logging(args.verbose)
    try:
        return args.handler(args)
    except TvzError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
