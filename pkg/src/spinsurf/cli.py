"""Command line front end: selftest, run, export, catalog.

Exit codes: 0 all tolerances pass, 1 a tolerance or solver failed,
2 configuration error. Artifacts go below ``--out`` or ``$SPINSURF_OUTPUT``
(default ``./spinsurf_out``).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .export import (
    FORMATS,
    SceneError,
    dumps,
    export_scene,
    fields_csv_text,
    load_scene,
    make_scene,
    write_text,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
OUTPUT_ENV = "SPINSURF_OUTPUT"


def output_root(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUTPUT_ENV) or "spinsurf_out")


def _parse_pair(text: str) -> tuple[int, int]:
    a, b = (int(x, 0) for x in text.split(","))
    return a, b


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    report, seconds = run_selftest(inject=args.inject_sign_error)
    out = output_root(args.out)
    write_text(out / "selftest.json", dumps(report))
    for name, suite in report["suites"].items():
        status = "PASS" if suite["passed"] else "FAIL"
        extra = f" failed={','.join(suite['failed'])}" if suite["failed"] else ""
        print(f"{status} {name:<13} max_residual={suite['max_residual']:.3e} "
              f"time={seconds[name]:.2f}s{extra}")
    print(f"report: {out / 'selftest.json'}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_run(args) -> int:
    from .chart import DegenerateSurface, FrameBranchError, InvalidGrid
    from .lie import DomainExit, UnsupportedKind
    from .pipelines import ConfigError, Scenario, run_scenario
    from .spinor import SolverFailure

    try:
        sc = Scenario.load(args.scenario)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else output_root(None) / (sc.output or sc.name)
    try:
        report, results = run_scenario(sc)
    except (ConfigError, UnsupportedKind, InvalidGrid) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverFailure, DomainExit, DegenerateSurface, FrameBranchError, ValueError) as exc:
        print(f"pipeline failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        write_text(out / "report.json", dumps({
            "scenario": sc.to_dict(), "passed": False,
            "error": {"type": type(exc).__name__, "message": str(exc)},
        }))
        return EXIT_FAIL
    write_text(out / "report.json", dumps(report))
    for stage, res in results.items():
        if res.scene is None:
            continue
        s = res.scene
        scene = make_scene(s["imm"], s["fields"], chart=s["chart"], spinor=s["spinor"])
        stem = stage.replace("-", "_")
        write_text(out / f"{stem}_scene.json", json.dumps(scene, sort_keys=True) + "\n")
        write_text(out / f"{stem}_residuals.csv", fields_csv_text(scene))
        for fmt_name in ("obj", "ply"):
            export_scene(scene, fmt_name, out, stem=stem)
    for stage, res in results.items():
        for c in res.checks:
            status = "PASS" if c.passed else "FAIL"
            rel = ">=" if c.kind == "min" else "<="
            print(f"{status} {stage}:{c.name} = {c.value:.4g} ({rel} {c.bound:g})")
    print(f"report: {out / 'report.json'}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_export(args) -> int:
    try:
        scene = load_scene(args.scene)
    except (OSError, json.JSONDecodeError, SceneError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else output_root(None) / "export"
    stem = Path(args.scene).stem
    for path in export_scene(scene, args.format, out, stem=stem):
        print(path)
    return EXIT_OK


def cmd_catalog(args) -> int:
    from .chart import FAMILY_NAMES, get_family
    from .lie import catalog_entries

    data = {
        "spaces": catalog_entries(),
        "families": {
            name: {"space": get_family(name).space.name, "description": get_family(name).description}
            for name in FAMILY_NAMES
        },
    }
    sys.stdout.write(dumps(data))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinsurf", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("selftest", help="run the exact-tier invariant suites")
    s.add_argument("--out", help="output directory")
    s.add_argument("--inject-sign-error", type=_parse_pair, default=None, metavar="A,B",
                   help=argparse.SUPPRESS)
    s.set_defaults(fn=cmd_selftest)

    r = sub.add_parser("run", help="run a scenario over its refinement ladder")
    r.add_argument("scenario")
    r.add_argument("--out", help="output directory")
    r.set_defaults(fn=cmd_run)

    e = sub.add_parser("export", help="export a scene to a mesh or table format")
    e.add_argument("scene")
    e.add_argument("--format", choices=FORMATS, required=True)
    e.add_argument("--out", help="output directory")
    e.set_defaults(fn=cmd_export)

    c = sub.add_parser("catalog", help="print the space catalog and surface families")
    c.set_defaults(fn=cmd_catalog)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
