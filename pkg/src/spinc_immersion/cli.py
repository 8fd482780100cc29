"""Command-line driver: ``spinc-immersion {verify-algebra,verify-scenario,convergence,reconstruct}``.

Exit codes: 0 all checks passed, 1 a check failed, 2 bad input (usage,
unreadable or malformed files, out-of-domain grids).

``--config FILE`` reads ``key = value`` lines (an optional ``[section]``
header is ignored); every key is the long name of a flag of the chosen
command.  Values from the file are inserted before the command-line flags,
so flags given explicitly win.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from pathlib import Path

import numpy as np

from . import io, pipeline, plotting, scenarios, weierstrass
from .algebra_checks import broken_tau, run_algebra_suite, run_spin_lift_suite
from .clifford import tau
from .errors import (
    DomainExceeded,
    GridMismatch,
    InputError,
    LiftDiscontinuity,
    NotARealVector,
    NotClosedEnough,
    NotSpinC,
    RankDeficient,
)

log = logging.getLogger("spinc_immersion")

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
FORMATS = ("obj", "ply", "json", "csv", "png")
_FAULTS = {"tau": broken_tau}


def parse_grid(text: str) -> tuple[int, ...]:
    try:
        extents = tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like N or NxM[xK], got {text!r}") from None
    if not extents or min(extents) < 1:
        raise argparse.ArgumentTypeError(f"grid extents must be positive, got {text!r}")
    return extents


def parse_grids(text: str) -> list[tuple[int, ...]]:
    return [parse_grid(p) for p in text.split(",") if p.strip()]


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _key_value(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    return key.strip(), value.strip()


def _formats(text: str) -> list[str]:
    out = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in out if f not in FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s) {bad}; choose from {', '.join(FORMATS)}")
    return out


def _add_common(p: argparse.ArgumentParser, formats: str):
    p.add_argument("--out", type=Path, default=Path("."), help="output directory (created if missing)")
    p.add_argument("--format", type=_formats, default=_formats(formats),
                   help=f"comma-separated artifact formats from {{{','.join(FORMATS)}}} (default {formats})")
    p.add_argument("--config", type=Path, help="key = value file; explicit flags override it")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_scenario_flags(p: argparse.ArgumentParser):
    p.add_argument("--scenario", required=True, choices=sorted(scenarios.CATALOG))
    p.add_argument("--gauge", default="none", help="none, const:THETA or uv")
    p.add_argument("--param", type=_key_value, action="append", default=[],
                   help="scenario parameter or chart bound override, e.g. radius=2 (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinc-immersion", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-algebra", help="seeded Clifford and spin-lift property suites")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.add_argument("--lift-trials", type=_positive_int, default=500)
    p.add_argument("--tol-algebra", type=_positive_float, default=1e-12)
    p.add_argument("--tol-lift", type=_positive_float, default=1e-9)
    p.add_argument("--inject-fault", choices=sorted(_FAULTS), help=argparse.SUPPRESS)
    _add_common(p, "json")

    p = sub.add_parser("verify-scenario", help="run the full pipeline on one scenario and grid")
    _add_scenario_flags(p)
    p.add_argument("--grid", type=parse_grid, default=(64,), help="N or NxM[xK]")
    p.add_argument("--spacing", type=_positive_float, help="grid spacing; default spans the chart")
    for key in pipeline.CHECK_ORDER:
        p.add_argument(f"--tol-{key}", type=_positive_float, dest=f"tol_{key}",
                       help=f"absolute tolerance for {key}")
    _add_common(p, "json,csv,png")

    p = sub.add_parser("convergence", help="refinement study with fitted orders")
    _add_scenario_flags(p)
    p.add_argument("--grids", type=parse_grids, default=None, help="comma list, e.g. 32,64,128")
    p.add_argument("--order-floor", type=_key_value, action="append", default=[],
                   help="KEY=P minimum accepted order (repeatable)")
    _add_common(p, "json,csv,png")

    p = sub.add_parser("reconstruct", help="integrate xi from a spinor dump and export the immersion")
    p.add_argument("--spinor", type=Path, required=True)
    p.add_argument("--connection", type=Path, help="optional U(1) connection dump (grid is cross-checked)")
    p.add_argument("--output", type=Path, help="mesh path (default OUT/reconstructed.<format>)")
    p.add_argument("--threshold", type=_positive_float, default=weierstrass.CLOSED_THRESHOLD,
                   help="closedness pre-check threshold")
    p.add_argument("--allow-open", action="store_true", help="warn instead of failing the closedness check")
    p.add_argument("--reference", choices=sorted(scenarios.CATALOG),
                   help="scenario to align against and report the RMS distance")
    _add_common(p, "obj")
    return parser


def _config_args(argv: list[str]) -> list[str]:
    """Expand ``--config FILE`` into flags placed right after the command name."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    if known.config is None or not argv:
        return argv
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        text = known.config.read_text()
        if not text.lstrip().startswith("["):
            text = "[run]\n" + text
        cp.read_string(text, source=str(known.config))
    except OSError as exc:
        raise InputError(f"cannot read config {known.config}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise InputError(f"config {known.config}: {exc}", getattr(exc, "lineno", None), 1) from None
    extra = []
    for section in cp.sections():
        for key, value in cp.items(section):
            flag = "--" + key.strip().replace("_", "-")
            if value.lower() in ("true", "yes", "on"):
                extra.append(flag)
            elif value.lower() not in ("false", "no", "off"):
                extra += [flag, value]
    return argv[:1] + extra + argv[1:]


def _prepare_out(args) -> Path:
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _params(pairs) -> dict:
    out = {}
    for key, value in pairs:
        if key in ("lower", "upper"):
            out[key] = tuple(float(x) for x in value.split(","))
        else:
            try:
                out[key] = float(value)
            except ValueError:
                raise InputError(f"parameter {key} needs a number, got {value!r}") from None
    return out


def cmd_verify_algebra(args) -> int:
    out = _prepare_out(args)
    tau_fn = _FAULTS[args.inject_fault] if args.inject_fault else tau
    results = run_algebra_suite(args.seed, args.trials, tol=args.tol_algebra, tau_fn=tau_fn)
    results += run_spin_lift_suite(args.seed, args.lift_trials, tol=args.tol_lift)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<32} max error {r.max_error:.3e}  (tol {r.tol:g})")
    failing = next((r.name for r in results if not r.passed), None)
    report = {"seed": args.seed, "trials": args.trials, "lift_trials": args.lift_trials,
              "fault": args.inject_fault, "checks": [r.to_json() for r in results],
              "first_failure": failing, "verdict": "pass" if failing is None else "fail"}
    io.write_json(out / "algebra_report.json", report)
    if failing:
        print(f"check failed: {failing}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_PASS


def _tolerance_overrides(args) -> dict:
    return {k: getattr(args, f"tol_{k}") for k in pipeline.CHECK_ORDER if getattr(args, f"tol_{k}") is not None}


def _write_scenario_artifacts(run: pipeline.ScenarioRun, out: Path, formats: list[str], stem: str):
    grid = run.patch.grid
    if "csv" in formats:
        io.write_residual_csv(out / f"{stem}_killing.csv", run.residual.norms, grid)
        io.write_node_csv(out / f"{stem}_nodes.csv", {
            "killing": run.residual.per_node,
            "dxi": run.closedness,
            "metric": run.reports["metric"].per_node,
            "B": run.reports["B"].per_node,
            "normconn": run.reports["normconn"].per_node,
            "roundtrip": np.linalg.norm(run.aligned - run.patch.F, axis=-1),
        }, grid)
    if "obj" in formats:
        io.write_obj(out / f"{stem}.obj", run.aligned, grid)
    if "ply" in formats:
        io.write_ply(out / f"{stem}.ply", run.aligned, grid)
    if "json" in formats:
        io.write_json(out / f"{stem}_spinor.json", io.spinor_to_json(run.phi))
        io.write_json(out / f"{stem}_connection.json", io.connection_to_json(run.A))
    if "png" in formats:
        plotting.residual_heatmap(run.residual.per_node, grid, out / f"{stem}_killing.png",
                                  title=f"{run.summary['scenario']}: Killing residual per node")


def cmd_verify_scenario(args) -> int:
    out = _prepare_out(args)
    run = pipeline.run_scenario(args.scenario, args.grid if len(args.grid) > 1 else args.grid[0],
                                gauge=args.gauge, spacing=args.spacing, params=_params(args.param),
                                tolerances=_tolerance_overrides(args))
    s = run.summary
    stem = s["scenario"]
    io.write_json(out / f"{stem}_summary.json", s)
    _write_scenario_artifacts(run, out, args.format, stem)
    for key in pipeline.CHECK_ORDER:
        print(f"{'PASS' if s['passed'][key] else 'FAIL'}  {key:<10} tol {s['tolerances'][key]:.3e}")
    print(f"max_killing_residual {s['max_killing_residual']:.3e}  roundtrip_rms {s['roundtrip_rms']:.3e}")
    if s["first_failure"]:
        print(f"check failed: {s['first_failure']}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_PASS


def cmd_convergence(args) -> int:
    out = _prepare_out(args)
    scenario = scenarios.get(args.scenario)
    grids = args.grids or ([(16,) * 3, (32,) * 3, (64,) * 3] if scenario.n == 3 else [(32, 32), (64, 64), (128, 128)])
    floors = {}
    for key, value in args.order_floor:
        if key not in pipeline.ORDER_FLOORS:
            raise InputError(f"unknown order key {key!r}")
        floors[key] = float(value)
    report = pipeline.convergence(args.scenario, [g if len(g) > 1 else g[0] for g in grids],
                                  gauge=args.gauge, params=_params(args.param), floors=floors)
    stem = f"{report['scenario']}_convergence"
    io.write_json(out / f"{stem}.json", report)
    if "csv" in args.format:
        with open(out / f"{stem}.csv", "w") as fh:
            keys = list(report["errors"])
            fh.write("h," + ",".join(keys) + "\n")
            for i, h in enumerate(report["h"]):
                fh.write(repr(h) + "," + ",".join(repr(report["errors"][k][i]) for k in keys) + "\n")
    if "png" in args.format:
        plotting.convergence_figure(report, out / f"{stem}.png")
    for key, p in report["orders"].items():
        shown = p if isinstance(p, str) else f"{p:.3f}"
        ok = report["order_passed"][key]
        print(f"{'PASS' if ok else 'FAIL'}  order {key:<10} {shown:>8}  (floor {report['order_floors'][key]})")
    if report["first_failure"]:
        print(f"check failed: order of {report['first_failure']}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_PASS


def cmd_reconstruct(args) -> int:
    out = _prepare_out(args)
    phi = io.load_spinor(args.spinor)
    if args.connection is not None:
        A = io.load_connection(args.connection)
        if A.grid != phi.grid:
            raise InputError(f"connection grid {A.grid.extents} does not match spinor grid {phi.grid.extents}")
    xi = weierstrass.build_one_form(phi)
    base = (0,) * phi.grid.n
    rec = weierstrass.integrate_one_form(xi, base, threshold=args.threshold, strict=not args.allow_open)
    F = rec.F
    info = {"grid": phi.grid.to_json(), "closedness": rec.closedness, "path_discrepancy": rec.path_discrepancy,
            "scheme": rec.scheme, "basepoint": list(base)}
    if args.reference:
        ref = scenarios.sample(scenarios.get(args.reference), phi.grid)
        align = weierstrass.rigid_align(F, ref.F)
        F = F @ align.rotation.T + align.translation
        info["reference"] = args.reference
        info["roundtrip_rms"] = align.rms
        print(f"aligned RMS against {args.reference}: {align.rms:.3e}")
    fmt = args.format[0] if args.format else "obj"
    target = args.output or out / f"reconstructed.{fmt}"
    if fmt == "obj":
        io.write_obj(target, F, phi.grid)
    elif fmt == "ply":
        io.write_ply(target, F, phi.grid)
    elif fmt == "json":
        io.write_json(target, io.immersion_to_json(phi.grid, F, **info))
    else:
        raise InputError(f"reconstruct writes obj, ply or json, not {fmt}")
    io.write_json(out / "reconstruct_report.json", info)
    print(f"wrote {target}  closedness {rec.closedness:.3e}  path discrepancy {rec.path_discrepancy:.3e}")
    return EXIT_PASS


COMMANDS = {
    "verify-algebra": cmd_verify_algebra,
    "verify-scenario": cmd_verify_scenario,
    "convergence": cmd_convergence,
    "reconstruct": cmd_reconstruct,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _config_args(argv)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InputError, DomainExceeded, GridMismatch, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NotClosedEnough, NotARealVector, NotSpinC, RankDeficient, LiftDiscontinuity) as exc:
        print(f"check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
