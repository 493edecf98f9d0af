"""Command-line front end: ``mimcav spectrum|couplings|modes|validate``.

Exit statuses: 0 success, 1 validation failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, SweepRange
from .couplings import (
    CLOSED_FORM_SLOPE_ORIENTATION,
    b_closed_form,
    delta_closed_form,
    extract_couplings_numeric,
    m1_closed_form,
)
from .errors import DomainError, NumericalError, SingularPointError, StencilContaminationError
from .model import CavityGeometry
from .modes import basis, check_spectrum_symmetry, coupling_term_counts, symmetric_count
from .output import header, json_document, surface_csv
from .spectrum import coordinate_positions, sweep_surface
from .validation import TOLERANCES, run_suite

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
SYMMETRY_TOL = 1e-10


def _window(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}")
    return (lo, hi)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON or YAML run configuration")
    g = common.add_argument_group("geometry")
    g.add_argument("--reflectivity", type=float)
    g.add_argument("--half-length", type=float)
    g.add_argument("--light-speed", type=float)
    g.add_argument("--n-membranes", type=int)
    o = common.add_argument_group("operation")
    o.add_argument("--sweep", help="swept coordinate(s), comma separated: q, Q or Q1..QN")
    o.add_argument("--range", action="append", dest="ranges", metavar="LO:HI:NPTS",
                   help="grid for each swept coordinate (repeat for 2-D sweeps)")
    o.add_argument("--fix", action="append", metavar="COORD=VALUE", help="hold a coordinate at a value")
    o.add_argument("--k-window", type=_window, metavar="LO:HI")
    o.add_argument("--multiplet", type=int)
    o.add_argument("--branches", help="comma separated branch indices")
    o.add_argument("--q0", type=float)
    o.add_argument("--Q0", type=float)
    o.add_argument("--step", type=float)
    o.add_argument("--mode-index", type=int)
    o.add_argument("--amplitude", type=float)
    o.add_argument("--oversample", type=int)
    w = common.add_argument_group("output")
    w.add_argument("--out", help="output path (default: stdout; validate writes validation_report.json)")
    w.add_argument("--format", choices=["csv", "json"])
    w.add_argument("--precision", type=int)
    w.add_argument("--print-config", action="store_true", help="print the effective configuration and exit")

    parser = argparse.ArgumentParser(prog="mimcav", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="branch frequencies over a coordinate sweep (CSV)")
    sub.add_parser("couplings", parents=[common], help="expansion coefficients about an operating point (JSON)")
    sub.add_parser("modes", parents=[common], help="collective-mode basis, counts and symmetry residuals (JSON)")
    sub.add_parser("validate", parents=[common], help="run the validation suite")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    geometry = {k: v for k, v in {
        "reflectivity": args.reflectivity, "half_length": args.half_length,
        "light_speed": args.light_speed, "n_membranes": args.n_membranes}.items() if v is not None}
    operation = {k: v for k, v in {
        "k_window": args.k_window, "multiplet": args.multiplet, "q0": args.q0, "Q0": args.Q0,
        "step": args.step, "mode_index": args.mode_index, "amplitude": args.amplitude,
        "oversample": args.oversample}.items() if v is not None}
    if args.sweep:
        operation["sweep"] = [s.strip() for s in args.sweep.split(",")]
    if args.ranges:
        operation["ranges"] = [SweepRange.parse(r).model_dump() for r in args.ranges]
    if args.fix:
        fixed = {}
        for item in args.fix:
            name, _, value = item.partition("=")
            try:
                fixed[name.strip()] = float(value)
            except ValueError:
                raise ConfigError(f"--fix expects COORD=VALUE, got {item!r}")
        operation["fixed"] = fixed
    if args.branches:
        operation["branches"] = [int(b) for b in args.branches.split(",")]
    output = {k: v for k, v in {"path": args.out, "format": args.format,
                                "precision": args.precision}.items() if v is not None}
    return cfg.updated(geometry, operation, output)


def make_geometry(cfg: RunConfig) -> CavityGeometry:
    g = cfg.geometry
    try:
        return CavityGeometry(g.n_membranes, g.reflectivity, g.half_length, g.light_speed)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_spectrum(cfg: RunConfig, geom: CavityGeometry):
    op = cfg.operation
    grids = [np.linspace(r.lo, r.hi, r.points) for r in op.ranges]
    # every corner of the sweep must be a valid layout before any root finding starts
    try:
        for corner in np.array(np.meshgrid(*[[g[0], g[-1]] for g in grids])).reshape(len(grids), -1).T:
            coordinate_positions(geom, {**op.fixed, **dict(zip(op.sweep, corner))})
    except DomainError as exc:
        raise ConfigError(f"sweep leaves the valid geometry: {exc}") from exc
    surface = sweep_surface(geom, op.sweep, grids, op.k_window, op.multiplets, op.fixed, op.oversample)
    meta = header(geom, "spectrum", sweep=op.sweep, fixed=op.fixed, k_window=list(op.k_window),
                  branches=[list(b) for b in surface.branches], continuous=surface.ok)
    prec = cfg.output.precision
    if (cfg.output.format or "csv") == "csv":
        text = surface_csv(surface, meta, prec)
    else:
        cols = [*surface.axes, "multiplet_n", "branch_i", "omega", "continuity_flag"]
        text = json_document({"columns": cols, "rows": [list(r) for r in surface.rows()]}, meta, prec)
    return text, (EXIT_OK if surface.ok else EXIT_NUMERIC)


def _closed_forms(geom, n, i, q0, Q0):
    L = geom.half_subcavity_length
    if geom.membrane_count != 2 or q0 != 2 * L or Q0 != 0.0 or i not in (1, 2, 3):
        return {}
    out = {"delta": delta_closed_form(n, i, geom)}
    try:
        raw = b_closed_form(n, i, geom)
        out["b_rel_as_written"] = raw
        out["b_rel"] = CLOSED_FORM_SLOPE_ORIENTATION * raw
    except SingularPointError as exc:
        out["b_rel_error"] = str(exc)
    if i == 1:
        try:
            out["m_rel"] = m1_closed_form(n, geom)
        except SingularPointError as exc:
            out["m_rel_error"] = str(exc)
    return out


def cmd_couplings(cfg: RunConfig, geom: CavityGeometry):
    op = cfg.operation
    if geom.membrane_count != 2:
        raise ConfigError("couplings are defined for two membranes (q, Q expansion)")
    q0 = 2 * geom.half_subcavity_length if op.q0 is None else op.q0
    meta = header(geom, "couplings", multiplet=op.multiplet, q0=q0, Q0=op.Q0, step=op.step,
                  coordinates="q = membrane separation, Q = centre of mass")
    results, status = [], EXIT_OK
    for i in op.branches:
        entry = {"n": op.multiplet, "i": i}
        try:
            cc = extract_couplings_numeric(geom, op.multiplet, i, q0, op.Q0, op.step)
        except StencilContaminationError as exc:
            entry["error"] = {"message": str(exc), "stencil_point": list(exc.point or ())}
            results.append(entry)
            status = EXIT_NUMERIC
            continue
        entry["numeric"] = cc.to_dict()
        closed = _closed_forms(geom, op.multiplet, i, q0, op.Q0)
        if closed:
            entry["closed_form"] = closed
            entry["deviation"] = {
                key: {"abs": abs(entry["numeric"][key] - value),
                      "rel": abs(entry["numeric"][key] - value) / abs(value) if abs(value) > 1e-12 else None}
                for key, value in closed.items() if key in ("delta", "b_rel", "m_rel")}
        results.append(entry)
    return json_document({"coefficients": results}, meta, cfg.output.precision), status


def cmd_modes(cfg: RunConfig, geom: CavityGeometry):
    op = cfg.operation
    b = basis(geom.membrane_count)
    indices = range(geom.membrane_count) if op.mode_index is None else [op.mode_index]
    if op.mode_index is not None and op.mode_index >= geom.membrane_count:
        raise ConfigError(f"mode index {op.mode_index} out of range for {geom.membrane_count} membranes")
    remaining, total = coupling_term_counts(geom.membrane_count) if geom.membrane_count >= 2 else (0, 0)
    checks = []
    for idx in indices:
        res = check_spectrum_symmetry(geom, b, idx, op.amplitude, op.k_window).to_dict()
        residual = float("inf") if res["residual"] == "inf" else res["residual"]
        res["flag_agrees"] = (residual < SYMMETRY_TOL) == res["flagged_symmetric"]
        checks.append(res)
    result = {
        "basis": b.to_dict(),
        "symmetric_count": symmetric_count(geom.membrane_count),
        "flagged_symmetric_count": int(sum(b.symmetric)),
        "coupling_terms": {"remaining": remaining, "total": total,
                           "remaining_note": None if remaining is not None else "not specified for odd N"},
        "symmetry": checks,
    }
    meta = header(geom, "modes", amplitude=op.amplitude, k_window=list(op.k_window))
    ok = all(c["flag_agrees"] for c in checks)
    return json_document(result, meta, cfg.output.precision), (EXIT_OK if ok else EXIT_NUMERIC)


def cmd_validate(cfg: RunConfig, geom: CavityGeometry):
    unknown = set(cfg.operation.tolerances) - set(TOLERANCES)
    if unknown:
        raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")
    report = run_suite(geom, cfg.operation.tolerances)
    print(report.summary())
    meta = header(geom, "validate")
    return json_document(report.to_dict(), meta, cfg.output.precision), \
        (EXIT_OK if report.passed else EXIT_VALIDATION)


COMMANDS = {"spectrum": cmd_spectrum, "couplings": cmd_couplings, "modes": cmd_modes, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.print_config:
            print(cfg.dumps())
            return EXIT_OK
        geom = make_geometry(cfg)
        text, status = COMMANDS[args.command](cfg, geom)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    path = cfg.output.path or ("validation_report.json" if args.command == "validate" else None)
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
