"""Command-line front end.

Exit status: 0 success, 1 a check failed, 2 bad input, 3 an integral that
had to converge did not.  Outputs are written once, atomically, and are
byte-identical across reruns with the same arguments and seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import MaterialConfigError, load_material
from .errors import DivergenceError
from .fluctuations import (
    charge_conservation_check,
    fE_consistency_check,
    noise_covariance,
    susceptibility_reconstruction,
)
from .green import verify_grel
from .material import coupling_tensor_k, eval_permittivity, kk_reconstruct_real, permittivity_tensor
from .quadrature import THERMAL_MODES, QuadratureConfig
from .spectra import (
    LOCAL_DIVERGENCE,
    ThermalConfig,
    b_field_spectral_density,
    field_intensity_spectrum,
    local_limit_scan,
    spectrum_point,
    thermal_total_intensity,
)
from .units import (
    EPS0,
    UNIT_SYSTEMS,
    omega_to_si,
    spectral_intensity_to_si,
    temperature_to_si,
    total_intensity_to_si,
)

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2, 3

SPECTRUM_COLUMNS = ["omega", "T", "weight_mode", "c_perp", "c_par", "c_total", "method", "error_estimate",
                    "units"]
CROSS_CHECK_TOL = 1e-6
KK_TOL = 1e-4
ALGEBRAIC_TOL = {"coupling_identity": 1e-12, "green_identity": 1e-12, "charge_conservation": 1e-14,
                 "noise_covariance": 1e-12}


class InputError(Exception):
    pass


class ReportError(ValueError):
    pass


# ---------------------------------------------------------------- output


def _clean(value):
    """JSON-safe copy: numpy scalars to floats, non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def dumps_json(data) -> str:
    return json.dumps(_clean(data), sort_keys=True, indent=2) + "\n"


def write_atomic(path, text: str):
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(args, text: str):
    if args.out:
        try:
            write_atomic(args.out, text)
        except OSError as exc:
            raise InputError(f"cannot write {args.out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(columns, rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buffer.getvalue()


# ---------------------------------------------------------------- reports


def make_check(name, residual, tolerance, converged=True, **extra) -> dict:
    residual = float(residual)
    check = {"name": name, "residual": residual, "tolerance": float(tolerance),
             "passed": bool(converged and math.isfinite(residual) and residual < tolerance),
             "converged": bool(converged)}
    check.update(extra)
    return check


def make_report(command, model, units, checks, **extra) -> dict:
    passed = sum(c["passed"] for c in checks)
    report = {"command": command, "material": model.as_dict(), "units": units, "checks": checks,
              "summary": {"total": len(checks), "passed": passed, "failed": len(checks) - passed,
                          "all_passed": passed == len(checks)}}
    report.update(extra)
    return report


def report_status(report) -> int:
    checks = report["checks"]
    if any(not c.get("converged", True) for c in checks):
        return EXIT_NONCONVERGED
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_CHECK


def report_render(report) -> str:
    """Header with counts, then one line per check in report order."""
    if not isinstance(report, dict) or not isinstance(report.get("checks"), list):
        raise ReportError("report must be an object with a 'checks' list")
    lines = []
    failed = 0
    for i, check in enumerate(report["checks"]):
        try:
            name, residual = str(check["name"]), float(check["residual"])
            tolerance, passed = float(check["tolerance"]), check["passed"]
        except (KeyError, TypeError, ValueError):
            raise ReportError(f"check #{i} is missing name/residual/tolerance/passed") from None
        if not isinstance(passed, bool):
            raise ReportError(f"check #{i}: 'passed' must be a boolean")
        failed += not passed
        lines.append(f"{name:<32} residual={residual:.3e}  tolerance={tolerance:.1e}  "
                     f"{'PASS' if passed else 'FAIL'}")
    total = len(report["checks"])
    header = f"{report.get('command', 'report')}: {total} checks, {total - failed} passed, {failed} failed"
    return "\n".join([header, *lines]) + "\n"


# ---------------------------------------------------------------- helpers


def quad_config(args) -> QuadratureConfig:
    try:
        return QuadratureConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol,
                                max_subdivisions=args.max_subdivisions)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def omega_grid(args) -> np.ndarray:
    if not args.omega_min > 0:
        raise InputError("--omega-min must be > 0")
    if args.points < 1:
        raise InputError("--points must be >= 1")
    if args.points == 1:
        return np.array([args.omega_min])
    if not args.omega_max > args.omega_min:
        raise InputError("--omega-max must exceed --omega-min")
    return np.linspace(args.omega_min, args.omega_max, args.points)


def thermal_config(args, default_mode="full") -> ThermalConfig:
    if not args.temperature >= 0:
        raise InputError("--temperature must be >= 0")
    return ThermalConfig(args.temperature, args.mode or default_mode)


def random_points(rng, n, k_max=5.0, omega_range=(0.05, 5.0)):
    directions = rng.normal(size=(n, 3))
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    kvecs = directions * rng.uniform(0.0, k_max, size=(n, 1))
    omegas = rng.uniform(*omega_range, size=n)
    return kvecs, omegas


def spectrum_row(point, units, model_name=None) -> dict:
    si = units == "si"
    spec = spectral_intensity_to_si if si else float
    row = {"omega": omega_to_si(point.omega) if si else point.omega,
           "T": temperature_to_si(point.T) if si else point.T,
           "weight_mode": point.weight_mode, "c_perp": spec(point.c_perp),
           "c_par": spec(point.c_par) if point.c_par is not None else point.divergence,
           "c_total": spec(point.c_total) if point.c_total is not None else point.divergence,
           "method": point.method, "error_estimate": spec(point.error_estimate), "units": units}
    if model_name is not None:
        row["model"] = model_name
    return row


# ---------------------------------------------------------------- commands


def cmd_validate(args, model) -> int:
    rng = np.random.default_rng(args.seed)
    quad = quad_config(args)
    kvecs, omegas = random_points(rng, args.samples)
    zs = rng.normal(size=(args.samples, 3)) + 1j * rng.normal(size=(args.samples, 3))

    coupling, green, charge, noise = [], [], [], []
    for kvec, w, z in zip(kvecs, omegas, zs):
        k = float(np.linalg.norm(kvec))
        khat = kvec / k if k > 0 else np.array([0.0, 0.0, 1.0])
        F = coupling_tensor_k(model, kvec, w)
        target = 2 * EPS0 * w / math.pi * permittivity_tensor(eval_permittivity(model, k, w), khat).imag
        coupling.append(np.max(np.abs(F @ F - target)) / max(1.0, np.max(np.abs(target))))
        green.append(verify_grel(model, kvec, w))
        j_norm = w * np.linalg.norm(F @ z)
        charge.append(charge_conservation_check(model, kvec, w, z) / max(k * j_norm, 1e-300))
        noise.append(noise_covariance(model, kvec, w).identity_residual)
    checks = [make_check(name, max(values), ALGEBRAIC_TOL[name], samples=args.samples)
              for name, values in (("coupling_identity", coupling), ("green_identity", green),
                                   ("charge_conservation", charge), ("noise_covariance", noise))]

    tolerance = 10 * quad.rel_tol
    kvecs, omegas = random_points(rng, args.integral_samples, k_max=3.0, omega_range=(0.1, 3.0))
    results = {"susceptibility_transverse": [], "susceptibility_longitudinal": [], "fE_consistency": []}
    for kvec, w in zip(kvecs, omegas):
        khat = kvec / np.linalg.norm(kvec)
        e_perp = np.cross(khat, [1.0, 0.0, 0.0] if abs(khat[0]) < 0.9 else [0.0, 1.0, 0.0])
        e_perp /= np.linalg.norm(e_perp)
        results["susceptibility_transverse"].append(susceptibility_reconstruction(model, kvec, w, e_perp, quad))
        results["susceptibility_longitudinal"].append(susceptibility_reconstruction(model, kvec, w, khat, quad))
        results["fE_consistency"].append(fE_consistency_check(model, kvec, w, quad))
    for name, recs in results.items():
        checks.append(make_check(name, max(r.relative_residual for r in recs), tolerance,
                                 all(r.converged for r in recs), samples=len(recs)))

    report = make_report("validate", model, args.units, checks, seed=args.seed,
                         quadrature={"rel_tol": quad.rel_tol, "abs_tol": quad.abs_tol})
    emit(args, dumps_json(report))
    if args.out:
        sys.stdout.write(report_render(report))
    return report_status(report)


def cmd_spectrum(args, model) -> int:
    grid = omega_grid(args)
    thermal = thermal_config(args)
    quad = quad_config(args)
    points = field_intensity_spectrum(model, grid, thermal, quad, method=args.method, workers=args.workers)
    status = EXIT_OK if all(p.converged for p in points) else EXIT_NONCONVERGED
    if args.method == "closed_form" and model.A > 0:
        # Independent quadrature cross-check; its discrepancy is the error column.
        checked = []
        for point in points:
            other = spectrum_point(model, point.omega, thermal, quad, "quadrature")
            if not other.converged:
                status = EXIT_NONCONVERGED
            a, b = (point.c_total, other.c_total) if point.c_total is not None else (point.c_perp, other.c_perp)
            gap = abs(a - b)
            if a != 0 and gap / abs(a) > CROSS_CHECK_TOL and status == EXIT_OK:
                status = EXIT_CHECK
            checked.append(replace(point, error_estimate=gap))
        points = checked
    emit(args, render_csv(SPECTRUM_COLUMNS, [spectrum_row(p, args.units) for p in points]))
    return status


def cmd_compare_local(args, model) -> int:
    if model.beta == 0:
        raise InputError("compare-local needs a material with beta > 0")
    grid = omega_grid(args)
    thermal = thermal_config(args)
    rows = []
    for name, m in (("nonlocal", model), ("local", model.local_counterpart())):
        for point in field_intensity_spectrum(m, grid, thermal, method="closed_form"):
            row = spectrum_row(point, args.units, name)
            row["beta"] = m.beta
            rows.append(row)
    emit(args, render_csv(["model", "beta", *SPECTRUM_COLUMNS], rows))
    return EXIT_OK


def cmd_thermal_total(args, model) -> int:
    mode = args.mode or "thermal_only"
    if not args.temperature >= 0:
        raise InputError("--temperature must be >= 0")
    out = {"command": "thermal-total", "material": model.as_dict(), "units": args.units,
           "temperature": temperature_to_si(args.temperature) if args.units == "si" else args.temperature,
           "mode": mode}
    status = EXIT_OK
    try:
        res = thermal_total_intensity(model, args.temperature, quad_config(args), mode)
    except DivergenceError as exc:
        out.update(value=None, error_estimate=None, converged=False, divergent=True, message=str(exc),
                   diagnosis=exc.diagnosis.as_dict() if exc.diagnosis else None)
    else:
        convert = total_intensity_to_si if args.units == "si" else float
        out.update(value=convert(res.value), error_estimate=convert(res.error_estimate),
                   converged=res.converged, divergent=False, diagnosis=None)
        if not res.converged:
            status = EXIT_NONCONVERGED
    emit(args, dumps_json(out))
    return status


def cmd_local_limit_scan(args, model) -> int:
    betas = [float(b) for b in args.betas.split(",")]
    if any(not b > 0 for b in betas):
        raise InputError("--betas must all be > 0; beta = 0 is reported as a divergence row")
    rows = local_limit_scan(model, betas, args.omega)
    rows.append({"beta": 0.0, "transverse": rows[0]["transverse"], "longitudinal": LOCAL_DIVERGENCE,
                 "longitudinal_beta3": LOCAL_DIVERGENCE})
    for row in rows:
        row["omega"] = args.omega
    emit(args, render_csv(["beta", "omega", "transverse", "longitudinal", "longitudinal_beta3"], rows))
    return EXIT_OK


def cmd_kk_check(args, model) -> int:
    rng = np.random.default_rng(args.seed)
    quad = quad_config(args)
    checks = []
    for i in range(args.samples):
        k, w = float(rng.uniform(0.0, 3.0)), float(rng.uniform(0.05, 3.0))
        pair = eval_permittivity(model, k, w)
        for component, exact in (("perp", pair.perp.real - 1), ("par", pair.par.real - 1)):
            res = kk_reconstruct_real(model, k, w, component, quad)
            residual = abs(res.value - exact) / max(abs(exact), 1e-300) if exact else abs(res.value)
            checks.append(make_check(f"kk_{component}[{i}]", residual, KK_TOL, res.converged, k=k, omega=w))
    report = make_report("kk-check", model, args.units, checks, seed=args.seed)
    emit(args, dumps_json(report))
    return report_status(report)


def cmd_b_field_diagnose(args, model) -> int:
    result = b_field_spectral_density(model, args.omega, args.k_max, quad_config(args))
    out = {"command": "b-field-diagnose", "material": model.as_dict(), "units": "reduced",
           "omega": args.omega, "k_max": args.k_max, "partial_value": result.partial_value,
           "diagnosis": result.diagnosis.as_dict(), "description": result.diagnosis.describe()}
    emit(args, dumps_json(out))
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        report = json.loads(Path(args.report).read_text(encoding="utf-8"))
        text = report_render(report)
    except (OSError, json.JSONDecodeError, ReportError) as exc:
        print(f"error: malformed report {args.report}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    emit(args, text)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "spectrum": cmd_spectrum,
    "thermal-total": cmd_thermal_total,
    "local-limit-scan": cmd_local_limit_scan,
    "kk-check": cmd_kk_check,
    "b-field-diagnose": cmd_b_field_diagnose,
    "compare-local": cmd_compare_local,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--material", required=True, help="material JSON file")
    common.add_argument("--out", help="output file (stdout if omitted)")
    common.add_argument("--rel-tol", type=float, default=1e-8, help="quadrature relative tolerance")
    common.add_argument("--abs-tol", type=float, default=1e-12, help="quadrature absolute tolerance")
    common.add_argument("--max-subdivisions", type=int, default=2000, help="quadrature interval budget")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument("--units", choices=UNIT_SYSTEMS, default="reduced", help="units of emitted numbers")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--omega-min", type=float, default=0.1)
    grid.add_argument("--omega-max", type=float, default=3.0)
    grid.add_argument("--points", type=int, default=64)
    grid.add_argument("--temperature", type=float, default=0.0)
    grid.add_argument("--mode", choices=THERMAL_MODES, default=None, help="thermal weight")
    grid.add_argument("--workers", type=int, default=1, help="processes for the frequency grid")

    parser = argparse.ArgumentParser(prog="nonlocal-qed",
                                     description="Field fluctuations in a spatially dispersive medium.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="run the identity battery, write a JSON report")
    p.add_argument("--samples", type=int, default=1000, help="random points for algebraic checks")
    p.add_argument("--integral-samples", type=int, default=10, help="points for frequency-integral checks")

    p = sub.add_parser("spectrum", parents=[common, grid], help="intensity spectrum as CSV")
    p.add_argument("--method", choices=("closed_form", "quadrature"), default="closed_form")

    sub.add_parser("compare-local", parents=[common, grid], help="nonlocal vs local spectrum as CSV")
    sub.add_parser("thermal-total", parents=[common, grid], help="frequency-integrated intensity as JSON")

    p = sub.add_parser("local-limit-scan", parents=[common], help="longitudinal factor as beta -> 0")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--betas", default="0.4,0.2,0.1", help="comma-separated beta values")

    p = sub.add_parser("kk-check", parents=[common], help="Kramers-Kronig reconstruction report")
    p.add_argument("--samples", type=int, default=20)

    p = sub.add_parser("b-field-diagnose", parents=[common], help="growth law of the magnetic coincidence limit")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--k-max", type=float, default=1e3)

    p = sub.add_parser("report", help="render a JSON report as text")
    p.add_argument("report", help="report JSON file")
    p.add_argument("--out", help="output file (stdout if omitted)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "report":
        return cmd_report(args)
    try:
        model = load_material(args.material)
        return COMMANDS[args.command](args, model)
    except (MaterialConfigError, InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
