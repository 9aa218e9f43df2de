"""Command-line interface for kinematic measures of convex bodies.

Bodies are described by JSON files::

    {"kind": "ball", "center": [0, 0, 0], "radius": 1.0}
    {"kind": "ellipsoid", "center": [0, 0, 0], "semi_axes": [1.0, 0.8, 1.2]}
    {"kind": "box", "min": [0, 0, 0], "max": [1, 1, 1]}
    {"kind": "polytope", "halfspaces": [[nx, ny, nz, d], ...]}

Unknown keys are rejected.  Commands::

    volume          Lebesgue volume (closed form, quadrature, or voxel)
    p-area          sub-Riemannian perimeter; --oracle forces the
                    triangulation oracle instead of adaptive quadrature
    crofton         Monte Carlo line measure vs twice the p-Area
    chord-integral  Monte Carlo chord integral vs 2*pi*V
    mean-chord      ratio estimate of the mean chord vs pi*V/pA
    kinematic       segment hit measure at --ell vs 2*pi*V + 2*ell*pA
    containment     probability a segment hitting --outer hits --inner
    invariance      estimates before/after a rigid motion --motion a,b,c,alpha
    sweep           kinematic measure over --ell-list with a linear fit

Reports are JSON (default) or CSV via --format, written to stdout or
--out.  Output is byte-identical across runs of the same configuration
except for the wall_time_s field.

Exit codes: 0 success; 2 configuration error (bad JSON/flags, violated
nesting); 3 unsupported body/operation; 4 tolerance failure (estimate
beyond 4 standard errors of its reference, failed invariance, or
non-convergent quadrature).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from .bodies import Ball, Box, CapabilityError, Ellipsoid, Polytope
from .core import PshMotion
from .estimators import (
    DEFAULT_SEED,
    ContainmentError,
    containment_probability,
    estimate_chord_integral,
    estimate_line_measure,
    estimate_mean_chord,
    estimate_segment_hit_measure,
    invariance_check,
)
from .measures import (
    QuadratureError,
    p_area,
    p_area_triangulation_oracle,
    volume,
    volume_voxel_oracle,
)

SCHEMA = "h1geom.report/1"
Z_GATE = 4.0


class ConfigError(Exception):
    """Invalid command-line or body-file input."""


class ToleranceFailure(Exception):
    """An estimate disagreed with its reference beyond the gate."""


def _require_fields(spec: dict, kind: str, fields: dict) -> dict:
    extra = set(spec) - set(fields) - {"kind"}
    if extra:
        raise ConfigError(f"unknown fields for {kind!r}: {sorted(extra)}")
    missing = set(fields) - set(spec)
    if missing:
        raise ConfigError(f"missing fields for {kind!r}: {sorted(missing)}")
    out = {}
    for name, checker in fields.items():
        out[name] = checker(name, spec[name])
    return out


def _vec3(name: str, value) -> list[float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"{name} must be a list of 3 numbers")
    try:
        vec = [float(v) for v in value]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must contain numbers: {exc}") from exc
    if not all(math.isfinite(v) for v in vec):
        raise ConfigError(f"{name} must be finite")
    return vec


def _positive(name: str, value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number: {exc}") from exc
    if not math.isfinite(v) or v <= 0.0:
        raise ConfigError(f"{name} must be finite and positive")
    return v


def _positive_vec3(name: str, value) -> list[float]:
    vec = _vec3(name, value)
    if not all(v > 0.0 for v in vec):
        raise ConfigError(f"{name} must be positive componentwise")
    return vec


def _halfspaces(name: str, value) -> list[list[float]]:
    if not isinstance(value, list) or len(value) < 4:
        raise ConfigError(f"{name} must list at least 4 halfspaces [nx, ny, nz, d]")
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, (list, tuple)) or len(row) != 4:
            raise ConfigError(f"{name}[{i}] must have 4 numbers [nx, ny, nz, d]")
        try:
            rows.append([float(v) for v in row])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}[{i}] must contain numbers: {exc}") from exc
        if not all(math.isfinite(v) for v in rows[-1]):
            raise ConfigError(f"{name}[{i}] must be finite")
    return rows


def build_body(spec: dict):
    """Construct a body from a validated JSON-style dict."""
    if not isinstance(spec, dict):
        raise ConfigError("body spec must be a JSON object")
    kind = spec.get("kind")
    if kind == "ball":
        data = _require_fields(spec, kind, {"center": _vec3, "radius": _positive})
        return Ball(data["center"], data["radius"])
    if kind == "ellipsoid":
        data = _require_fields(
            spec, kind, {"center": _vec3, "semi_axes": _positive_vec3}
        )
        return Ellipsoid(data["center"], data["semi_axes"])
    if kind == "box":
        data = _require_fields(spec, kind, {"min": _vec3, "max": _vec3})
        lo, hi = data["min"], data["max"]
        if not all(h > l for l, h in zip(lo, hi)):
            raise ConfigError("box needs max > min componentwise")
        return Box(lo, hi)
    if kind == "polytope":
        data = _require_fields(spec, kind, {"halfspaces": _halfspaces})
        rows = np.asarray(data["halfspaces"], dtype=float)
        try:
            return Polytope(rows[:, :3], rows[:, 3])
        except ValueError as exc:
            raise ConfigError(f"invalid polytope: {exc}") from exc
    raise ConfigError(
        f"unknown body kind {kind!r}; expected ball, ellipsoid, box, or polytope"
    )


def _load_body(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read body file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"body file {path} is not valid JSON: {exc}") from exc
    return spec, build_body(spec)


def _parse_motion(text: str) -> PshMotion:
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError("--motion needs four comma-separated numbers a,b,c,alpha")
    try:
        a, b, c, alpha = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"--motion needs numbers: {exc}") from exc
    return PshMotion(a, b, c, alpha)


def _parse_ell_list(text: str) -> list[float]:
    try:
        ells = [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"--ell-list needs numbers: {exc}") from exc
    if not ells or any(not math.isfinite(e) or e < 0.0 for e in ells):
        raise ConfigError("--ell-list needs nonnegative finite numbers")
    return ells


def _estimate_payload(est) -> dict:
    payload = {
        "value": est.value,
        "std_error": est.std_error,
        "ci95": [est.ci95[0], est.ci95[1]],
        "n_samples": est.n_samples,
        "n_hits": est.n_hits,
        "method": est.method,
    }
    if est.clamp_fraction is not None:
        payload["clamp_fraction"] = est.clamp_fraction
    return payload


def _diagnostics(est) -> dict:
    if est.reference is None:
        return {}
    rel = (
        (est.value - est.reference) / est.reference if est.reference != 0.0 else None
    )
    diag = {"rel_error": rel}
    if est.std_error > 0.0:
        diag["z_score"] = (est.value - est.reference) / est.std_error
    else:
        diag["z_score"] = 0.0 if est.value == est.reference else math.inf
    return diag


def _gate_estimate(est) -> str | None:
    """A failure message when the estimate misses its reference by the
    z gate, else None."""
    if est.reference is None or est.std_error == 0.0:
        return None
    z = (est.value - est.reference) / est.std_error
    if abs(z) >= Z_GATE:
        return (
            f"estimate {est.value:.6g} deviates from reference "
            f"{est.reference:.6g} by {z:+.2f} standard errors (gate {Z_GATE})"
        )
    return None


_ESTIMATE_CSV_FIELDS = [
    "command",
    "ell",
    "value",
    "std_error",
    "ci_lo",
    "ci_hi",
    "n_samples",
    "n_hits",
    "seed",
    "method",
    "reference",
    "rel_error",
    "z_score",
]
_MEASURE_CSV_FIELDS = ["command", "value", "method", "resolution", "error_estimate"]
_INVARIANCE_CSV_FIELDS = [
    "quantity",
    "value_original",
    "se_original",
    "value_transformed",
    "se_transformed",
    "z",
]


def _estimate_csv_row(command: str, ell, est) -> dict:
    diag = _diagnostics(est)
    return {
        "command": command,
        "ell": "" if ell is None else ell,
        "value": est.value,
        "std_error": est.std_error,
        "ci_lo": est.ci95[0],
        "ci_hi": est.ci95[1],
        "n_samples": est.n_samples,
        "n_hits": est.n_hits,
        "seed": est.seed,
        "method": est.method,
        "reference": "" if est.reference is None else est.reference,
        "rel_error": diag.get("rel_error", ""),
        "z_score": diag.get("z_score", ""),
    }


def _render(report: dict, fmt: str, csv_rows: tuple[list[str], list[dict]]) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    fields, rows = csv_rows
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _common_params(args) -> dict:
    return {
        "n": args.n,
        "seed": args.seed,
        "stratify": args.stratify,
        "threads": args.threads,
        "method": getattr(args, "method", "mc"),
    }


def _cmd_volume(args) -> tuple[dict, tuple, int]:
    spec, body = _load_body(args.body)
    if args.method == "voxel":
        res = volume_voxel_oracle(body, args.resolution or 128)
    else:
        res = volume(body, method=args.method)
    report = {
        "schema": SCHEMA,
        "command": "volume",
        "body": spec,
        "result": {
            "value": res.value,
            "method": res.method,
            "resolution": res.resolution,
            "error_estimate": res.error_estimate,
        },
    }
    row = {
        "command": "volume",
        "value": res.value,
        "method": res.method,
        "resolution": res.resolution,
        "error_estimate": res.error_estimate,
    }
    return report, (_MEASURE_CSV_FIELDS, [row]), 0


def _cmd_p_area(args) -> tuple[dict, tuple, int]:
    spec, body = _load_body(args.body)
    if args.oracle:
        res = p_area_triangulation_oracle(body, args.resolution or 128)
    else:
        res = p_area(body, rel_tol=args.tol)
    report = {
        "schema": SCHEMA,
        "command": "p-area",
        "body": spec,
        "result": {
            "value": res.value,
            "method": res.method,
            "resolution": res.resolution,
            "error_estimate": res.error_estimate,
        },
    }
    rows = [
        {
            "command": "p-area",
            "value": res.value,
            "method": res.method,
            "resolution": res.resolution,
            "error_estimate": res.error_estimate,
        }
    ]
    return report, (_MEASURE_CSV_FIELDS, rows), 0


def _run_line_estimator(args, command: str, runner, ell=None):
    spec, body = _load_body(args.body)
    kwargs = dict(
        seed=args.seed,
        stratify=args.stratify,
        threads=args.threads,
        method=args.method,
    )
    if args.method == "grid":
        kwargs["grid_resolution"] = args.resolution
    if ell is None:
        est = runner(body, args.n, **kwargs)
    else:
        est = runner(body, ell, args.n, **kwargs)
    report = {
        "schema": SCHEMA,
        "command": command,
        "body": spec,
        "params": _common_params(args),
        "result": _estimate_payload(est),
        "reference": {"value": est.reference, "source": est.reference_source},
        "diagnostics": _diagnostics(est),
    }
    if ell is not None:
        report["params"]["ell"] = ell
    rows = [_estimate_csv_row(command, ell, est)]
    code = 0
    failure = _gate_estimate(est)
    if failure is not None:
        report["tolerance_failure"] = failure
        code = 4
    return report, (_ESTIMATE_CSV_FIELDS, rows), code


def _cmd_crofton(args):
    return _run_line_estimator(args, "crofton", estimate_line_measure)


def _cmd_chord_integral(args):
    return _run_line_estimator(args, "chord-integral", estimate_chord_integral)


def _cmd_mean_chord(args):
    spec, body = _load_body(args.body)
    est = estimate_mean_chord(
        body, args.n, seed=args.seed, stratify=args.stratify, threads=args.threads
    )
    report = {
        "schema": SCHEMA,
        "command": "mean-chord",
        "body": spec,
        "params": _common_params(args),
        "result": _estimate_payload(est),
        "reference": {"value": est.reference, "source": est.reference_source},
        "diagnostics": _diagnostics(est),
    }
    rows = [_estimate_csv_row("mean-chord", None, est)]
    code = 0
    failure = _gate_estimate(est)
    if failure is not None:
        report["tolerance_failure"] = failure
        code = 4
    return report, (_ESTIMATE_CSV_FIELDS, rows), code


def _cmd_kinematic(args):
    return _run_line_estimator(
        args, "kinematic", estimate_segment_hit_measure, ell=args.ell
    )


def _cmd_containment(args):
    inner_spec, inner = _load_body(args.inner)
    outer_spec, outer = _load_body(args.outer)
    est = containment_probability(
        inner,
        outer,
        args.ell,
        args.n,
        seed=args.seed,
        stratify=args.stratify,
        threads=args.threads,
    )
    report = {
        "schema": SCHEMA,
        "command": "containment",
        "inner": inner_spec,
        "outer": outer_spec,
        "params": {**_common_params(args), "ell": args.ell},
        "result": _estimate_payload(est),
        "reference": {"value": est.reference, "source": est.reference_source},
        "diagnostics": _diagnostics(est),
    }
    rows = [_estimate_csv_row("containment", args.ell, est)]
    code = 0
    failure = _gate_estimate(est)
    if failure is not None:
        report["tolerance_failure"] = failure
        code = 4
    return report, (_ESTIMATE_CSV_FIELDS, rows), code


def _cmd_invariance(args):
    spec, body = _load_body(args.body)
    motion = _parse_motion(args.motion)
    rep = invariance_check(
        body,
        motion,
        args.n,
        seed=args.seed,
        stratify=args.stratify,
        threads=args.threads,
    )
    rows = []
    for row in rep.rows:
        rows.append(
            {
                "quantity": row.quantity,
                "value_original": row.value_original,
                "se_original": row.se_original,
                "value_transformed": row.value_transformed,
                "se_transformed": row.se_transformed,
                "z": row.z,
            }
        )
    report = {
        "schema": SCHEMA,
        "command": "invariance",
        "body": spec,
        "params": {
            **_common_params(args),
            "motion": [motion.a, motion.b, motion.c, motion.alpha],
            "threshold": rep.threshold,
        },
        "rows": rows,
        "passed": rep.passed,
    }
    code = 0
    if not rep.passed:
        worst = max(rep.rows, key=lambda r: abs(r.z))
        report["tolerance_failure"] = (
            f"invariance violated: {worst.quantity} differs by z={worst.z:+.2f}"
        )
        code = 4
    return report, (_INVARIANCE_CSV_FIELDS, rows), code


def _cmd_sweep(args):
    spec, body = _load_body(args.body)
    ells = _parse_ell_list(args.ell_list)
    pa_ref = p_area(body).value
    vol_ref = volume(body).value
    rows = []
    values = []
    for ell in ells:
        est = estimate_segment_hit_measure(
            body,
            ell,
            args.n,
            seed=args.seed,
            stratify=args.stratify,
            threads=args.threads,
            reference=2.0 * math.pi * vol_ref + 2.0 * ell * pa_ref,
        )
        values.append(est)
        rows.append(_estimate_csv_row("sweep", ell, est))
    slope, intercept = np.polyfit(np.asarray(ells), [e.value for e in values], 1)
    report = {
        "schema": SCHEMA,
        "command": "sweep",
        "body": spec,
        "params": {**_common_params(args), "ell_list": ells},
        "rows": [
            {**_estimate_payload(e), "ell": ell, "reference": e.reference}
            for ell, e in zip(ells, values)
        ],
        "fit": {
            "slope": float(slope),
            "intercept": float(intercept),
            "slope_reference": 2.0 * pa_ref,
            "intercept_reference": 2.0 * math.pi * vol_ref,
        },
    }
    code = 0
    for est in values:
        failure = _gate_estimate(est)
        if failure is not None:
            report["tolerance_failure"] = failure
            code = 4
    return report, (_ESTIMATE_CSV_FIELDS, rows), code


def _add_common(parser: argparse.ArgumentParser, body: bool = True) -> None:
    if body:
        parser.add_argument("--body", required=True, help="path to a body JSON file")
    parser.add_argument("--n", type=int, default=100_000, help="sample count")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="RNG seed")
    parser.add_argument(
        "--format", choices=("json", "csv"), default="json", dest="format"
    )
    parser.add_argument("--out", default=None, help="write the report to this path")
    parser.add_argument(
        "--stratify", action="store_true", help="stratify the angle coordinate"
    )
    parser.add_argument("--threads", type=int, default=1, help="worker threads")


def _add_method(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--method",
        choices=("mc", "grid"),
        default="mc",
        help="Monte Carlo or deterministic tensor grid",
    )
    parser.add_argument(
        "--resolution",
        type=int,
        default=None,
        help="per-axis resolution for --method grid",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="h1geom",
        description="Kinematic measures of convex bodies under the "
        "Heisenberg rigid-motion group.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("volume", help="Lebesgue volume")
    _add_common(p)
    p.add_argument(
        "--method",
        choices=("auto", "exact", "quadrature", "voxel"),
        default="auto",
    )
    p.add_argument("--resolution", type=int, default=None, help="voxel resolution")
    p.set_defaults(func=_cmd_volume)

    p = sub.add_parser("p-area", help="sub-Riemannian perimeter")
    _add_common(p)
    p.add_argument("--tol", type=float, default=1e-6, help="relative tolerance")
    p.add_argument(
        "--oracle",
        action="store_true",
        help="use the triangulation oracle instead of quadrature",
    )
    p.add_argument(
        "--resolution", type=int, default=None, help="oracle triangulation resolution"
    )
    p.set_defaults(func=_cmd_p_area)

    p = sub.add_parser("crofton", help="line measure vs 2 * p-Area")
    _add_common(p)
    _add_method(p)
    p.set_defaults(func=_cmd_crofton)

    p = sub.add_parser("chord-integral", help="chord integral vs 2*pi*V")
    _add_common(p)
    _add_method(p)
    p.set_defaults(func=_cmd_chord_integral)

    p = sub.add_parser("mean-chord", help="mean chord vs pi*V/pA")
    _add_common(p)
    p.set_defaults(func=_cmd_mean_chord)

    p = sub.add_parser("kinematic", help="segment hit measure vs 2*pi*V + 2*ell*pA")
    _add_common(p)
    _add_method(p)
    p.add_argument("--ell", type=float, default=1.0, help="segment length")
    p.set_defaults(func=_cmd_kinematic)

    p = sub.add_parser(
        "containment", help="P(segment hitting outer also hits inner)"
    )
    _add_common(p, body=False)
    p.add_argument("--inner", required=True, help="inner body JSON file")
    p.add_argument("--outer", required=True, help="outer body JSON file")
    p.add_argument("--ell", type=float, default=1.0, help="segment length")
    p.set_defaults(func=_cmd_containment)

    p = sub.add_parser("invariance", help="estimates before/after a rigid motion")
    _add_common(p)
    p.add_argument(
        "--motion",
        default="0.5,-0.25,0.3,0.9",
        help="motion as a,b,c,alpha",
    )
    p.set_defaults(func=_cmd_invariance)

    p = sub.add_parser("sweep", help="kinematic measure over several ell values")
    _add_common(p)
    p.add_argument(
        "--ell-list",
        default="0,0.5,1",
        dest="ell_list",
        help="comma-separated segment lengths",
    )
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.n < 1:
        parser.error("--n must be positive")
    if args.threads < 1:
        parser.error("--threads must be positive")
    started = time.perf_counter()
    try:
        report, csv_rows, code = args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ContainmentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ToleranceFailure, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        # invalid numeric arguments surface from the library layer
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report["wall_time_s"] = time.perf_counter() - started
    _emit(_render(report, args.format, csv_rows), args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
