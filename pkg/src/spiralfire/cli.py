"""Command-line entry point: ``spiralfire <command> [flags]``.

Machine output goes to stdout (or ``--out``), diagnostics to stderr.
Exit status is 0 on success, 2 for invalid input and 3 for numerical
failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from . import analytic, geometry, lowerbound, series
from .errors import (
    InvalidParameterError,
    NoComplexDominantPairError,
    NumericalError,
    PrecisionOverflowError,
)
from .params import derive_params

SCHEMA = "spiralfire/1"
EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
NOT_CONTAINED = "not_contained_within_limit"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(x) -> str:
    """Round-trip decimal with 17 significant digits."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    return f"{x:.17g}"


def _flags(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "command")}


def _header(args, extra=()) -> list[str]:
    lines = [
        f"# spiralfire {__version__} schema {SCHEMA}",
        f"# command: {args.command}",
        "# flags: " + " ".join(f"{k}={v}" for k, v in _flags(args).items()),
        "# precision: float64, 17 significant digits",
    ]
    lines += [f"# {e}" for e in extra]
    return lines


def _csv(header_lines, columns, rows) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([c if isinstance(c, str) else fmt(c) for c in row])
    return buf.getvalue()


def _json(args, payload: dict) -> str:
    doc = {"schema": SCHEMA, "version": __version__, "command": args.command, "flags": _flags(args)}
    doc.update(payload)
    return json.dumps(_clean(doc), indent=2) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _complex(z: complex) -> dict:
    return {"re": z.real, "im": z.imag, "abs": abs(z), "arg": math.atan2(z.imag, z.real)}


# -- commands --------------------------------------------------------------

def cmd_params(args) -> str:
    p = derive_params(args.v, args.A)
    return _json(args, {"params": p.as_dict()})


def _sign(x: float) -> int:
    return 1 if x > 0 else (-1 if x < 0 else 0)


def cmd_series(args) -> str:
    p = derive_params(args.v, args.A)
    engines = {
        "convolution": series.coefficients_by_convolution,
        "division": series.coefficients_by_division,
    }
    if args.engine == "both":
        a = series.coefficients_by_convolution(p, args.jmax)
        b = series.coefficients_by_division(p, args.jmax)
        dev = series.engine_deviation(a, b)
        rows = [
            (j, a.Fj[j], a.phi(j), _sign(a.Fj[j]), b.Fj[j], b.phi(j), dev[j])
            for j in range(args.jmax + 1)
        ]
        columns = ["j", "F_j", "phi_j", "sign", "F_j_division", "phi_j_division", "rel_deviation"]
        j_star = a.containment_round
        if b.containment_round != j_star:
            raise NumericalError("engines disagree on the containment round")
        extra = [f"max_rel_deviation: {fmt(dev.max())}"]
    else:
        res = engines[args.engine](p, args.jmax)
        rows = [(j, res.Fj[j], res.phi(j), _sign(res.Fj[j])) for j in range(args.jmax + 1)]
        columns = ["j", "F_j", "phi_j", "sign"]
        j_star = res.containment_round
        extra = []
    if j_star is None:
        extra.insert(0, f"containment_round: {NOT_CONTAINED}")
    else:
        extra.insert(0, f"containment_round: {j_star}")
    return _csv(_header(args, extra), columns, rows)


def cmd_zeros(args) -> str:
    p = derive_params(args.v, args.A)
    try:
        z0 = analytic.dominant_zero(p)
    except NoComplexDominantPairError as exc:
        return _json(args, {
            "error": "no_complex_dominant_pair",
            "message": str(exc),
            "real_roots": list(exc.real_roots),
            "common_zero_residual": analytic.common_zero_check(p),
        })
    w = analytic.wave(p, z0)
    pred = analytic.predict_rounds(p)
    secondary = analytic.secondary_zeros(p, 4)
    payload = {
        "z0": _complex(z0.z),
        "x_root": z0.x_root,
        "zero_residual": abs(complex(analytic.denominator(p, z0.z))),
        "secondary_moduli": [abs(z) for z in secondary],
        "secondary_zeros": [_complex(z) for z in secondary],
        "common_zero": _complex(analytic.common_zero(p)),
        "common_zero_residual": analytic.common_zero_check(p),
        "residue": {
            "first": [analytic.residue_sum(p, z0, j) for j in range(args.jresidue + 1)],
        },
        "wave": {"L": w.amplitude_L, "p": w.phase_p, "L0": w.L0, "sigma": w.sigma},
        "major_coefficient": analytic.major_coefficient(p, z0),
        "contour_bound_D": analytic.contour_bound_D(p, analytic.CONTOUR_GAMMA),
        "prediction": pred,
    }
    return _json(args, payload)


def _sweep_row(task):
    v, A, j_limit = task
    p = derive_params(v, A)
    try:
        pred = analytic.predict_rounds(p)
        phi, lower, upper = pred["phi"], pred["lower"], pred["upper"]
    except NoComplexDominantPairError:
        phi = lower = upper = float("nan")
    try:
        j = series.containment_round(p, j_limit)
    except PrecisionOverflowError:
        j = series.NOT_WITHIN_LIMIT
    return (v, phi, lower, upper, NOT_CONTAINED if j == series.NOT_WITHIN_LIMIT else int(j))


def sweep_rows(v_min: float, v_max: float, steps: int, A: float = 1.0, j_limit: int = 1000, jobs: int = 1):
    if steps < 1:
        raise InvalidParameterError(f"steps must be >= 1 (got {steps})")
    if not v_max >= v_min:
        raise InvalidParameterError("vmax must not be below vmin")
    grid = np.linspace(v_min, v_max, steps) if steps > 1 else np.array([v_min])
    tasks = [(float(v), A, j_limit) for v in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_row, tasks))  # map keeps grid order
    return [_sweep_row(t) for t in tasks]


def cmd_sweep(args) -> str:
    rows = sweep_rows(args.vmin, args.vmax, args.steps, args.A, args.jlimit, args.jobs)
    return _csv(_header(args), ["v", "phi", "lower", "upper", "contain_round"], rows)


def cmd_simulate(args) -> str:
    p = derive_params(args.v, args.A)
    ds = args.ds if args.ds is not None else p.A / 1000.0
    curve = geometry.build_curve(p, ds, args.max_rounds, relative=args.relative)
    try:
        j_series = series.containment_round(p, max(args.max_rounds, 1))
    except PrecisionOverflowError:
        j_series = series.NOT_WITHIN_LIMIT
    if j_series == series.NOT_WITHIN_LIMIT:
        j_series = NOT_CONTAINED
    values = geometry.measure_free_string_at_rounds(curve)
    extra = [
        f"closed: {str(curve.closed).lower()}",
        f"stop_reason: {curve.stop_reason}",
        f"containment_round: {curve.containment_round if curve.closed else 'none'}",
        f"series_containment_round: {j_series}",
        f"step: {fmt(curve.step)}",
        "round_F: " + " ".join(fmt(x) for x in values.F),
        "round_phi: " + " ".join(fmt(x) for x in values.phi),
    ]
    if args.svg:
        opts = {"marks": True}
        if args.linkage is not None:
            opts["linkage"] = args.linkage
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(geometry.export_svg(curve, opts))
    idx = range(0, len(curve), args.every)
    rows = ((i, *curve.points[i], curve.arc_length[i], curve.free_string[i]) for i in idx)
    return _csv(_header(args, extra), ["index", "x", "y", "arc_length", "free_string"], rows)


def cmd_lowerbound(args) -> str:
    if args.schedule:
        try:
            with open(args.schedule, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InvalidParameterError(f"cannot read schedule: {exc}") from exc
        sched = lowerbound.SpirallingSchedule.from_json(text)
        trace = lowerbound.check_schedule(sched)
        return _json(args, {"source": "schedule", **trace.as_dict()})
    if args.v is None:
        raise InvalidParameterError("either --v or --schedule is required")
    v, A, n = args.v, args.A, args.rounds
    if not (v > 1.0 and math.isfinite(v)) or n < 1 or not A > 0.0:
        raise InvalidParameterError("need v > 1, A > 0 and rounds >= 1")
    rel = lowerbound.minimal_relative_slack(v, n)
    # absolute slack of the minimal schedule while it stays finite
    slack = np.full(n, np.nan)
    x_prev, x = 0.0, v * A / (v - 1.0)
    for i in range(n):
        if i > 0:
            x_prev, x = x, v * A / (v - 1.0) + x / (v - 1.0)
        if not math.isfinite(x):
            break
        slack[i] = x / v - (A + x_prev)
    alive = rel > 0.0
    bad = np.nonzero(~alive)[0]
    payload = {
        "source": "minimal_growth_schedule",
        "v": v, "A": A, "rounds": n,
        "alive": bool(alive.all()),
        "first_failure": int(bad[0]) if bad.size else None,
        "certificate": lowerbound.golden_ratio_certificate(v, A, n) if v <= lowerbound.GOLDEN_RATIO else None,
        "trace": [
            {"round": i, "fire_interval_alive": bool(alive[i]), "slack": slack[i], "relative_slack": rel[i]}
            for i in range(n)
        ],
    }
    return _json(args, payload)


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spiralfire", description="Spiral fire-containment barrier toolkit.")
    parser.add_argument("--version", action="version", version=f"spiralfire {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(func=func)
        sp.add_argument("--out", help="write to this file instead of stdout")
        return sp

    sp = add("params", cmd_params, "derived model parameters as JSON")
    sp.add_argument("--v", type=float, required=True)
    sp.add_argument("--A", type=float, default=1.0)

    sp = add("series", cmd_series, "round-end free-string coefficients as CSV")
    sp.add_argument("--v", type=float, required=True)
    sp.add_argument("--A", type=float, default=1.0)
    sp.add_argument("--jmax", type=int, default=50)
    sp.add_argument("--engine", choices=["convolution", "division", "both"], default="convolution")

    sp = add("zeros", cmd_zeros, "dominant zeros, residues and round prediction as JSON")
    sp.add_argument("--v", type=float, required=True)
    sp.add_argument("--A", type=float, default=1.0)
    sp.add_argument("--jresidue", type=int, default=10, help="residue sums for j = 0..N")

    sp = add("sweep", cmd_sweep, "round bracket and containment round over a speed grid as CSV")
    sp.add_argument("--vmin", type=float, required=True)
    sp.add_argument("--vmax", type=float, required=True)
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--A", type=float, default=1.0)
    sp.add_argument("--jlimit", type=int, default=1000)
    sp.add_argument("--jobs", type=int, default=1)

    sp = add("simulate", cmd_simulate, "polyline barrier simulation as CSV (+ SVG)")
    sp.add_argument("--v", type=float, required=True)
    sp.add_argument("--A", type=float, default=1.0)
    sp.add_argument("--ds", type=float, default=None, help="arc-length step (default A/1000)")
    sp.add_argument("--max-rounds", dest="max_rounds", type=int, default=10)
    sp.add_argument("--relative", action="store_true", help="scale the step with distance from 0")
    sp.add_argument("--every", type=int, default=1, help="emit every N-th sample")
    sp.add_argument("--svg", default=None)
    sp.add_argument("--linkage", type=int, default=None, help="sample index for a linkage overlay")

    sp = add("lowerbound", cmd_lowerbound, "fire-alive invariant trace as JSON")
    sp.add_argument("--v", type=float, default=None)
    sp.add_argument("--A", type=float, default=1.0)
    sp.add_argument("--rounds", type=int, default=100)
    sp.add_argument("--schedule", default=None, help="JSON schedule {v, A, crossings}")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "every", 1) < 1:
            raise InvalidParameterError("--every must be >= 1")
        text = args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, NoComplexDominantPairError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # downstream closed early (e.g. piped into head)
            sys.stdout = None
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
