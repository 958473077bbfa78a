"""Command-line entry point.

Verbs: steady, stability, cool (JSON on stdout), sweep, phase-diagram,
figure (CSV + JSON sidecar files).  Exit codes: 0 success, 2 usage or
config error, 3 computation error (e.g. nothing stable to cool),
4 convergence diagnostics exceeded tolerance.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .params import PRESETS, ConfigError, derive_drive, load_config, normalize_config, serialize_config
from .spectra import TailNotConverged, UnstablePoint, integrate_variances
from .stability import assess
from .steady_state import NoConvergence, classify_branches, solve_selfconsistent
from .sweep import InversionFailed, figure_dataset, phase_diagram, sweep_1d, write_csv, write_sidecar

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_COMPUTE = 3
EXIT_CONVERGENCE = 4


class CliError(RuntimeError):
    def __init__(self, message, code):
        self.code = code
        super().__init__(message)


def _add_common(sub, needs_config=True, needs_output=False):
    sub.add_argument("-c", "--config", help="config file (key = value lines, or a sidecar JSON)")
    sub.add_argument("--preset", choices=sorted(PRESETS), help="embedded named parameter set")
    sub.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config key (repeatable)")
    sub.add_argument("--threads", type=int, default=None,
                     help="worker processes for grid verbs (default: machine parallelism, "
                          "or OPTOKERR_THREADS)")
    sub.add_argument("--json-errors", action="store_true",
                     help="emit machine-readable JSON on the error stream")
    if needs_output:
        sub.add_argument("-o", "--output-dir", default=".", help="directory for CSV/JSON outputs")
    sub.set_defaults(needs_config=needs_config)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="optokerr",
        description="Steady states, stability, and cooling of a dissipatively "
                    "coupled optomechanical cavity with a Kerr medium.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="verb", required=True)

    s = subs.add_parser("steady", help="solve the steady-state branches, JSON to stdout")
    _add_common(s)

    s = subs.add_parser("stability", help="Routh-Hurwitz and eigenvalue stability per branch")
    _add_common(s)

    s = subs.add_parser("cool", help="integrated variances and effective temperature per stable branch")
    _add_common(s)

    s = subs.add_parser("sweep", help="1D scan over detuning or power, CSV output")
    _add_common(s, needs_output=True)
    s.add_argument("--axis", choices=("detuning", "power"), default="detuning")
    s.add_argument("--start", type=float, required=True,
                   help="axis start (delta/kappa, or mW for power)")
    s.add_argument("--stop", type=float, required=True)
    s.add_argument("--count", type=int, default=400)
    s.add_argument("--spacing", choices=("linear", "log"), default="linear")
    s.add_argument("--with-cooling", action="store_true")

    s = subs.add_parser("phase-diagram", help="2D stability/cooling map over (delta/kappa, U n_c/kappa)")
    _add_common(s, needs_output=True)
    s.add_argument("--delta-start", type=float, default=0.0)
    s.add_argument("--delta-stop", type=float, default=6.0)
    s.add_argument("--delta-count", type=int, default=200)
    s.add_argument("--u-start", type=float, default=0.0)
    s.add_argument("--u-stop", type=float, default=1.5)
    s.add_argument("--u-count", type=int, default=200)
    s.add_argument("--u-mode", choices=("u_tilde", "u"), default="u_tilde",
                   help="second axis: self-consistent U n_c/kappa, or bare U in uHz")
    s.add_argument("--no-cooling", action="store_true")

    s = subs.add_parser("figure", help="emit the dataset behind one reference figure panel")
    _add_common(s, needs_config=False, needs_output=True)
    s.add_argument("figure_id", choices=("2a", "2b", "3", "4a", "4b", "4c", "4d", "5"))
    s.add_argument("--grid-scale", type=float, default=1.0,
                   help="scale factor on every axis count (floor 8)")

    return parser


def _resolve_config(args):
    if args.config and args.preset:
        raise CliError("use either --config or --preset, not both", EXIT_USAGE)
    raw = {}
    if args.preset:
        raw = dict(PRESETS[args.preset])
    elif args.config:
        raw = dict(load_config(args.config))
    elif args.needs_config and not args.overrides:
        raise CliError("a config is required: pass -c FILE, --preset NAME, or --set entries",
                       EXIT_USAGE)
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise CliError(f"--set expects KEY=VALUE, got {item!r}", EXIT_USAGE)
        raw[key.strip()] = value.strip()
    if not raw:
        return None, None
    return normalize_config(raw)


def _branch_summary(params, point, drive, branch, report):
    return {
        "branch_label": branch.branch_label,
        "n_c": branch.n_c,
        "u_n_c_over_kappa": branch.u_tilde / params.kappa,
        "q_bar": branch.q_bar,
        "kappa_tilde": branch.kappa_tilde,
        "degenerate": branch.degenerate,
        "stable": report.eig_stable,
        "max_re_eig": report.max_re,
        "region": report.region,
    }


def _cmd_steady(args):
    params, point = _resolve_config(args)
    drive = derive_drive(params, point)
    branches = classify_branches(solve_selfconsistent(params, point, drive))
    out = {
        "config": serialize_config(params, point),
        "p_l": drive.p_l,
        "branches": [
            _branch_summary(params, point, drive, b, assess(params, point, b, drive))
            for b in branches
        ],
    }
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    print()
    return EXIT_OK


def _cmd_stability(args):
    params, point = _resolve_config(args)
    drive = derive_drive(params, point)
    branches = classify_branches(solve_selfconsistent(params, point, drive))
    items = []
    for b in branches:
        rep = assess(params, point, b, drive)
        items.append({
            "branch_label": b.branch_label,
            "n_c": b.n_c,
            "s1": rep.s1,
            "s2": rep.s2,
            "s3": rep.s3,
            "rh_stable": rep.rh_stable,
            "eig_stable": rep.eig_stable,
            "agreement": rep.agreement,
            "marginal": rep.marginal,
            "region": rep.region,
            "max_re_eig": rep.max_re,
            "eigenvalues": [[ev.real, ev.imag] for ev in rep.eigenvalues],
        })
    json.dump({"config": serialize_config(params, point), "branches": items},
              sys.stdout, indent=2, sort_keys=True)
    print()
    return EXIT_OK


def _cmd_cool(args):
    params, point = _resolve_config(args)
    drive = derive_drive(params, point)
    branches = classify_branches(solve_selfconsistent(params, point, drive))
    items = []
    for b in branches:
        rep = assess(params, point, b, drive)
        if not rep.eig_stable:
            continue
        res = integrate_variances(params, point, b, drive)
        items.append({
            "branch_label": b.branch_label,
            "n_c": b.n_c,
            "u_n_c_over_kappa": b.u_tilde / params.kappa,
            "t_eff_k": res.t_eff,
            "n_m": res.n_m,
            "var_q": res.var_q,
            "var_p": res.var_p,
            "var_x": res.var_x,
            "var_y": res.var_y,
            "delta_n_c": res.delta_n_c,
            "squeezing_db": res.squeezing_db,
            "linearization_suspect": res.linearization_suspect,
        })
    if not items:
        raise CliError("no dynamically stable branch at this operating point", EXIT_COMPUTE)
    json.dump({"config": serialize_config(params, point), "branches": items},
              sys.stdout, indent=2, sort_keys=True)
    print()
    return EXIT_OK


def _cmd_sweep(args):
    params, point = _resolve_config(args)
    grid = sweep_1d(
        params, point, axis=args.axis, start=args.start, stop=args.stop,
        count=args.count, spacing=args.spacing, with_cooling=args.with_cooling,
        threads=args.threads,
    )
    os.makedirs(args.output_dir, exist_ok=True)
    paths = [
        write_csv(grid, os.path.join(args.output_dir, "sweep.csv")),
        write_sidecar(grid, os.path.join(args.output_dir, "sweep.json")),
    ]
    print("\n".join(paths))
    return EXIT_OK


def _cmd_phase_diagram(args):
    params, point = _resolve_config(args)
    grid = phase_diagram(
        params, point,
        delta_axis=(args.delta_start, args.delta_stop, args.delta_count),
        u_axis=(args.u_start, args.u_stop, args.u_count),
        u_axis_mode=args.u_mode,
        with_cooling=not args.no_cooling,
        threads=args.threads,
    )
    os.makedirs(args.output_dir, exist_ok=True)
    paths = [
        write_csv(grid, os.path.join(args.output_dir, "phase_diagram.csv")),
        write_sidecar(grid, os.path.join(args.output_dir, "phase_diagram.json")),
    ]
    print("\n".join(paths))
    return EXIT_OK


def _cmd_figure(args):
    overrides = None
    params_point = _resolve_config(args)
    if params_point != (None, None):
        params, point = params_point
        overrides = {
            "kappa": params.kappa, "g": params.g, "omega_m": params.omega_m,
            "gamma_m": params.gamma_m, "wavelength": params.wavelength,
            "temperature": params.temperature, "power": point.power,
            "detuning": point.detuning, "kerr": point.kerr,
        }
    paths = figure_dataset(
        args.figure_id, args.output_dir, overrides=overrides,
        grid_scale=args.grid_scale, threads=args.threads,
    )
    print("\n".join(paths))
    return EXIT_OK


_COMMANDS = {
    "steady": _cmd_steady,
    "stability": _cmd_stability,
    "cool": _cmd_cool,
    "sweep": _cmd_sweep,
    "phase-diagram": _cmd_phase_diagram,
    "figure": _cmd_figure,
}


def _emit_error(args, exc, code):
    if getattr(args, "json_errors", False):
        doc = {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
        print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    else:
        print(f"optokerr: error: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except CliError as exc:
        return _emit_error(args, exc, exc.code)
    except ConfigError as exc:
        return _emit_error(args, exc, EXIT_USAGE)
    except (NoConvergence, TailNotConverged, InversionFailed) as exc:
        return _emit_error(args, exc, EXIT_CONVERGENCE)
    except (UnstablePoint, ValueError, RuntimeError, OSError) as exc:
        return _emit_error(args, exc, EXIT_COMPUTE)


if __name__ == "__main__":
    sys.exit(main())
