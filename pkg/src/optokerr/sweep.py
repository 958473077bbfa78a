"""Parameter scans: 1D S-curves, 2D phase diagrams, figure datasets.

Grid points are independent work items evaluated in deterministic
order; parallelism (process pool) changes wall time only, never a byte
of output.  Per-point failures are recorded in-row (branch_label
carries an ``error:<Name>`` marker) and in the sidecar, never aborting
a scan.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .params import OperatingPoint, SystemParams, derive_drive, serialize_config, preset, with_updates
from .response import evaluate as response_evaluate
from .spectra import TailNotConverged, integrate_variances, s_backaction, s_thermal
from .stability import assess
from .steady_state import NoConvergence, classify_branches, solve_selfconsistent

BASE_COLUMNS = (
    "axis_value", "branch_label", "n_c", "u_n_c_over_kappa", "q_bar",
    "kappa_tilde", "s1", "s2", "s3", "stable", "max_re_eig",
)
COOLING_COLUMNS = (
    "t_eff_k", "n_m", "var_x", "var_y", "delta_n_c", "squeezing_db",
    "linearization_suspect",
)

CURVE_U_UHZ = (50.0, 100.0, 150.0, 200.0)
FIG3_PAIRS = ((50.0, 1.43), (100.0, 2.51), (150.0, 3.68), (200.0, 4.87))
FIG4_RANGE_NOTE = (
    "delta/kappa in [0, 6] and U*n_c/kappa in [0, 1.5] are inferred from the "
    "four overlaid S-curves; the source figures state no numeric axis ranges"
)


class InversionFailed(RuntimeError):
    def __init__(self, delta_over_kappa, u_tilde_over_kappa, detail):
        self.delta_over_kappa = delta_over_kappa
        self.u_tilde_over_kappa = u_tilde_over_kappa
        super().__init__(
            f"could not invert U*n_c/kappa={u_tilde_over_kappa:g} at "
            f"delta/kappa={delta_over_kappa:g}: {detail}"
        )


class UnknownFigure(ValueError):
    pass


@dataclass
class SweepGrid:
    kind: str                      # "1d" or "2d"
    axes: tuple                    # axis spec dicts (name, start, stop, count, spacing, unit)
    columns: tuple
    rows: list = field(default_factory=list)
    turning_points: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    config: dict = field(default_factory=dict)


def _axis_values(start, stop, count, spacing):
    if count < 1:
        raise ValueError("axis count must be >= 1")
    if count == 1:
        return np.array([float(start)])
    if spacing == "log":
        if start <= 0 or stop <= 0:
            raise ValueError("log axis requires positive endpoints")
        return np.geomspace(start, stop, count)
    if spacing != "linear":
        raise ValueError(f"unknown spacing '{spacing}'")
    return np.linspace(start, stop, count)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if math.isnan(f):
        return "nan"
    return f"{f:.12g}"


def write_csv(grid: SweepGrid, path):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(grid.columns) + "\n")
        for row in grid.rows:
            fh.write(",".join(_fmt(row.get(c)) for c in grid.columns) + "\n")
    return path


def write_sidecar(grid: SweepGrid, path, figure_id=None, assumptions=(), extra=None):
    doc = {
        "version": __version__,
        "config": grid.config,
        "grid": {"kind": grid.kind, "axes": list(grid.axes)},
        "turning_points": grid.turning_points,
        "errors": grid.errors,
    }
    if figure_id is not None:
        doc["figure_id"] = figure_id
    if assumptions:
        doc["assumptions"] = list(assumptions)
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _blank_row(axis_value, label, columns, axis2_value=None):
    row = {c: None for c in columns}
    row["axis_value"] = axis_value
    if axis2_value is not None:
        row["axis2_value"] = axis2_value
    row["branch_label"] = label
    return row


def _branch_row(params, point, drive, branch, report, axis_value, with_cooling):
    row = {
        "axis_value": axis_value,
        "branch_label": branch.branch_label,
        "n_c": branch.n_c,
        "u_n_c_over_kappa": branch.u_tilde / params.kappa,
        "q_bar": branch.q_bar,
        "kappa_tilde": branch.kappa_tilde,
        "s1": report.s1,
        "s2": report.s2,
        "s3": report.s3,
        "stable": report.eig_stable,
        "max_re_eig": report.max_re,
    }
    if with_cooling:
        for c in COOLING_COLUMNS:
            row[c] = None
        if report.eig_stable:
            try:
                res = integrate_variances(params, point, branch, drive)
            except TailNotConverged as exc:
                row["_error"] = f"TailNotConverged: {exc}"
            else:
                row.update(
                    t_eff_k=res.t_eff, n_m=res.n_m, var_x=res.var_x, var_y=res.var_y,
                    delta_n_c=res.delta_n_c, squeezing_db=res.squeezing_db,
                    linearization_suspect=res.linearization_suspect,
                )
    return row


def _eval_1d_point(task):
    params, point, axis_value, with_cooling, columns = task
    try:
        drive = derive_drive(params, point)
        branches = classify_branches(solve_selfconsistent(params, point, drive))
    except NoConvergence as exc:
        return [dict(_blank_row(axis_value, f"error:{type(exc).__name__}", columns), _error=str(exc))]
    rows = []
    for branch in branches:
        report = assess(params, point, branch, drive)
        rows.append(_branch_row(params, point, drive, branch, report, axis_value, with_cooling))
    return rows


def _pool_map(fn, tasks, threads):
    if threads is None:
        threads = default_threads()
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (8 * threads))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def default_threads():
    env = os.environ.get("OPTOKERR_THREADS")
    if env:
        try:
            n = int(env)
            if n >= 1:
                return n
        except ValueError:
            pass
    return os.cpu_count() or 1


def sweep_1d(
    params: SystemParams,
    point: OperatingPoint,
    axis: str = "detuning",
    start: float = 0.0,
    stop: float = 6.0,
    count: int = 400,
    spacing: str = "linear",
    with_cooling: bool = False,
    threads: int | None = None,
) -> SweepGrid:
    """Scan detuning (axis_value = delta/kappa) or power (axis_value in mW).

    Each point is solved independently from the bare-kappa seed so the
    output is identical no matter how the work is distributed; branch
    identity across points comes from the lower/middle/upper labels.
    """
    if axis not in ("detuning", "power"):
        raise ValueError(f"axis must be 'detuning' or 'power', got '{axis}'")
    if not (math.isfinite(start) and math.isfinite(stop)):
        raise ValueError("axis range must be finite")
    values = _axis_values(start, stop, count, spacing)
    columns = BASE_COLUMNS + (COOLING_COLUMNS if with_cooling else ())
    unit = "delta_over_kappa" if axis == "detuning" else "mW"

    tasks = []
    for v in values:
        if axis == "detuning":
            pt = OperatingPoint(power=point.power, detuning=v * params.kappa, kerr=point.kerr)
        else:
            pt = OperatingPoint(power=v * 1e-3, detuning=point.detuning, kerr=point.kerr)
        tasks.append((params, pt, float(v), with_cooling, columns))

    results = _pool_map(_eval_1d_point, tasks, threads)

    grid = SweepGrid(
        kind="1d",
        axes=({"name": axis, "start": start, "stop": stop, "count": int(count),
               "spacing": spacing, "unit": unit},),
        columns=columns,
        config=serialize_config(params, point),
    )
    prev_count = None
    prev_value = None
    for v, rows in zip(values, results):
        n_branches = sum(1 for r in rows if not str(r["branch_label"]).startswith("error:"))
        for r in rows:
            err = r.pop("_error", None)
            if err:
                grid.errors.append({"axis_value": float(v), "detail": err})
            grid.rows.append(r)
        if prev_count is not None and n_branches != prev_count:
            grid.turning_points.append(
                {"axis_interval": [float(prev_value), float(v)],
                 "branch_count": [prev_count, n_branches]}
            )
        prev_count, prev_value = n_branches, v
    return grid


def _invert_u_tilde(params, point, u_tilde_target, max_iter=200, tol=1e-12):
    """Find U such that the matching branch carries U*n_c = u_tilde_target.

    At fixed (delta, u_tilde) the occupation is explicit,
    n = P_l (kappa+kt)^2 / (kt^2 + (delta - 2*u_tilde)^2), leaving a
    one-dimensional fixed point in kt; the recovered U = u_tilde/n is
    then verified against the full cubic solve.
    """
    drive = derive_drive(params, point)
    kappa, g = params.kappa, params.g
    delta = point.detuning
    sq = math.sqrt(drive.p_l)
    kt = kappa
    n = None
    last_step = None
    for _ in range(max_iter):
        denom = kt * kt + (delta - 2.0 * u_tilde_target) ** 2
        n = drive.p_l * (kappa + kt) ** 2 / denom
        c_bar = (kappa + kt) * sq / (kt + 1j * (delta - 2.0 * u_tilde_target))
        q_bar = -2.0 * g * sq * c_bar.imag / params.omega_m
        kt_new = kappa + g * q_bar
        step = kt_new - kt
        if last_step is not None and step * last_step < 0:
            kt_new = kt + 0.5 * step
            step = kt_new - kt
        if abs(step) < tol * kappa:
            kt = kt_new
            break
        last_step = step
        kt = kt_new
    else:
        raise InversionFailed(delta / kappa, u_tilde_target / kappa, "kappa_tilde iteration stalled")
    if kt <= 0 or n is None or n <= 0:
        raise InversionFailed(delta / kappa, u_tilde_target / kappa, "no physical occupation")
    return u_tilde_target / n, n


def _eval_2d_cell(task):
    params, point, dk, utk, with_cooling, columns = task
    kappa = params.kappa
    pt = OperatingPoint(power=point.power, detuning=dk * kappa, kerr=point.kerr)
    try:
        if utk == 0.0:
            u = 0.0
        else:
            u, _ = _invert_u_tilde(params, pt, utk * kappa)
        pt = OperatingPoint(power=point.power, detuning=pt.detuning, kerr=u)
        drive = derive_drive(params, pt)
        branches = classify_branches(solve_selfconsistent(params, pt, drive))
    except (InversionFailed, NoConvergence) as exc:
        row = _blank_row(dk, f"error:{type(exc).__name__}", columns, axis2_value=utk)
        row["_error"] = str(exc)
        return [row]
    matches = [b for b in branches if abs(b.u_tilde / kappa - utk) <= 1e-6 * max(1.0, utk)]
    if not matches:
        row = _blank_row(dk, "error:InversionFailed", columns, axis2_value=utk)
        row["_error"] = (
            f"recovered U gives U*n_c/kappa { [b.u_tilde / kappa for b in branches] }, "
            f"target {utk}"
        )
        return [row]
    branch = min(matches, key=lambda b: abs(b.u_tilde / kappa - utk))
    report = assess(params, pt, branch, drive)
    row = _branch_row(params, pt, drive, branch, report, dk, with_cooling and report.eig_stable)
    if with_cooling and not report.eig_stable:
        for c in COOLING_COLUMNS:
            row.setdefault(c, None)
    row["axis2_value"] = utk
    row["region_label"] = report.region
    return [row]


def phase_diagram(
    params: SystemParams,
    point: OperatingPoint,
    delta_axis=(0.0, 6.0, 200),
    u_axis=(0.0, 1.5, 200),
    u_axis_mode: str = "u_tilde",
    with_cooling: bool = True,
    threads: int | None = None,
) -> SweepGrid:
    """Map stability regions and cooling observables over (delta/kappa, U*n_c/kappa).

    In the default u_tilde mode each cell fixes the self-consistent
    product U*n_c, so bistable folds collapse to a single state per
    cell; cells the inversion cannot reach stay blank.  In "u" mode the
    second axis is the bare Kerr shift in uHz and every branch at each
    cell produces a row.
    """
    if u_axis_mode not in ("u_tilde", "u"):
        raise ValueError(f"u_axis_mode must be 'u_tilde' or 'u', got '{u_axis_mode}'")
    d_vals = _axis_values(*delta_axis, "linear")
    u_vals = _axis_values(*u_axis, "linear")
    columns = (
        ("axis_value", "axis2_value") + BASE_COLUMNS[1:] + ("region_label",)
        + (COOLING_COLUMNS if with_cooling else ())
    )
    tasks = []
    for utk in u_vals:
        for dk in d_vals:
            tasks.append((params, point, float(dk), float(utk), with_cooling, columns))

    if u_axis_mode == "u":
        results = _pool_map(_eval_2d_cell_bare_u, tasks, threads)
    else:
        results = _pool_map(_eval_2d_cell, tasks, threads)

    axis2_name = "u_tilde" if u_axis_mode == "u_tilde" else "kerr"
    axis2_unit = "u_n_c_over_kappa" if u_axis_mode == "u_tilde" else "uHz"
    grid = SweepGrid(
        kind="2d",
        axes=(
            {"name": "detuning", "start": float(delta_axis[0]), "stop": float(delta_axis[1]),
             "count": int(delta_axis[2]), "spacing": "linear", "unit": "delta_over_kappa"},
            {"name": axis2_name, "start": float(u_axis[0]), "stop": float(u_axis[1]),
             "count": int(u_axis[2]), "spacing": "linear", "unit": axis2_unit},
        ),
        columns=columns,
        config=serialize_config(params, point),
    )
    for rows in results:
        for r in rows:
            err = r.pop("_error", None)
            if err:
                grid.errors.append(
                    {"axis_value": r["axis_value"], "axis2_value": r["axis2_value"], "detail": err}
                )
            grid.rows.append(r)
    return grid


def _eval_2d_cell_bare_u(task):
    params, point, dk, u_uhz, with_cooling, columns = task
    kappa = params.kappa
    pt = OperatingPoint(power=point.power, detuning=dk * kappa, kerr=u_uhz * 1e-6)
    try:
        drive = derive_drive(params, pt)
        branches = classify_branches(solve_selfconsistent(params, pt, drive))
    except NoConvergence as exc:
        row = _blank_row(dk, f"error:{type(exc).__name__}", columns, axis2_value=u_uhz)
        row["_error"] = str(exc)
        return [row]
    rows = []
    for branch in branches:
        report = assess(params, pt, branch, drive)
        row = _branch_row(params, pt, drive, branch, report, dk, with_cooling and report.eig_stable)
        if with_cooling and not report.eig_stable:
            for c in COOLING_COLUMNS:
                row.setdefault(c, None)
        row["axis2_value"] = u_uhz
        row["region_label"] = report.region
        rows.append(row)
    return rows


def _response_curve_rows(params, point, branch, drive, omega_over_kappa):
    rows = []
    for wk in omega_over_kappa:
        w = wk * params.kappa
        r = response_evaluate(params, point, branch, w, drive)
        rows.append({
            "omega_over_kappa": wk,
            "omega_eff_over_omega_m": float(r.omega_eff) / params.omega_m,
            "gamma_eff_over_gamma_m": float(r.gamma_eff) / params.gamma_m,
            "chi_eff_abs2": abs(r.chi_eff) ** 2,
            "s_backaction": s_backaction(w, params, point, branch, drive),
            "s_thermal": s_thermal(w, params),
        })
    return rows


def _stable_branches(params, point, drive):
    branches = classify_branches(solve_selfconsistent(params, point, drive))
    return [b for b in branches if assess(params, point, b, drive).eig_stable]


def figure_dataset(
    figure_id: str,
    out_dir,
    overrides: dict | None = None,
    grid_scale: float = 1.0,
    threads: int | None = None,
):
    """Write the CSV + JSON sidecar set behind one source-figure panel.

    grid_scale shrinks every axis count (floor 8 points) for quick runs;
    the sidecar records the exact grid used.
    """
    os.makedirs(out_dir, exist_ok=True)

    def n_of(n):
        return max(8, int(round(n * grid_scale)))

    written = []

    def emit(grid, name):
        written.append(write_csv(grid, os.path.join(out_dir, f"{name}.csv")))

    if figure_id in ("2a", "2b"):
        params, point = preset("room_temp_membrane")
        params, point = _apply_overrides(params, point, overrides)
        last = None
        for u in CURVE_U_UHZ:
            p, pt = with_updates(params, point, kerr=u * 1e-6)
            if figure_id == "2a":
                grid = sweep_1d(p, pt, axis="detuning", start=0.0, stop=6.0,
                                count=n_of(400), threads=threads)
            else:
                pt = OperatingPoint(power=pt.power, detuning=3.0 * p.kappa, kerr=pt.kerr)
                grid = sweep_1d(p, pt, axis="power", start=1.0, stop=300.0,
                                count=n_of(400), threads=threads)
            emit(grid, f"fig{figure_id}_U{u:.0f}")
            last = grid
        written.append(write_sidecar(
            last, os.path.join(out_dir, f"fig{figure_id}.json"), figure_id=figure_id,
            extra={"curves_u_uhz": list(CURVE_U_UHZ)},
        ))
        return written

    if figure_id == "3":
        params, point = preset("room_temp_membrane")
        params, point = _apply_overrides(params, point, overrides)
        wks = np.linspace(0.02, 0.18, n_of(600))
        last = None
        for u, dk in FIG3_PAIRS:
            p, pt = with_updates(params, point, kerr=u * 1e-6, detuning=dk * params.kappa)
            drive = derive_drive(p, pt)
            stable = _stable_branches(p, pt, drive)
            branch = stable[-1]
            rows = _response_curve_rows(p, pt, branch, drive, wks)
            grid = SweepGrid(
                kind="1d",
                axes=({"name": "omega", "start": 0.02, "stop": 0.18,
                       "count": len(wks), "spacing": "linear", "unit": "omega_over_kappa"},),
                columns=tuple(rows[0].keys()),
                rows=rows,
                config=serialize_config(p, pt),
            )
            emit(grid, f"fig3_U{u:.0f}")
            last = grid
        written.append(write_sidecar(
            last, os.path.join(out_dir, "fig3.json"), figure_id="3",
            extra={"curves": [{"u_uhz": u, "delta_over_kappa": dk} for u, dk in FIG3_PAIRS],
                   "branch": "highest stable"},
        ))
        return written

    if figure_id in ("4a", "4b", "4c", "4d"):
        params, point = preset("room_temp_membrane")
        params, point = _apply_overrides(params, point, overrides)
        grid = phase_diagram(
            params, point,
            delta_axis=(0.0, 6.0, n_of(200)), u_axis=(0.0, 1.5, n_of(200)),
            with_cooling=figure_id != "4a", threads=threads,
        )
        emit(grid, f"fig{figure_id}")
        extra = None
        if figure_id == "4d":
            inset = phase_diagram(
                params, point,
                delta_axis=(0.0, 6.0, n_of(400)), u_axis=(1.0, 1.0, 1),
                with_cooling=True, threads=threads,
            )
            emit(inset, "fig4d_inset")
            extra = {"inset": "delta_n_c vs delta/kappa at U*n_c/kappa = 1"}
        written.append(write_sidecar(
            grid, os.path.join(out_dir, f"fig{figure_id}.json"), figure_id=figure_id,
            assumptions=(FIG4_RANGE_NOTE,), extra=extra,
        ))
        return written

    if figure_id == "5":
        params, point = preset("cryogenic_membrane")
        params, point = _apply_overrides(params, point, overrides)
        grid = phase_diagram(
            params, point,
            delta_axis=(0.0, 6.0, n_of(200)), u_axis=(0.0, 1.5, n_of(200)),
            with_cooling=True, threads=threads,
        )
        emit(grid, "fig5")
        drive = derive_drive(params, point)
        branch = _stable_branches(params, point, drive)[-1]
        wks = np.linspace(0.02, 0.18, n_of(600))
        rows = []
        for wk in wks:
            w = wk * params.kappa
            sc = s_backaction(w, params, point, branch, drive)
            st = s_thermal(w, params)
            rows.append({"omega_over_kappa": wk, "s_backaction": sc,
                         "s_thermal": st, "s_total": sc + st})
        inset = SweepGrid(
            kind="1d",
            axes=({"name": "omega", "start": 0.02, "stop": 0.18,
                   "count": len(wks), "spacing": "linear", "unit": "omega_over_kappa"},),
            columns=tuple(rows[0].keys()),
            rows=rows,
            config=serialize_config(params, point),
        )
        emit(inset, "fig5_inset")
        written.append(write_sidecar(
            grid, os.path.join(out_dir, "fig5.json"), figure_id="5",
            assumptions=(FIG4_RANGE_NOTE,),
            extra={"inset": "noise spectra at the preset operating point"},
        ))
        return written

    raise UnknownFigure(f"unknown figure id '{figure_id}'; known: 2a 2b 3 4a 4b 4c 4d 5")


def _apply_overrides(params, point, overrides):
    if not overrides:
        return params, point
    return with_updates(params, point, **overrides)
