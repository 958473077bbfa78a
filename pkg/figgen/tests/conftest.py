"""Synthetic datasets that mirror the upstream CSV/JSON layout.

The fixtures keep figgen's suite independent of the simulation package:
rows are handwritten but follow the documented schema exactly (header
line, %.12g floats, 1/0 booleans, empty fields for unavailable values).
"""

import json

import pytest

BASE_COLS = (
    "axis_value", "branch_label", "n_c", "u_n_c_over_kappa", "q_bar",
    "kappa_tilde", "s1", "s2", "s3", "stable", "max_re_eig",
)
COOL_COLS = (
    "t_eff_k", "n_m", "var_x", "var_y", "delta_n_c", "squeezing_db",
    "linearization_suspect",
)
MAP_COLS = ("axis_value", "axis2_value") + BASE_COLS[1:] + ("region_label",) + COOL_COLS
CURVES = (50.0, 100.0, 150.0, 200.0)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, str):
        return v
    return f"{float(v):.12g}"


def write_csv(path, columns, rows):
    lines = [",".join(columns)]
    lines += [",".join(_fmt(r.get(c)) for c in columns) for r in rows]
    path.write_text("\n".join(lines) + "\n")


def _sidecar(path, figure_id, extra=None):
    doc = {
        "version": "0.1.0",
        "config": {"kappa_mhz": 1.5, "power_mw": 100.0},
        "grid": {"kind": "1d", "axes": []},
        "turning_points": [],
        "errors": [],
        "figure_id": figure_id,
    }
    if extra:
        doc.update(extra)
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _branch_row(x, label, n, stable):
    s = 1.0 if stable else -1.0
    return {
        "axis_value": x, "branch_label": label, "n_c": n,
        "u_n_c_over_kappa": n / 8.0, "q_bar": -n / 5.0, "kappa_tilde": 9.4e6,
        "s1": s * 2e18, "s2": s * 3e17, "s3": 5e40, "stable": stable,
        "max_re_eig": -1.0 if stable else 4.0,
    }


def _branch_curve_rows(scale):
    rows = []
    for x in (0.0, 1.0, 2.0, 3.0, 4.0):
        if x in (2.0, 3.0):
            rows.append(_branch_row(x, "lower", 1.0 * scale, True))
            rows.append(_branch_row(x, "middle", 2.0 * scale, False))
            rows.append(_branch_row(x, "upper", 4.0 * scale, True))
        else:
            rows.append(_branch_row(x, "only", scale * (1.0 + x), x < 3.5))
    return rows


def _map_rows():
    plan = {
        (0.0, 0.0): "stable", (2.0, 0.0): "s3_unstable", (4.0, 0.0): "s12_unstable",
        (0.0, 0.75): "stable", (2.0, 0.75): "s12_unstable", (4.0, 0.75): "all_unstable",
        (0.0, 1.5): None, (2.0, 1.5): "s12_unstable", (4.0, 1.5): "all_unstable",
    }
    rows = []
    for (x, y), region in plan.items():
        if region is None:  # unreachable cell: everything after the axes is blank
            rows.append({"axis_value": x, "axis2_value": y, "branch_label": ""})
            continue
        stable = region == "stable"
        row = _branch_row(x, "only", 1e9 * (1 + x), stable)
        row.update({"axis2_value": y, "region_label": region})
        if stable:
            row.update({"t_eff_k": 0.01 * (1 + x + y), "n_m": 1e3 * (1 + x),
                        "var_x": 0.4, "var_y": 0.7, "delta_n_c": 50.0 * (1 + y),
                        "squeezing_db": 0.97, "linearization_suspect": False})
        rows.append(row)
    return rows


def _response_rows(u):
    rows = []
    for i in range(6):
        w = 0.02 + 0.032 * i
        rows.append({
            "omega_over_kappa": w,
            "omega_eff_over_omega_m": 1.0 - 0.0002 * u * w,
            "gamma_eff_over_gamma_m": 10.0 + u * w,
            "chi_eff_abs2": 1e-3 / (1.0 + u * w),
            "s_backaction": 1e4 * (1.0 + w) * u / 50.0,
            "s_thermal": 8e3,
        })
    return rows


@pytest.fixture(scope="session")
def dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("dataset")
    for fig_id in ("2a", "2b"):
        for u in CURVES:
            write_csv(d / f"fig{fig_id}_U{u:.0f}.csv", BASE_COLS,
                      _branch_curve_rows(u))
        _sidecar(d / f"fig{fig_id}.json", fig_id,
                 {"curves_u_uhz": list(CURVES)})

    for u in CURVES:
        write_csv(d / f"fig3_U{u:.0f}.csv", tuple(_response_rows(50.0)[0]),
                  _response_rows(u))
    _sidecar(d / "fig3.json", "3",
             {"curves": [{"u_uhz": u, "delta_over_kappa": 1.0 + u / 100} for u in CURVES],
              "branch": "highest stable"})

    for fig_id in ("4a", "4b", "4c", "4d", "5"):
        cols = MAP_COLS if fig_id != "4a" else MAP_COLS[:-len(COOL_COLS)]
        write_csv(d / f"fig{fig_id}.csv", cols, _map_rows())
        _sidecar(d / f"fig{fig_id}.json", fig_id)

    inset = []
    for i in range(9):
        x = 0.5 * i
        stable = i not in (4, 5)
        row = _branch_row(x, "only", 1e9, stable)
        row["axis2_value"] = 1.0
        row["region_label"] = "stable" if stable else "s12_unstable"
        if stable:
            row["delta_n_c"] = 10.0 ** (1 + 0.4 * i)
        inset.append(row)
    write_csv(d / "fig4d_inset.csv", MAP_COLS, inset)

    rows5 = [{"omega_over_kappa": 0.02 + 0.032 * i,
              "s_backaction": 1.2e4 * (1 + 0.1 * i),
              "s_thermal": 8.7e3,
              "s_total": 1.2e4 * (1 + 0.1 * i) + 8.7e3} for i in range(6)]
    write_csv(d / "fig5_inset.csv", tuple(rows5[0]), rows5)
    return d
