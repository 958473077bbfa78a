"""Panel renderers.

Each renderer reads the documented file layout for one figure id from a
data directory and returns a matplotlib Figure; saving is the CLI's job.
Expected files, by id:

- 2a, 2b: ``fig<id>_U<u>.csv`` per curve plus ``fig<id>.json`` listing
  ``curves_u_uhz``
- 3: ``fig3_U<u>.csv`` per curve plus ``fig3.json`` with ``curves``
- 4a-4d: ``fig<id>.csv`` (+ ``fig4d_inset.csv``) plus sidecar
- 5: ``fig5.csv`` and ``fig5_inset.csv`` plus sidecar
"""

import os

import numpy as np
from matplotlib.colors import ListedColormap, LogNorm
from matplotlib.figure import Figure
from matplotlib.lines import Line2D
from matplotlib.patches import Patch

from .io import read_sidecar, read_table
from .style import (
    REGION_COLORS,
    REGION_ORDER,
    STABLE_LS,
    UNSTABLE_LS,
    curve_color,
    stable_segments,
)

FIGURE_IDS = ("2a", "2b", "3", "4a", "4b", "4c", "4d", "5")
DEFAULT_CURVES = (50.0, 100.0, 150.0, 200.0)

# scalar overlay per map figure and whether it lives on a log scale
MAP_QUANTITY = {
    "4a": None,
    "4b": ("t_eff_k", True),
    "4c": ("squeezing_db", False),
    "4d": ("delta_n_c", True),
    "5": ("n_m", True),
}


def _curve_list(data_dir, fig_id):
    doc = read_sidecar(os.path.join(data_dir, f"fig{fig_id}.json"))
    if "curves_u_uhz" in doc:
        return [float(u) for u in doc["curves_u_uhz"]]
    if "curves" in doc:
        return [float(c["u_uhz"]) for c in doc["curves"]]
    return list(DEFAULT_CURVES)


def _plot_branches(ax, table, ycol, color):
    """One curve file: split by branch label, style segments by stability."""
    groups = {}
    for row in table.rows:
        groups.setdefault(row["branch_label"], []).append(row)
    for rows in groups.values():
        for seg, flag in stable_segments(rows):
            xs = [r["axis_value"] for r in seg if r[ycol] is not None]
            ys = [r[ycol] for r in seg if r[ycol] is not None]
            if len(xs) < 2:
                continue
            ax.plot(xs, ys, color=color, linewidth=1.4,
                    linestyle=STABLE_LS if flag else UNSTABLE_LS)


def _curve_legend(ax, curves):
    handles = [Line2D([], [], color=curve_color(u), label=f"U = {u:g} uHz")
               for u in curves]
    handles += [Line2D([], [], color="0.2", linestyle=STABLE_LS, label="stable"),
                Line2D([], [], color="0.2", linestyle=UNSTABLE_LS, label="unstable")]
    ax.legend(handles=handles, fontsize=8, framealpha=0.9)


def _render_branch_curves(data_dir, fig_id, ycol, ylabel, xlabel, logy):
    curves = _curve_list(data_dir, fig_id)
    fig = Figure(figsize=(6.4, 4.6))
    ax = fig.subplots()
    for u in curves:
        table = read_table(os.path.join(data_dir, f"fig{fig_id}_U{u:.0f}.csv"))
        table.require("axis_value", "branch_label", ycol, "stable")
        _plot_branches(ax, table, ycol, curve_color(u))
    _curve_legend(ax, curves)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if logy:
        ax.set_yscale("log")
    fig.suptitle(f"fig{fig_id}")
    return fig


def render_2a(data_dir):
    return _render_branch_curves(
        data_dir, "2a", ycol="u_n_c_over_kappa",
        ylabel="U n_c / kappa", xlabel="detuning / kappa", logy=False)


def render_2b(data_dir):
    return _render_branch_curves(
        data_dir, "2b", ycol="n_c",
        ylabel="n_c", xlabel="input power (mW)", logy=True)


def render_3(data_dir):
    doc = read_sidecar(os.path.join(data_dir, "fig3.json"))
    curves = doc.get("curves") or [{"u_uhz": u} for u in DEFAULT_CURVES]
    fig = Figure(figsize=(9.0, 6.4))
    axs = fig.subplots(2, 2)
    thermal_drawn = False
    for c in curves:
        u = float(c["u_uhz"])
        table = read_table(os.path.join(data_dir, f"fig3_U{u:.0f}.csv"))
        table.require("omega_over_kappa", "omega_eff_over_omega_m",
                      "gamma_eff_over_gamma_m", "chi_eff_abs2",
                      "s_backaction", "s_thermal")
        w = table.column("omega_over_kappa")
        color = curve_color(u)
        label = f"U = {u:g} uHz"
        axs[0, 0].plot(w, table.column("omega_eff_over_omega_m"),
                       color=color, label=label)
        axs[0, 1].plot(w, table.column("gamma_eff_over_gamma_m"), color=color)
        axs[1, 0].plot(w, table.column("chi_eff_abs2"), color=color)
        axs[1, 1].plot(w, table.column("s_backaction"), color=color)
        if not thermal_drawn:
            axs[1, 1].plot(w, table.column("s_thermal"), color="0.4",
                           linestyle="--", label="thermal")
            thermal_drawn = True
    axs[0, 0].set_ylabel("omega_eff / omega_m")
    axs[0, 1].set_ylabel("gamma_eff / gamma_m")
    axs[0, 1].set_yscale("log")
    axs[1, 0].set_ylabel("|chi_eff|^2")
    axs[1, 0].set_yscale("log")
    axs[1, 1].set_ylabel("force noise")
    axs[1, 1].set_yscale("log")
    for ax in axs.flat:
        ax.set_xlabel("omega / kappa")
    axs[0, 0].legend(fontsize=8)
    axs[1, 1].legend(fontsize=8)
    fig.suptitle("fig3")
    fig.tight_layout()
    return fig


def _edges(vals):
    v = np.asarray(vals, dtype=float)
    if v.size == 1:
        return np.array([v[0] - 0.5, v[0] + 0.5])
    mid = 0.5 * (v[1:] + v[:-1])
    return np.concatenate([[2 * v[0] - mid[0]], mid, [2 * v[-1] - mid[-1]]])


def _rasterize(table, value_col=None):
    xs = sorted({r["axis_value"] for r in table.rows})
    ys = sorted({r["axis2_value"] for r in table.rows})
    xi = {v: i for i, v in enumerate(xs)}
    yi = {v: i for i, v in enumerate(ys)}
    region = np.full((len(ys), len(xs)), -1.0)
    qty = np.full((len(ys), len(xs)), np.nan)
    for r in table.rows:
        i, j = yi[r["axis2_value"]], xi[r["axis_value"]]
        label = r.get("region_label")
        if label in REGION_ORDER:
            region[i, j] = REGION_ORDER.index(label)
        if value_col is not None and r.get(value_col) is not None:
            qty[i, j] = r[value_col]
    return np.asarray(xs), np.asarray(ys), region, qty


def _region_panel(ax, xs, ys, region):
    cmap = ListedColormap([REGION_COLORS[k] for k in REGION_ORDER])
    masked = np.ma.masked_less(region, 0.0)
    ax.pcolormesh(_edges(xs), _edges(ys), masked, cmap=cmap,
                  vmin=-0.5, vmax=len(REGION_ORDER) - 0.5)
    ax.set_xlabel("detuning / kappa")
    ax.set_ylabel("U n_c / kappa")
    ax.set_title("stability regions", fontsize=10)
    handles = [Patch(facecolor=REGION_COLORS[k], label=k) for k in REGION_ORDER]
    ax.legend(handles=handles, fontsize=7, loc="upper right", framealpha=0.9)


def _quantity_panel(fig, ax, xs, ys, qty, name, log):
    data = np.ma.masked_invalid(qty)
    norm = None
    if log:
        data = np.ma.masked_less_equal(data, 0.0)
        if data.count():
            norm = LogNorm(vmin=float(data.min()), vmax=float(data.max()))
    mesh = ax.pcolormesh(_edges(xs), _edges(ys), data, norm=norm,
                         cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=name)
    ax.set_xlabel("detuning / kappa")
    ax.set_title(name + (" (stable cells)" if name != "squeezing_db" else ""),
                 fontsize=10)


def _inset_4d(ax, data_dir):
    table = read_table(os.path.join(data_dir, "fig4d_inset.csv"))
    table.require("axis_value", "delta_n_c", "stable")
    for seg, flag in stable_segments(table.rows):
        xs = [r["axis_value"] for r in seg if r["delta_n_c"] is not None]
        ys = [r["delta_n_c"] for r in seg if r["delta_n_c"] is not None]
        if len(xs) >= 2:
            ax.plot(xs, ys, color="0.15",
                    linestyle=STABLE_LS if flag else UNSTABLE_LS)
    ax.set_yscale("log")
    ax.set_xlabel("detuning / kappa")
    ax.set_ylabel("delta n_c")
    ax.set_title("photon fluctuations at U n_c / kappa = 1", fontsize=10)


def _inset_5(ax, data_dir):
    table = read_table(os.path.join(data_dir, "fig5_inset.csv"))
    table.require("omega_over_kappa", "s_backaction", "s_thermal", "s_total")
    w = table.column("omega_over_kappa")
    ax.plot(w, table.column("s_total"), color="0.15", label="total")
    ax.plot(w, table.column("s_backaction"), color="#4f7cc1", label="backaction")
    ax.plot(w, table.column("s_thermal"), color="#e07b28", label="thermal")
    ax.set_yscale("log")
    ax.set_xlabel("omega / kappa")
    ax.set_ylabel("force noise")
    ax.legend(fontsize=8)
    ax.set_title("noise spectra at the operating point", fontsize=10)


def render_map(data_dir, fig_id):
    value = MAP_QUANTITY[fig_id]
    table = read_table(os.path.join(data_dir, f"fig{fig_id}.csv"))
    table.require("axis_value", "axis2_value", "region_label")
    if value is not None:
        table.require(value[0])
    has_inset = fig_id in ("4d", "5")
    ncols = 1 + (value is not None) + has_inset
    fig = Figure(figsize=(4.8 * ncols, 4.2))
    axs = np.atleast_1d(fig.subplots(1, ncols))

    xs, ys, region, qty = _rasterize(table, value[0] if value else None)
    _region_panel(axs[0], xs, ys, region)
    if value is not None:
        _quantity_panel(fig, axs[1], xs, ys, qty, value[0], value[1])
    if fig_id == "4d":
        _inset_4d(axs[2], data_dir)
    elif fig_id == "5":
        _inset_5(axs[2], data_dir)
    fig.suptitle(f"fig{fig_id}")
    fig.tight_layout()
    return fig


def render(figure_id, data_dir):
    """Render one figure id from a data directory; returns the Figure."""
    if figure_id == "2a":
        return render_2a(data_dir)
    if figure_id == "2b":
        return render_2b(data_dir)
    if figure_id == "3":
        return render_3(data_dir)
    if figure_id in MAP_QUANTITY:
        return render_map(data_dir, figure_id)
    raise ValueError(
        f"unknown figure id '{figure_id}'; known: {' '.join(FIGURE_IDS)}")
