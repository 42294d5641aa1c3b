"""Report tables and figures for the sensitivity sweeps.

Builders produce :class:`~pkmsens.sweep.SweepTable` objects (or plain
arrays for the workspace-mean report); writers serialize them as CSV
with locale-independent, shortest round-trip float formatting and LF
line endings; renderers draw the matching overview figure to a PNG next
to the CSV.  Figures use the object-oriented matplotlib API with the Agg
canvas, so no display or global pyplot state is involved.
"""

from __future__ import annotations

import csv

import numpy as np

from .diffvec import (
    FULL_PARAM_LABELS,
    THETA_PARAM_LABELS,
    build_model,
    global_rotation_indices,
    orientation_indices,
    position_indices,
)
from .geometry import MachineParams
from .linkage import (
    PARAM_NAMES,
    ROW_NAMES,
    global_sensitivity,
    mean_abs_sensitivity,
    sensitivity_matrix,
)
from .sweep import SweepTable, diagonal_samples, sweep

__all__ = [
    "linkage_mean_rows",
    "write_linkage_mean_csv",
    "linkage_diagonal_table",
    "diffvec_diagonal_table",
    "write_diagonal_csv",
    "render_linkage_mean_figure",
    "render_linkage_diagonal_figure",
    "render_diffvec_diagonal_figure",
]

#: Short Cartesian row tags used in wide-table column names.
_ROW_TAGS = ("px", "py", "pz")


def _fmt(value) -> str:
    """Shortest decimal string that round-trips the double exactly."""
    return repr(float(value))


# ---------------------------------------------------------------------------
# Workspace-mean report (one scalar per sensitivity coefficient)


def linkage_mean_rows(
    params: MachineParams = MachineParams(), grid_n: int = 21
) -> list[tuple[str, int, str, float]]:
    """Rows (row, param_leg, param_name, mean_abs_coeff), 54 entries.

    The mean is taken over the uniform ``grid_n``^3 workspace grid of the
    absolute linkage sensitivity coefficients.
    """
    mean = mean_abs_sensitivity(params, grid_n=grid_n)
    rows = []
    for r, row_name in enumerate(ROW_NAMES):
        for k, param in enumerate(PARAM_NAMES):
            bare, _, leg = param.rpartition("_")
            rows.append((row_name, int(leg), bare, float(mean[r, k])))
    return rows


def write_linkage_mean_csv(rows, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(("row", "param_leg", "param_name", "mean_abs_coeff"))
        for row_name, leg, param, value in rows:
            writer.writerow((row_name, str(leg), param, _fmt(value)))


# ---------------------------------------------------------------------------
# Diagonal sweep tables


def linkage_diagonal_table(
    params: MachineParams = MachineParams(), n: int = 101
) -> SweepTable:
    """Linkage sensitivities along the cube diagonal.

    Columns: the 54 absolute coefficients (one per Cartesian row and
    design value), the three global row norms, and the total (Frobenius)
    sensitivity.
    """
    names = [
        f"{tag}_{param}" for tag in _ROW_TAGS for param in PARAM_NAMES
    ] + ["global_px", "global_py", "global_pz", "total"]

    def evaluate(point):
        matrix = sensitivity_matrix(point, params)
        rows, total = global_sensitivity(point, params)
        return np.concatenate([np.abs(matrix).reshape(-1), rows, [total]])

    return sweep(
        diagonal_samples(n, params),
        evaluate,
        [(name, "mm/mm") for name in names],
        params=params,
        grid={"kind": "diagonal", "n": n},
    )


def _diffvec_units() -> list[str]:
    mu = ["mm/mm" if lab[0] == "d" else "mm/rad" for lab in FULL_PARAM_LABELS]
    nu = ["rad/mm" if lab[0] == "d" else "rad/rad" for lab in THETA_PARAM_LABELS]
    return mu + nu + nu


def diffvec_diagonal_table(
    params: MachineParams = MachineParams(), n: int = 101
) -> SweepTable:
    """Vector-chain aggregate indices along the cube diagonal.

    Columns: the 11 position indices (mu_*), the 6 orientation indices
    (nu_*), and the 6 composed-rotation orientation indices
    (nu_alt_1..6, same parameter order as nu_*).
    """
    names = (
        [f"mu_{lab}" for lab in FULL_PARAM_LABELS]
        + [f"nu_{lab}" for lab in THETA_PARAM_LABELS]
        + [f"nu_alt_{k}" for k in range(1, 7)]
    )

    def evaluate(point):
        model = build_model(point, params)
        return np.concatenate(
            [
                position_indices(model.position_sensitivity),
                orientation_indices(model.rotation_sensitivity),
                global_rotation_indices(model.rotation_sensitivity),
            ]
        )

    return sweep(
        diagonal_samples(n, params),
        evaluate,
        list(zip(names, _diffvec_units())),
        params=params,
        grid={"kind": "diagonal", "n": n},
    )


def write_diagonal_csv(table: SweepTable, path) -> None:
    """Write a diagonal SweepTable as CSV with a leading t_mm column."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(("t_mm",) + table.columns)
        for point, row in zip(table.points, table.values):
            writer.writerow([_fmt(point[0])] + [_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# Figures


def _new_figure(figsize):
    from matplotlib.backends.backend_agg import FigureCanvasAgg
    from matplotlib.figure import Figure

    fig = Figure(figsize=figsize, layout="constrained")
    FigureCanvasAgg(fig)
    return fig


def render_linkage_mean_figure(rows, path) -> None:
    """Bar chart of the 54 workspace-mean coefficients, one panel per row."""
    fig = _new_figure((10.0, 7.5))
    by_row: dict[str, list[tuple[str, float]]] = {}
    for row_name, leg, param, value in rows:
        by_row.setdefault(row_name, []).append((f"{param}_{leg}", value))
    axes = fig.subplots(len(by_row), 1, sharex=True)
    for ax, (row_name, entries) in zip(np.atleast_1d(axes), by_row.items()):
        labels = [name for name, _ in entries]
        ax.bar(range(len(entries)), [v for _, v in entries], color="#3a6ea5")
        ax.set_ylabel(f"mean |d{row_name}/dq|")
        ax.grid(True, axis="y", alpha=0.3)
        ax.set_xticks(range(len(entries)))
        ax.set_xticklabels(labels, rotation=75, fontsize=7)
    fig.suptitle("Workspace-mean linkage sensitivity per design value")
    fig.savefig(path, dpi=150)


def render_linkage_diagonal_figure(table: SweepTable, path) -> None:
    """Leg-1 coefficients of the x row, plus global norms, along the diagonal."""
    t = table.points[:, 0]
    fig = _new_figure((8.0, 7.0))
    top, bottom = fig.subplots(2, 1, sharex=True)
    for param in PARAM_NAMES[:6]:
        top.plot(t, table.column(f"px_{param}"), label=param)
    top.set_ylabel("|d p_x / d q| (mm/mm)")
    top.legend(fontsize=8, ncols=3)
    top.grid(True, alpha=0.3)
    top.set_title("Linkage sensitivity along the workspace diagonal")
    for name in ("global_px", "global_py", "global_pz", "total"):
        bottom.plot(t, table.column(name), label=name)
    bottom.set_xlabel("diagonal coordinate t (mm)")
    bottom.set_ylabel("aggregate (mm/mm)")
    bottom.legend(fontsize=8)
    bottom.grid(True, alpha=0.3)
    fig.savefig(path, dpi=150)


def render_diffvec_diagonal_figure(table: SweepTable, path) -> None:
    """Position and orientation index curves along the diagonal."""
    t = table.points[:, 0]
    fig = _new_figure((8.0, 7.0))
    top, bottom = fig.subplots(2, 1, sharex=True)
    for lab in FULL_PARAM_LABELS:
        top.plot(t, table.column(f"mu_{lab}"), label=f"mu_{lab}")
    top.set_ylabel("position index (mm/mm, mm/rad)")
    top.legend(fontsize=7, ncols=4)
    top.grid(True, alpha=0.3)
    top.set_title("Aggregate sensitivity indices along the workspace diagonal")
    for k, lab in enumerate(THETA_PARAM_LABELS):
        line = bottom.plot(t, table.column(f"nu_{lab}"), label=f"nu_{lab}")
        bottom.plot(
            t,
            table.column(f"nu_alt_{k + 1}"),
            linestyle="--",
            linewidth=1.0,
            color=line[0].get_color(),
        )
    bottom.set_xlabel("diagonal coordinate t (mm)")
    bottom.set_ylabel("orientation index (rad/mm, rad/rad)")
    bottom.legend(fontsize=7, ncols=3, title="dashed: composed-rotation form")
    bottom.grid(True, alpha=0.3)
    fig.savefig(path, dpi=150)
