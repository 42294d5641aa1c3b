"""Deterministic per-point evaluation over the workspace.

Drives any scalar-vector evaluator over the cubic workspace grid or the
cube diagonal and collects the results into a :class:`SweepTable` with a
fixed column schema, a parameter snapshot, and first-occurrence extrema
helpers.  Points the kinematics cannot reach are recorded as skipped
rather than aborting the sweep, so partial workspaces still produce
usable tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import KinematicsError
from .geometry import MachineParams, diagonal_point

__all__ = ["SweepTable", "grid_points", "diagonal_samples", "sweep"]


@dataclass(frozen=True, eq=False)
class SweepTable:
    """Result of a sweep: one row of values per successfully evaluated point.

    Attributes:
        columns: value column names, in row order.
        units: unit string per column (parallel to ``columns``).
        points: (n, 3) evaluated points, in sweep order.
        values: (n, len(columns)) evaluated values.
        params: machine-parameter snapshot the sweep ran under.
        grid: description of the point set (kind, sample count, ...).
        skipped: ((point, reason), ...) for points that raised a
            kinematics error.
    """

    columns: tuple[str, ...]
    units: tuple[str, ...]
    points: np.ndarray
    values: np.ndarray
    params: dict
    grid: dict = field(default_factory=dict)
    skipped: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "units", tuple(self.units))
        if len(self.columns) != len(self.units):
            raise ValueError("columns and units must have equal length")
        points = np.asarray(self.points, float).reshape(-1, 3)
        values = np.asarray(self.values, float).reshape(len(points), -1)
        if values.shape[1] != len(self.columns):
            raise ValueError(
                f"each row holds {values.shape[1]} values "
                f"but the schema names {len(self.columns)}"
            )
        points.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "skipped", tuple(self.skipped))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def n_skipped(self) -> int:
        return len(self.skipped)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def argmin(self, name: str) -> int:
        """Row index of the column minimum (first occurrence on ties)."""
        return int(np.argmin(self.column(name)))

    def argmax(self, name: str) -> int:
        """Row index of the column maximum (first occurrence on ties)."""
        return int(np.argmax(self.column(name)))


def grid_points(n: int, params: MachineParams = MachineParams()) -> np.ndarray:
    """Uniform n^3 grid over the workspace cube, lexicographic order.

    Args:
        n: samples per axis, at least 2 (endpoints included, so the
            cube corners are always part of the grid).
    """
    if n < 2:
        raise ValueError("grid needs at least 2 samples per axis")
    axes = [
        np.linspace(params.cube_min[k], params.cube_max[k], n) for k in range(3)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def diagonal_samples(n: int, params: MachineParams = MachineParams()) -> np.ndarray:
    """Increasing t values along the cube diagonal, the exact 0.0 included.

    Returns ``n`` uniform values from the diagonal's lower to upper
    corner coordinate; when 0 (the isotropic position) does not land on
    a sample exactly, it is inserted, so the result holds ``n`` or
    ``n + 1`` values.
    """
    if n < 2:
        raise ValueError("diagonal sweep needs at least 2 samples")
    lo = params.cube_min[0]
    hi = params.cube_max[0]
    t = np.linspace(lo, hi, n)
    if lo < 0.0 < hi and not np.any(t == 0.0):
        t = np.insert(t, int(np.searchsorted(t, 0.0)), 0.0)
    return t


def sweep(
    points,
    evaluator,
    schema,
    params: MachineParams = MachineParams(),
    grid: dict | None = None,
) -> SweepTable:
    """Evaluate ``evaluator`` at every point and tabulate the results.

    Args:
        points: iterable of points (mm); scalars are interpreted as
            diagonal coordinates t and expanded to (t, t, t).
        evaluator: callable point -> sequence of floats, one per schema
            column; may raise a kinematics error to skip the point.
        schema: sequence of (column name, unit) pairs.
        params: machine dimensions, recorded in the table snapshot.
        grid: optional description of the point set for the snapshot.

    The row order follows the input point order; rows for skipped points
    are dropped and recorded in ``skipped`` with the failure reason.
    """
    schema = tuple(schema)
    names = tuple(name for name, _ in schema)
    units = tuple(unit for _, unit in schema)
    kept_points: list[np.ndarray] = []
    rows: list[np.ndarray] = []
    skipped: list[tuple[tuple, str]] = []
    for raw in points:
        point = diagonal_point(raw) if np.ndim(raw) == 0 else np.asarray(raw, float)
        try:
            row = np.asarray(evaluator(point), float).reshape(-1)
        except KinematicsError as exc:
            skipped.append((tuple(point.tolist()), f"{type(exc).__name__}: {exc}"))
            continue
        if row.shape[0] != len(names):
            raise ValueError(
                f"evaluator returned {row.shape[0]} values, schema names {len(names)}"
            )
        kept_points.append(point)
        rows.append(row)
    return SweepTable(
        columns=names,
        units=units,
        points=np.asarray(kept_points, float).reshape(-1, 3),
        values=np.asarray(rows, float).reshape(-1, len(names)),
        params=params.as_dict(),
        grid=dict(grid or {}),
        skipped=tuple(skipped),
    )
