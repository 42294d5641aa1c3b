"""Workspace point generation and the sweep/table machinery."""

import numpy as np
import numpy.testing as npt
import pytest

from pkmsens.errors import OutOfWorkspace
from pkmsens.geometry import MachineParams
from pkmsens.linkage import sensitivity_matrix
from pkmsens.sweep import SweepTable, diagonal_samples, grid_points, sweep


# ---------------------------------------------------------------------------
# Point generation


def test_grid_points_two_per_axis_gives_cube_vertices(params):
    pts = grid_points(2, params)
    assert pts.shape == (8, 3)
    lo, hi = -73.21, 126.79
    vertices = {(x, y, z) for x in (lo, hi) for y in (lo, hi) for z in (lo, hi)}
    assert {tuple(p) for p in pts} == vertices
    # lexicographic order: first row is the near corner, last the far corner
    npt.assert_array_equal(pts[0], [lo, lo, lo])
    npt.assert_array_equal(pts[-1], [hi, hi, hi])
    as_tuples = [tuple(p) for p in pts]
    assert as_tuples == sorted(as_tuples)


def test_grid_points_odd_count_hits_cube_center(params):
    pts = grid_points(3, params)
    assert pts.shape == (27, 3)
    center = np.full(3, 26.79)
    assert any(np.allclose(p, center, atol=1e-12) for p in pts)


def test_grid_points_rejects_single_sample(params):
    with pytest.raises(ValueError):
        grid_points(1, params)
    with pytest.raises(ValueError):
        grid_points(0, params)


def test_diagonal_samples_always_include_zero(params):
    npt.assert_array_equal(diagonal_samples(2, params), [-73.21, 0.0, 126.79])
    t = diagonal_samples(101, params)
    assert t.shape == (102,)
    assert np.all(np.diff(t) > 0)
    assert t[0] == -73.21 and t[-1] == 126.79
    assert np.any(t == 0.0)


def test_diagonal_samples_no_insert_when_zero_is_a_sample():
    centered = MachineParams(cube_min=-100.0, cube_max=100.0)
    npt.assert_array_equal(diagonal_samples(3, centered), [-100.0, 0.0, 100.0])


def test_diagonal_samples_reject_single_sample(params):
    with pytest.raises(ValueError):
        diagonal_samples(1, params)


# ---------------------------------------------------------------------------
# Sweep driver


def test_sweep_constant_evaluator_and_extrema(params):
    t = diagonal_samples(5, params)
    table = sweep(
        t,
        lambda p: (1.0, 2.0),
        (("one", "mm"), ("two", "mm/mm")),
        params,
        grid={"kind": "diagonal", "samples": 5},
    )
    assert len(table) == len(t)
    assert table.columns == ("one", "two")
    assert table.units == ("mm", "mm/mm")
    assert table.grid == {"kind": "diagonal", "samples": 5}
    assert table.n_skipped == 0
    # scalar inputs expand to diagonal points
    npt.assert_allclose(table.points, np.stack([t, t, t], axis=1))
    npt.assert_array_equal(table.column("one"), 1.0)
    npt.assert_array_equal(table.column("two"), 2.0)
    # ties resolve to the first occurrence
    assert table.argmin("one") == 0
    assert table.argmax("two") == 0


def test_sweep_records_skipped_points(params):
    bad = (126.79, 126.79, 126.79)

    def evaluator(p):
        if np.allclose(p, bad):
            raise OutOfWorkspace("unreachable corner")
        return (float(np.linalg.norm(p)),)

    table = sweep(grid_points(2, params), evaluator, (("norm", "mm"),), params)
    assert len(table) == 7
    assert table.n_skipped == 1
    point, reason = table.skipped[0]
    npt.assert_allclose(point, bad)
    assert reason == "OutOfWorkspace: unreachable corner"
    assert not any(np.allclose(p, bad) for p in table.points)


def test_sweep_rejects_row_length_mismatch(params):
    with pytest.raises(ValueError):
        sweep([0.0, 1.0], lambda p: (1.0, 2.0, 3.0), (("one", "mm"),), params)


def test_table_requires_matching_schema():
    with pytest.raises(ValueError):
        SweepTable(
            columns=("a", "b"),
            units=("mm",),
            points=np.zeros((1, 3)),
            values=np.zeros((1, 2)),
            params={},
        )
    with pytest.raises(ValueError):
        SweepTable(
            columns=("a",),
            units=("mm",),
            points=np.zeros((1, 3)),
            values=np.zeros((1, 2)),
            params={},
        )


def test_table_arrays_are_write_protected():
    table = SweepTable(
        columns=("a",),
        units=("mm",),
        points=np.zeros((2, 3)),
        values=np.ones((2, 1)),
        params={},
    )
    with pytest.raises(ValueError):
        table.values[0, 0] = 5.0
    with pytest.raises(ValueError):
        table.points[0, 0] = 5.0


def test_default_workspace_grid_is_fully_reachable(params):
    table = sweep(
        grid_points(5, params),
        lambda p: (float(np.linalg.norm(sensitivity_matrix(p, params))),),
        (("frob", "mm/mm"),),
        params,
    )
    assert len(table) == 125
    assert table.n_skipped == 0
