"""Kinematics of the three-legged translational machine."""

import numpy as np
import numpy.testing as npt
import pytest

from pkmsens import (
    LEG_ROTATIONS,
    MachineParams,
    NoConvergence,
    OutOfWorkspace,
    diagonal_point,
    forward_kinematics,
    inverse_kinematics,
)


def test_leg_rotations_are_proper_and_fixed():
    expected = (
        np.eye(3),
        np.array([[0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [0.0, -1.0, 0.0]]),
        np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]),
    )
    for rot, want in zip(LEG_ROTATIONS, expected):
        npt.assert_array_equal(rot, want)
        npt.assert_allclose(rot.T @ rot, np.eye(3), atol=1e-15)
        assert np.isclose(np.linalg.det(rot), 1.0)
    npt.assert_array_equal(LEG_ROTATIONS[1] @ np.array([1.0, 0.0, 0.0]), [0, 1, 0])
    with pytest.raises(ValueError):
        LEG_ROTATIONS[0][0, 0] = 2.0  # write-protected


def test_machine_params_normalization_and_validation():
    p = MachineParams()
    assert p.rail_offset == (420.0, 420.0, 420.0)
    assert p.rod_length == (310.58,) * 3
    assert p.rod_spacing == 80.0
    assert p.platform_offset == (31.0,) * 3
    assert p.cube_min == (-73.21,) * 3 and p.cube_max == (126.79,) * 3
    per_leg = MachineParams(rod_length=(300.0, 310.0, 320.0))
    assert per_leg.rod_length == (300.0, 310.0, 320.0)
    with pytest.raises(ValueError):
        MachineParams(rod_length=-1.0)
    with pytest.raises(ValueError):
        MachineParams(rod_spacing=0.0)
    with pytest.raises(ValueError):
        MachineParams(cube_min=10.0, cube_max=-10.0)
    snapshot = p.as_dict()
    assert snapshot["rod_spacing"] == 80.0 and snapshot["rail_offset"] == [420.0] * 3


def test_ik_isotropic_point(params):
    legs = inverse_kinematics(np.zeros(3), params)
    for i, leg in enumerate(legs):
        assert leg.rho == pytest.approx(78.42, abs=1e-9)
        npt.assert_allclose(leg.w, LEG_ROTATIONS[i][:, 0], atol=1e-12)
        npt.assert_allclose(leg.c - leg.b, params.rod_length[i] * leg.w, atol=1e-9)


def test_ik_upper_corner(params, q2):
    legs = inverse_kinematics(q2, params)
    npt.assert_allclose(legs[0].w, [0.8166, 0.4082, 0.4082], atol=1e-3)
    assert legs[0].rho == pytest.approx(262.1987, abs=1e-3)
    for leg in legs:
        assert abs(np.linalg.norm(leg.w) - 1.0) < 1e-12


def test_ik_lower_corner(params, q1):
    legs = inverse_kinematics(q1, params)
    for leg in legs:
        assert leg.rho == pytest.approx(22.9752, abs=1e-3)


def test_ik_rejects_unreachable(params):
    # Off-axis distance equals the rod length: discriminant exactly 0 is
    # rejected, the parallelogram would be flat.
    with pytest.raises(OutOfWorkspace):
        inverse_kinematics(np.array([0.0, 310.58, 0.0]), params)
    with pytest.raises(OutOfWorkspace):
        inverse_kinematics(np.array([0.0, 400.0, 0.0]), params)


def test_fk_round_trip(params, q1, q2):
    for point in (np.zeros(3), q1, q2, np.array([10.0, -20.0, 35.0])):
        rho = np.array([leg.rho for leg in inverse_kinematics(point, params)])
        npt.assert_allclose(forward_kinematics(rho, params), point, atol=1e-9)
    npt.assert_allclose(
        forward_kinematics(np.full(3, 78.42), params), np.zeros(3), atol=1e-9
    )


def test_fk_rejects_infeasible(params):
    # One slide commanded so far out the three spheres cannot intersect.
    with pytest.raises(NoConvergence):
        forward_kinematics(np.array([78.42, 78.42, 1200.0]), params)


def test_round_trip_over_random_workspace(params):
    rng = np.random.default_rng(2024)
    lo, hi = np.array(params.cube_min), np.array(params.cube_max)
    for _ in range(1000):
        point = lo + (hi - lo) * rng.uniform(size=3)
        legs = inverse_kinematics(point, params)
        rho = np.array([leg.rho for leg in legs])
        npt.assert_allclose(forward_kinematics(rho, params), point, atol=1e-9)


def test_branch_continuity_on_diagonal(params):
    t = np.linspace(params.cube_min[0], params.cube_max[0], 101)
    rho = np.array(
        [[leg.rho for leg in inverse_kinematics(diagonal_point(tk), params)] for tk in t]
    )
    assert np.max(np.abs(np.diff(rho, axis=0))) < 10.0


def test_diagonal_point(q1, q2):
    npt.assert_array_equal(diagonal_point(0.0), np.zeros(3))
    npt.assert_allclose(diagonal_point(-73.21), q1)
    npt.assert_allclose(diagonal_point(126.79), q2)
