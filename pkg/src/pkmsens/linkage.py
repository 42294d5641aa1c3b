"""Sensitivity of the tool position to leg design errors, linkage method.

Each leg contributes one scalar constraint: the squared distance between
the rail endpoint ``b_i`` and the platform attachment ``c_i`` equals the
squared rod length.  Written out for leg 1 (rail along x),

    F_1 = (p_x - r_1 + a_1 - rho_1)^2 + (p_y - b_1y)^2 + (p_z - b_1z)^2
          - L_1^2

and cyclically for legs 2 (rail along y) and 3 (rail along z).  Six design
values enter each constraint: the rail anchor distance ``a``, the two
off-axis rail offsets (``b_1y, b_1z`` for leg 1), the extension ``rho``,
the rod length ``L`` and the platform offset ``r``.  Differentiating the
implicit system F(p, q) = 0 gives

    A dp + B dq = 0,   C = -inv(A) B,

so ``C`` (3 x 18) maps small design errors dq to the tool displacement dp
at fixed actuator inputs.  ``A`` is the position Jacobian (rows
``2 (c_i - b_i)^T``) and ``B`` holds the per-leg partial derivatives, block
diagonal by construction.

Design-parameter ordering is the public contract: per leg
``(a, off-axis offset 1, off-axis offset 2, rho, L, r)`` with the off-axis
offsets in base-frame alphabetical order — see ``PARAM_NAMES``.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyGrid, OutOfWorkspace, SingularConfiguration
from .geometry import LEG_ROTATIONS, MachineParams, inverse_kinematics

__all__ = [
    "PARAM_NAMES",
    "ROW_NAMES",
    "nominal_design",
    "implicit_residuals",
    "pose_jacobian",
    "design_jacobian",
    "sensitivity_matrix",
    "global_sensitivity",
    "mean_abs_sensitivity",
]

#: Cartesian output rows of the sensitivity matrix.
ROW_NAMES = ("p_x", "p_y", "p_z")

#: Off-axis base-frame component indices per leg (alphabetical order).
_OFF_AXIS = ((1, 2), (0, 2), (0, 1))

_OFF_NAMES = (("b_y", "b_z"), ("b_x", "b_z"), ("b_x", "b_y"))

#: The 18 design-parameter names, leg-major:
#: a_1, b_y_1, b_z_1, rho_1, L_1, r_1, a_2, b_x_2, ...
PARAM_NAMES = tuple(
    f"{name}_{leg + 1}"
    for leg in range(3)
    for name in ("a", _OFF_NAMES[leg][0], _OFF_NAMES[leg][1], "rho", "L", "r")
)


def nominal_design(p, params: MachineParams = MachineParams()) -> np.ndarray:
    """The 18-vector of design values at the nominal machine, pose ``p``.

    Off-axis rail offsets are zero by definition of the nominal machine;
    ``rho`` comes from the inverse kinematics at ``p``.
    """
    legs = inverse_kinematics(p, params)
    q = np.empty(18)
    for i in range(3):
        q[6 * i : 6 * i + 6] = (
            params.rail_offset[i],
            0.0,
            0.0,
            legs[i].rho,
            params.rod_length[i],
            params.platform_offset[i],
        )
    return q


def _leg_vectors(p: np.ndarray, q: np.ndarray):
    """Rod vectors c_i - b_i for an arbitrary design vector q."""
    vs = []
    for i in range(3):
        a, off1, off2, rho, _, r = q[6 * i : 6 * i + 6]
        axis = LEG_ROTATIONS[i][:, 0]
        b = (rho - a) * axis
        u, v = _OFF_AXIS[i]
        b[u] += off1
        b[v] += off2
        c = p - r * axis
        vs.append(c - b)
    return vs


def implicit_residuals(p, q, params: MachineParams = MachineParams()) -> np.ndarray:
    """Evaluate the three constraints F_i at pose ``p``, design ``q``.

    Zero (to round-off) when ``q = nominal_design(p)``; the residual is in
    mm^2 and grows linearly in small design errors with slope given by
    ``design_jacobian``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    res = np.empty(3)
    for i, v in enumerate(_leg_vectors(p, q)):
        res[i] = v @ v - q[6 * i + 4] ** 2
    return res


def pose_jacobian(p, params: MachineParams = MachineParams()) -> np.ndarray:
    """Position Jacobian of the constraints at the nominal design.

    Row i is ``2 (c_i - b_i)^T = 2 L_i w_i^T``; at the isotropic position
    this is ``2 L`` times the identity.
    """
    legs = inverse_kinematics(p, params)
    return np.array([2.0 * (leg.c - leg.b) for leg in legs])


def design_jacobian(p, params: MachineParams = MachineParams()) -> np.ndarray:
    """Design Jacobian of the constraints at the nominal design (3 x 18).

    Block diagonal: constraint i only involves leg i's six design values.
    With s_i the rail-axis component of c_i - b_i, the leg block is

        dF/d(a, off1, off2, rho, L, r) =
            (2 s, -2 v_off1, -2 v_off2, -2 s, -2 L, -2 s)

    so the ``a`` and ``rho`` columns are exact opposites everywhere, and
    ``dF_i/dL_i = -2 L_i`` independent of pose.
    """
    legs = inverse_kinematics(p, params)
    out = np.zeros((3, 18))
    for i, leg in enumerate(legs):
        v = leg.c - leg.b
        axis = LEG_ROTATIONS[i][:, 0]
        s = v @ axis
        u, w = _OFF_AXIS[i]
        out[i, 6 * i : 6 * i + 6] = (
            2.0 * s,
            -2.0 * v[u],
            -2.0 * v[w],
            -2.0 * s,
            -2.0 * params.rod_length[i],
            -2.0 * s,
        )
    return out


def sensitivity_matrix(p, params: MachineParams = MachineParams()) -> np.ndarray:
    """Tool-position sensitivity to the 18 design errors, C = -inv(A) B.

    Entry (m, k) is the displacement of tool coordinate m (mm) per unit
    error in design value k (mm), at fixed actuator inputs.

    Raises:
        OutOfWorkspace: if ``p`` is unreachable.
        SingularConfiguration: if the position Jacobian is ill-conditioned
            (cond > 1e12), i.e. at or beyond a parallel singularity.
    """
    A = pose_jacobian(p, params)
    if np.linalg.cond(A) > 1e12:
        raise SingularConfiguration(
            f"constraint Jacobian is singular at {np.asarray(p).tolist()}"
        )
    return -np.linalg.solve(A, design_jacobian(p, params))


def global_sensitivity(p, params: MachineParams = MachineParams()):
    """Aggregate sensitivity at ``p``: per-row 2-norms and their total.

    Returns:
        (rows, total): ``rows[m]`` is the 2-norm of row m of C — the
        amplification of a worst-direction unit design error onto tool
        coordinate m — and ``total`` the Frobenius norm of C.
    """
    C = sensitivity_matrix(p, params)
    rows = np.sqrt((C**2).sum(axis=1))
    return rows, float(np.sqrt((C**2).sum()))


def mean_abs_sensitivity(
    params: MachineParams = MachineParams(), grid_n: int = 21
) -> np.ndarray:
    """Mean of |C| over a uniform grid spanning the workspace cube.

    Args:
        params: machine dimensions (the cube corners set the grid extent).
        grid_n: grid points per axis (>= 2), so grid_n^3 evaluations.

    Returns:
        3 x 18 matrix of mean absolute coefficients.  Unreachable or
        singular grid points are skipped.

    Raises:
        ValueError: if grid_n < 2.
        EmptyGrid: if every grid point was skipped.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    axes = [
        np.linspace(params.cube_min[k], params.cube_max[k], grid_n) for k in range(3)
    ]
    total = np.zeros((3, 18))
    comp = np.zeros((3, 18))  # Kahan compensation, keeps the mean order-independent
    count = 0
    for x in axes[0]:
        for y in axes[1]:
            for z in axes[2]:
                try:
                    c = np.abs(sensitivity_matrix((x, y, z), params))
                except (OutOfWorkspace, SingularConfiguration):
                    continue
                y_term = c - comp
                t = total + y_term
                comp = (t - total) - y_term
                total = t
                count += 1
    if count == 0:
        raise EmptyGrid("no reachable grid point in the workspace cube")
    return total / count
