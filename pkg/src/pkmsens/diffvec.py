"""Differential-vector sensitivity model: position and orientation errors.

Where the linkage method only sees the six scalar design values per leg
that enter the distance constraints, this model follows the full vector
chain of each leg — rail anchor, tilted rail, moving cross-bar, the two
parallelogram rods, platform cross-bar, platform — with small-error
operators ``I + theta x`` in place of exact rotations.  Summing and
differencing the two rod closure equations of a parallelogram separates
the platform position error from its orientation error:

* the difference equation relates the platform tilt ``theta`` to the
  parallelogram errors (rod length mismatch ``dl``, cross-bar length
  mismatch ``dm``, rail tilt ``thA`` and cross-bar tilt difference
  ``g``), three scalar equations that invert to the orientation
  sensitivity (3 x 18);
* the sum equation relates the platform displacement ``dp`` to the mean
  rod length error ``dL``, the lumped translational error ``de`` and the
  tilts, with the orientation feeding back through a coupling matrix —
  inverting gives the position sensitivity (3 x 33).

Per-leg tilt vectors are expressed in the leg frame; the platform
rotation is a base-frame vector shared by all legs.  Columns whose
coefficients vanish identically (cross-bar tilt about the bar axis in the
orientation equations, rail tilt about the rail in the position
equations) are eliminated, which is what reduces 3 x 21 source blocks to
the 18- and 33-column contracts below.

Column ordering is the public contract:

* orientation parameters, per leg: ``dl, dm, thA_x, thA_y, g_x, g_y``
  (see ``THETA_PARAM_LABELS``);
* full parameters, per leg: ``dL, de_x, de_y, de_z, thA_x, thA_y, thA_z,
  dl, dm, g_x, g_y`` (see ``FULL_PARAM_LABELS``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FlatParallelogram, SingularConfiguration
from .geometry import E_BAR, E_RAIL, LEG_ROTATIONS, MachineParams, inverse_kinematics

__all__ = [
    "THETA_PARAM_LABELS",
    "FULL_PARAM_LABELS",
    "theta_param_names",
    "full_param_names",
    "SensitivityModel",
    "build_model",
    "orientation_constraint_matrix",
    "position_indices",
    "orientation_indices",
    "global_rotation_indices",
]

#: Orientation-driving error parameters of one leg, in column order:
#: rod length mismatch (mm), cross-bar length mismatch (mm), rail tilt x/y
#: (rad), cross-bar tilt difference x/y (rad).
THETA_PARAM_LABELS = ("dl", "dm", "thA_x", "thA_y", "g_x", "g_y")

#: All error parameters of one leg, in column order: mean rod length error
#: (mm), lumped translational error (mm, leg frame), rail tilt (rad), then
#: the four parallelogram errors.
FULL_PARAM_LABELS = (
    "dL",
    "de_x",
    "de_y",
    "de_z",
    "thA_x",
    "thA_y",
    "thA_z",
    "dl",
    "dm",
    "g_x",
    "g_y",
)


def theta_param_names() -> tuple[str, ...]:
    """The 18 orientation-parameter names, leg-major: dl_1 ... g_y_3."""
    return tuple(f"{lab}_{leg + 1}" for leg in range(3) for lab in THETA_PARAM_LABELS)


def full_param_names() -> tuple[str, ...]:
    """The 33 full-parameter names, leg-major: dL_1 ... g_y_3."""
    return tuple(f"{lab}_{leg + 1}" for leg in range(3) for lab in FULL_PARAM_LABELS)


@dataclass(frozen=True, eq=False)
class SensitivityModel:
    """All error-mapping matrices and indices at one tool position.

    Matrices keep raw mixed units (mm per mm for length errors, mm per
    rad or rad per rad for tilts); columns are labeled by
    ``theta_param_names()`` / ``full_param_names()``.

    Attributes:
        point: evaluation position (mm).
        orientation_constraint: 3x3, rows ``d (bar_i x w_i)^T`` — maps the
            platform tilt to the parallelogram difference residuals.
        orientation_source: 3x18, per-leg blocks of difference-equation
            coefficients for the orientation parameters.
        rotation_sensitivity: 3x18, platform tilt per unit orientation
            parameter (constraint matrix inverse applied to the source).
        rod_axes: 3x3, rows ``w_i^T`` — position-equation normal matrix.
        position_source: 3x21, per-leg blocks of sum-equation coefficients
            for (dL, de, thA), before column elimination.
        rotation_coupling: 3x3, rows ``-(R_i c0 x w_i)^T`` — how platform
            tilt re-enters the position equations through the platform
            lever arms.
        position_direct: 3x18, tool displacement per unit (dL, de_x, de_y,
            de_z, thA_y, thA_z) per leg, orientation feedback excluded.
        position_from_rotation: 3x18, tool displacement per unit
            orientation parameter, through the platform tilt only.
        position_sensitivity: 3x33, total tool displacement per unit full
            parameter (direct and rotation paths combined).
        position_index: 11 aggregates (RSS over legs and axes of
            ``position_sensitivity``), ordered like ``FULL_PARAM_LABELS``.
        orientation_index: 6 aggregates over ``rotation_sensitivity``,
            ordered like ``THETA_PARAM_LABELS``.
        orientation_index_rotation: the 6 global-rotation variants of
            ``orientation_index`` (angle of the composed per-axis
            rotation instead of plain RSS).
    """

    point: np.ndarray
    orientation_constraint: np.ndarray
    orientation_source: np.ndarray
    rotation_sensitivity: np.ndarray
    rod_axes: np.ndarray
    position_source: np.ndarray
    rotation_coupling: np.ndarray
    position_direct: np.ndarray
    position_from_rotation: np.ndarray
    position_sensitivity: np.ndarray
    position_index: np.ndarray
    orientation_index: np.ndarray
    orientation_index_rotation: np.ndarray


def orientation_constraint_matrix(legs, spacing: float) -> np.ndarray:
    """Rows ``d (bar_i x w_i)^T`` of the parallelogram difference system.

    ``bar_i`` is the nominal cross-bar direction of leg i in the base
    frame; each row is orthogonal to the leg's rod direction by
    construction.
    """
    rows = np.empty((3, 3))
    for i, leg in enumerate(legs):
        bar = LEG_ROTATIONS[i] @ E_BAR
        rows[i] = spacing * np.cross(bar, leg.w)
    return rows


def _checked_solve(mat: np.ndarray, rhs: np.ndarray, exc: type, what: str) -> np.ndarray:
    if np.linalg.cond(mat) > 1e12:
        raise exc(f"{what} is singular (cond > 1e12)")
    return np.linalg.solve(mat, rhs)


def build_model(p, params: MachineParams = MachineParams()) -> SensitivityModel:
    """Evaluate the full differential-vector model at tool position ``p``.

    Raises:
        OutOfWorkspace: if ``p`` is unreachable.
        FlatParallelogram: if the orientation constraint system is
            singular (cond > 1e12) — the tilt is then unbounded to first
            order.
        SingularConfiguration: if the rod-axes matrix is singular.
    """
    p = np.asarray(p, dtype=float)
    legs = inverse_kinematics(p, params)
    d = params.rod_spacing

    constraint = orientation_constraint_matrix(legs, d)
    source = np.zeros((3, 18))
    pos_source = np.zeros((3, 21))
    coupling = np.empty((3, 3))
    for i, leg in enumerate(legs):
        rot = LEG_ROTATIONS[i]
        rail = rot @ E_RAIL
        # Leg-frame components of the two lever-arm rows; their first
        # entries vanish identically (a tilt about an axis does not move
        # that axis), which justifies the column eliminations below.
        bar_lever = constraint[i] @ rot          # d (bar x w) . R, 1x3
        rail_lever = np.cross(rail, leg.w) @ rot  # (rail x w) . R, 1x3
        source[i, 6 * i : 6 * i + 6] = (
            1.0,
            leg.w @ (rot @ E_BAR),
            bar_lever[0],
            bar_lever[1],
            bar_lever[0],
            bar_lever[1],
        )
        pos_source[i, 7 * i] = 1.0
        pos_source[i, 7 * i + 1 : 7 * i + 4] = leg.w @ rot
        pos_source[i, 7 * i + 4 : 7 * i + 7] = leg.rho * rail_lever
        coupling[i] = params.platform_offset[i] * np.cross(rail, leg.w)

    rotation_sensitivity = _checked_solve(
        constraint, source, FlatParallelogram, "parallelogram orientation system"
    )

    rod_axes = np.array([leg.w for leg in legs])
    # Drop the rail-tilt-about-rail column (identically zero coefficient):
    # per-leg position block becomes (dL, de_x, de_y, de_z, thA_y, thA_z).
    keep = [7 * i + k for i in range(3) for k in (0, 1, 2, 3, 5, 6)]
    position_direct = _checked_solve(
        rod_axes, pos_source[:, keep], SingularConfiguration, "rod-axes matrix"
    )
    position_from_rotation = _checked_solve(
        rod_axes,
        coupling @ rotation_sensitivity,
        SingularConfiguration,
        "rod-axes matrix",
    )

    combined = np.zeros((3, 33))
    for i in range(3):
        full, pp, th = 11 * i, 6 * i, 6 * i
        combined[:, full] = position_direct[:, pp]
        combined[:, full + 1 : full + 4] = position_direct[:, pp + 1 : pp + 4]
        combined[:, full + 4] = position_from_rotation[:, th + 2]
        combined[:, full + 5] = position_direct[:, pp + 4] + position_from_rotation[:, th + 3]
        combined[:, full + 6] = position_direct[:, pp + 5]
        combined[:, full + 7] = position_from_rotation[:, th]
        combined[:, full + 8] = position_from_rotation[:, th + 1]
        combined[:, full + 9] = position_from_rotation[:, th + 4]
        combined[:, full + 10] = position_from_rotation[:, th + 5]

    return SensitivityModel(
        point=p,
        orientation_constraint=constraint,
        orientation_source=source,
        rotation_sensitivity=rotation_sensitivity,
        rod_axes=rod_axes,
        position_source=pos_source,
        rotation_coupling=coupling,
        position_direct=position_direct,
        position_from_rotation=position_from_rotation,
        position_sensitivity=combined,
        position_index=position_indices(combined),
        orientation_index=orientation_indices(rotation_sensitivity),
        orientation_index_rotation=global_rotation_indices(rotation_sensitivity),
    )


def position_indices(position_sensitivity: np.ndarray) -> np.ndarray:
    """Per-parameter position aggregates: RSS over the 3 legs and 3 axes.

    ``out[k]`` bounds the tool displacement per unit error of parameter
    type k (order ``FULL_PARAM_LABELS``) applied on a single leg, combined
    across legs in quadrature.
    """
    blocks = position_sensitivity.reshape(3, 3, 11)  # axes x legs x params
    return np.sqrt((blocks**2).sum(axis=(0, 1)))


def orientation_indices(rotation_sensitivity: np.ndarray) -> np.ndarray:
    """Per-parameter orientation aggregates: RSS over legs and tilt axes.

    Order follows ``THETA_PARAM_LABELS``.
    """
    blocks = rotation_sensitivity.reshape(3, 3, 6)
    return np.sqrt((blocks**2).sum(axis=(0, 1)))


def global_rotation_indices(rotation_sensitivity: np.ndarray) -> np.ndarray:
    """Orientation aggregates as the angle of a composed rotation.

    For each parameter type, the per-axis RSS aggregates over the legs are
    treated as successive small rotations about x, y and z; the index is
    the total rotation angle of their composition,
    ``arccos((trace - 1) / 2)``, with the argument clamped to [-1, 1]
    against round-off.  Coincides with the plain RSS up to fourth order in
    the angles.
    """
    blocks = rotation_sensitivity.reshape(3, 3, 6)
    per_axis = np.sqrt((blocks**2).sum(axis=1))  # 3 axes x 6 params
    out = np.empty(6)
    for r in range(6):
        ax, ay, az = per_axis[:, r]
        cx, sx = np.cos(ax), np.sin(ax)
        cy, sy = np.cos(ay), np.sin(ay)
        cz, sz = np.cos(az), np.sin(az)
        rot_x = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
        rot_y = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
        rot_z = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
        composed = rot_z @ rot_y @ rot_x
        out[r] = np.arccos(np.clip((np.trace(composed) - 1.0) / 2.0, -1.0, 1.0))
    return out
