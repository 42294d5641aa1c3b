"""Independent numerical oracles for the analytic sensitivity models.

Nothing in this module reuses the analytic Jacobians it is meant to
check.  Two finite-difference oracles re-solve the nonlinear models
around the nominal machine:

* ``fd_linkage_sensitivity`` perturbs one of the 18 scalar design values
  at a time and Newton-solves the three distance constraints for the tool
  position, giving a central-difference estimate of the linkage
  sensitivity matrix;
* ``solve_perturbed_pose`` assembles the full six-rod vector chain with
  the same linearized small-rotation operators ``I + theta x`` as the
  analytic model and solves the six closure equations for the platform
  pose error (displacement and tilt); differencing it per parameter
  yields oracle columns for both the combined position sensitivity and
  the orientation sensitivity.

The oracle solves use extended precision (``numpy.longdouble``) with a
hand-rolled Gaussian elimination, because the squared-length residuals
sit at the 1e5 mm^2 scale and double-precision cancellation noise would
dominate central differences at the 1e-6 step mandated here.

The vector chain keeps the linearized operators of the analytic model on
purpose — it validates the algebraic pipeline, not an independent exact-
rotation mechanism; the one place where operator placement is ambiguous
(the platform rotation, which is shared by all legs) is resolved by
applying it as a base-frame operator to the whole platform-side chain,
the only placement under which the six-rod system stays regular at the
isotropic position.

``monte_carlo`` propagates random tolerance draws through the nonlinear
pose solve and compares against the linear prediction, with a documented,
stable seeding scheme.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffvec import (
    FULL_PARAM_LABELS,
    THETA_PARAM_LABELS,
    build_model,
    full_param_names,
)
from .errors import ConfigError, NoConvergence
from .geometry import LEG_ROTATIONS, MachineParams, forward_kinematics

__all__ = [
    "PerturbedLegInputs",
    "PoseError",
    "closure_residuals",
    "solve_perturbed_pose",
    "fd_linkage_sensitivity",
    "fd_pose_jacobians",
    "ToleranceSpec",
    "monte_carlo",
    "random_workspace_points",
    "max_entry_relative_error",
    "max_column_relative_error",
    "validate_sensitivities",
]

_E1 = np.array([1.0, 0.0, 0.0])
_E2 = np.array([0.0, 0.0, 1.0])

#: Units of the 11 per-leg full parameters (mirrors FULL_PARAM_LABELS).
FULL_PARAM_UNITS = tuple(
    "rad" if lab.startswith(("thA", "g_")) else "mm" for lab in FULL_PARAM_LABELS
)

# Position of each orientation parameter inside FULL_PARAM_LABELS.
_THETA_IN_FULL = tuple(FULL_PARAM_LABELS.index(lab) for lab in THETA_PARAM_LABELS)


def _gauss_solve(mat, rhs):
    """Solve a small dense system by partial-pivot elimination.

    Works for any real floating dtype — in particular ``np.longdouble``,
    which the LAPACK-backed numpy solvers do not accept.
    """
    a = np.array(mat, copy=True)
    b = np.array(rhs, dtype=a.dtype, copy=True)
    n = a.shape[0]
    for k in range(n):
        pivot = k + int(np.argmax(np.abs(a[k:, k])))
        if a[pivot, k] == 0.0:
            raise np.linalg.LinAlgError("singular matrix in oracle solve")
        if pivot != k:
            a[[k, pivot]] = a[[pivot, k]]
            b[[k, pivot]] = b[[pivot, k]]
        factors = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= factors[:, None] * a[k, k:]
        b[k + 1 :] -= factors * b[k]
    x = np.zeros_like(b)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
    return x


def _tilt(angles, vec):
    """Apply the linearized rotation ``(I + angles x)`` to ``vec``."""
    return vec + np.cross(angles, vec)


def _nominal_extensions(point, params: MachineParams, dtype=float) -> np.ndarray:
    """Prismatic extensions at ``point``, re-derived at the given dtype.

    Deliberately independent of the kinematics module so that oracle
    results do not inherit its rounding; also lets the FD paths run the
    whole pipeline in extended precision.
    """
    scalar = np.dtype(dtype).type
    p = np.asarray(point, dtype=scalar)
    rho = np.empty(3, dtype=scalar)
    for i, rot in enumerate(LEG_ROTATIONS):
        c_leg = rot.T.astype(scalar) @ p - scalar(params.platform_offset[i]) * _E1.astype(scalar)
        disc = scalar(params.rod_length[i]) ** 2 - c_leg[1] ** 2 - c_leg[2] ** 2
        if disc <= 0.0:
            raise NoConvergence(f"nominal point {p.tolist()} is unreachable")
        rho[i] = c_leg[0] + scalar(params.rail_offset[i]) - np.sqrt(disc)
    return rho


@dataclass
class PoseError:
    """Platform pose error: displacement (mm) and tilt (rad), base frame."""

    dp: np.ndarray
    dtheta: np.ndarray


@dataclass
class PerturbedLegInputs:
    """Physical error inputs of all three legs, leg frames, mm and rad.

    Arrays are indexed by leg (first axis).  Fields follow the serial
    chain of one leg: rail anchor -> slide -> moving cross-bar -> two
    rods -> platform cross-bar -> platform attachment.

    Attributes:
        rail_point_offset: (3, 3) anchor position errors.
        slide_offset: (3,) prismatic displacement errors.
        rail_tilt: (3, 3) rail direction errors (the slide and the moving
            cross-bar ride on the tilted rail).
        bar_b_length: (3,) moving cross-bar length errors, shared equally
            by both ends.
        bar_b_tilt: (3, 3) moving cross-bar orientation errors relative
            to the rail.
        rod_lengths: (3, 2) individual rod length errors.
        bar_c_length: (3,) platform cross-bar length errors.
        bar_c_tilt: (3, 3) platform cross-bar orientation errors relative
            to the platform.
        platform_point_offset: (3, 3) platform attachment position errors.
    """

    rail_point_offset: np.ndarray = field(default=None)
    slide_offset: np.ndarray = field(default=None)
    rail_tilt: np.ndarray = field(default=None)
    bar_b_length: np.ndarray = field(default=None)
    bar_b_tilt: np.ndarray = field(default=None)
    rod_lengths: np.ndarray = field(default=None)
    bar_c_length: np.ndarray = field(default=None)
    bar_c_tilt: np.ndarray = field(default=None)
    platform_point_offset: np.ndarray = field(default=None)

    _SHAPES = {
        "rail_point_offset": (3, 3),
        "slide_offset": (3,),
        "rail_tilt": (3, 3),
        "bar_b_length": (3,),
        "bar_b_tilt": (3, 3),
        "rod_lengths": (3, 2),
        "bar_c_length": (3,),
        "bar_c_tilt": (3, 3),
        "platform_point_offset": (3, 3),
    }

    def __post_init__(self):
        dtype = float
        for name in self._SHAPES:
            value = getattr(self, name)
            if value is not None:
                dtype = np.result_type(dtype, np.asarray(value).dtype)
        for name, shape in self._SHAPES.items():
            value = getattr(self, name)
            arr = np.zeros(shape, dtype=dtype) if value is None else np.asarray(
                value, dtype=dtype
            )
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            setattr(self, name, arr)

    @property
    def dtype(self):
        return self.rod_lengths.dtype

    @classmethod
    def zeros(cls, dtype=float) -> "PerturbedLegInputs":
        return cls(rod_lengths=np.zeros((3, 2), dtype=dtype))

    @classmethod
    def from_reduced(cls, eps, dtype=None) -> "PerturbedLegInputs":
        """Canonical lift of a 33-entry reduced parameter vector.

        The reduced parameters do not determine the physical inputs
        uniquely (several raw errors collapse into ``de``, ``dm`` and
        ``g``); this lift puts everything on one representative: anchor
        offsets carry ``de``, rod lengths split ``dL +- dl/2``, the
        moving cross-bar carries ``dm`` and ``g``.
        """
        eps = np.asarray(eps, dtype=dtype)
        if eps.shape != (33,):
            raise ValueError(f"expected 33 reduced parameters, got {eps.shape}")
        blocks = eps.reshape(3, 11)
        out = cls.zeros(dtype=eps.dtype)
        out.rail_point_offset[:] = blocks[:, 1:4]
        out.rail_tilt[:] = blocks[:, 4:7]
        out.rod_lengths[:, 0] = blocks[:, 0] + blocks[:, 7] / 2.0
        out.rod_lengths[:, 1] = blocks[:, 0] - blocks[:, 7] / 2.0
        out.bar_b_length[:] = blocks[:, 8]
        out.bar_b_tilt[:, 0] = blocks[:, 9]
        out.bar_b_tilt[:, 1] = blocks[:, 10]
        return out

    def reduced_vector(self) -> np.ndarray:
        """Collapse the physical inputs back to the 33 reduced parameters."""
        out = np.zeros(33, dtype=self.dtype)
        blocks = out.reshape(3, 11)
        blocks[:, 0] = self.rod_lengths.mean(axis=1)
        blocks[:, 1:4] = (
            self.rail_point_offset
            + self.slide_offset[:, None] * _E1
            - self.platform_point_offset
        )
        blocks[:, 4:7] = self.rail_tilt
        blocks[:, 7] = self.rod_lengths[:, 0] - self.rod_lengths[:, 1]
        blocks[:, 8] = self.bar_b_length - self.bar_c_length
        blocks[:, 9:11] = (self.bar_b_tilt - self.bar_c_tilt)[:, :2]
        return out

    def magnitudes(self) -> tuple[float, float]:
        """(max length error in mm, max angle error in rad)."""
        lengths = max(
            float(np.max(np.abs(self.rail_point_offset))),
            float(np.max(np.abs(self.slide_offset))),
            float(np.max(np.abs(self.bar_b_length))),
            float(np.max(np.abs(self.rod_lengths))),
            float(np.max(np.abs(self.bar_c_length))),
            float(np.max(np.abs(self.platform_point_offset))),
        )
        angles = max(
            float(np.max(np.abs(self.rail_tilt))),
            float(np.max(np.abs(self.bar_b_tilt))),
            float(np.max(np.abs(self.bar_c_tilt))),
        )
        return lengths, angles


def _rod_endpoints(point, rho, inputs: PerturbedLegInputs, params: MachineParams):
    """Base-side rod endpoints and platform-side lever arms, base frame.

    Returns (B, U, L_eff): for each of the six rods (leg-major, rod 1
    then rod 2), ``B`` is the fixed base-side endpoint, ``U`` the
    platform-side attachment relative to the unrotated platform, and
    ``L_eff`` the perturbed rod length.  The platform-side endpoint at
    pose error (dp, theta) is then ``point + dp + (I + theta x) U``.
    """
    dtype = np.result_type(inputs.dtype, np.asarray(point).dtype).type
    point = np.asarray(point, dtype=dtype)
    rho = np.asarray(rho, dtype=dtype)
    e1 = _E1.astype(dtype)
    e2 = _E2.astype(dtype)
    base = np.empty((6, 3), dtype=dtype)
    lever = np.empty((6, 3), dtype=dtype)
    length = np.empty(6, dtype=dtype)
    for i in range(3):
        rot = LEG_ROTATIONS[i].astype(dtype)
        a0 = -dtype(params.rail_offset[i]) * e1
        c0 = -dtype(params.platform_offset[i]) * e1
        # Base side: anchor, tilted rail, moving cross-bar riding on it.
        rail_dir = _tilt(inputs.rail_tilt[i], e1)
        bar_b = _tilt(inputs.rail_tilt[i], _tilt(inputs.bar_b_tilt[i], e2))
        half_b = (dtype(params.rod_spacing) + inputs.bar_b_length[i]) / 2.0
        slide = (
            a0
            + inputs.rail_point_offset[i]
            + (rho[i] + inputs.slide_offset[i]) * rail_dir
        )
        # Platform side, before the platform rotation is applied.
        bar_c = _tilt(inputs.bar_c_tilt[i], e2)
        half_c = (dtype(params.rod_spacing) + inputs.bar_c_length[i]) / 2.0
        attach = c0 + inputs.platform_point_offset[i]
        for j, sign in enumerate((1.0, -1.0)):
            base[2 * i + j] = rot @ (slide + sign * half_b * bar_b)
            lever[2 * i + j] = rot @ (attach + sign * half_c * bar_c)
            length[2 * i + j] = dtype(params.rod_length[i]) + inputs.rod_lengths[i, j]
    return point, base, lever, length


def closure_residuals(
    pose: PoseError,
    rho,
    inputs: PerturbedLegInputs,
    params: MachineParams = MachineParams(),
    nominal_point=None,
) -> np.ndarray:
    """Squared-length residuals of the six rods at a trial pose error.

    Residual order is leg-major: (leg 1, rod 1), (leg 1, rod 2), ...,
    (leg 3, rod 2); each value is ``|c - b|^2 - (L + dL)^2`` in mm^2.

    Args:
        pose: trial platform pose error (dp, dtheta).
        rho: the three commanded prismatic extensions.
        inputs: physical error inputs.
        params: machine dimensions.
        nominal_point: nominal tool position for ``rho``; solved by
            forward kinematics when omitted.
    """
    if nominal_point is None:
        nominal_point = forward_kinematics(rho, params)
    point, base, lever, length = _rod_endpoints(nominal_point, rho, inputs, params)
    platform = point + np.asarray(pose.dp, dtype=point.dtype)
    tilted = lever + np.cross(np.asarray(pose.dtheta, dtype=point.dtype), lever)
    v = platform + tilted - base
    return (v * v).sum(axis=1) - length**2


def solve_perturbed_pose(
    rho,
    inputs: PerturbedLegInputs,
    params: MachineParams = MachineParams(),
    nominal_point=None,
) -> PoseError:
    """Solve the six rod-closure equations for the platform pose error.

    Newton iteration on (dp, dtheta) from (0, 0).  Each residual is
    quadratic in the unknowns, so convergence is fast anywhere the
    six-rod system is regular.  Iterates first to the acceptance
    tolerance (max residual < 1e-10 mm^2), then keeps refining until the
    residual stalls at round-off, so finite differences of the result
    are noise-limited rather than tolerance-limited.

    Args:
        rho: commanded prismatic extensions (mm).
        inputs: physical error inputs; magnitudes must stay within 1 mm
            and 0.05 rad (the linearized-operator regime).
        params: machine dimensions.
        nominal_point: nominal tool position for ``rho`` (forward
            kinematics when omitted).

    Raises:
        ValueError: if the input magnitudes exceed the linear regime.
        NoConvergence: if 50 iterations do not reach tolerance or the
            system goes singular.
    """
    max_len, max_ang = inputs.magnitudes()
    if max_len > 1.0 or max_ang > 0.05:
        raise ValueError(
            f"perturbations out of range (|length| {max_len:g} mm, "
            f"|angle| {max_ang:g} rad; limits 1 mm, 0.05 rad)"
        )
    if nominal_point is None:
        nominal_point = forward_kinematics(rho, params)
    point, base, lever, length = _rod_endpoints(nominal_point, rho, inputs, params)
    dtype = point.dtype
    x = np.zeros(6, dtype=dtype)
    best_x = x.copy()
    best_res = np.inf
    stalled = False
    for _ in range(50):
        tilted = lever + np.cross(x[3:], lever)
        v = point + x[:3] + tilted - base
        res = (v * v).sum(axis=1) - length**2
        worst = float(np.max(np.abs(res)))
        if worst < best_res:
            best_res = worst
            best_x = x.copy()
        elif best_res < 1e-10:
            stalled = True  # converged and refinement no longer helps
            break
        rows = np.hstack([2.0 * v, 2.0 * np.cross(lever, v)])
        try:
            x = x - _gauss_solve(rows, res)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("six-rod closure system is singular") from exc
    if not stalled and best_res >= 1e-10:
        raise NoConvergence(
            f"pose solve stalled at max residual {best_res:g} mm^2"
        )
    return PoseError(dp=best_x[:3].copy(), dtheta=best_x[3:].copy())


# ---------------------------------------------------------------------------
# Finite-difference oracles


def fd_linkage_sensitivity(
    p, params: MachineParams = MachineParams(), h: float = 1e-6
) -> np.ndarray:
    """Central-difference estimate of the linkage sensitivity matrix.

    For each of the 18 design values, the three distance constraints are
    re-solved for the tool position at the perturbed design (Newton from
    the nominal position, extended precision) and differenced:
    column j = (p(q + h e_j) - p(q - h e_j)) / 2h.

    Args:
        p: evaluation point (mm).
        params: machine dimensions.
        h: design-value step in mm, within [1e-8, 1e-3].

    Raises:
        ValueError: if ``h`` is outside [1e-8, 1e-3].
        NoConvergence: if a perturbed re-solve fails.
    """
    if not 1e-8 <= h <= 1e-3:
        raise ValueError(f"step {h:g} outside [1e-8, 1e-3] mm")
    ld = np.longdouble
    point = np.asarray(p, dtype=ld)
    rho = _nominal_extensions(point, params, dtype=ld)
    q0 = np.zeros(18, dtype=ld)
    for i in range(3):
        q0[6 * i : 6 * i + 6] = (
            params.rail_offset[i],
            0.0,
            0.0,
            rho[i],
            params.rod_length[i],
            params.platform_offset[i],
        )
    out = np.empty((3, 18))
    step = ld(h)
    for j in range(18):
        solved = []
        for sign in (1.0, -1.0):
            q = q0.copy()
            q[j] += sign * step
            solved.append(_solve_design_position(point, q, params))
        out[:, j] = np.asarray((solved[0] - solved[1]) / (2.0 * step), dtype=float)
    return out


_OFF_AXIS = ((1, 2), (0, 2), (0, 1))


def _design_residuals(p, q, params: MachineParams):
    """Distance-constraint residuals and Jacobian for a raw design vector.

    Re-derives the constraint geometry instead of importing the analytic
    module: same equations, independent code path.
    """
    dtype = p.dtype
    res = np.empty(3, dtype=dtype)
    jac = np.empty((3, 3), dtype=dtype)
    for i in range(3):
        a, off1, off2, rho_i, length, r = q[6 * i : 6 * i + 6]
        axis = LEG_ROTATIONS[i][:, 0].astype(dtype)
        b = (rho_i - a) * axis
        u, w = _OFF_AXIS[i]
        b[u] += off1
        b[w] += off2
        v = p - r * axis - b
        res[i] = v @ v - length**2
        jac[i] = 2.0 * v
    return res, jac


def _solve_design_position(point, q, params: MachineParams):
    """Newton-solve the three constraints for the position, to stall."""
    p = point.copy()
    best = p.copy()
    best_res = np.inf
    for _ in range(60):
        res, jac = _design_residuals(p, q, params)
        worst = float(np.max(np.abs(res)))
        if worst < best_res:
            best_res = worst
            best = p.copy()
        elif best_res < 1e-10:
            return best
        try:
            p = p - _gauss_solve(jac, res)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular constraint system in oracle") from exc
    if best_res < 1e-10:
        return best
    raise NoConvergence(f"design re-solve stalled at {best_res:g} mm^2")


def fd_pose_jacobians(
    p,
    params: MachineParams = MachineParams(),
    step_mm: float = 1e-6,
    step_rad: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference columns of the pose-error sensitivities.

    Perturbs one reduced parameter at a time (+/- one step in its native
    unit), solves the six-rod closure in extended precision, and
    differences the resulting pose errors.

    Returns:
        (position, rotation): 3x33 tool-displacement columns for all full
        parameters, and 3x18 platform-tilt columns for the orientation
        parameters.
    """
    ld = np.longdouble
    point = np.asarray(p, dtype=ld)
    rho = _nominal_extensions(point, params, dtype=ld)
    fd_position = np.empty((3, 33))
    fd_rotation = np.empty((3, 18))
    for leg in range(3):
        for lab_idx in range(11):
            k = 11 * leg + lab_idx
            step = ld(step_mm if FULL_PARAM_UNITS[lab_idx] == "mm" else step_rad)
            poses = []
            for sign in (1.0, -1.0):
                eps = np.zeros(33, dtype=ld)
                eps[k] = sign * step
                pose = solve_perturbed_pose(
                    rho,
                    PerturbedLegInputs.from_reduced(eps),
                    params,
                    nominal_point=point,
                )
                poses.append(pose)
            fd_position[:, k] = np.asarray(
                (poses[0].dp - poses[1].dp) / (2.0 * step), dtype=float
            )
            if lab_idx in _THETA_IN_FULL:
                col = 6 * leg + _THETA_IN_FULL.index(lab_idx)
                fd_rotation[:, col] = np.asarray(
                    (poses[0].dtheta - poses[1].dtheta) / (2.0 * step), dtype=float
                )
    return fd_position, fd_rotation


# ---------------------------------------------------------------------------
# Comparison helpers


def max_entry_relative_error(
    analytic: np.ndarray, fd: np.ndarray, min_magnitude: float = 1e-3
) -> float:
    """Largest per-entry relative deviation over significant entries.

    Entries with |analytic| <= min_magnitude are excluded: a relative
    measure is meaningless on coefficients that vanish identically.
    """
    analytic = np.asarray(analytic)
    mask = np.abs(analytic) > min_magnitude
    if not mask.any():
        return 0.0
    return float(
        np.max(np.abs(np.asarray(fd)[mask] - analytic[mask]) / np.abs(analytic[mask]))
    )


def max_column_relative_error(
    analytic: np.ndarray, fd: np.ndarray, floor: float = 1e-3
) -> float:
    """Largest per-column relative deviation, 2-norm over the column.

    Columns that vanish identically (several do at the isotropic
    position) are measured against ``floor`` instead of their own norm,
    which turns the check into a small-absolute-value assertion there.
    """
    analytic = np.asarray(analytic)
    diff = np.linalg.norm(np.asarray(fd) - analytic, axis=0)
    scale = np.maximum(np.linalg.norm(analytic, axis=0), floor)
    return float(np.max(diff / scale))


def random_workspace_points(
    params: MachineParams, n: int, seed: int
) -> np.ndarray:
    """Deterministic sample of points inside 90% of the workspace cube.

    The margin keeps validation points away from the cube boundary, where
    conditioning degrades and finite differences get noisy.
    """
    rng = np.random.default_rng(seed)
    lo = np.asarray(params.cube_min)
    hi = np.asarray(params.cube_max)
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return centre + 0.9 * half * rng.uniform(-1.0, 1.0, size=(n, 3))


def validate_sensitivities(
    params: MachineParams = MachineParams(),
    seed: int = 12345,
    n_random: int = 10,
    linkage_tol: float = 1e-6,
    pose_tol: float = 1e-5,
    fd_step_mm: float = 1e-6,
    fd_step_rad: float = 1e-8,
) -> dict:
    """Compare every analytic sensitivity against its FD oracle.

    Evaluates at the isotropic position, both cube corners on the
    diagonal, and ``n_random`` seeded interior points.

    Returns:
        dict with the worst relative errors per matrix (``linkage``,
        ``position``, ``rotation``), the tolerances applied, the points
        used, and ``passed``.
    """
    from .linkage import sensitivity_matrix  # local import to keep layering flat

    corners = [np.zeros(3), np.asarray(params.cube_min, float), np.asarray(params.cube_max, float)]
    points = corners + list(random_workspace_points(params, n_random, seed))
    worst = {"linkage": 0.0, "position": 0.0, "rotation": 0.0}
    for point in points:
        model = build_model(point, params)
        worst["linkage"] = max(
            worst["linkage"],
            max_entry_relative_error(
                sensitivity_matrix(point, params),
                fd_linkage_sensitivity(point, params, h=fd_step_mm),
            ),
        )
        fd_position, fd_rotation = fd_pose_jacobians(
            point, params, step_mm=fd_step_mm, step_rad=fd_step_rad
        )
        worst["position"] = max(
            worst["position"],
            max_column_relative_error(model.position_sensitivity, fd_position),
        )
        worst["rotation"] = max(
            worst["rotation"],
            max_column_relative_error(model.rotation_sensitivity, fd_rotation),
        )
    tolerances = {"linkage": linkage_tol, "position": pose_tol, "rotation": pose_tol}
    return {
        "max_relative_error": worst,
        "tolerance": tolerances,
        "n_points": len(points),
        "seed": seed,
        "passed": all(worst[k] <= tolerances[k] for k in worst),
    }


# ---------------------------------------------------------------------------
# Monte-Carlo tolerance propagation


@dataclass(frozen=True)
class ToleranceSpec:
    """Per-parameter spread of the 33 reduced parameters.

    ``scale`` holds one non-negative value per full parameter (mm or rad
    by parameter type): the standard deviation for the normal
    distribution, the half-width for the uniform one.
    """

    distribution: str = "normal"
    scale: np.ndarray = None

    def __post_init__(self):
        if self.distribution not in ("normal", "uniform"):
            raise ConfigError(
                f"unknown distribution {self.distribution!r} "
                "(expected 'normal' or 'uniform')"
            )
        scale = np.zeros(33) if self.scale is None else np.asarray(self.scale, float)
        if scale.shape != (33,):
            raise ConfigError("tolerance scale must hold 33 values")
        if (scale < 0.0).any():
            raise ConfigError("tolerance values must be non-negative")
        scale = scale.copy()
        scale.setflags(write=False)
        object.__setattr__(self, "scale", scale)

    @classmethod
    def homogeneous(
        cls, length_scale: float, angle_scale: float, distribution: str = "normal"
    ) -> "ToleranceSpec":
        """Same spread for every length (mm) and every angle (rad)."""
        scale = np.array(
            [
                length_scale if FULL_PARAM_UNITS[k % 11] == "mm" else angle_scale
                for k in range(33)
            ]
        )
        return cls(distribution=distribution, scale=scale)

    @classmethod
    def from_mapping(cls, doc: dict) -> "ToleranceSpec":
        """Build from a flat mapping (parsed JSON document).

        Keys: optional ``distribution`` plus any of the 33 parameter
        names (``dL_1`` ... ``g_y_3``); unnamed parameters default to
        zero spread.  Unknown keys are rejected.
        """
        if not isinstance(doc, dict):
            raise ConfigError("tolerance spec must be a JSON object")
        names = full_param_names()
        scale = np.zeros(33)
        distribution = "normal"
        for key, value in doc.items():
            if key == "distribution":
                distribution = value
            elif key in names:
                try:
                    scale[names.index(key)] = float(value)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"tolerance {key!r} is not a number") from exc
            else:
                raise ConfigError(f"unknown tolerance key {key!r}")
        return cls(distribution=distribution, scale=scale)

    def to_mapping(self) -> dict:
        doc = {"distribution": self.distribution}
        doc.update(zip(full_param_names(), (float(v) for v in self.scale)))
        return doc


def _sample_stream(seed: int, k: int) -> np.random.Generator:
    """Independent, stable random stream for sample ``k``.

    Documented seeding contract: sample k draws from a Philox generator
    keyed by ``SeedSequence(entropy=seed, spawn_key=(k,))``.  The stream
    for a given (seed, k) never depends on the number of samples or on
    evaluation order, so parallel and serial runs agree.
    """
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
    )


def _norm_stats(values: np.ndarray) -> dict:
    values = np.asarray(values, float)
    if values.size == 0:
        return {"mean": 0.0, "std": 0.0, "max": 0.0}
    return {
        "mean": float(values.mean()),
        "std": float(values.std()),
        "max": float(values.max()),
    }


def monte_carlo(
    p,
    params: MachineParams = MachineParams(),
    spec: ToleranceSpec = None,
    n: int = 1000,
    seed: int = 0,
) -> dict:
    """Random tolerance propagation through the nonlinear pose solve.

    For each sample, all 33 reduced parameters are drawn around zero with
    the per-parameter spread from ``spec`` (sample k always consumes 33
    variates from its own substream — see ``_sample_stream`` — so results
    are reproducible regardless of zero entries).  The same draws are
    pushed through the analytic sensitivities, giving paired nonlinear
    and linear-prediction statistics of the pose-error magnitudes.

    Args:
        p: evaluation point (mm).
        params: machine dimensions.
        spec: per-parameter spreads (all zero when omitted).
        n: number of samples (>= 1).
        seed: RNG seed; same seed, same report, bit for bit.

    Returns:
        JSON-ready dict with the sampled and predicted statistics (mean,
        population std, max of |dp| in mm and |dtheta| in rad), an echo
        of the tolerance spreads, and the count of non-converged samples.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if spec is None:
        spec = ToleranceSpec()
    point = np.asarray(p, dtype=float)
    rho = _nominal_extensions(point, params)
    model = build_model(point, params)
    theta_cols = [11 * leg + k for leg in range(3) for k in _THETA_IN_FULL]

    sampled_dp, sampled_dth = [], []
    predicted_dp, predicted_dth = [], []
    failed = 0
    for k in range(n):
        rng = _sample_stream(seed, k)
        if spec.distribution == "normal":
            draws = rng.standard_normal(33)
        else:
            draws = rng.uniform(-1.0, 1.0, 33)
        eps = draws * spec.scale
        predicted_dp.append(np.linalg.norm(model.position_sensitivity @ eps))
        predicted_dth.append(
            np.linalg.norm(model.rotation_sensitivity @ eps[theta_cols])
        )
        try:
            pose = solve_perturbed_pose(
                rho, PerturbedLegInputs.from_reduced(eps), params, nominal_point=point
            )
        except NoConvergence:
            failed += 1
            continue
        sampled_dp.append(np.linalg.norm(pose.dp))
        sampled_dth.append(np.linalg.norm(pose.dtheta))

    return {
        "schema_version": 1,
        "point": [float(v) for v in point],
        "seed": int(seed),
        "n_samples": int(n),
        "n_failed": failed,
        "tolerances": spec.to_mapping(),
        "predicted": {
            "position_norm_mm": _norm_stats(predicted_dp),
            "rotation_norm_rad": _norm_stats(predicted_dth),
        },
        "sampled": {
            "position_norm_mm": _norm_stats(sampled_dp),
            "rotation_norm_rad": _norm_stats(sampled_dth),
        },
    }
