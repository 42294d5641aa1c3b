"""Kinematics of a 3-axis translational parallel machine.

The machine moves a platform by three identical legs mounted on mutually
orthogonal rails (x, y, z).  Each leg is a PRPaR chain: a prismatic
actuator sliding along its rail, followed by a parallelogram whose two
rods (length L, spacing d) keep the platform orientation constant.  Leg
geometry is described in a per-leg frame obtained from the base frame by
a fixed rotation; leg 1 uses the base frame itself, legs 2 and 3 are the
cyclic relabelings that send the rail direction to y and z.

Conventions used throughout the package:

* ``E_RAIL`` is the rail/rod reference direction in the leg frame and
  ``E_BAR`` the parallelogram cross-bar direction.
* The prismatic joint of leg i is anchored at ``(-a_i, 0, 0)`` (leg
  frame) and extended by ``rho_i``, so the rail endpoint sits at
  ``(rho_i - a_i, 0, 0)``.
* The platform attachment of leg i sits at ``(-r_i, 0, 0)`` (leg frame)
  relative to the tool point ``p``.
* Units are millimetres and radians everywhere.

The working branch of the inverse kinematics is the assembly whose rod
direction has a non-negative component along the rail.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, OutOfWorkspace

__all__ = [
    "E_RAIL",
    "E_BAR",
    "LEG_ROTATIONS",
    "MachineParams",
    "LegState",
    "inverse_kinematics",
    "forward_kinematics",
    "diagonal_point",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


#: Rail (and nominal rod) direction in the leg frame.
E_RAIL = _frozen([1.0, 0.0, 0.0])

#: Parallelogram cross-bar direction in the leg frame.
E_BAR = _frozen([0.0, 0.0, 1.0])

#: Base-to-leg-frame rotations.  ``LEG_ROTATIONS[i] @ v`` maps a leg-frame
#: vector to the base frame.  Leg 1 is the identity; legs 2 and 3 cycle the
#: rail onto the y and z axes.
LEG_ROTATIONS = (
    _frozen(np.eye(3)),
    _frozen([[0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [0.0, -1.0, 0.0]]),
    _frozen([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]),
)


def _triple(value) -> tuple[float, float, float]:
    """Normalize a scalar or length-3 sequence to a 3-tuple of floats."""
    if np.isscalar(value):
        return (float(value),) * 3
    t = tuple(float(v) for v in value)
    if len(t) != 3:
        raise ValueError(f"expected a scalar or 3 values, got {len(t)}")
    return t


@dataclass(frozen=True)
class MachineParams:
    """Nominal machine dimensions and workspace bounds (mm).

    Per-leg fields accept either a scalar (applied to all three legs) or a
    length-3 sequence.

    Attributes:
        rail_offset: distance a_i from the frame origin to the prismatic
            anchor of each leg, along its rail.
        rod_length: parallelogram rod length L_i of each leg.
        rod_spacing: parallelogram width d (distance between the two rods),
            shared by all legs.
        platform_offset: distance r_i from the platform attachment of each
            leg to the tool point, along the leg axis.
        cube_min, cube_max: corners of the cubic workspace used by the
            sweeps.  The default 200 mm cube is deliberately offset from
            the origin; the well-conditioned region of this machine is
            not symmetric about it.
    """

    rail_offset: tuple[float, float, float] = 420.0
    rod_length: tuple[float, float, float] = 310.58
    rod_spacing: float = 80.0
    platform_offset: tuple[float, float, float] = 31.0
    cube_min: tuple[float, float, float] = -73.21
    cube_max: tuple[float, float, float] = 126.79

    def __post_init__(self):
        for name in ("rail_offset", "rod_length", "platform_offset", "cube_min", "cube_max"):
            object.__setattr__(self, name, _triple(getattr(self, name)))
        object.__setattr__(self, "rod_spacing", float(self.rod_spacing))
        if any(L <= 0.0 for L in self.rod_length):
            raise ValueError("rod_length must be positive")
        if self.rod_spacing <= 0.0:
            raise ValueError("rod_spacing must be positive")
        if any(hi < lo for lo, hi in zip(self.cube_min, self.cube_max)):
            raise ValueError("cube_max must not be below cube_min")

    def as_dict(self) -> dict:
        """Plain-data snapshot (used in table metadata and JSON reports)."""
        return {
            "rail_offset": list(self.rail_offset),
            "rod_length": list(self.rod_length),
            "rod_spacing": self.rod_spacing,
            "platform_offset": list(self.platform_offset),
            "cube_min": list(self.cube_min),
            "cube_max": list(self.cube_max),
        }


@dataclass(eq=False)
class LegState:
    """Resolved state of one leg at a given tool position.

    Attributes:
        index: leg number, 0-based.
        rho: prismatic extension (mm).
        w: unit rod direction, base frame, pointing from the rail endpoint
            towards the platform.
        b: rail endpoint position, base frame (midpoint of the moving
            cross-bar).
        c: platform attachment position, base frame (midpoint of the
            platform cross-bar).
    """

    index: int
    rho: float
    w: np.ndarray
    b: np.ndarray
    c: np.ndarray


def inverse_kinematics(
    p, params: MachineParams = MachineParams()
) -> tuple[LegState, LegState, LegState]:
    """Solve each leg's prismatic extension for a tool position.

    Args:
        p: tool position, base frame (mm).
        params: machine dimensions.

    Returns:
        One ``LegState`` per leg, on the working branch (rod direction
        component along the rail >= 0).

    Raises:
        OutOfWorkspace: if some leg cannot reach ``p`` (the off-axis
            distance from the rail meets or exceeds the rod length).
    """
    p = np.asarray(p, dtype=float)
    legs = []
    for i, rot in enumerate(LEG_ROTATIONS):
        a = params.rail_offset[i]
        length = params.rod_length[i]
        r = params.platform_offset[i]
        # Leg-frame attachment point: c = R^T p - r e1.
        c_leg = rot.T @ p - r * E_RAIL
        disc = length**2 - c_leg[1] ** 2 - c_leg[2] ** 2
        if disc <= 0.0:
            raise OutOfWorkspace(
                f"leg {i + 1} cannot reach point {p.tolist()}: "
                f"off-axis distance >= rod length"
            )
        # Working branch: rod leans forward along the rail, so the rail
        # endpoint trails the attachment by sqrt(disc).
        rho = c_leg[0] + a - np.sqrt(disc)
        b_leg = np.array([rho - a, 0.0, 0.0])
        w_leg = (c_leg - b_leg) / length
        legs.append(
            LegState(index=i, rho=float(rho), w=rot @ w_leg, b=rot @ b_leg, c=p - r * rot[:, 0])
        )
    return tuple(legs)


def _constraint_residuals(p: np.ndarray, rho, params: MachineParams):
    """Squared rod-length residuals and their position Jacobian.

    Returns (F, A) with F_i = |c_i - b_i|^2 - L_i^2 and A row i the
    gradient 2 (c_i - b_i)^T.
    """
    res = np.empty(3)
    jac = np.empty((3, 3))
    for i, rot in enumerate(LEG_ROTATIONS):
        axis = rot[:, 0]
        b = (rho[i] - params.rail_offset[i]) * axis
        c = p - params.platform_offset[i] * axis
        v = c - b
        res[i] = v @ v - params.rod_length[i] ** 2
        jac[i] = 2.0 * v
    return res, jac


def forward_kinematics(
    rho, params: MachineParams = MachineParams(), guess=None
) -> np.ndarray:
    """Recover the tool position from the three prismatic extensions.

    Newton iteration on the squared rod-length constraints, started from
    ``guess`` (workspace cube centre by default).

    Args:
        rho: the three prismatic extensions (mm).
        params: machine dimensions.
        guess: starting point for the iteration, base frame (mm).

    Returns:
        The tool position on the working branch.

    Raises:
        NoConvergence: if the residuals do not drop below 1e-10 mm^2
            within 50 iterations, or an iterate becomes non-finite or
            singular.
        OutOfWorkspace: if the converged point is unreachable or lies on
            the other assembly branch.
    """
    rho = np.asarray(rho, dtype=float)
    if guess is None:
        p = 0.5 * (np.asarray(params.cube_min) + np.asarray(params.cube_max))
    else:
        p = np.asarray(guess, dtype=float).copy()
    for _ in range(50):
        res, jac = _constraint_residuals(p, rho, params)
        if np.max(np.abs(res)) < 1e-10:
            break
        try:
            step = np.linalg.solve(jac, res)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"singular Jacobian at iterate {p.tolist()}") from exc
        p = p - step
        if not np.all(np.isfinite(p)):
            raise NoConvergence("forward kinematics iterate diverged")
    else:
        raise NoConvergence(
            f"forward kinematics did not converge for rho={rho.tolist()}"
        )
    # Confirm the solution sits on the working branch: its own inverse
    # kinematics must reproduce the requested extensions.
    legs = inverse_kinematics(p, params)  # OutOfWorkspace if unreachable
    if max(abs(leg.rho - rho[i]) for i, leg in enumerate(legs)) > 1e-6:
        raise OutOfWorkspace(
            "converged point lies on the non-working assembly branch"
        )
    return p


def diagonal_point(t: float) -> np.ndarray:
    """Point on the workspace cube diagonal with per-axis coordinate t.

    ``t = 0`` is the frame origin (the isotropic position); the default
    cube spans t in [-73.21, 126.79].
    """
    return np.array([t, t, t], dtype=float)
