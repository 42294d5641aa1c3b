"""End-to-end acceptance checks.

Each test verifies one numbered shipping criterion and records a one-line
PASS/FAIL verdict through the ``acceptance`` fixture; the session summary
prints the collected verdicts.  Two checks document known open issues and
are expected to fail (see README): the 1-degree tilt interval at the far
corner with the default rail anchor, and the small-angle agreement
threshold for the two orientation-index definitions.
"""

import json
import math

import numpy as np
import pytest

from pkmsens.diffvec import (
    build_model,
    global_rotation_indices,
    orientation_indices,
    position_indices,
)
from pkmsens.linkage import sensitivity_matrix
from pkmsens.oracle import (
    ToleranceSpec,
    fd_linkage_sensitivity,
    fd_pose_jacobians,
    max_column_relative_error,
    max_entry_relative_error,
    monte_carlo,
    random_workspace_points,
)
from pkmsens.report import diffvec_diagonal_table, linkage_diagonal_table

ROOT3 = math.sqrt(3.0)

# leg-relabeling map under the cyclic coordinate rotation (x,y,z)->(y,z,x):
# platform rows permute, leg blocks shift one leg over, and the two
# off-axis base-point columns inside each shifted block swap.
_SYMMETRY_ROWS = np.array([1, 2, 0])
_SYMMETRY_COLS = np.array(
    [6, 8, 7, 9, 10, 11, 12, 14, 13, 15, 16, 17, 0, 1, 2, 3, 4, 5]
)


@pytest.fixture(scope="session")
def sample_points(params, q1, q2):
    """The workspace points every matrix-vs-oracle criterion runs over."""
    points = [np.zeros(3), q1, q2]
    points.extend(random_workspace_points(params, 10, seed=12345))
    return points


def test_criterion_01_isotropic_linkage_pattern(params, acceptance):
    matrix = sensitivity_matrix(np.zeros(3), params)
    unit_error = 0.0
    off_pattern = 0.0
    for leg in range(3):
        block = matrix[:, 6 * leg : 6 * leg + 6]
        for col in (0, 3, 4, 5):  # anchor, extension, rod length, platform
            unit_error = max(unit_error, abs(abs(block[leg, col]) - 1.0))
        off_pattern = max(off_pattern, np.abs(block[:, 1:3]).max())
        other_rows = [r for r in range(3) if r != leg]
        off_pattern = max(off_pattern, np.abs(block[other_rows]).max())
    acceptance(
        "01",
        unit_error <= 1e-9 and off_pattern < 1e-12,
        f"unit entries off by {unit_error:.2e} (<=1e-9), "
        f"off-pattern magnitude {off_pattern:.2e} (<1e-12)",
    )


def test_criterion_02_far_corner_rod_length_gain(params, q2, acceptance):
    column = sensitivity_matrix(q2, params)[:, 4]  # leg-1 rod length
    gain = float(np.linalg.norm(column))
    displacement_um = gain * 10.0
    acceptance(
        "02",
        1.8 <= gain <= 2.1 and 18.0 <= displacement_um <= 21.0,
        f"leg-1 rod-length gain {gain:.6f} (in [1.8, 2.1]); "
        f"10 um error -> {displacement_um:.3f} um (in [18, 21])",
    )


def test_criterion_03_linkage_matches_fd_oracle(params, sample_points, acceptance):
    worst = 0.0
    for point in sample_points:
        analytic = sensitivity_matrix(point, params)
        fd = fd_linkage_sensitivity(point, params, h=1e-6)
        if np.allclose(point, 0.0):
            err = float(np.abs(analytic - fd).max())  # pattern of 0 and +-1
        else:
            err = max_entry_relative_error(analytic, fd, min_magnitude=1e-3)
        worst = max(worst, err)
    acceptance(
        "03",
        worst <= 1e-6,
        f"max deviation from the FD oracle {worst:.3e} over "
        f"{len(sample_points)} points (tolerance 1e-6)",
    )


def test_criterion_04_pose_jacobians_match_fd_oracle(
    params, sample_points, acceptance
):
    worst = 0.0
    for point in sample_points:
        model = build_model(point, params)
        fd_full, fd_theta = fd_pose_jacobians(point, params)
        worst = max(
            worst,
            max_column_relative_error(model.position_sensitivity, fd_full),
            max_column_relative_error(model.rotation_sensitivity, fd_theta),
        )
    acceptance(
        "04",
        worst <= 1e-5,
        f"max column error vs central differences {worst:.3e} over "
        f"{len(sample_points)} points (tolerance 1e-5)",
    )


def test_criterion_05_isotropic_indices(params, acceptance):
    model = build_model(np.zeros(3), params)
    mu = position_indices(model.position_sensitivity)
    nu = orientation_indices(model.rotation_sensitivity)
    mu_ok = (
        abs(mu[0] - ROOT3) <= 1e-9
        and abs(mu[1] - ROOT3) <= 1e-9
        and np.abs(mu[2:]).max() < 1e-12
    )
    # order: rod difference, bar difference, tilt x, tilt y, skew x, skew y
    nu_ok = (
        abs(nu[0] - ROOT3 / 80.0) <= 1e-9
        and abs(nu[3] - ROOT3) <= 1e-9
        and abs(nu[5] - ROOT3) <= 1e-9
        and max(abs(nu[1]), abs(nu[2]), abs(nu[4])) < 1e-12
    )
    acceptance(
        "05",
        mu_ok and nu_ok,
        f"position indices sqrt(3) on rod length and rail x only "
        f"(mu_dL={mu[0]:.9f}); orientation indices nonzero on rod "
        f"difference ({nu[0]:.9f} = sqrt(3)/80), tilt y, and skew y only",
    )


def test_criterion_06_diagonal_extrema(params, acceptance):
    linkage = linkage_diagonal_table(params, n=101)
    diffvec = diffvec_diagonal_table(params, n=101)
    t_link = linkage.points[:, 0]
    t_vec = diffvec.points[:, 0]
    idx0_link = int(np.flatnonzero(t_link == 0.0)[0])
    idx0_vec = int(np.flatnonzero(t_vec == 0.0)[0])
    last_link = len(linkage) - 1
    last_vec = len(diffvec) - 1

    failures = []
    if linkage.argmin("total") != idx0_link:
        failures.append("linkage total min not at t=0")
    if linkage.argmax("total") != last_link:
        failures.append("linkage total max not at the far corner")
    index_columns = [c for c in diffvec.columns if c.startswith(("mu_", "nu_"))]
    for name in index_columns:
        if name.startswith("nu_alt"):
            continue
        if name != "nu_dl" and diffvec.argmin(name) != idx0_vec:
            failures.append(f"{name} min not at t=0")
        if diffvec.argmax(name) != last_vec:
            failures.append(f"{name} max not at the far corner")
    acceptance(
        "06",
        not failures,
        "all diagonal aggregates extremal at t=0 / t=126.79"
        if not failures
        else "; ".join(failures),
    )


def test_criterion_07_rod_difference_at_near_corner(params, q1, acceptance):
    eps = np.zeros(33)
    for leg in range(3):
        eps[11 * leg + 7] = 1e-2  # 10 um rod-length difference per leg
    dp = build_model(q1, params).position_sensitivity @ eps
    norm_um = float(np.linalg.norm(dp)) * 1e3
    acceptance(
        "07",
        1.5 <= norm_um <= 4.5,
        f"10 um rod-length difference on all legs -> {norm_um:.4f} um "
        f"tool error at the near corner (interval [1.5, 4.5])",
    )


def test_criterion_08_rail_tilt_at_far_corner(params, q2, acceptance):
    eps = np.zeros(33)
    for leg in range(3):
        eps[11 * leg + 5] = math.radians(1.0)  # rail tilt about y
    dp = build_model(q2, params).position_sensitivity @ eps
    norm_mm = float(np.linalg.norm(dp))
    acceptance(
        "08",
        2.4 <= norm_mm <= 7.2,
        f"1 deg rail tilt on all legs -> {norm_mm:.4f} mm tool error at "
        f"the far corner (interval [2.4, 7.2]); the slide extension "
        f"rho ~ 262 mm at the default anchor offset 420 mm puts the "
        f"lever arm above the interval",
    )


def test_criterion_09_monte_carlo_agreement(params, acceptance):
    spec = ToleranceSpec.homogeneous(1e-3, 1e-6)  # 1 um / 1 urad spreads
    runs = [
        monte_carlo(np.zeros(3), params, spec, n=10000, seed=12345)
        for _ in range(2)
    ]
    identical = json.dumps(runs[0], sort_keys=True) == json.dumps(
        runs[1], sort_keys=True
    )
    sampled = runs[0]["sampled"]["position_norm_mm"]["mean"]
    predicted = runs[0]["predicted"]["position_norm_mm"]["mean"]
    rel = abs(sampled - predicted) / predicted
    acceptance(
        "09",
        identical and rel <= 0.01 and runs[0]["n_failed"] == 0,
        f"sampled mean position error {sampled:.6e} mm vs linear "
        f"prediction {predicted:.6e} mm (relative gap {rel:.2e} <= 1e-2); "
        f"repeat run byte-identical: {identical}",
    )


def test_criterion_10a_leg_permutation_symmetry(params, acceptance):
    points = [np.array([14.0, -22.0, 61.0])]
    points.extend(random_workspace_points(params, 5, seed=777))
    worst_c = 0.0
    worst_nu = 0.0
    for point in points:
        rotated = point[[1, 2, 0]]
        matrix = sensitivity_matrix(point, params)
        expected = matrix[_SYMMETRY_ROWS][:, _SYMMETRY_COLS]
        actual = sensitivity_matrix(rotated, params)
        worst_c = max(worst_c, float(np.abs(actual - expected).max()))
        nu = orientation_indices(build_model(point, params).rotation_sensitivity)
        nu_rot = orientation_indices(
            build_model(rotated, params).rotation_sensitivity
        )
        worst_nu = max(worst_nu, float(np.abs(nu - nu_rot).max()))
    acceptance(
        "10a",
        worst_c <= 1e-9 and worst_nu <= 1e-9,
        f"cyclic relabeling reproduces the linkage matrix to "
        f"{worst_c:.2e} and leaves the orientation indices unchanged to "
        f"{worst_nu:.2e} (tolerance 1e-9)",
    )


def test_criterion_10b_tilt_skew_column_equality(
    params, q1, q2, sample_points, acceptance
):
    ok = True
    for point in sample_points:
        matrix = build_model(point, params).rotation_sensitivity
        for leg in range(3):
            if not np.array_equal(
                matrix[:, 6 * leg + 3], matrix[:, 6 * leg + 5]
            ):
                ok = False
    acceptance(
        "10b",
        ok,
        "rail-tilt-y and bar-skew-y columns of the orientation "
        "sensitivity are bit-identical at all sampled points",
    )


def test_criterion_10c_no_rotation_coupling_at_center(params, acceptance):
    model = build_model(np.zeros(3), params)
    coupling = float(np.abs(model.rotation_coupling).max())
    indirect = float(np.abs(model.position_from_rotation).max())
    acceptance(
        "10c",
        coupling < 1e-12 and indirect < 1e-12,
        f"platform-lever coupling {coupling:.2e} and rotation-path "
        f"displacement {indirect:.2e} at the isotropic point (<1e-12)",
    )


def test_criterion_10d_anchor_extension_antisymmetry(
    params, sample_points, acceptance
):
    ok = True
    for point in sample_points:
        matrix = sensitivity_matrix(point, params)
        for leg in range(3):
            if not np.array_equal(matrix[:, 6 * leg], -matrix[:, 6 * leg + 3]):
                ok = False
    acceptance(
        "10d",
        ok,
        "rail-anchor and slide-extension columns are exact negatives at "
        "all sampled points",
    )


def test_criterion_10e_orientation_index_definitions_agree(
    params, q2, acceptance
):
    # worst case: three orthogonal unit contributions, one per leg, scaled
    # so every per-axis aggregate is 1e-3 rad
    synthetic = np.zeros((3, 18))
    for leg in range(3):
        synthetic[leg, 6 * leg] = 1e-3
    rel_syn = _max_relative_gap(synthetic)

    # the real orientation sensitivity at the far corner, scaled to put
    # the largest per-axis aggregate at 1e-3 rad
    matrix = build_model(q2, params).rotation_sensitivity
    aggregates = np.sqrt((matrix.reshape(3, 3, 6) ** 2).sum(axis=1))
    scaled = matrix * (1e-3 / aggregates.max())
    rel_real = _max_relative_gap(scaled)

    worst = max(rel_syn, rel_real)
    acceptance(
        "10e",
        worst < 1e-6,
        f"relative gap between the RSS and composed-rotation orientation "
        f"indices at aggregate angles <= 1e-3 rad: {worst:.3e} "
        f"(threshold 1e-6); the composed rotation keeps a first-order "
        f"cross term whenever all three axes contribute",
    )


def _max_relative_gap(rotation_sensitivity: np.ndarray) -> float:
    rss = orientation_indices(rotation_sensitivity)
    composed = global_rotation_indices(rotation_sensitivity)
    mask = rss > 1e-15
    return float(np.max(np.abs(composed[mask] - rss[mask]) / rss[mask]))
