"""Command-line interface for the sensitivity toolkit.

Subcommands
    linkage-mean      workspace-mean absolute linkage sensitivities (CSV)
    linkage-diagonal  linkage sensitivities along the cube diagonal (CSV)
    diffvec-diagonal  aggregate position/orientation indices on the diagonal (CSV)
    at                all sensitivity matrices and indices at one point (JSON)
    validate          compare analytic sensitivities against the FD oracles
    montecarlo        random tolerance propagation report (JSON)

The CSV subcommands also render an overview figure (PNG) next to the
output file unless --no-plot is given.

Configuration is a flat JSON document; precedence is built-in defaults,
then the config file (--config or the PKMSENS_CONFIG environment
variable), then command-line flags.  Machine dimensions accept a scalar
(all legs) or per-leg keys: ``a``/``a_1..a_3`` rail anchor offsets,
``L``/``L_1..L_3`` rod lengths, ``r``/``r_1..r_3`` platform offsets, and
scalar ``d`` for the parallelogram width; the remaining keys are
``grid_n``, ``diagonal_n``, ``fd_step_mm``, ``fd_step_rad``, ``seed``,
and ``output_dir``.  Unknown keys are rejected.

Exit codes: 0 success, 1 validation or convergence failure, 2 I/O
failure, 3 configuration error, 4 point outside the workspace (or a
singular configuration).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diffvec import (
    build_model,
    global_rotation_indices,
    orientation_indices,
    position_indices,
)
from .errors import (
    ConfigError,
    NoConvergence,
    OutOfWorkspace,
    SingularConfiguration,
)
from .geometry import MachineParams
from .linkage import sensitivity_matrix
from .oracle import ToleranceSpec, monte_carlo, validate_sensitivities
from .report import (
    diffvec_diagonal_table,
    linkage_diagonal_table,
    linkage_mean_rows,
    render_diffvec_diagonal_figure,
    render_linkage_diagonal_figure,
    render_linkage_mean_figure,
    write_diagonal_csv,
    write_linkage_mean_csv,
)

__all__ = ["main"]

EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_CONFIG = 3
EXIT_WORKSPACE = 4

_DEFAULTS = {
    "grid_n": 21,
    "diagonal_n": 101,
    "fd_step_mm": 1e-6,
    "fd_step_rad": 1e-8,
    "seed": 12345,
    "output_dir": ".",
}

_DIM_KEYS = (
    ["a", "L", "r", "d"]
    + [f"a_{k}" for k in (1, 2, 3)]
    + [f"L_{k}" for k in (1, 2, 3)]
    + [f"r_{k}" for k in (1, 2, 3)]
)


def _load_config(path: str | None) -> dict:
    """Read and validate the flat JSON config document."""
    if path is None:
        path = os.environ.get("PKMSENS_CONFIG")
    if not path:
        return {}
    with open(path) as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path}: expected a JSON object")
    known = set(_DEFAULTS) | set(_DIM_KEYS)
    for key, value in doc.items():
        if key not in known:
            raise ConfigError(f"config {path}: unknown key {key!r}")
        if key == "output_dir":
            if not isinstance(value, str):
                raise ConfigError(f"config {path}: {key} must be a string")
        elif not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"config {path}: {key} must be a number")
    return doc


def _machine_params(cfg: dict) -> MachineParams:
    def triple(scalar_key: str, default) -> tuple:
        per_leg = [cfg.get(f"{scalar_key}_{k}") for k in (1, 2, 3)]
        scalar = cfg.get(scalar_key, default)
        return tuple(
            scalar if per_leg[k] is None else per_leg[k] for k in range(3)
        )

    defaults = MachineParams()
    try:
        return MachineParams(
            rail_offset=triple("a", defaults.rail_offset[0]),
            rod_length=triple("L", defaults.rod_length[0]),
            rod_spacing=cfg.get("d", defaults.rod_spacing),
            platform_offset=triple("r", defaults.platform_offset[0]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _setting(args: argparse.Namespace, cfg: dict, key: str, flag: str | None = None):
    value = getattr(args, flag or key, None)
    if value is not None:
        return value
    return cfg.get(key, _DEFAULTS[key])


def _parse_point(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"--point expects x,y,z; got {text!r}")
    try:
        return np.array([float(v) for v in parts])
    except ValueError as exc:
        raise ConfigError(f"--point expects numbers; got {text!r}") from exc


def _out_path(args: argparse.Namespace, cfg: dict, default_name: str) -> Path:
    if args.out is not None:
        return Path(args.out)
    return Path(cfg.get("output_dir", _DEFAULTS["output_dir"])) / default_name


# ---------------------------------------------------------------------------
# Subcommand handlers


def cmd_linkage_mean(args, cfg, params) -> int:
    grid_n = int(_setting(args, cfg, "grid_n", flag="grid"))
    try:
        rows = linkage_mean_rows(params, grid_n=grid_n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    path = _out_path(args, cfg, "linkage_mean.csv")
    write_linkage_mean_csv(rows, path)
    print(f"wrote {path}")
    if not args.no_plot:
        figure = path.with_suffix(".png")
        render_linkage_mean_figure(rows, figure)
        print(f"wrote {figure}")
    return 0


def _diagonal_command(args, cfg, params, build, write, render, default_name) -> int:
    n = int(_setting(args, cfg, "diagonal_n", flag="samples"))
    try:
        table = build(params, n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    path = _out_path(args, cfg, default_name)
    write(table, path)
    print(f"wrote {path} ({len(table)} rows, {table.n_skipped} skipped)")
    if not args.no_plot:
        figure = path.with_suffix(".png")
        render(table, figure)
        print(f"wrote {figure}")
    return 0


def cmd_linkage_diagonal(args, cfg, params) -> int:
    return _diagonal_command(
        args,
        cfg,
        params,
        lambda p, n: linkage_diagonal_table(p, n=n),
        write_diagonal_csv,
        render_linkage_diagonal_figure,
        "linkage_diagonal.csv",
    )


def cmd_diffvec_diagonal(args, cfg, params) -> int:
    return _diagonal_command(
        args,
        cfg,
        params,
        lambda p, n: diffvec_diagonal_table(p, n=n),
        write_diagonal_csv,
        render_diffvec_diagonal_figure,
        "diffvec_diagonal.csv",
    )


def cmd_at(args, cfg, params) -> int:
    point = _parse_point(args.point)
    matrix = sensitivity_matrix(point, params)
    model = build_model(point, params)
    doc = {
        "schema_version": 1,
        "point": [float(v) for v in point],
        "C": matrix.tolist(),
        "J_thth": model.rotation_sensitivity.tolist(),
        "J_pp": model.position_direct.tolist(),
        "J_ptheta": model.position_from_rotation.tolist(),
        "J": model.position_sensitivity.tolist(),
        "mu": position_indices(model.position_sensitivity).tolist(),
        "nu": orientation_indices(model.rotation_sensitivity).tolist(),
        "nu_alt": global_rotation_indices(model.rotation_sensitivity).tolist(),
    }
    print(json.dumps(doc, indent=2))
    return 0


def cmd_validate(args, cfg, params) -> int:
    seed = int(_setting(args, cfg, "seed"))
    report = validate_sensitivities(
        params,
        seed=seed,
        n_random=args.points,
        fd_step_mm=float(_setting(args, cfg, "fd_step_mm")),
        fd_step_rad=float(_setting(args, cfg, "fd_step_rad")),
    )
    for name, err in report["max_relative_error"].items():
        print(
            f"{name}: max relative error {err:.3e} "
            f"(tolerance {report['tolerance'][name]:.1e})"
        )
    print(f"points: {report['n_points']}  seed: {report['seed']}")
    if report["passed"]:
        print("PASS")
        return 0
    print("FAIL")
    return EXIT_VALIDATION


def cmd_montecarlo(args, cfg, params) -> int:
    with open(args.spec) as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"tolerance spec {args.spec}: invalid JSON ({exc})") from exc
    spec = ToleranceSpec.from_mapping(doc)
    point = _parse_point(args.point)
    report = monte_carlo(
        point,
        params,
        spec,
        n=args.samples,
        seed=int(_setting(args, cfg, "seed")),
    )
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out is None:
        print(text)
    else:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pkmsens",
        description="Sensitivity analysis of a 3-axis translational "
        "parallel kinematic machine.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="path to a JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text):
        cmd = sub.add_parser(name, help=help_text)
        cmd.set_defaults(handler=handler)
        return cmd

    cmd = add("linkage-mean", cmd_linkage_mean, "workspace-mean linkage sensitivities")
    cmd.add_argument("--grid", type=int, help="grid samples per axis")
    cmd.add_argument("--out", help="output CSV path")
    cmd.add_argument("--no-plot", action="store_true", help="skip the PNG figure")

    for name, handler, help_text in (
        ("linkage-diagonal", cmd_linkage_diagonal, "linkage sensitivities on the diagonal"),
        ("diffvec-diagonal", cmd_diffvec_diagonal, "aggregate indices on the diagonal"),
    ):
        cmd = add(name, handler, help_text)
        cmd.add_argument("--samples", type=int, help="diagonal sample count")
        cmd.add_argument("--out", help="output CSV path")
        cmd.add_argument("--no-plot", action="store_true", help="skip the PNG figure")

    cmd = add("at", cmd_at, "sensitivities at a single point (JSON)")
    cmd.add_argument("--point", required=True, help="evaluation point as x,y,z (mm)")

    cmd = add("validate", cmd_validate, "compare against the finite-difference oracles")
    cmd.add_argument("--seed", type=int, help="random-point seed")
    cmd.add_argument("--points", type=int, default=10, help="random points to test")

    cmd = add("montecarlo", cmd_montecarlo, "random tolerance propagation (JSON)")
    cmd.add_argument("--spec", required=True, help="tolerance spec JSON file")
    cmd.add_argument("--samples", type=int, default=1000, help="sample count")
    cmd.add_argument("--seed", type=int, help="RNG seed")
    cmd.add_argument("--point", default="0,0,0", help="evaluation point as x,y,z (mm)")
    cmd.add_argument("--out", help="write the JSON report here instead of stdout")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        params = _machine_params(cfg)
        return args.handler(args, cfg, params)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OutOfWorkspace, SingularConfiguration) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WORKSPACE
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
