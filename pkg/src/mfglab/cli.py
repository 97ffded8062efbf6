"""Configuration-driven command line front end.

One JSON config document drives every command; results land in delimited
files (CSV with a single header row, numbers at 17 significant digits) or
JSON, and each command prints a one-line JSON summary to stdout.  Exit
codes: 0 success, 1 usage/config error, 2 solver did not converge.

Commands
--------
solve       minimize the potential / iterate the fixed point / fictitious play
enumerate   scan all scalar equilibria of a 1D singleton game
select      tabulate value gradient vs entropy vs viscous vs equilibria
burgers     run the Godunov / viscous / biased solvers and dump fields
check       run the structure checkers on a configured coupling

Pass ``--figures`` (or set output.figures) to render a PNG next to each
delimited output.  ``MFG_LOG`` in {quiet, info, debug} controls logging.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import couplings as cp
from . import hjb
from . import reduced_game as rg
from .errors import ConfigurationError, MFGLabError
from .measures import EmpiricalMeasure

logger = logging.getLogger("mfglab")

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------

def _setup_logging() -> None:
    level = {"quiet": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("MFG_LOG", "info"))
    if level is None:
        raise ConfigurationError("MFG_LOG must be one of: quiet, info, debug")
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError("config root must be a JSON object")
    version = cfg.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigurationError(
            f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    return cfg


def _block(cfg: dict, name: str, required: bool = True) -> dict:
    value = cfg.get(name)
    if value is None:
        if required:
            raise ConfigurationError(f"missing config block: {name}")
        return {}
    if not isinstance(value, dict):
        raise ConfigurationError(f"config block {name} must be an object")
    return value


def _number(block: dict, where: str, key: str, default=None, positive=False):
    value = block.get(key, default)
    if value is None:
        raise ConfigurationError(f"missing config key: {where}.{key}")
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigurationError(f"config key {where}.{key} must be a number")
    if positive and not value > 0:
        raise ConfigurationError(f"config key {where}.{key} must be positive")
    return float(value)


def build_coupling(label: str, params: dict) -> cp.Coupling:
    """Instantiate a catalog coupling from its label and parameter block."""
    params = params or {}
    if label == "selection_example":
        return cp.selection_example()
    if label == "quadratic_well":
        return cp.quadratic_well(params.get("center", 0.0),
                                 params.get("stiffness", 1.0))
    if label == "quadratic_interaction":
        return cp.quadratic_interaction(params.get("weight", 1.0))
    if label == "gaussian_interaction":
        w = float(params.get("weight", 1.0))
        width = float(params.get("width", 1.0))
        if width <= 0:
            raise ConfigurationError("gaussian_interaction width must be positive")

        def psi(z):
            z = np.asarray(z, dtype=float)
            return w * float(np.exp(-0.5 * (z @ z) / width**2))

        def dpsi(z):
            z = np.asarray(z, dtype=float)
            return -w * z / width**2 * float(np.exp(-0.5 * (z @ z) / width**2))

        return cp.interaction_coupling(psi, dpsi, label="gaussian_interaction")
    if label == "second_moment_tilt":
        return cp.second_moment_tilt()
    raise ConfigurationError(f"unknown coupling label: {label}")


def _build_initial(spec_block: dict, seed_override=None) -> EmpiricalMeasure:
    init = spec_block.get("initial")
    if not isinstance(init, dict):
        raise ConfigurationError("spec.initial must be an object")
    if "points" in init:
        try:
            return EmpiricalMeasure(np.asarray(init["points"], dtype=float))
        except (ValueError, MFGLabError) as exc:
            raise ConfigurationError(f"spec.initial.points invalid: {exc}") from exc
    sampler = init.get("sampler")
    if not isinstance(sampler, dict):
        raise ConfigurationError("spec.initial needs points or sampler")
    kind = sampler.get("kind")
    n = int(_number(sampler, "spec.initial.sampler", "n", positive=True))
    d = int(sampler.get("dim", 1))
    seed = int(sampler.get("seed", 0) if seed_override is None else seed_override)
    rng = np.random.default_rng(seed)
    if kind == "gaussian":
        center = _number(sampler, "spec.initial.sampler", "center", default=0.0)
        scale = _number(sampler, "spec.initial.sampler", "scale", default=1.0)
        return EmpiricalMeasure(center + scale * rng.standard_normal((n, d)))
    if kind == "uniform":
        lo = _number(sampler, "spec.initial.sampler", "lo")
        hi = _number(sampler, "spec.initial.sampler", "hi")
        return EmpiricalMeasure(rng.uniform(lo, hi, size=(n, d)))
    if kind == "linspace":
        lo = _number(sampler, "spec.initial.sampler", "lo")
        hi = _number(sampler, "spec.initial.sampler", "hi")
        return EmpiricalMeasure(np.linspace(lo, hi, n).reshape(-1, 1))
    raise ConfigurationError(f"unknown sampler kind: {kind!r}")


def _build_spec(cfg: dict, seed_override=None) -> rg.GameSpec:
    spec_block = _block(cfg, "spec")
    horizon = _number(spec_block, "spec", "T", positive=True)
    coupling_block = _block(spec_block, "coupling") if isinstance(
        spec_block.get("coupling"), dict) else None
    if coupling_block is None:
        raise ConfigurationError("missing config block: spec.coupling")
    label = coupling_block.get("label")
    if not isinstance(label, str):
        raise ConfigurationError("spec.coupling.label must be a string")
    coupling = build_coupling(label, coupling_block.get("params", {}))
    initial = _build_initial(spec_block, seed_override)
    return rg.GameSpec(horizon=horizon, initial=initial, coupling=coupling)


def _solver_options(cfg: dict, args) -> rg.SolverOptions:
    solver = _block(cfg, "solver", required=False)
    opts = rg.SolverOptions()
    opts.tol = _number(solver, "solver", "tol", default=opts.tol, positive=True)
    opts.max_iter = int(_number(solver, "solver", "max_iter", default=opts.max_iter,
                                positive=True))
    opts.restarts = int(_number(solver, "solver", "restarts", default=opts.restarts))
    opts.relaxation = _number(solver, "solver", "relaxation", default=opts.relaxation,
                              positive=True)
    opts.seed = int(_number(solver, "solver", "seed", default=opts.seed))
    if args.seed is not None:
        opts.seed = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigurationError("--threads must be >= 1")
        opts.threads = args.threads
    return opts


def _output_path(cfg: dict, args) -> tuple:
    out = _block(cfg, "output", required=False)
    path = args.output or out.get("path")
    if path is None:
        raise ConfigurationError("no output path: set output.path or pass --output")
    figures = bool(out.get("figures", False)) or bool(args.figures)
    return Path(path), figures


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _emit_summary(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_solve(cfg: dict, args) -> int:
    spec = _build_spec(cfg, args.seed)
    opts = _solver_options(cfg, args)
    solver = _block(cfg, "solver", required=False)
    method = solver.get("method", "potential")
    init = solver.get("init")
    init = np.asarray(init, dtype=float) if init is not None else None
    trajectory = None
    if method == "potential":
        result = rg.minimize_potential(spec, init, opts)
    elif method == "fixed_point":
        result = rg.nash_fixed_point(spec, init, opts)
    elif method == "fictitious_play":
        rounds = int(_number(solver, "solver", "rounds", default=50, positive=True))
        results = rg.fictitious_play(spec, rounds, init, opts)
        result = results[-1]
        trajectory = [r.nash_residual for r in results]
    else:
        raise ConfigurationError(f"unknown solver method: {method!r}")

    path, figures = _output_path(cfg, args)
    payload = result.to_dict()
    if trajectory is not None:
        payload["residual_trajectory"] = trajectory
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    logger.info("solve: method=%s residual=%.3g converged=%s",
                method, result.nash_residual, result.converged)
    if figures:
        from . import figures as figmod
        figmod.render_solve(spec, result, path.with_suffix(".png"))
    _emit_summary({"command": "solve", "converged": result.converged,
                   "nash_residual": result.nash_residual,
                   "potential_value": result.potential_value,
                   "output": str(path)})
    return 0 if result.converged else 2


def cmd_enumerate(cfg: dict, args) -> int:
    spec = _build_spec(cfg, args.seed)
    scan = _block(cfg, "scan")
    lo = _number(scan, "scan", "lo")
    hi = _number(scan, "scan", "hi")
    steps = int(_number(scan, "scan", "steps", default=10000, positive=True))
    enum = rg.enumerate_equilibria_1d(spec, lo, hi, steps)

    path, figures = _output_path(cfg, args)
    rows = [(float(y), float(r), float(k))
            for y, r, k in zip(enum.roots, enum.residuals, enum.potentials)]
    _write_csv(path, ["y", "residual", "K"], rows)
    if figures:
        from . import figures as figmod
        figmod.render_enumeration(spec, enum, lo, hi, path.with_suffix(".png"))
    _emit_summary({"command": "enumerate", "roots": [float(y) for y in enum.roots],
                   "boundary_warning": enum.boundary_warning, "output": str(path)})
    return 0


def cmd_select(cfg: dict, args) -> int:
    spec_block = _block(cfg, "spec")
    coupling_block = spec_block.get("coupling")
    if not isinstance(coupling_block, dict) or "label" not in coupling_block:
        raise ConfigurationError("spec.coupling.label is required")
    coupling = build_coupling(coupling_block["label"], coupling_block.get("params", {}))

    sweep = _block(cfg, "sweep")
    t = _number(sweep, "sweep", "t", positive=True)
    x_lo = _number(sweep, "sweep", "x_lo")
    x_hi = _number(sweep, "sweep", "x_hi")
    count = int(_number(sweep, "sweep", "count", default=41, positive=True))
    if not x_lo < x_hi:
        raise ConfigurationError("sweep needs x_lo < x_hi")

    pde = _block(cfg, "pde", required=False)
    grid_block = pde.get("grid", {})
    grid = hjb.Grid1D(
        x_lo=_number(grid_block, "pde.grid", "x_lo", default=x_lo - 2 * t - 2),
        x_hi=_number(grid_block, "pde.grid", "x_hi", default=x_hi + t + 2),
        nx=int(_number(grid_block, "pde.grid", "nx", default=800, positive=True)),
    )
    cfl = _number(pde, "pde", "cfl", default=0.5, positive=True)
    eps_list = pde.get("eps_list", [])
    if not isinstance(eps_list, list):
        raise ConfigurationError("pde.eps_list must be a list")

    xs = np.linspace(x_lo, x_hi, count)
    rows = hjb.selection_compare(coupling, t, xs, grid, eps_list, cfl)
    switch = hjb.selection_switch_estimate(
        coupling, t, max(x_lo, 1e-9), min(x_hi, t - 1.0 - 1e-9)) if t > 1.0 else None

    path, figures = _output_path(cfg, args)
    header = (["x", "hl_value", "hl_grad", "godunov_u"]
              + [f"viscous_u_eps{float(e)!r}" for e in eps_list]
              + ["equilibria", "selected_y", "selected_velocity"])
    table = []
    for r in rows:
        rec = [r.x, r.hl_value, "" if r.hl_grad is None else r.hl_grad, r.godunov_u]
        rec += [r.viscous_u[float(e)] for e in eps_list]
        rec += [";".join(_fmt(float(y)) for y in r.equilibria),
                r.selected_y, r.selected_velocity]
        table.append(rec)
    _write_csv(path, header, table)
    if figures:
        from . import figures as figmod
        figmod.render_selection(rows, eps_list, path.with_suffix(".png"), switch)
    _emit_summary({"command": "select", "switch_estimate": switch,
                   "t": t, "output": str(path)})
    return 0


def cmd_burgers(cfg: dict, args) -> int:
    pde = _block(cfg, "pde")
    grid_block = _block(pde, "grid") if isinstance(pde.get("grid"), dict) else None
    if grid_block is None:
        raise ConfigurationError("missing config block: pde.grid")
    grid = hjb.Grid1D(x_lo=_number(grid_block, "pde.grid", "x_lo"),
                      x_hi=_number(grid_block, "pde.grid", "x_hi"),
                      nx=int(_number(grid_block, "pde.grid", "nx", positive=True)))
    t_final = _number(pde, "pde", "t_final", positive=True)
    cfl = _number(pde, "pde", "cfl", default=0.5, positive=True)
    eps_list = pde.get("eps_list", [])
    theta = pde.get("theta")
    threshold = _number(pde, "pde", "jump_threshold", default=0.25, positive=True)

    datum = pde.get("datum", {"kind": "coupling"})
    if not isinstance(datum, dict):
        raise ConfigurationError("pde.datum must be an object")
    kind = datum.get("kind", "coupling")
    if kind == "riemann":
        left = _number(datum, "pde.datum", "left")
        right = _number(datum, "pde.datum", "right")
        jump_at = _number(datum, "pde.datum", "jump_at", default=0.0)
        u0 = np.where(grid.centers < jump_at, left, right)
    elif kind == "coupling":
        spec_block = _block(cfg, "spec")
        coupling_block = spec_block.get("coupling")
        if not isinstance(coupling_block, dict) or "label" not in coupling_block:
            raise ConfigurationError("spec.coupling.label is required for datum kind 'coupling'")
        coupling = build_coupling(coupling_block["label"],
                                  coupling_block.get("params", {}))
        u0 = np.array([float(coupling.grad_x(EmpiricalMeasure([[c]]), np.array([c]))[0])
                       for c in grid.centers])
    else:
        raise ConfigurationError(f"unknown datum kind: {kind!r}")

    fields = {"godunov": hjb.godunov_burgers(grid, u0, t_final, cfl)}
    for eps in eps_list:
        fields[f"viscous_eps{float(eps)!r}"] = hjb.viscous_burgers(
            grid, u0, t_final, float(eps), cfl)
        if theta is not None:
            theta_fn = (lambda s, th=float(theta): th)
            fields[f"biased_eps{float(eps)!r}"] = hjb.biased_viscous_burgers(
                grid, u0, t_final, float(eps), theta_fn, cfl)
    shocks = {name: hjb.detect_shock(fld, threshold) for name, fld in fields.items()}

    path, figures = _output_path(cfg, args)
    rows = []
    for name, fld in fields.items():
        rows.extend(fld.to_rows(name))
    _write_csv(path, ["scheme", "t", "x", "u"], rows)
    if figures:
        from . import figures as figmod
        figmod.render_burgers(fields, shocks, path.with_suffix(".png"))
    _emit_summary({"command": "burgers", "shocks": shocks, "output": str(path)})
    return 0


def cmd_check(cfg: dict, args) -> int:
    spec_block = _block(cfg, "spec")
    coupling_block = spec_block.get("coupling")
    if not isinstance(coupling_block, dict) or "label" not in coupling_block:
        raise ConfigurationError("spec.coupling.label is required")
    coupling = build_coupling(coupling_block["label"], coupling_block.get("params", {}))

    check = _block(cfg, "check", required=False)
    n = int(_number(check, "check", "n", default=2, positive=True))
    d = int(_number(check, "check", "d", default=1, positive=True))
    samples = int(_number(check, "check", "samples", default=20, positive=True))
    seed = int(_number(check, "check", "seed", default=0))
    if args.seed is not None:
        seed = args.seed
    h = _number(check, "check", "h", default=1e-5, positive=True)
    quad_order = int(_number(check, "check", "quad_order", default=8, positive=True))

    rng = np.random.default_rng(seed)
    lin_res = 0.0
    grad_err = 0.0
    ll_min = np.inf
    for _ in range(samples):
        m0 = EmpiricalMeasure(rng.standard_normal((n, d)))
        m1 = EmpiricalMeasure(rng.standard_normal((n, d)))
        lin_res = max(lin_res, cp.check_linear_derivative(coupling, m0, m1, quad_order))
        grad_err = max(grad_err, cp.check_finite_dim_gradient(
            coupling, rng.standard_normal((n, d)), h))
        ll_min = min(ll_min, cp.check_ll_monotone(coupling, m0, m1))
    pairs = cp.sample_point_pairs(n, d, samples, seed=seed + 1)
    disp_min = cp.check_displacement_monotone(coupling, pairs)
    sym_points = check.get("points")
    sym_x = (np.asarray(sym_points, dtype=float) if sym_points is not None
             else rng.standard_normal((n, d)))
    asym = cp.check_potentializable(cp.equilibrium_field(coupling), sym_x, h)

    report = {
        "coupling": coupling.label,
        "linear_derivative_residual": float(lin_res),
        "finite_dim_gradient_error": float(grad_err),
        "displacement_min": float(disp_min),
        "ll_min": float(ll_min),
        "potentializability_asymmetry": float(asym),
        "samples": samples,
    }
    path, _figures = _output_path(cfg, args)
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    _emit_summary({"command": "check", **report, "output": str(path)})
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "solve": cmd_solve,
    "enumerate": cmd_enumerate,
    "select": cmd_select,
    "burgers": cmd_burgers,
    "check": cmd_check,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfglab",
        description="Numerical laboratory for first-order potential mean field games")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--output", default=None, help="override output.path")
        p.add_argument("--seed", type=int, default=None, help="override solver seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker cap for per-atom solves")
        p.add_argument("--figures", action="store_true",
                       help="render a PNG next to the delimited output")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _setup_logging()
        cfg = _load_config(args.config)
        return _COMMANDS[args.command](cfg, args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except MFGLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
