"""Reduced terminal-cost game: potential minimization and fixed points.

With quadratic kinetic cost and no running coupling, optimal play moves in
straight lines, so the whole game collapses to a finite-dimensional problem
over the terminal points y of the n players:

    potential(y) = |x - y|^2 / (2 T n) + value(m_y)

where x are the initial points (identity pairing of the ordered lifts) and
m_y the terminal empirical measure.  Stationarity of the potential is, after
rescaling by T*n, exactly the per-atom Nash identity

    y_j + T * grad_x derivative(m_y, y_j) = x_j,

so equilibria can be found two ways: descend the potential, or iterate the
best-response map.  Both are implemented here, together with fictitious
play and a 1D equilibrium enumerator for the scalar selection experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from .couplings import Coupling
from .errors import BestResponseError, InvalidInputError
from .measures import EmpiricalMeasure, _stable_sum

METHOD_POTENTIAL = "potential"
METHOD_FIXED_POINT = "fixed_point"
METHOD_FICTITIOUS_PLAY = "fictitious_play"
METHOD_ENUMERATION = "enumeration"


@dataclass(frozen=True, eq=False)
class GameSpec:
    """Horizon, initial empirical measure and terminal coupling of one game."""

    horizon: float
    initial: EmpiricalMeasure
    coupling: Coupling

    def __post_init__(self):
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise InvalidInputError("horizon must be positive and finite")


@dataclass
class EquilibriumResult:
    """Terminal points of a candidate equilibrium plus solver metadata."""

    terminal: np.ndarray
    nash_residual: float
    potential_value: float
    method: str
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "terminal": [[float(c) for c in p] for p in np.atleast_2d(self.terminal)],
            "nash_residual": float(self.nash_residual),
            "potential_value": float(self.potential_value),
            "method": self.method,
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }


@dataclass
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 20000
    restarts: int = 2           # Gaussian-noise restarts on top of init + hints
    relaxation: float = 0.5     # Picard damping for the fixed-point iteration
    seed: int = 0
    threads: int = 1            # worker cap for per-atom best-response solves
    newton_tol: float = 1e-12
    newton_max_iter: int = 60


def _shape_y(spec: GameSpec, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y.reshape(-1, 1) if spec.initial.dim == 1 else y.reshape(1, -1)
    if y.shape != spec.initial.points.shape:
        raise InvalidInputError(
            f"terminal points must have shape {spec.initial.points.shape}, got {y.shape}")
    return y


def reduced_potential(spec: GameSpec, y) -> float:
    """|x - y|^2/(2 T n) + value(m_y) over the identity pairing of ordered lifts."""
    y = _shape_y(spec, y)
    x = spec.initial.points
    quad = _stable_sum((x - y) ** 2) / (2.0 * spec.horizon * spec.initial.n)
    return quad + spec.coupling.value(EmpiricalMeasure(y))


def reduced_potential_grad(spec: GameSpec, y) -> np.ndarray:
    """Gradient (y_j - x_j)/(T n) + grad_x(m_y, y_j)/n, shape (n, d)."""
    y = _shape_y(spec, y)
    x = spec.initial.points
    n, T = spec.initial.n, spec.horizon
    grads = spec.coupling.field_at_points(EmpiricalMeasure(y))
    return (y - x) / (T * n) + grads / n


def nash_residual(spec: GameSpec, y) -> float:
    """max_j |y_j + T grad_x(m_y, y_j) - x_j|; zero exactly at equilibria."""
    y = _shape_y(spec, y)
    x = spec.initial.points
    grads = spec.coupling.field_at_points(EmpiricalMeasure(y))
    res = y + spec.horizon * grads - x
    return float(np.max(np.linalg.norm(res, axis=1)))


def _grad_sup_scaled(spec: GameSpec, grad: np.ndarray) -> float:
    # T*n * max atom norm of the gradient: the Nash-scale stationarity measure
    T, n = spec.horizon, spec.initial.n
    return T * n * float(np.max(np.linalg.norm(np.atleast_2d(grad), axis=1)))


def _descend(spec: GameSpec, y0: np.ndarray, opts: SolverOptions):
    """Armijo-backtracked gradient descent; returns (y, iterations, converged)."""
    c_armijo = 1e-4
    y = y0.copy()
    val = reduced_potential(spec, y)
    # near the minimum the predicted decrease falls below the float
    # resolution of the potential; accept within that noise floor so the
    # iteration keeps contracting instead of stalling on the value test
    noise = 32.0 * np.finfo(float).eps
    for it in range(opts.max_iter):
        grad = reduced_potential_grad(spec, y)
        if _grad_sup_scaled(spec, grad) <= opts.tol:
            return y, it, True
        slope = -float(np.sum(grad * grad))
        step = 1.0
        while True:
            trial = y - step * grad
            trial_val = reduced_potential(spec, trial)
            if trial_val <= val + c_armijo * step * slope + noise * max(1.0, abs(val)):
                break
            step *= 0.5
            if step < 2.0**-60:
                return y, it, False  # stalled below machine-scale steps
        y, val = trial, trial_val
    grad = reduced_potential_grad(spec, y)
    return y, opts.max_iter, _grad_sup_scaled(spec, grad) <= opts.tol


def _restart_inits(spec: GameSpec, init: Optional[np.ndarray],
                   opts: SolverOptions) -> list:
    x = spec.initial.points
    inits = [x.copy() if init is None else _shape_y(spec, init)]
    if spec.coupling.hint_inits is not None:
        inits.extend(_shape_y(spec, h) for h in spec.coupling.hint_inits(x, spec.horizon))
    rng = np.random.default_rng(opts.seed)
    spread = float(np.mean(np.std(x, axis=0)))  # spread of the cloud, not of coordinates
    sigma = spread if spread > 0 else 1.0
    for _ in range(opts.restarts):
        inits.append(x + sigma * rng.standard_normal(x.shape))
    return inits


def minimize_potential(spec: GameSpec, init=None,
                       opts: Optional[SolverOptions] = None) -> EquilibriumResult:
    """Gradient descent on the reduced potential with restarts.

    Runs from the initial points, any coupling-specific hints, and
    ``opts.restarts`` Gaussian perturbations; returns the run with the
    lowest potential (ties within 1e-12 broken by staying nearer the
    initial points).  ``converged`` reflects the winning run only; an
    exhausted iteration budget yields ``converged=False``, not an error.
    """
    opts = opts or SolverOptions()
    if opts.tol <= 0:
        raise InvalidInputError("tol must be positive")
    x = spec.initial.points
    best = None
    for y0 in _restart_inits(spec, init, opts):
        y, iters, ok = _descend(spec, y0, opts)
        cand = (reduced_potential(spec, y), float(np.linalg.norm(y - x)), y, iters, ok)
        if best is None:
            best = cand
        else:
            dv = cand[0] - best[0]
            if dv < -1e-12 or (abs(dv) <= 1e-12 and cand[1] < best[1]):
                best = cand
    val, _, y, iters, ok = best
    return EquilibriumResult(
        terminal=y,
        nash_residual=nash_residual(spec, y),
        potential_value=val,
        method=METHOD_POTENTIAL,
        iterations=iters,
        converged=ok,
    )


def _solve_atom(spec: GameSpec, anticipated: EmpiricalMeasure, xj: np.ndarray,
                j: int, opts: SolverOptions) -> np.ndarray:
    """Damped Newton for y + T grad_x(anticipated, y) = x_j, started at x_j."""
    T = spec.horizon
    d = xj.shape[0]
    h = 1e-7

    def residual(y: np.ndarray) -> np.ndarray:
        return y + T * spec.coupling.grad_x(anticipated, y) - xj

    y = xj.copy()
    r = residual(y)
    for _ in range(opts.newton_max_iter):
        rn = float(np.linalg.norm(r))
        if rn <= opts.newton_tol:
            return y
        jac = np.eye(d)
        for b in range(d):
            e = np.zeros(d)
            e[b] = h
            jac[:, b] += T * (spec.coupling.grad_x(anticipated, y + e)
                              - spec.coupling.grad_x(anticipated, y - e)) / (2.0 * h)
        try:
            delta = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise BestResponseError(j, f"singular Newton system ({exc})") from exc
        step = 1.0
        while True:
            trial = y + step * delta
            r_trial = residual(trial)
            if float(np.linalg.norm(r_trial)) < rn:
                y, r = trial, r_trial
                break
            step *= 0.5
            if step < 2.0**-20:
                raise BestResponseError(
                    j, "Newton damping floor reached; optimality equation may "
                       "not be invertible (coupling not convex in x)")
    if float(np.linalg.norm(residual(y))) <= opts.newton_tol:
        return y
    raise BestResponseError(j, "Newton did not converge within the iteration budget")


def best_response(spec: GameSpec, anticipated: EmpiricalMeasure,
                  opts: Optional[SolverOptions] = None) -> np.ndarray:
    """Per-atom optimal terminal points against an anticipated terminal measure.

    Atom solves are independent; with ``opts.threads > 1`` they run on a
    thread pool, with results always assembled in atom order so the output
    is identical for any worker count.
    """
    opts = opts or SolverOptions()
    if anticipated.dim != spec.initial.dim:
        raise InvalidInputError("anticipated measure has wrong dimension")
    x = spec.initial.points
    indices = range(spec.initial.n)
    if opts.threads > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            futures = [pool.submit(_solve_atom, spec, anticipated, x[j], j, opts)
                       for j in indices]
            solved = [f.result() for f in futures]
    else:
        solved = [_solve_atom(spec, anticipated, x[j], j, opts) for j in indices]
    return np.stack(solved)


def nash_fixed_point(spec: GameSpec, init=None,
                     opts: Optional[SolverOptions] = None) -> EquilibriumResult:
    """Relaxed Picard iteration y <- (1-w) y + w best_response(m_y)."""
    opts = opts or SolverOptions()
    if not (0.0 < opts.relaxation <= 1.0):
        raise InvalidInputError("relaxation must lie in (0, 1]")
    y = spec.initial.points.copy() if init is None else _shape_y(spec, init)
    converged = False
    iterations = 0
    for it in range(1, opts.max_iter + 1):
        br = best_response(spec, EmpiricalMeasure(y), opts)
        y_next = (1.0 - opts.relaxation) * y + opts.relaxation * br
        gap = float(np.max(np.linalg.norm(y_next - y, axis=1)))
        y = y_next
        iterations = it
        if gap <= opts.tol:
            converged = True
            break
    return EquilibriumResult(
        terminal=y,
        nash_residual=nash_residual(spec, y),
        potential_value=reduced_potential(spec, y),
        method=METHOD_FIXED_POINT,
        iterations=iterations,
        converged=converged,
    )


def fictitious_play(spec: GameSpec, rounds: int, init=None,
                    opts: Optional[SolverOptions] = None) -> list:
    """Best-respond each round to the pooled average of all previous plays.

    The average of past terminal measures is realized as the uniform
    empirical measure over all previously played terminal points (round one
    responds to the initial play, which defaults to the initial points).
    Returns one result per round; the residual trajectory is reported for
    inspection, with no convergence claim attached.
    """
    if rounds < 1:
        raise InvalidInputError("rounds must be >= 1")
    opts = opts or SolverOptions()
    plays = [spec.initial.points.copy() if init is None else _shape_y(spec, init)]
    out = []
    for k in range(1, rounds + 1):
        anticipated = EmpiricalMeasure(np.vstack(plays))
        y = best_response(spec, anticipated, opts)
        plays.append(y)
        res = nash_residual(spec, y)
        out.append(EquilibriumResult(
            terminal=y,
            nash_residual=res,
            potential_value=reduced_potential(spec, y),
            method=METHOD_FICTITIOUS_PLAY,
            iterations=k,
            converged=res <= opts.tol,
        ))
    return out


@dataclass
class Enumeration1D:
    """All bracketed stationary points of a scalar (n=1, d=1) game."""

    roots: np.ndarray
    potentials: np.ndarray
    residuals: np.ndarray
    boundary_warning: bool

    def selected_index(self) -> int:
        """Index of the potential-selected root (lowest potential)."""
        return int(np.argmin(self.potentials))


def enumerate_equilibria_1d(spec: GameSpec, lo: float, hi: float,
                            steps: int = 10000) -> Enumeration1D:
    """Scan + bisect the scalar stationarity residual r(y) = y + T g'(m_y, y) - x.

    Sign changes on the scan grid are refined by bisection to 1e-10 and
    deduplicated within 1e-8.  Tangential roots without a sign change are
    invisible to the scan; a root in the first or last scan cell sets the
    boundary warning.
    """
    if spec.initial.n != 1 or spec.initial.dim != 1:
        raise InvalidInputError("enumeration requires a single 1D atom")
    if not lo < hi:
        raise InvalidInputError("scan interval must satisfy lo < hi")
    x = float(spec.initial.points[0, 0])
    T = spec.horizon

    def r(y: float) -> float:
        m = EmpiricalMeasure(np.array([[y]]))
        return y + T * float(spec.coupling.grad_x(m, np.array([y]))[0]) - x

    grid = np.linspace(lo, hi, int(steps) + 1)
    vals = np.array([r(y) for y in grid])

    roots = []
    boundary = bool(abs(vals[0]) < 1e-12 or abs(vals[-1]) < 1e-12)
    for i in range(len(grid) - 1):
        a, b = grid[i], grid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0.0:
            for _ in range(200):
                mid = 0.5 * (a + b)
                fm = r(mid)
                if fm == 0.0 or (b - a) < 1e-10:
                    a = b = mid
                    break
                if fa * fm < 0.0:
                    b, fb = mid, fm
                else:
                    a, fa = mid, fm
            root = 0.5 * (a + b)
            roots.append(root)
            if i == 0 or i == len(grid) - 2:
                boundary = True
    if abs(vals[-1]) == 0.0:
        roots.append(grid[-1])
        boundary = True

    uniq = []
    for root in sorted(roots):
        if not uniq or abs(root - uniq[-1]) > 1e-8:
            uniq.append(root)
    uniq = np.asarray(uniq)
    potentials = np.array([reduced_potential(spec, [[y]]) for y in uniq])
    residuals = np.array([nash_residual(spec, [[y]]) for y in uniq])
    return Enumeration1D(uniq, potentials, residuals, boundary)
