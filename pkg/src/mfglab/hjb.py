"""Scalar value functions, Burgers solvers, and the selection comparison.

For a single 1D player the value of the reduced game is the inf-convolution

    U(t, x) = min_y { (x - y)^2 / (2 t) + G(delta_y) },

whose spatial gradient (x - y*)/t is, wherever the minimizer is unique, the
entropy solution of the inviscid Burgers equation with initial datum equal
to the coupling gradient.  This module computes both sides of that identity
at desk scale: a scan-plus-golden-section Hopf-Lax evaluator, a Godunov
finite-volume solver (exact Riemann flux, so the entropy solution is what
it converges to), explicit viscous and biased-viscous regularizations, a
shock locator, and a tabulated comparison across all of them.

Conventions: cell-centered grid, constant (far-field) extension at the
boundaries, CFL-limited explicit time stepping with the last step shortened
to land exactly on the requested time.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .couplings import Coupling
from .errors import ConfigurationError, InvalidInputError
from .measures import EmpiricalMeasure
from .reduced_game import GameSpec, enumerate_equilibria_1d

_MAX_STEPS = 5_000_000
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centered grid on [x_lo, x_hi] with nx cells."""

    x_lo: float
    x_hi: float
    nx: int

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise InvalidInputError("grid needs x_lo < x_hi")
        if self.nx < 8:
            raise InvalidInputError("grid needs at least 8 cells")

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.nx

    @property
    def centers(self) -> np.ndarray:
        return self.x_lo + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def interfaces(self) -> np.ndarray:
        return self.x_lo + np.arange(self.nx + 1) * self.dx


@dataclass(eq=False)
class BurgersField:
    """Grid function u(t, .) produced by one of the solvers."""

    grid: Grid1D
    time: float
    values: np.ndarray

    def at(self, x) -> np.ndarray:
        """Linear interpolation of cell-center values."""
        return np.interp(np.asarray(x, dtype=float), self.grid.centers, self.values)

    def to_rows(self, scheme: str) -> list:
        return [(scheme, self.time, float(c), float(u))
                for c, u in zip(self.grid.centers, self.values)]


@dataclass
class ValueSample:
    """One Hopf-Lax evaluation: value, minimizer set, gradient if unique."""

    t: float
    x: float
    value: float
    minimizers: np.ndarray
    gradient: Optional[float]
    boundary_warning: bool = False


def _as_profile(u0, centers: np.ndarray) -> np.ndarray:
    vals = np.asarray(u0(centers) if callable(u0) else u0, dtype=float)
    if vals.shape != centers.shape:
        raise InvalidInputError("initial profile must match the cell count")
    if not np.all(np.isfinite(vals)):
        raise InvalidInputError("initial profile must be finite")
    return vals.copy()


def hopf_lax_value(coupling: Coupling, t: float, x: float,
                   lo: float, hi: float, steps: int = 2000,
                   multiplicity_gap: float = 1e-6) -> ValueSample:
    """Global minimization of (x-y)^2/(2t) + G(delta_y) by scan + refinement.

    Every local minimum bracketed by the scan grid is polished by
    golden-section search; minimizers within 1e-8 of the global value are
    all reported.  The gradient (x - y*)/t is emitted only when the
    second-best value cluster is more than ``multiplicity_gap`` away, which
    is how shock points are classified.  A global minimizer in the first or
    last scan cell sets the boundary warning.
    """
    if t <= 0:
        raise InvalidInputError("Hopf-Lax evaluation needs t > 0")
    if not lo < hi:
        raise InvalidInputError("scan interval must satisfy lo < hi")

    def objective(y: float) -> float:
        return (x - y) ** 2 / (2.0 * t) + coupling.value(EmpiricalMeasure([[y]]))

    grid = np.linspace(lo, hi, int(steps) + 1)
    vals = np.array([objective(y) for y in grid])

    def golden(a: float, b: float) -> float:
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc, fd = objective(c), objective(d)
        while (b - a) > 1e-12 * max(1.0, abs(a) + abs(b)):
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - _GOLDEN * (b - a)
                fc = objective(c)
            else:
                a, c, fc = c, d, fd
                d = a + _GOLDEN * (b - a)
                fd = objective(d)
        return 0.5 * (a + b)

    candidates = []
    interior = (vals[1:-1] <= vals[:-2]) & (vals[1:-1] <= vals[2:])
    for i in np.flatnonzero(interior) + 1:
        y = golden(grid[i - 1], grid[i + 1])
        candidates.append((y, objective(y), i))
    if vals[0] < vals[1]:
        candidates.append((grid[0], vals[0], 0))
    if vals[-1] < vals[-2]:
        candidates.append((grid[-1], vals[-1], len(grid) - 1))
    if not candidates:  # flat scan: treat every node as a candidate
        candidates = [(grid[i], vals[i], i) for i in range(len(grid))]

    best = min(c[1] for c in candidates)
    keep = sorted((y, v, i) for y, v, i in candidates if v <= best + 1e-8)
    minimizers = []
    for y, v, i in keep:
        if not minimizers or abs(y - minimizers[-1]) > 1e-8:
            minimizers.append(y)
    boundary = any(i <= 1 or i >= len(grid) - 2 for _, _, i in keep)
    rest = [v for y, v, i in candidates if all(abs(y - m) > 1e-8 for m in minimizers)]
    gap_ok = (not rest) or (min(rest) - best > multiplicity_gap)
    unique = len(minimizers) == 1 and gap_ok
    gradient = (x - minimizers[0]) / t if unique else None
    return ValueSample(t=t, x=x, value=best, minimizers=np.asarray(minimizers),
                       gradient=gradient, boundary_warning=boundary)


def _godunov_flux(ul: np.ndarray, ur: np.ndarray) -> np.ndarray:
    """Exact Riemann (Godunov) flux for f(u) = u^2/2, transonic case included."""
    fl = 0.5 * ul * ul
    fr = 0.5 * ur * ur
    rarefaction = np.where((ul <= 0.0) & (ur >= 0.0), 0.0, np.minimum(fl, fr))
    return np.where(ul <= ur, rarefaction, np.maximum(fl, fr))


def _check_boundary_touch(u: np.ndarray, u0: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(u0))))
    if (abs(u[0] - u0[0]) > 1e-10 * scale) or (abs(u[-1] - u0[-1]) > 1e-10 * scale):
        warnings.warn("waves reached the domain boundary; enlarge the grid",
                      RuntimeWarning, stacklevel=3)


def godunov_burgers(grid: Grid1D, u0, t_final: float, cfl: float = 0.5) -> BurgersField:
    """First-order finite-volume entropy solver for u_t + (u^2/2)_x = 0.

    ``u0`` is either a callable evaluated on the cell centers or an array of
    cell values.  Boundaries are constant-extended; choose the domain so no
    wave reaches them (a runtime warning fires otherwise).
    """
    if not 0.0 < cfl <= 0.9:
        raise InvalidInputError("cfl must lie in (0, 0.9]")
    if t_final < 0:
        raise InvalidInputError("t_final must be nonnegative")
    u = _as_profile(u0, grid.centers)
    u_init = u.copy()
    dx = grid.dx
    t = 0.0
    steps = 0
    while t < t_final:
        speed = float(np.max(np.abs(u)))
        dt = t_final - t if speed == 0.0 else min(cfl * dx / speed, t_final - t)
        ue = np.concatenate([u[:1], u, u[-1:]])
        flux = _godunov_flux(ue[:-1], ue[1:])
        u = u - (dt / dx) * (flux[1:] - flux[:-1])
        t += dt
        steps += 1
        if steps > _MAX_STEPS:
            raise ConfigurationError("time step collapsed; check grid and datum")
    _check_boundary_touch(u, u_init)
    return BurgersField(grid=grid, time=t_final, values=u)


def _parabolic_burgers(grid: Grid1D, u0, t_final: float, eps: float,
                       theta: Optional[Callable[[float], float]],
                       cfl: float) -> BurgersField:
    if eps <= 0:
        raise InvalidInputError("eps must be positive")
    if not 0.0 < cfl <= 0.9:
        raise InvalidInputError("cfl must lie in (0, 0.9]")
    u = _as_profile(u0, grid.centers)
    u_init = u.copy()
    dx = grid.dx
    diff_dt = 0.4 * dx * dx / eps
    if t_final / diff_dt > _MAX_STEPS:
        raise ConfigurationError(
            f"eps={eps} needs more than {_MAX_STEPS} steps on this grid")
    t = 0.0
    steps = 0
    while t < t_final:
        speed = float(np.max(np.abs(u)))
        dt = diff_dt if speed == 0.0 else min(cfl * dx / speed, diff_dt)
        # joint monotonicity cap: convective and diffusive limits alone admit
        # oscillatory regimes when eps is close to 0.8*|u|*dx
        dt = min(dt, 0.9 / (speed / dx + 2.0 * eps / (dx * dx)), t_final - t)
        ue = np.concatenate([u[:1], u, u[-1:]])
        flux = _godunov_flux(ue[:-1], ue[1:])
        lap = ue[2:] - 2.0 * u + ue[:-2]
        new_u = u - (dt / dx) * (flux[1:] - flux[:-1]) + (eps * dt / (dx * dx)) * lap
        if theta is not None:
            slope = (ue[2:] - ue[:-2]) / (2.0 * dx)
            new_u = new_u + dt * eps * float(theta(t)) * slope * slope
        u = new_u
        t += dt
        steps += 1
        if steps > _MAX_STEPS:
            raise ConfigurationError("time step collapsed; check eps and grid")
    _check_boundary_touch(u, u_init)
    return BurgersField(grid=grid, time=t_final, values=u)


def viscous_burgers(grid: Grid1D, u0, t_final: float, eps: float,
                    cfl: float = 0.5) -> BurgersField:
    """Godunov convection plus explicit centered diffusion eps * u_xx."""
    return _parabolic_burgers(grid, u0, t_final, eps, None, cfl)


def biased_viscous_burgers(grid: Grid1D, u0, t_final: float, eps: float,
                           theta: Callable[[float], float],
                           cfl: float = 0.5) -> BurgersField:
    """Viscous solver with the extra source eps * theta(t) * (u_x)^2.

    With theta identically zero the arithmetic path matches
    :func:`viscous_burgers` step for step.  Nonzero theta biases which jump
    the vanishing-viscosity limit selects; direction and size depend on
    theta and are reported, not asserted.
    """
    return _parabolic_burgers(grid, u0, t_final, eps, theta, cfl)


def detect_shock(fld: BurgersField, jump_threshold: float = 0.25) -> list:
    """Interface positions where the field jumps by ``jump_threshold`` of its range.

    The jump at an interface is measured over a three-cell window so that a
    discontinuity smeared by the first-order scheme still registers its full
    strength; a resolved smooth profile varies by O(dx) per window and stays
    below any fixed threshold.  Flagged interfaces are clustered (gaps of up
    to two cells join a cluster) and each cluster reports its steepest
    single interface.
    """
    if jump_threshold <= 0:
        raise InvalidInputError("jump_threshold must be positive")
    u = fld.values
    scale = float(np.max(u) - np.min(u))
    if scale == 0.0:
        return []
    jumps = np.abs(np.diff(u))
    left = np.maximum(np.arange(len(jumps)) - 1, 0)
    right = np.minimum(np.arange(len(jumps)) + 2, len(u) - 1)
    window = np.abs(u[right] - u[left])
    flagged = np.flatnonzero(window > jump_threshold * scale)
    if flagged.size == 0:
        return []
    interfaces = fld.grid.interfaces[1:-1]  # interface i sits between cells i, i+1
    positions = []
    start = prev = flagged[0]
    for i in list(flagged[1:]) + [None]:
        if i is not None and i - prev <= 2:
            prev = i
            continue
        cluster = np.arange(start, prev + 1)
        steepest = cluster[np.argmax(jumps[cluster])]
        positions.append(float(interfaces[steepest]))
        if i is not None:
            start = prev = i
    return positions


def characteristics(u0: Callable[[float], float], y_samples, t: float):
    """Forward characteristic fan (y, y + t*u0(y)) with a crossing flag.

    The flag is set when the sample map y -> x fails to be nondecreasing,
    i.e. characteristics emitted from the sampled points have crossed by
    time t.
    """
    if t < 0:
        raise InvalidInputError("t must be nonnegative")
    ys = np.asarray(y_samples, dtype=float)
    xs = np.array([y + t * float(u0(y)) for y in ys])
    order = np.argsort(ys)
    crossing = bool(np.any(np.diff(xs[order]) < -1e-14))
    return list(zip(ys.tolist(), xs.tolist())), crossing


@dataclass
class SelectionRow:
    """One x-slice of the selection comparison table."""

    x: float
    hl_value: float
    hl_grad: Optional[float]
    godunov_u: float
    viscous_u: dict
    equilibria: np.ndarray
    selected_y: float
    selected_velocity: float


def selection_compare(coupling: Coupling, t: float, x_values, grid: Grid1D,
                      eps_list: Sequence[float] = (), cfl: float = 0.5,
                      scan_steps: int = 2000) -> list:
    """Hopf-Lax gradient vs Godunov vs viscous profiles vs enumerated equilibria.

    For each x: the Hopf-Lax value and (if unique) gradient, the Godunov and
    viscous solutions interpolated at x, all enumerated equilibria of the
    singleton game, and the potential-selected equilibrium mapped to the
    velocity (x - y*) / t.
    """
    x_values = np.asarray(x_values, dtype=float)
    centers = grid.centers

    def u0(xx):
        xx = np.atleast_1d(np.asarray(xx, dtype=float))
        out = np.array([float(coupling.grad_x(EmpiricalMeasure([[v]]), np.array([v]))[0])
                        for v in xx])
        return out if out.size > 1 else out[0]

    god = godunov_burgers(grid, u0, t, cfl)
    visc = {float(e): viscous_burgers(grid, u0, t, float(e), cfl) for e in eps_list}

    speed = max(1.0, float(np.max(np.abs(god.values))))
    lo = float(min(x_values.min(), grid.x_lo) - t * speed - 1.0)
    hi = float(max(x_values.max(), grid.x_hi) + 1.0)

    rows = []
    for x in x_values:
        sample = hopf_lax_value(coupling, t, float(x), lo, hi, scan_steps)
        spec = GameSpec(horizon=t, initial=EmpiricalMeasure([[float(x)]]),
                        coupling=coupling)
        enum = enumerate_equilibria_1d(spec, lo, hi, scan_steps)
        sel = float(enum.roots[enum.selected_index()]) if enum.roots.size else float(x)
        rows.append(SelectionRow(
            x=float(x),
            hl_value=sample.value,
            hl_grad=sample.gradient,
            godunov_u=float(god.at(x)),
            viscous_u={e: float(f.at(x)) for e, f in visc.items()},
            equilibria=enum.roots,
            selected_y=sel,
            selected_velocity=(float(x) - sel) / t,
        ))
    return rows


def selection_switch_estimate(coupling: Coupling, t: float, lo: float, hi: float,
                              tol: float = 1e-9) -> Optional[float]:
    """Bisection for the x where the stay and far branches swap potential order.

    Compares the potential of the terminal choices y = x and y = x - t for a
    singleton initial mass at x; returns the sign change of the difference
    inside [lo, hi], or None when there is no bracketing interval (single
    equilibrium regime).
    """

    def branch_gap(x: float) -> float:
        phi = lambda y: coupling.value(EmpiricalMeasure([[y]]))
        stay = phi(x)
        far = t / 2.0 + phi(x - t)
        return stay - far

    a, b = float(lo), float(hi)
    fa, fb = branch_gap(a), branch_gap(b)
    if not np.isfinite(fa) or not np.isfinite(fb) or fa * fb > 0:
        return None
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = branch_gap(mid)
        if fm == 0.0 or (b - a) < tol:
            return mid
        if fa * fm < 0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)
