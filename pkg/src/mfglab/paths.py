"""Discrete path measures, path costs, and sampled equilibrium verification.

A path measure is a uniform collection of piecewise-linear curves sharing a
time grid on [0, T].  Straight-line lifts connect the path picture to the
reduced game: the lift of terminal points y has potential exactly equal to
the reduced potential, and by Jensen's inequality any other path measure
with the same endpoints costs at least as much.

:func:`verify_equilibrium_support` probes the Nash support condition by
sampling deviations of each atom and reporting cost margins.  Sampling can
certify a violation but never the universally quantified property; with no
negative margin the honest report is only "no violation found".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .couplings import Coupling
from .errors import InvalidInputError
from .measures import EmpiricalMeasure, _stable_sum


@dataclass(frozen=True, eq=False)
class PathAtom:
    """One piecewise-linear curve: knot times (K+1,) and knot points (K+1, d)."""

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p.reshape(-1, 1)
        if t.ndim != 1 or len(t) < 2 or p.shape[0] != len(t):
            raise InvalidInputError("times (K+1,) and points (K+1, d) must align")
        if not np.all(np.diff(t) > 0):
            raise InvalidInputError("knot times must be strictly increasing")
        if t[0] != 0.0:
            raise InvalidInputError("curves start at time 0")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
            raise InvalidInputError("knots must be finite")
        t = t.copy(); t.setflags(write=False)
        p = p.copy(); p.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def at(self, t: float) -> np.ndarray:
        """Linear interpolation of the curve at time t in [0, T]."""
        if not 0.0 <= t <= self.horizon:
            raise InvalidInputError(f"time {t} outside [0, {self.horizon}]")
        out = np.empty(self.dim)
        for k in range(self.dim):
            out[k] = np.interp(t, self.times, self.points[:, k])
        return out


@dataclass(frozen=True, eq=False)
class PathMeasure:
    """Uniformly weighted atoms sharing one time grid."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if not atoms:
            raise InvalidInputError("a path measure needs at least one atom")
        t0 = atoms[0].times
        d0 = atoms[0].dim
        for a in atoms[1:]:
            if a.dim != d0 or len(a.times) != len(t0) or not np.array_equal(a.times, t0):
                raise InvalidInputError("atoms must share the time grid and dimension")
        object.__setattr__(self, "atoms", atoms)

    @property
    def n(self) -> int:
        return len(self.atoms)

    @property
    def horizon(self) -> float:
        return self.atoms[0].horizon

    def to_csv(self, path) -> None:
        """CSV export with columns atom,knot,t,x_1..x_d."""
        import csv

        d = self.atoms[0].dim
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["atom", "knot", "t"] + [f"x_{k + 1}" for k in range(d)])
            for j, atom in enumerate(self.atoms):
                for k, (t, p) in enumerate(zip(atom.times, atom.points)):
                    writer.writerow([j, k, format(float(t), ".17g")]
                                    + [format(float(c), ".17g") for c in p])


def path_action(atom: PathAtom) -> float:
    """Kinetic action sum_k |dx_k|^2 / (2 dt_k) of a piecewise-linear curve."""
    dt = np.diff(atom.times)
    dx = np.diff(atom.points, axis=0)
    return _stable_sum(np.sum(dx * dx, axis=1) / (2.0 * dt))


def straight_line_lift(x, y, horizon: float, segments: int = 16) -> PathMeasure:
    """Straight lines from x_j to y_j sampled on a uniform grid.

    The action of atom j is |y_j - x_j|^2 / (2 T) independently of the
    number of segments.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if y.ndim == 1:
        y = y.reshape(-1, 1)
    if x.shape != y.shape:
        raise InvalidInputError("endpoint arrays must have matching shapes")
    if segments < 1:
        raise InvalidInputError("need at least one segment")
    times = np.linspace(0.0, horizon, segments + 1)
    fracs = times / horizon
    atoms = [PathAtom(times, xj[None, :] + fracs[:, None] * (yj - xj)[None, :])
             for xj, yj in zip(x, y)]
    return PathMeasure(tuple(atoms))


def marginal_at(eta: PathMeasure, t: float) -> EmpiricalMeasure:
    """Time-t marginal of the path measure as an empirical measure."""
    return EmpiricalMeasure(np.stack([a.at(t) for a in eta.atoms]))


def individual_cost(eta: PathMeasure, atom: PathAtom, coupling: Coupling,
                    horizon: float) -> float:
    """Action of one curve plus terminal coupling against the crowd flow eta."""
    if atom.dim != eta.atoms[0].dim:
        raise InvalidInputError("atom dimension differs from the path measure")
    m_T = marginal_at(eta, horizon)
    return path_action(atom) + coupling.derivative(m_T, atom.at(horizon))


def path_potential(eta: PathMeasure, coupling: Coupling, horizon: float) -> float:
    """Mean action plus potential of the terminal marginal."""
    mean_action = _stable_sum([path_action(a) for a in eta.atoms]) / eta.n
    return mean_action + coupling.value(marginal_at(eta, horizon))


@dataclass
class DeviationReport:
    """Sampled-deviation margins for each atom of a path measure.

    ``no_violation_found=True`` means no sampled deviation beat the played
    curve by more than ``tol``; it is evidence, not proof, of equilibrium.
    """

    atom_min_margins: np.ndarray
    min_margin: float
    trials: int
    tol: float
    no_violation_found: bool


def verify_equilibrium_support(eta: PathMeasure, coupling: Coupling, horizon: float,
                               trials: int = 500, amplitude: float = 0.5,
                               seed: int = 0, tol: float = 1e-9) -> DeviationReport:
    """Sample same-start deviations of every atom and report cost margins.

    Each trial draws an onset knot in the trailing half of the grid, a
    Gaussian direction, and a log-uniform scale up to ``amplitude``; the
    deviation ramps linearly from zero at the onset to the scaled direction
    at the terminal time (start fixed, terminal free).  Late onsets keep the
    action-to-displacement ratio of every sampled deviation high, which
    makes the sampler sensitive to first-order optimality violations while
    staying conservative at genuine stationary points.  Margins are
    J(eta, deviation) - J(eta, atom) with the crowd flow held fixed.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    if amplitude <= 0:
        raise InvalidInputError("amplitude must be positive")
    rng = np.random.default_rng(seed)
    m_T = marginal_at(eta, horizon)
    times = eta.atoms[0].times
    K = len(times) - 1
    d = eta.atoms[0].dim
    onset_lo = K // 2

    dt = np.diff(times)
    atom_margins = np.empty(eta.n)
    for j, atom in enumerate(eta.atoms):
        onsets = rng.integers(onset_lo, K, size=trials)
        scales = amplitude * 10.0 ** (-3.0 * rng.random(trials))
        directions = rng.standard_normal((trials, d))
        base_terminal = atom.points[-1]
        base_g = coupling.derivative(m_T, base_terminal)
        seg = np.diff(atom.points, axis=0)

        targets = scales[:, None] * directions                       # (trials, d)
        t_on = times[onsets]
        ramp = np.clip((times[None, :] - t_on[:, None])
                       / (times[-1] - t_on[:, None]), 0.0, None)      # (trials, K+1)
        bumps = ramp[:, :, None] * targets[:, None, :]
        dbump = np.diff(bumps, axis=1)                                # (trials, K, d)
        # exact action difference of the perturbed piecewise-linear curves
        cross = np.einsum("kd,ikd->ik", seg, dbump)
        sq = np.einsum("ikd,ikd->ik", dbump, dbump)
        action_diff = np.sum((2.0 * cross + sq) / (2.0 * dt)[None, :], axis=1)
        g_new = coupling.derivative_batch(m_T, base_terminal[None, :] + targets)
        margins = action_diff + (g_new - base_g)
        atom_margins[j] = float(np.min(margins))

    overall = float(np.min(atom_margins))
    return DeviationReport(
        atom_min_margins=atom_margins,
        min_margin=overall,
        trials=trials,
        tol=tol,
        no_violation_found=bool(overall >= -tol),
    )
