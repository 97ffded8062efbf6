"""Coupling potentials on empirical measures and their structure checkers.

A :class:`Coupling` bundles a scalar potential ``value(m)`` with its linear
derivative ``derivative(m, x)`` and the spatial gradient ``grad_x(m, x)`` of
that derivative.  The built-in constructors cover the cases the solvers and
the selection experiments need:

* :func:`linear_coupling` — potential is the mean of a fixed function, so
  the derivative does not depend on the measure at all;
* :func:`interaction_coupling` — pairwise even-kernel energy;
* :func:`quadratic_interaction` — closed-form quadratic kernel (fast path);
* :func:`selection_example` — the piecewise ramp/well/plateau potential
  whose reduced game has three equilibria after the shock time;
* :func:`second_moment_tilt` — a deliberately non-potentializable field
  used as a counterexample for the symmetry checker.

The check_* functions are samplers and finite-difference probes: they can
certify a violation (monotonicity, symmetry, derivative consistency) on
concrete inputs but never prove a global property.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidInputError
from .measures import EmpiricalMeasure, _stable_sum

# Evaluation on a weighted point cloud: (points (m, d), weights (m,), x (d,)) -> float.
# Built-ins provide this hook so mixture quadratures can use irrational weights.
WeightedDerivative = Callable[[np.ndarray, np.ndarray, np.ndarray], float]


@dataclass(frozen=True, eq=False)
class Coupling:
    """A potential on empirical measures together with its derivatives.

    ``derivative`` must be a linear derivative of ``value`` (checkable via
    :func:`check_linear_derivative`) and ``grad_x`` the spatial gradient of
    ``derivative`` (checkable against finite differences).  Couplings are
    immutable and all callables must be pure, so instances are safe to
    share between threads.
    """

    label: str
    value: Callable[[EmpiricalMeasure], float]
    derivative: Callable[[EmpiricalMeasure, np.ndarray], float]
    grad_x: Callable[[EmpiricalMeasure, np.ndarray], np.ndarray]
    derivative_weighted: Optional[WeightedDerivative] = None
    hint_inits: Optional[Callable[[np.ndarray, float], list]] = None
    # optional batch evaluation of grad_x at every point of the measure
    # itself, shape (n, d); must agree with per-point grad_x calls
    grad_x_all: Optional[Callable[[EmpiricalMeasure], np.ndarray]] = None
    # optional batch evaluation of derivative at k query points, shape (k,)
    derivative_many: Optional[Callable[[EmpiricalMeasure, np.ndarray], np.ndarray]] = None

    def field_at_points(self, m: EmpiricalMeasure) -> np.ndarray:
        """grad_x evaluated at every point of m, shape (n, d)."""
        if self.grad_x_all is not None:
            return np.asarray(self.grad_x_all(m), dtype=float)
        return np.stack([self.grad_x(m, p) for p in m.points])

    def derivative_batch(self, m: EmpiricalMeasure, xs: np.ndarray) -> np.ndarray:
        """derivative(m, x) for each row x of xs, shape (k,)."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if self.derivative_many is not None:
            return np.asarray(self.derivative_many(m, xs), dtype=float)
        return np.array([self.derivative(m, x) for x in xs])

    def with_constant(self, c: float) -> "Coupling":
        """Same coupling with ``c`` added to the potential (derivatives unchanged)."""
        base_value = self.value
        return replace(self, label=f"{self.label}+const",
                       value=lambda m: base_value(m) + c)


# ---------------------------------------------------------------------------
# Built-in constructors
# ---------------------------------------------------------------------------

def linear_coupling(phi, dphi, label: str = "linear",
                    hint_inits=None) -> Coupling:
    """Potential ``mean of phi`` with measure-independent derivative.

    ``phi`` maps a point (d,) to a float, ``dphi`` to its gradient (d,).
    Both should accept numpy arrays.
    """

    def value(m: EmpiricalMeasure) -> float:
        return _stable_sum([float(phi(p)) for p in m.points]) / m.n

    def derivative(m: EmpiricalMeasure, x) -> float:
        return float(phi(np.asarray(x, dtype=float)))

    def grad_x(m: EmpiricalMeasure, x) -> np.ndarray:
        return np.atleast_1d(np.asarray(dphi(np.asarray(x, dtype=float)), dtype=float))

    def derivative_weighted(points, weights, x) -> float:
        return float(phi(np.asarray(x, dtype=float)))

    def grad_x_all(m: EmpiricalMeasure) -> np.ndarray:
        return np.stack([np.atleast_1d(np.asarray(dphi(p), dtype=float))
                         for p in m.points])

    return Coupling(label, value, derivative, grad_x, derivative_weighted,
                    hint_inits, grad_x_all)


def interaction_coupling(psi, dpsi, label: str = "interaction") -> Coupling:
    """Pairwise energy ``value(m) = (1/2) mean_{x,y} psi(x - y)``.

    ``psi`` must be an even scalar kernel on difference vectors and ``dpsi``
    its gradient.  The linear derivative is ``mean_y psi(x - y)`` and its
    spatial gradient ``mean_y dpsi(x - y)``.
    """

    def value(m: EmpiricalMeasure) -> float:
        diffs = m.points[:, None, :] - m.points[None, :, :]
        vals = [float(psi(z)) for z in diffs.reshape(-1, m.dim)]
        return 0.5 * _stable_sum(vals) / (m.n * m.n)

    def derivative(m: EmpiricalMeasure, x) -> float:
        x = np.asarray(x, dtype=float)
        return _stable_sum([float(psi(x - y)) for y in m.points]) / m.n

    def grad_x(m: EmpiricalMeasure, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        comps = np.array([np.atleast_1d(dpsi(x - y)) for y in m.points], dtype=float)
        return np.array([_stable_sum(comps[:, k]) for k in range(comps.shape[1])]) / m.n

    def derivative_weighted(points, weights, x) -> float:
        x = np.asarray(x, dtype=float)
        return _stable_sum([w * float(psi(x - y)) for y, w in zip(points, weights)])

    def grad_x_all(m: EmpiricalMeasure) -> np.ndarray:
        return np.stack([grad_x(m, p) for p in m.points])

    return Coupling(label, value, derivative, grad_x, derivative_weighted,
                    grad_x_all=grad_x_all)


def quadratic_interaction(weight: float = 1.0, label: str = "quadratic_interaction") -> Coupling:
    """Interaction coupling with kernel ``psi(z) = weight*|z|^2/2``, closed form.

    value(m) = (weight/2) * (second moment - |mean|^2); the linear derivative
    ``mean_y psi(x-y)`` has spatial gradient ``weight * (x - mean(m))``.
    Displacement monotone for weight >= 0 (the pairing reduces to a variance).
    """
    a = float(weight)

    def _mean(points: np.ndarray) -> np.ndarray:
        return np.array([_stable_sum(points[:, k]) for k in range(points.shape[1])]) / len(points)

    def value(m: EmpiricalMeasure) -> float:
        mean = _mean(m.points)
        m2 = _stable_sum(m.points**2) / m.n
        return 0.5 * a * (m2 - float(mean @ mean))

    def derivative(m: EmpiricalMeasure, x) -> float:
        # mean_y psi(x - y) = (a/2) (|x|^2 - 2 x.mean + second moment)
        x = np.asarray(x, dtype=float)
        mean = _mean(m.points)
        m2 = _stable_sum(m.points**2) / m.n
        return 0.5 * a * (float(x @ x) - 2.0 * float(x @ mean) + m2)

    def grad_x(m: EmpiricalMeasure, x) -> np.ndarray:
        return a * (np.asarray(x, dtype=float) - _mean(m.points))

    def derivative_weighted(points, weights, x) -> float:
        x = np.asarray(x, dtype=float)
        return 0.5 * a * _stable_sum([w * ((x - y) @ (x - y)) for y, w in zip(points, weights)])

    def grad_x_all(m: EmpiricalMeasure) -> np.ndarray:
        return a * (m.points - _mean(m.points))

    def derivative_many(m: EmpiricalMeasure, xs: np.ndarray) -> np.ndarray:
        mean = _mean(m.points)
        m2 = _stable_sum(m.points**2) / m.n
        return 0.5 * a * (np.einsum("id,id->i", xs, xs) - 2.0 * (xs @ mean) + m2)

    return Coupling(label, value, derivative, grad_x, derivative_weighted,
                    grad_x_all=grad_x_all, derivative_many=derivative_many)


# Piecewise terminal cost for the selection experiments.  The gradient is 1
# on the left ramp, -x in the well [-1, 0], and 0 on the right plateau; the
# antiderivative is normalized so that phi(0) = 0 (equilibria and minimizers
# are invariant under additive constants).
def selection_phi(x):
    x = np.asarray(x, dtype=float)
    return np.where(x <= -1.0, x + 0.5, np.where(x >= 0.0, 0.0, -0.5 * x * x))


def selection_phi_prime(x):
    x = np.asarray(x, dtype=float)
    return np.where(x <= -1.0, 1.0, np.where(x >= 0.0, 0.0, -x))


def selection_example(label: str = "selection_example") -> Coupling:
    """1D coupling with three equilibria past the shock time.

    For horizon T > 1 and initial Dirac at x in (0, T) the stationarity
    equation has three roots; the potential picks x - T left of the switch
    point (T-1)/2 and x to its right.
    """

    def phi(p):
        return float(selection_phi(np.asarray(p, dtype=float).ravel()[0]))

    def dphi(p):
        return np.array([float(selection_phi_prime(np.asarray(p, dtype=float).ravel()[0]))])

    def hints(x: np.ndarray, horizon: float) -> list:
        out = [x - horizon]
        if abs(1.0 - horizon) > 1e-9:
            out.append(x / (1.0 - horizon))
        return out

    return linear_coupling(phi, dphi, label=label, hint_inits=hints)


def quadratic_well(center: float = 0.0, stiffness: float = 1.0,
                   label: str = "quadratic_well") -> Coupling:
    """Convex measure-independent coupling ``phi(x) = stiffness*|x-center|^2/2``."""
    c, k = float(center), float(stiffness)

    def phi(p):
        z = np.asarray(p, dtype=float) - c
        return 0.5 * k * float(z @ z)

    def dphi(p):
        return k * (np.asarray(p, dtype=float) - c)

    return linear_coupling(phi, dphi, label=label)


def second_moment_tilt(label: str = "second_moment_tilt") -> Coupling:
    """Counterexample field f(m, x) = sum(x) * second_moment(m).

    The stacked equilibrium field has Jacobian rows 2*x_i/n that are not
    symmetric, so no potential exists; ``value`` is a placeholder functional
    whose linear derivative deliberately differs from ``derivative``.  Use it
    with the checkers, not with the solvers.
    """

    def m2(points: np.ndarray) -> float:
        return _stable_sum(points**2) / len(points)

    def value(m: EmpiricalMeasure) -> float:
        s_mean = _stable_sum(m.points) / m.n
        return s_mean * m2(m.points)

    def derivative(m: EmpiricalMeasure, x) -> float:
        return float(np.sum(np.asarray(x, dtype=float))) * m2(m.points)

    def grad_x(m: EmpiricalMeasure, x) -> np.ndarray:
        return m2(m.points) * np.ones(m.dim)

    def derivative_weighted(points, weights, x) -> float:
        wm2 = _stable_sum([w * float(p @ p) for p, w in zip(points, weights)])
        return float(np.sum(np.asarray(x, dtype=float))) * wm2

    def grad_x_all(m: EmpiricalMeasure) -> np.ndarray:
        return np.tile(m2(m.points) * np.ones(m.dim), (m.n, 1))

    return Coupling(label, value, derivative, grad_x, derivative_weighted,
                    grad_x_all=grad_x_all)


# ---------------------------------------------------------------------------
# Structure checkers
# ---------------------------------------------------------------------------

def check_linear_derivative(coupling: Coupling, m0: EmpiricalMeasure,
                            m1: EmpiricalMeasure, quad_order: int = 8) -> float:
    """Residual of the mixture identity linking ``value`` and ``derivative``.

    Integrates the derivative along the mixture path (1-l)*m0 + l*m1 and
    returns |value(m1) - value(m0) - integral|.  With the weighted hook the
    integral uses Gauss-Legendre nodes (order ``quad_order``, exact for
    polynomial couplings of low degree); without it, a composite Simpson rule
    on rational nodes realizes each mixture exactly as a replicated uniform
    empirical measure.
    """
    if m0.dim != m1.dim:
        raise InvalidInputError("mixture requires equal dimensions")
    dv = coupling.value(m1) - coupling.value(m0)
    if coupling.derivative_weighted is not None:
        nodes, weights = np.polynomial.legendre.leggauss(int(quad_order))
        lams = 0.5 * (nodes + 1.0)
        ws = 0.5 * weights
        union = np.vstack([m0.points, m1.points])

        def integrand(lam: float) -> float:
            wts = np.concatenate([np.full(m0.n, (1.0 - lam) / m0.n),
                                  np.full(m1.n, lam / m1.n)])
            on_m1 = _stable_sum([coupling.derivative_weighted(union, wts, x)
                                 for x in m1.points]) / m1.n
            on_m0 = _stable_sum([coupling.derivative_weighted(union, wts, x)
                                 for x in m0.points]) / m0.n
            return on_m1 - on_m0

        integral = _stable_sum([w * integrand(l) for l, w in zip(lams, ws)])
    else:
        k = max(2, int(quad_order))
        k += k % 2  # composite Simpson needs an even subinterval count
        simpson = np.ones(k + 1)
        simpson[1:-1:2] = 4.0
        simpson[2:-1:2] = 2.0
        simpson /= 3.0 * k

        def mixture(i: int) -> EmpiricalMeasure:
            # lambda = i/k realized exactly by replication
            rep0 = np.repeat(m0.points, (k - i) * m1.n, axis=0) if i < k else None
            rep1 = np.repeat(m1.points, i * m0.n, axis=0) if i > 0 else None
            parts = [p for p in (rep0, rep1) if p is not None]
            return EmpiricalMeasure(np.vstack(parts))

        def integrand_i(i: int) -> float:
            mix = mixture(i)
            on_m1 = _stable_sum([coupling.derivative(mix, x) for x in m1.points]) / m1.n
            on_m0 = _stable_sum([coupling.derivative(mix, x) for x in m0.points]) / m0.n
            return on_m1 - on_m0

        integral = _stable_sum([simpson[i] * integrand_i(i) for i in range(k + 1)])
    return abs(dv - integral)


def check_finite_dim_gradient(coupling: Coupling, x: np.ndarray, h: float = 1e-5) -> float:
    """Worst relative error of d/dx_j value(m_x) against grad_x/n.

    The gradient of the restriction of the potential to n-point clouds is
    (1/n) times the spatial gradient of the derivative evaluated on the
    cloud; central differences of the restriction probe that identity.
    """
    if h <= 0:
        raise InvalidInputError("h must be positive")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, d = x.shape
    m = EmpiricalMeasure(x)
    worst = 0.0
    for j in range(n):
        target = coupling.grad_x(m, x[j]) / n
        for b in range(d):
            xp = x.copy()
            xm = x.copy()
            xp[j, b] += h
            xm[j, b] -= h
            fd = (coupling.value(EmpiricalMeasure(xp))
                  - coupling.value(EmpiricalMeasure(xm))) / (2.0 * h)
            err = abs(fd - target[b]) / max(1.0, abs(target[b]))
            worst = max(worst, err)
    return worst


def sample_point_pairs(n: int, d: int, count: int, seed: int = 0,
                       scale: float = 1.0) -> list:
    """Gaussian (X, Y) cloud pairs for the monotonicity samplers."""
    rng = np.random.default_rng(seed)
    return [(scale * rng.standard_normal((n, d)), scale * rng.standard_normal((n, d)))
            for _ in range(count)]


def check_displacement_monotone(coupling: Coupling, sample_pairs: Sequence) -> float:
    """Smallest displacement pairing over the given (X, Y) cloud pairs.

    Returns min over pairs of (1/n) sum_j (grad_x(m_X, x_j) - grad_x(m_Y, y_j))
    . (x_j - y_j); a value below -tol certifies a violation, a nonnegative
    value only means no violation was found among the samples.
    """
    worst = math.inf
    for X, Y in sample_pairs:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape != Y.shape:
            raise InvalidInputError("paired clouds must share n and d")
        mX, mY = EmpiricalMeasure(X), EmpiricalMeasure(Y)
        terms = [float((coupling.grad_x(mX, x) - coupling.grad_x(mY, y)) @ (x - y))
                 for x, y in zip(X, Y)]
        worst = min(worst, _stable_sum(terms) / X.shape[0])
    return worst


def check_ll_monotone(coupling: Coupling, m1: EmpiricalMeasure,
                      m2: EmpiricalMeasure) -> float:
    """Lasry-Lions pairing of the derivative difference against m1 - m2."""
    if m1.dim != m2.dim:
        raise InvalidInputError("measures must share dimension")
    if m1.n != m2.n:
        raise InvalidInputError("signed difference needs equal point counts")

    def diff_at(x) -> float:
        return coupling.derivative(m1, x) - coupling.derivative(m2, x)

    on_m1 = _stable_sum([diff_at(x) for x in m1.points]) / m1.n
    on_m2 = _stable_sum([diff_at(x) for x in m2.points]) / m2.n
    return on_m1 - on_m2


def check_potentializable(field: Callable[[EmpiricalMeasure, int], np.ndarray],
                          x: np.ndarray, h: float = 1e-5) -> float:
    """Max asymmetry of the finite-difference Jacobian of a stacked field.

    ``field(m, j)`` is the per-atom equilibrium field on the cloud m; a
    potential exists only if the nd x nd Jacobian of the stacked map is
    symmetric.  Returns max |J_ab - J_ba|.
    """
    if h <= 0:
        raise InvalidInputError("h must be positive")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, d = x.shape

    def stacked(pts: np.ndarray) -> np.ndarray:
        m = EmpiricalMeasure(pts)
        return np.concatenate([np.atleast_1d(field(m, j)) for j in range(n)])

    size = n * d
    jac = np.empty((size, size))
    for i in range(n):
        for b in range(d):
            xp = x.copy()
            xm = x.copy()
            xp[i, b] += h
            xm[i, b] -= h
            jac[:, i * d + b] = (stacked(xp) - stacked(xm)) / (2.0 * h)
    return float(np.max(np.abs(jac - jac.T)))


def equilibrium_field(coupling: Coupling) -> Callable[[EmpiricalMeasure, int], np.ndarray]:
    """The stacked field x -> grad_x derivative(m_x, x_j) used by the symmetry check."""

    def field(m: EmpiricalMeasure, j: int) -> np.ndarray:
        return coupling.grad_x(m, m.points[j])

    return field


@dataclass
class SimplexReport:
    """Support margins of a candidate simplex equilibrium."""

    support: np.ndarray        # indices j with a_j > tol
    margins: np.ndarray        # min_i (f_i - f_j) for each supported j
    is_equilibrium: bool
    potential_value: float


def simplex_minimizer_is_equilibrium(F, f, a, tol: float = 1e-9) -> SimplexReport:
    """Support-margin Nash test for a finite potential game on the simplex.

    A point is an equilibrium when every strategy in its support has minimal
    cost: for each j with a_j > tol the margin min_i (f_i(a) - f_j(a)) must
    be >= -tol.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1:
        raise InvalidInputError("simplex point must be a vector")
    if np.any(a < -1e-12) or abs(_stable_sum(a) - 1.0) > 1e-12:
        raise InvalidInputError("point is not on the unit simplex")
    grad = np.asarray(f(a), dtype=float)
    support = np.flatnonzero(a > tol)
    best = float(np.min(grad))
    margins = best - grad[support]
    return SimplexReport(
        support=support,
        margins=margins,
        is_equilibrium=bool(np.all(margins >= -tol)),
        potential_value=float(F(a)),
    )
