"""Shared oracles and factories for the test suite.

Everything here is deliberately independent of the library's own fast
paths: brute-force permutation transport, projected-gradient simplex
minimization, and replicate-based mixtures serve as ground truth.
"""

import itertools
import math

import numpy as np

from mfglab.measures import _stable_sum


def brute_force_w2(mu, nu) -> float:
    """Exact W_2 by enumerating all permutation couplings (n <= 8)."""
    n = mu.n
    diff = mu.points[:, None, :] - nu.points[None, :, :]
    cost = np.einsum("ijk,ijk->ij", diff, diff)
    best = min(_stable_sum(cost[np.arange(n), list(p)])
               for p in itertools.permutations(range(n)))
    return math.sqrt(best / n)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = int(np.max(np.nonzero(u * np.arange(1, len(v) + 1) > (css - 1.0))[0]))
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def minimize_on_simplex(F_grad, n: int, lipschitz: float, iters: int = 4000):
    """Projected-gradient oracle for convex quadratics on the simplex."""
    a = np.full(n, 1.0 / n)
    for _ in range(iters):
        a_new = project_simplex(a - F_grad(a) / lipschitz)
        if float(np.max(np.abs(a_new - a))) < 1e-14:
            return a_new
        a = a_new
    return a


def random_convex_quadratic(rng, n: int):
    """Strongly convex quadratic F(a) = a'Qa/2 + b'a with its gradient."""
    A = rng.normal(0.0, 1.0, (n, n))
    Q = A.T @ A + 0.5 * np.eye(n)
    b = rng.normal(0.0, 1.0, n)

    def F(a):
        return 0.5 * float(a @ Q @ a) + float(b @ a)

    def grad(a):
        return Q @ a + b

    L = float(np.linalg.eigvalsh(Q)[-1])
    return F, grad, L
