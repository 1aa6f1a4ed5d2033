"""Slow, independent reference computations used to check the fast paths.

Nothing here shares code with the production solvers beyond the system
arrays themselves: objectives are evaluated straight from their defining
sums over points.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def inner_objective_direct(map_, mass, mu, rows, n_steps, f):
    """sum_g mu(g) ln( int g |f o alpha^n| dm / mu(g) ), zero-weight rows skipped."""
    npts = len(map_)
    total = 0.0
    for g in rows:
        w = sum(g[i] * mu[i] for i in range(npts))
        if w <= 1e-15:
            continue
        integral = 0.0
        for i in range(npts):
            j = i
            for _ in range(n_steps):
                j = map_[j]
            integral += g[i] * abs(f[j]) * mass[i]
        if integral <= 0:
            return -math.inf
        total += w * math.log(integral / w)
    return total


def _simplex_points(center, step, radius, dim):
    """Lattice points u (first dim-1 coordinates free) within radius steps of center."""
    ranges = [
        [c + k * step for k in range(-radius, radius + 1) if -1e-12 <= c + k * step <= 1 + 1e-12]
        for c in center[:-1]
    ]
    for free in itertools.product(*ranges):
        last = 1.0 - sum(free)
        if last >= -1e-12:
            yield tuple(max(v, 0.0) for v in free) + (max(last, 0.0),)


def grid_inner_sup(map_, mass, mu, rows, n_steps, final_step=1e-4):
    """Grid search of the inner sup over u = m h on the simplex, refined
    geometrically from step 1/100 down to ``final_step`` around the best point.

    Only sensible for up to three points (two free coordinates).
    """
    npts = len(map_)
    mass = np.asarray(mass, dtype=float)

    def value(u):
        f = np.asarray(u) / mass
        return inner_objective_direct(map_, mass, mu, rows, n_steps, f)

    if npts == 1:
        return value((1.0,))
    step = 0.01
    best_u, best_v = None, -math.inf
    for u in _simplex_points([0.0] * npts, step, int(round(1 / step)) + 1, npts):
        v = value(u)
        if v > best_v:
            best_u, best_v = u, v
    while step > final_step * 1.0001:
        step /= 10
        for u in _simplex_points(list(best_u), step, 20, npts):
            v = value(u)
            if v > best_v:
                best_u, best_v = u, v
    return best_v


def brute_force_norm(A, mass, samples=100_000, seed=0):
    """max of ||A f||_1 / ||f||_1 over random f (including the point masses)."""
    rng = np.random.default_rng(seed)
    n = len(mass)
    F = rng.standard_normal((samples, n))
    F = np.vstack([F, np.eye(n)])
    num = np.abs(F @ np.asarray(A).T) @ mass
    den = np.abs(F) @ mass
    return float(np.max(num / den))


def eigen_log_spectral_radius(map_, phi):
    n = len(map_)
    M = np.zeros((n, n))
    M[np.arange(n), map_] = np.exp(phi)
    return float(np.log(np.max(np.abs(np.linalg.eigvals(M)))))


def invariance_lp_vertices(map_, tol=1e-10):
    """Vertices of {p >= 0, sum p = 1, p = push-forward(p)} by support enumeration."""
    n = len(map_)
    push = np.zeros((n, n))
    push[np.asarray(map_), np.arange(n)] = 1.0
    A = np.vstack([push - np.eye(n), np.ones((1, n))])
    b = np.concatenate([np.zeros(n), [1.0]])
    out = []
    for size in range(1, n + 1):
        for support in itertools.combinations(range(n), size):
            cols = A[:, support]
            if np.linalg.matrix_rank(cols, tol=tol) < size:
                continue
            x, *_ = np.linalg.lstsq(cols, b, rcond=None)
            if np.max(np.abs(cols @ x - b)) > 1e-9 or np.any(x <= tol):
                continue
            p = np.zeros(n)
            p[list(support)] = x
            if not any(np.allclose(p, q, atol=1e-9) for q in out):
                out.append(p)
    return out


def bell_recursive(n):
    """B(n) = sum_k C(n-1, k) B(k)."""
    if n == 0:
        return 1
    return sum(math.comb(n - 1, k) * bell_recursive(k) for k in range(n))
