"""Probability measures on a finite system.

With all point masses positive, every measure absolutely continuous with
respect to m is just a probability vector, so measures are plain arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynsys import FiniteDynSystem, ValidationError, cycle_decomposition

SUM_TOL = 1e-12


def check_measure(sys: FiniteDynSystem, p, tol: float = SUM_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape != (sys.n,):
        raise ValidationError(f"measure has length {p.shape[0]}, expected {sys.n}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValidationError("measure entries must be finite and nonnegative")
    if abs(np.sum(p) - 1.0) > tol:
        raise ValidationError(f"measure sums to {np.sum(p)!r}, not 1")
    return p


def push_forward(sys: FiniteDynSystem, p, n_steps: int = 1) -> np.ndarray:
    """Image measure of p under alpha^n_steps."""
    p = np.asarray(p, dtype=float)
    pos = np.arange(sys.n)
    for _ in range(n_steps):
        pos = sys.map[pos]
    return np.bincount(pos, weights=p, minlength=sys.n)


def is_invariant(sys: FiniteDynSystem, mu, tol: float = 1e-12) -> bool:
    mu = np.asarray(mu, dtype=float)
    return bool(np.max(np.abs(mu - push_forward(sys, mu))) <= tol)


@dataclass(frozen=True)
class InvariantPolytope:
    extreme_points: list
    cycles: list

    def combine(self, weights) -> np.ndarray:
        """Convex combination of the extreme points."""
        weights = np.asarray(weights, dtype=float)
        return weights @ np.array(self.extreme_points)


def invariant_polytope(sys: FiniteDynSystem) -> InvariantPolytope:
    """Uniform measures on the periodic orbits; their hull is M_alpha."""
    cycles = cycle_decomposition(sys).cycles
    points = []
    for cyc in cycles:
        p = np.zeros(sys.n)
        p[cyc] = 1.0 / len(cyc)
        points.append(p)
    return InvariantPolytope(extreme_points=points, cycles=cycles)


@dataclass(frozen=True)
class WeakStarNeighborhood:
    """{nu : |nu(f_i) - center(f_i)| < epsilon for every test function f_i}."""

    center: np.ndarray
    test_functions: list = field(default_factory=list)
    epsilon: float = 0.1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def contains(self, nu) -> bool:
        return neighborhood_contains(self, nu)

    def contains_rows(self, nus) -> np.ndarray:
        """Vectorised membership for a stack of measures (one per row)."""
        nus = np.atleast_2d(nus)
        if not self.test_functions:
            return np.ones(nus.shape[0], dtype=bool)
        F = np.array(self.test_functions, dtype=float)
        dev = np.abs(nus @ F.T - F @ self.center)
        return np.all(dev < self.epsilon, axis=1)


def neighborhood_contains(O: WeakStarNeighborhood, nu) -> bool:
    nu = np.asarray(nu, dtype=float)
    if len(nu) != len(O.center):
        raise ValueError("measure and neighborhood centre have different lengths")
    for f in O.test_functions:
        f = np.asarray(f, dtype=float)
        if not abs(nu @ f - O.center @ f) < O.epsilon:
            return False
    return True


def sample_measures(sys: FiniteDynSystem, count: int, seed: int) -> list:
    """``count`` flat-Dirichlet draws, then every vertex delta_i, then the
    invariant extreme points.  Deterministic in ``seed``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    out = list(rng.dirichlet(np.ones(sys.n), size=count))
    out.extend(np.eye(sys.n))
    out.extend(invariant_polytope(sys).extreme_points)
    return out
