"""Finite measured dynamical systems.

A system is a self-map ``alpha`` of the point set ``{0, ..., n-1}`` together
with strictly positive point masses.  Everything downstream (operators,
measures, t-entropy) is built from the arrays held here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ValidationError(ValueError):
    """Raised when a system, vector or measure violates its invariants."""


@dataclass(frozen=True)
class FiniteDynSystem:
    n: int
    map: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.map)
        if m.dtype.kind == "f":
            if not np.all(np.isfinite(m)) or np.any(m != np.round(m)):
                raise ValidationError("map entries must be integers")
        mp = np.array(m, dtype=np.int64).reshape(-1)
        ms = np.array(self.mass, dtype=float).reshape(-1)
        mp.setflags(write=False)
        ms.setflags(write=False)
        object.__setattr__(self, "map", mp)
        object.__setattr__(self, "mass", ms)
        object.__setattr__(self, "n", int(self.n))

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.mass))


@dataclass(frozen=True)
class CycleDecomposition:
    cycles: list
    tail_length: np.ndarray
    cycle_of: np.ndarray = field(repr=False)


def make_system(map, mass=None) -> FiniteDynSystem:
    """Build and validate a system; ``mass`` defaults to all ones."""
    map = np.asarray(map)
    if mass is None:
        mass = np.ones(len(map))
    sys = FiniteDynSystem(len(map), map, mass)
    validate_system(sys)
    return sys


def validate_system(sys: FiniteDynSystem) -> float:
    """Check the system invariants.

    Returns the smallest constant C with m(alpha^{-1}{j}) <= C m({j}) for
    every point j, i.e. the L1 norm of the unweighted shift.
    """
    n = sys.n
    if n <= 0:
        raise ValidationError("system must have at least one point")
    if sys.map.shape != (n,) or sys.mass.shape != (n,):
        raise ValidationError(
            f"map and mass must have length n={n}, got {sys.map.shape[0]} and {sys.mass.shape[0]}"
        )
    bad = np.flatnonzero((sys.map < 0) | (sys.map >= n))
    if bad.size:
        raise ValidationError(f"map entry {int(sys.map[bad[0]])} out of range [0, {n})")
    if not np.all(np.isfinite(sys.mass)):
        raise ValidationError("mass entries must be finite")
    if np.any(sys.mass <= 0):
        raise ValidationError("mass entries must be strictly positive")
    pre = np.bincount(sys.map, weights=sys.mass, minlength=n)
    return float(np.max(pre / sys.mass))


def check_vector(sys: FiniteDynSystem, values, name="vector") -> np.ndarray:
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.shape != (sys.n,):
        raise ValidationError(f"{name} has length {v.shape[0]}, expected {sys.n}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} entries must be finite")
    return v


def _check_point(sys, x):
    if not 0 <= x < sys.n:
        raise IndexError(f"point {x} out of range [0, {sys.n})")


def orbit(sys: FiniteDynSystem, x: int, n_steps: int) -> np.ndarray:
    """Points x, alpha(x), ..., alpha^{n_steps-1}(x)."""
    _check_point(sys, x)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    out = np.empty(n_steps, dtype=np.int64)
    for k in range(n_steps):
        out[k] = x
        x = sys.map[x]
    return out


def birkhoff_sum(sys: FiniteDynSystem, phi, x: int, n_steps: int) -> float:
    phi = check_vector(sys, phi, "phi")
    total = 0.0
    for i in orbit(sys, x, n_steps):
        total += phi[i]
    return total


def birkhoff_sums(sys: FiniteDynSystem, phi, n_steps: int) -> np.ndarray:
    """S_n phi at every point at once (same summation order as birkhoff_sum)."""
    phi = check_vector(sys, phi, "phi")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    total = np.zeros(sys.n)
    pos = np.arange(sys.n)
    for _ in range(n_steps):
        total += phi[pos]
        pos = sys.map[pos]
    return total


def empirical_measure(sys: FiniteDynSystem, x: int, n_steps: int) -> np.ndarray:
    counts = np.bincount(orbit(sys, x, n_steps), minlength=sys.n)
    return counts / n_steps


def empirical_measures(sys: FiniteDynSystem, n_steps: int) -> np.ndarray:
    """Row x is the empirical measure of the first n_steps iterates of x."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    counts = np.zeros((sys.n, sys.n))
    rows = np.arange(sys.n)
    pos = rows.copy()
    for _ in range(n_steps):
        counts[rows, pos] += 1.0
        pos = sys.map[pos]
    return counts / n_steps


def iterate_map_table(sys: FiniteDynSystem, n_steps: int) -> np.ndarray:
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    table = np.arange(sys.n)
    for _ in range(n_steps):
        table = sys.map[table]
    return table


def cycle_decomposition(sys: FiniteDynSystem) -> CycleDecomposition:
    """Periodic orbits of the functional graph and each point's distance to them.

    Cycles are listed in order of their smallest point, each starting there.
    """
    validate_system(sys)
    n = sys.n
    state = np.zeros(n, dtype=np.int8)  # 0 unseen, 1 on current path, 2 done
    on_cycle = np.zeros(n, dtype=bool)
    for start in range(n):
        path = []
        x = start
        while state[x] == 0:
            state[x] = 1
            path.append(x)
            x = sys.map[x]
        if state[x] == 1:
            on_cycle[path[path.index(x):]] = True
        for p in path:
            state[p] = 2

    cycles = []
    cycle_of = np.full(n, -1, dtype=np.int64)
    for x in range(n):
        if on_cycle[x] and cycle_of[x] < 0:
            cyc = [x]
            cycle_of[x] = len(cycles)
            y = sys.map[x]
            while y != x:
                cyc.append(int(y))
                cycle_of[y] = len(cycles)
                y = sys.map[y]
            cycles.append(cyc)

    tail = np.full(n, -1, dtype=np.int64)
    tail[on_cycle] = 0
    for start in range(n):
        path = []
        x = start
        while tail[x] < 0:
            path.append(x)
            x = sys.map[x]
        d = tail[x]
        for p in reversed(path):
            d += 1
            tail[p] = d
            cycle_of[p] = cycle_of[x]
    return CycleDecomposition(cycles=cycles, tail_length=tail, cycle_of=cycle_of)
