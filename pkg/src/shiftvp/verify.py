"""Executable checks of the variational principle

    lambda(phi) = max over invariant mu of  mu(phi) + tau(mu)

and of the properties of t-entropy that feed into it.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .dynsys import FiniteDynSystem, check_vector, make_system
from .measures import invariant_polytope, is_invariant
from .shiftop import lambda_cycle_mean
from .tentropy import DEFAULT_TOL, tau, tau_n, tau_n_D

log = logging.getLogger(__name__)

COARSE_MESH = 8
FINE_MESH = 32
GRID_CAP = 5000


@dataclass
class VPReport:
    lambda_: float
    rhs_estimate: float
    argmax_measure: np.ndarray
    argmax_weights: np.ndarray
    gap: float
    n_max: int
    partition_mode: str
    tol: float
    extreme_table: list
    rhs_by_n_max: dict = field(default_factory=dict)
    evaluations: int = 0

    @property
    def gap_by_n_max(self) -> dict:
        return {k: v - self.lambda_ for k, v in self.rhs_by_n_max.items()}

    def to_record(self) -> dict:
        return {
            "lambda": self.lambda_,
            "rhs_estimate": self.rhs_estimate,
            "gap": self.gap,
            "argmax_measure": [float(v) for v in self.argmax_measure],
            "argmax_weights": [float(v) for v in self.argmax_weights],
            "n_max": self.n_max,
            "partition_mode": self.partition_mode,
            "tol": self.tol,
            "tau_direction": "upper-estimate",
            "extreme_points": self.extreme_table,
            "gap_by_n_max": {str(k): v for k, v in self.gap_by_n_max.items()},
            "evaluations": self.evaluations,
        }


def compositions(total: int, parts: int):
    """Nonnegative integer vectors of length ``parts`` summing to ``total``, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


class _TauTable:
    """Memoised tau_n(mu)/n sequences for convex combinations of extreme points."""

    def __init__(self, sys, extremes, phi, n_max, mode, tol, trace):
        self.sys = sys
        self.E = np.array(extremes)
        self.phi = phi
        self.n_max = n_max
        self.mode = mode
        self.tol = tol
        self.trace = trace
        self.cache = {}

    def ratios(self, key, denom):
        k = (key, denom)
        if k not in self.cache:
            mu = np.asarray(key, dtype=float) / denom @ self.E
            mu = mu / mu.sum()
            seq = [tau_n(self.sys, mu, n, mode=self.mode, tol=self.tol, trace=self.trace).value / n
                   for n in range(1, self.n_max + 1)]
            self.cache[k] = (mu, np.array(seq))
        return self.cache[k]

    def objective(self, key, denom, n_max=None):
        mu, seq = self.ratios(key, denom)
        upto = self.n_max if n_max is None else n_max
        return float(mu @ self.phi + seq[:upto].min())


def vp_check(sys: FiniteDynSystem, phi, n_max: int = 12, mode: str = "exact", tol: float = DEFAULT_TOL,
             ladder=(), trace: list | None = None, grid_cap: int = GRID_CAP) -> VPReport:
    """Compare lambda(phi) with max over the invariant polytope of mu(phi) + tau_hat(mu).

    tau_hat is min_{n <= n_max} tau_n/n, an upper estimate of tau.  The
    maximum is searched over the extreme points, then (for 2+ cycles) a
    1/8-mesh grid of mixture weights, then hill-climbing on the 1/32 mesh
    by moving one 1/32 unit of weight between two cycles.  ``ladder`` lists
    smaller n_max values whose right-hand side is re-evaluated on the same
    set of measures, so rhs is monotone along the ladder.
    """
    phi = check_vector(sys, phi, "phi")
    lam = lambda_cycle_mean(sys, phi)
    poly = invariant_polytope(sys)
    k = len(poly.extreme_points)
    table = _TauTable(sys, poly.extreme_points, phi, n_max, mode, tol, trace)

    def unit(i, denom):
        v = [0] * k
        v[i] = denom
        return tuple(v)

    extreme_rows = []
    for i, cyc in enumerate(poly.cycles):
        key = unit(i, FINE_MESH)
        mu, seq = table.ratios(key, FINE_MESH)
        extreme_rows.append({
            "cycle": [int(x) for x in cyc],
            "mu_phi": float(mu @ phi),
            "tau_hat": float(seq.min()),
            "value": table.objective(key, FINE_MESH),
        })

    if k >= 2:
        scale = FINE_MESH // COARSE_MESH
        for j, comp in enumerate(compositions(COARSE_MESH, k)):
            if j >= grid_cap:
                break
            table.ratios(tuple(c * scale for c in comp), FINE_MESH)
        start = _argmax(table, n_max)[0]
        cur, cur_val = start, table.objective(start, FINE_MESH)
        while True:
            best_move, best_val = None, cur_val
            for a, b in itertools.permutations(range(k), 2):
                if cur[a] == 0:
                    continue
                nxt = list(cur)
                nxt[a] -= 1
                nxt[b] += 1
                nxt = tuple(nxt)
                val = table.objective(nxt, FINE_MESH)
                if val > best_val + 1e-15:
                    best_move, best_val = nxt, val
            if best_move is None:
                break
            cur, cur_val = best_move, best_val

    best_key = _argmax(table, n_max)
    mu_star, _ = table.ratios(*best_key)
    rhs = table.objective(*best_key)
    rhs_by = {int(N): table.objective(*_argmax(table, N), n_max=N) for N in ladder if N <= n_max}
    rhs_by[n_max] = rhs
    return VPReport(
        lambda_=lam,
        rhs_estimate=rhs,
        argmax_measure=mu_star,
        argmax_weights=np.asarray(best_key[0], dtype=float) / best_key[1],
        gap=rhs - lam,
        n_max=n_max,
        partition_mode=mode,
        tol=tol,
        extreme_table=extreme_rows,
        rhs_by_n_max=dict(sorted(rhs_by.items())),
        evaluations=len(table.cache),
    )


def _argmax(table, upto):
    # ties go to the lexicographically largest weight vector, i.e. the earliest cycles
    keys = sorted(table.cache, key=lambda kd: tuple(-v for v in kd[0]))
    return max(keys, key=lambda kd: table.objective(*kd, n_max=upto))


def easy_inequality_check(sys: FiniteDynSystem, phi, mu, n_max: int = 8, tol: float = 1e-9,
                          mode: str = "exact") -> str:
    """lambda(phi) >= mu(phi) + tau(mu) for invariant mu.

    Only an upper estimate of tau is computable, so the inequality is
    certified ("pass") when mu(phi) + tau_hat(mu) <= lambda + tol and is
    otherwise "inconclusive".
    """
    phi = check_vector(sys, phi, "phi")
    mu = np.asarray(mu, dtype=float)
    if not is_invariant(sys, mu, 1e-9):
        raise ValueError("easy inequality needs an invariant measure")
    lam = lambda_cycle_mean(sys, phi)
    tau_hat = tau(sys, mu, n_max, mode=mode).value
    if mu @ phi + tau_hat <= lam + tol:
        return "pass"
    log.warning("easy inequality inconclusive: mu(phi)+tau_hat=%.6g, lambda=%.6g", mu @ phi + tau_hat, lam)
    return "inconclusive"


def invariant_permutation_suite(seed: int, count: int, max_points: int = 8, n_steps_max: int = 4,
                 measures_per_system: int = 3, bound: float = 1e-6, tol: float = DEFAULT_TOL) -> dict:
    """tau vanishes for invertible measure-preserving maps: random permutations with unit masses."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = []
    for s in range(count):
        n = int(rng.integers(1, max_points + 1))
        sys = make_system(rng.permutation(n))
        for _ in range(measures_per_system):
            mu = rng.dirichlet(np.ones(n))
            vals = [tau_n(sys, mu, k, mode="exact", tol=tol).value for k in range(1, n_steps_max + 1)]
            vals.append(tau(sys, mu, n_steps_max, mode="exact", tol=tol).value)
            dev = float(np.max(np.abs(vals)))
            worst = max(worst, dev)
            if dev > bound:
                failures.append({"system": s, "n": n, "max_abs": dev})
    return {"count": count, "max_abs": worst, "failures": failures, "passed": not failures}


def subgradient_check(sys: FiniteDynSystem, phi, mu_star, directions, eps: float = 1e-4,
                      slack: float = 1e-6) -> bool:
    """lambda(phi + eps d) - lambda(phi) >= eps mu*(d) for every direction d."""
    lam = lambda_cycle_mean(sys, phi)
    for d in directions:
        d = np.asarray(d, dtype=float)
        if lambda_cycle_mean(sys, np.asarray(phi) + eps * d) - lam < eps * (mu_star @ d) - slack:
            return False
    return True


def continuity_constant(sys: FiniteDynSystem, mu, D, n_steps: int, eta: float = 1e-4,
                        samples: int = 10, seed: int = 0) -> float:
    """Empirical Lipschitz ratio |d tau_n(., D)| / ||d mu||_1 for small moves inside the simplex."""
    rng = np.random.default_rng(seed)
    base = tau_n_D(sys, mu, D, n_steps).value
    worst = 0.0
    for _ in range(samples):
        target = rng.dirichlet(np.ones(sys.n))
        step = eta / max(np.abs(target - mu).sum(), eta)
        nu = (1 - step) * np.asarray(mu) + step * target
        dist = np.abs(nu - mu).sum()
        if dist == 0:
            continue
        worst = max(worst, abs(tau_n_D(sys, nu, D, n_steps).value - base) / dist)
    log.info("continuity: empirical L = %.4g at eta = %.1g", worst, eta)
    return worst
