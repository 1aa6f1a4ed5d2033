"""t-entropy of measures on a finite system.

Three nested levels are computed here:

``tau_n_D(mu, D)``
    sup over nonnegative h with <m, h> = 1 of
    sum_g mu(g) ln(<c_g, h> / mu(g)), where c_g(j) = sum_{alpha^n(i)=j} g(i) m(i).
``tau_n(mu)``
    inf of ``tau_n_D`` over index partitions D.
``tau(mu)``
    inf over n of tau_n(mu) / n, truncated at ``n_max``.

The inner sup is a concave program over a simplex.  Writing u = m * h it
becomes max_u sum_g w_g ln (P u)_g with P = c / m, the same problem as
log-optimal portfolios, and is solved by the multiplicative (EM) update
u <- u * G(u), G_j = sum_g w_g P_gj / (P u)_g.  The stopping rule is the
certified bound  sup - F(u) <= W ln(max_j G_j / W),  W = sum_g w_g.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field

import numpy as np

from .dynsys import FiniteDynSystem, iterate_map_table
from .measures import check_measure, is_invariant
from .partitions import (
    PartitionOfUnity,
    bell_number,
    greedy_partition_search,
    restricted_growth_strings,
    singleton_partition,
)

log = logging.getLogger(__name__)

ZERO_WEIGHT = 1e-15
EXACT_MAX_POINTS = 10
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class InnerProblem:
    coeffs: np.ndarray      # c_g(j) for retained rows, shape (K, N)
    weights: np.ndarray     # w_g = mu(g) for retained rows
    mass: np.ndarray
    n_steps: int
    kept: np.ndarray        # indices of retained rows in the partition
    all_coeffs: np.ndarray = field(repr=False, default=None)


@dataclass
class InnerSolution:
    value: float
    h: np.ndarray
    mu_prime: np.ndarray    # <c_g, h> for every row of the partition
    gap: float              # certified bound on (sup - value)
    iterations: int
    converged: bool
    trace: list = field(default_factory=list, repr=False)


@dataclass
class TEntropyReport:
    value: float
    level: str
    n: int
    partition_mode: str
    tol: float
    iterations: int
    mu_prime: np.ndarray | None
    certified_direction: str
    partition: PartitionOfUnity | None = None
    h: np.ndarray | None = field(default=None, repr=False)
    gap: float = 0.0
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        blocks = None
        if self.partition is not None and self.partition.is_index:
            blocks = self.partition.blocks()
        return {
            "value": self.value,
            "level": self.level,
            "n": self.n,
            "partition_mode": self.partition_mode,
            "partition_blocks": blocks,
            "mu_prime": None if self.mu_prime is None else [float(v) for v in self.mu_prime],
            # the optimiser fixes one branch of the many-valued mu -> mu' map
            "h": None if self.h is None else [float(v) for v in self.h],
            "iterations": self.iterations,
            "tol": self.tol,
            "gap": self.gap,
            "converged": self.converged,
            "certified_direction": self.certified_direction,
            "diagnostics": self.diagnostics,
        }


def shift_matrix(sys: FiniteDynSystem, n_steps: int) -> np.ndarray:
    """0/1 matrix with a one at (i, alpha^n(i))."""
    Pn = np.zeros((sys.n, sys.n))
    Pn[np.arange(sys.n), iterate_map_table(sys, n_steps)] = 1.0
    return Pn


def inner_problem(sys: FiniteDynSystem, mu, D: PartitionOfUnity, n_steps: int) -> InnerProblem:
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if D.n != sys.n:
        raise ValueError("partition and system have different sizes")
    mu = np.asarray(mu, dtype=float)
    w = D.rows @ mu
    C = (D.rows * sys.mass) @ shift_matrix(sys, n_steps)
    kept = np.flatnonzero(w > ZERO_WEIGHT)
    # masses are positive, so a row carrying mu-weight has positive integral
    assert np.all(C[kept].sum(axis=1) > 0)
    return InnerProblem(coeffs=C[kept], weights=w[kept], mass=sys.mass, n_steps=n_steps,
                        kept=kept, all_coeffs=C)


def _objective(P, w, u):
    a = P @ u
    with np.errstate(divide="ignore"):
        return float(np.sum(w * np.log(a / w))), a


def _newton_polish(P, w, u, rounds=8):
    """Equality-constrained Newton steps on the current support of u."""
    F, a = _objective(P, w, u)
    for _ in range(rounds):
        S = np.flatnonzero(u > 1e-9 * u.max())
        PS = P[:, S]
        g = (w / a) @ PS
        H = -(PS.T * (w / a**2)) @ PS
        s = len(S)
        K = np.zeros((s + 1, s + 1))
        K[:s, :s] = H
        K[:s, s] = 1.0
        K[s, :s] = 1.0
        rhs = np.concatenate([-g, [0.0]])
        d = np.linalg.lstsq(K, rhs, rcond=None)[0][:s]
        t = 1.0
        accepted = False
        for _ in range(40):
            trial = u.copy()
            trial[S] += t * d
            if np.all(trial >= 0):
                trial /= trial.sum()
                Ft, at = _objective(P, w, trial)
                if Ft >= F:
                    accepted = Ft > F
                    u, F, a = trial, Ft, at
                    break
            t *= 0.5
        if not accepted:
            break
    return u


def solve_inner(problem: InnerProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                record_trace: bool = False) -> InnerSolution:
    """Maximise the inner objective; ``value`` is always a feasible (lower) value."""
    if tol <= 0:
        raise ValueError("tol must be > 0")
    m = problem.mass
    N = len(m)
    w = problem.weights
    Call = problem.all_coeffs

    def finish(u, value, gap, it, conv, trace):
        h = u / m
        mu_prime = Call @ h if Call is not None else problem.coeffs @ h
        return InnerSolution(value=value, h=h, mu_prime=mu_prime, gap=gap, iterations=it,
                             converged=conv, trace=trace)

    if len(w) == 0:
        u = m / m.sum()
        return finish(u, 0.0, 0.0, 0, True, [])

    C = problem.coeffs
    W = float(w.sum())
    # each row hits a single column: the problem separates, h_j proportional to weight/m_j
    nnz = np.count_nonzero(C, axis=1)
    if np.all(nnz == 1):
        col = np.argmax(C > 0, axis=1)
        Wj = np.bincount(col, weights=w, minlength=N)
        u = Wj / W
        value = float(np.sum(w * np.log(C[np.arange(len(w)), col] * (u[col] / m[col]) / w)))
        return finish(u, value, 0.0, 0, True, [value] if record_trace else [])

    P = C / m
    u = m / m.sum()
    trace = []
    F, a = _objective(P, w, u)
    gap = np.inf
    it = 0
    converged = False
    while it < max_iter:
        G = (w / a) @ P
        gap = W * np.log(np.max(G) / W)
        if record_trace:
            trace.append(F)
        if gap <= tol:
            converged = True
            break
        if it and it % 50 == 0:
            polished = _newton_polish(P, w, u)
            Fp, ap = _objective(P, w, polished)
            if Fp >= F:
                u, F, a = polished, Fp, ap
                G = (w / a) @ P
                gap = W * np.log(np.max(G) / W)
                if gap <= tol:
                    if record_trace:
                        trace.append(F)
                    converged = True
                    break
        u = u * G / W
        u /= u.sum()
        F, a = _objective(P, w, u)
        it += 1
    if not converged:
        log.warning("inner solver stopped at gap %.3g after %d iterations", gap, it)
    return finish(u, F, float(max(gap, 0.0)), it, converged, trace)


def tau_n_D(sys: FiniteDynSystem, mu, D: PartitionOfUnity, n_steps: int, tol: float = DEFAULT_TOL,
            max_iter: int = DEFAULT_MAX_ITER, record_trace: bool = False) -> TEntropyReport:
    mu = check_measure(sys, mu)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    sol = solve_inner(inner_problem(sys, mu, D, n_steps), tol=tol, max_iter=max_iter,
                      record_trace=record_trace)
    rep = TEntropyReport(
        value=sol.value,
        level="tau_n_D",
        n=n_steps,
        partition_mode="given",
        tol=tol,
        iterations=sol.iterations,
        mu_prime=sol.mu_prime,
        certified_direction="exact-within-tol" if sol.converged else "lower-estimate",
        partition=D,
        h=sol.h,
        gap=sol.gap,
        converged=sol.converged,
    )
    if record_trace:
        rep.diagnostics["trace"] = sol.trace
    return rep


@functools.lru_cache(maxsize=None)
def _all_labels(n: int) -> np.ndarray:
    out = np.array(list(restricted_growth_strings(n)), dtype=np.int64)
    out.setflags(write=False)
    return out


def _lower_bounds(sys, mu, labels, h, n_steps):
    """Objective of every labelled partition at the common feasible point h."""
    B, N = labels.shape
    tab = iterate_map_table(sys, n_steps)
    flat = (np.arange(B)[:, None] * N + labels).ravel()
    w = np.bincount(flat, weights=np.tile(mu, B), minlength=B * N).reshape(B, N)
    a = np.bincount(flat, weights=np.tile(sys.mass * h[tab], B), minlength=B * N).reshape(B, N)
    keep = w > ZERO_WEIGHT
    terms = np.zeros_like(w)
    terms[keep] = w[keep] * np.log(a[keep] / w[keep])
    return terms.sum(axis=1)


def tau_n(sys: FiniteDynSystem, mu, n_steps: int, mode: str = "exact", tol: float = DEFAULT_TOL,
          budget: int | None = None, prune: bool = True, trace: list | None = None,
          max_iter: int = DEFAULT_MAX_ITER) -> TEntropyReport:
    """Infimum of tau_n_D over index partitions.

    Exact mode enumerates every set partition (restricted-growth order).
    The singleton partition is solved first and becomes the incumbent; a
    later partition replaces it only if its value is lower by more than
    ``tol``.  With ``prune`` a partition is skipped when the objective at the
    incumbent's optimiser, a lower bound on its value, already rules that
    out.  ``trace`` collects (n_steps, value) pairs
    for every partition actually solved.
    """
    mu = check_measure(sys, mu)
    if mode not in ("exact", "greedy"):
        raise ValueError(f"unknown mode {mode!r}")
    solved = []

    def solve(D):
        rep = tau_n_D(sys, mu, D, n_steps, tol=tol, max_iter=max_iter)
        solved.append(rep)
        if trace is not None:
            trace.append((n_steps, rep.value))
        return rep

    if mode == "greedy":
        reports = {}

        def value_of(D):
            key = tuple(map(tuple, D.blocks()))
            if key not in reports:
                reports[key] = solve(D)
            return reports[key].value

        part, val = greedy_partition_search(sys, mu, n_steps, value_of)
        best = reports[tuple(map(tuple, part.blocks()))]
        return TEntropyReport(
            value=val, level="tau_n", n=n_steps, partition_mode="greedy", tol=tol,
            iterations=sum(r.iterations for r in solved), mu_prime=best.mu_prime,
            certified_direction="upper-estimate", partition=part, h=best.h, gap=best.gap,
            converged=all(r.converged for r in solved),
            diagnostics={"partitions_solved": len(solved)},
        )

    N = sys.n
    if N > EXACT_MAX_POINTS:
        raise ValueError(f"exact mode needs n <= {EXACT_MAX_POINTS}, got {N}; use greedy")
    labels = _all_labels(N)
    truncated = False
    if budget is not None and budget < len(labels):
        labels = labels[:budget]
        truncated = True

    best = solve(singleton_partition(sys))
    singleton_labels = np.arange(N)
    others = labels[~np.all(labels == singleton_labels, axis=1)]
    if prune:
        lb = _lower_bounds(sys, mu, others, best.h, n_steps)
        candidates = others[lb < best.value - tol]
    else:
        candidates = others
    for lab in candidates:
        rep = solve(PartitionOfUnity.from_labels(lab))
        if rep.value < best.value - tol:
            best = rep

    certified = "upper-estimate" if truncated else (
        "exact-within-tol" if all(r.converged for r in solved) else "lower-estimate")
    return TEntropyReport(
        value=best.value, level="tau_n", n=n_steps, partition_mode="exact", tol=tol,
        iterations=sum(r.iterations for r in solved), mu_prime=best.mu_prime,
        certified_direction=certified, partition=best.partition, h=best.h, gap=best.gap,
        converged=all(r.converged for r in solved),
        diagnostics={
            "partitions_total": bell_number(N),
            "partitions_considered": len(labels),
            "partitions_solved": len(solved),
            "truncated": truncated,
        },
    )


def tau(sys: FiniteDynSystem, mu, n_max: int, mode: str = "exact", tol: float = DEFAULT_TOL,
        trace: list | None = None, budget: int | None = None) -> TEntropyReport:
    """min over n <= n_max of tau_n(mu)/n, an upper estimate of tau(mu)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    mu = check_measure(sys, mu)
    reports = [tau_n(sys, mu, n, mode=mode, tol=tol, trace=trace, budget=budget)
               for n in range(1, n_max + 1)]
    seq = np.array([r.value for r in reports])
    ratios = seq / np.arange(1, n_max + 1)
    k = int(np.argmin(ratios))
    best = reports[k]
    diag = {
        "tau_n": seq.tolist(),
        "tau_n_over_n": ratios.tolist(),
        "running_min": np.minimum.accumulate(ratios).tolist(),
    }
    if is_invariant(sys, mu, 1e-9):
        diag["fekete_gap"] = float(ratios[-1] - ratios.min())
        diag["subadditivity_excess"] = float(max(
            (seq[a + b - 1] - seq[a - 1] - seq[b - 1]
             for a in range(1, n_max + 1) for b in range(1, n_max + 1 - a)),
            default=0.0,
        ))
    return TEntropyReport(
        value=float(ratios[k]), level="tau", n=k + 1, partition_mode=mode, tol=tol,
        iterations=sum(r.iterations for r in reports), mu_prime=best.mu_prime,
        certified_direction="upper-estimate", partition=best.partition, h=best.h,
        gap=max(r.gap for r in reports), converged=all(r.converged for r in reports),
        diagnostics=diag | {"n_max": n_max},
    )


def _require_interior(mu_rows):
    if np.any(mu_rows <= 0):
        bad = int(np.flatnonzero(mu_rows <= 0)[0])
        raise ValueError(f"mu vanishes on partition row {bad}; an interior measure is required")


def cross_tau_n(sys: FiniteDynSystem, nu, mu, D: PartitionOfUnity, n_steps: int,
                tol: float = DEFAULT_TOL, report: TEntropyReport | None = None) -> float:
    """sum_g nu(g) ln(mu'(g) / mu(g)) with mu' the optimiser row values at mu."""
    mu = check_measure(sys, mu)
    nu = np.asarray(nu, dtype=float)
    mu_rows = D.rows @ mu
    _require_interior(mu_rows)
    if report is None:
        report = tau_n_D(sys, mu, D, n_steps, tol=tol)
    return float(np.sum((D.rows @ nu) * np.log(report.mu_prime / mu_rows)))


def stationarity_check(sys: FiniteDynSystem, mu, D: PartitionOfUnity, n_steps: int,
                  report: TEntropyReport, f, tol: float = 1e-9) -> bool:
    """First-order optimality of mu':
    sum_g (mu(g)/mu'(g)) int g |f o alpha^n| dm <= int |f| dm, tol relative to the rhs."""
    mu = np.asarray(mu, dtype=float)
    hf = np.abs(np.asarray(f, dtype=float))
    mu_rows = D.rows @ mu
    _require_interior(mu_rows)
    C = (D.rows * sys.mass) @ shift_matrix(sys, n_steps)
    lhs = float(np.sum(mu_rows / report.mu_prime * (C @ hf)))
    rhs = float(sys.mass @ hf)
    return lhs <= rhs + tol * max(1.0, rhs)
