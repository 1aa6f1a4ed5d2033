"""Weighted shift operators and the logarithm of their spectral radius.

``A_phi f = exp(phi) * f(alpha)`` acts on L1(X, m).  Three estimators of
``lambda(phi) = lim (1/k) ln ||A_phi^k||`` are provided and meant to be
cross-checked against each other:

* :func:`lambda_cycle_mean` -- best mean of ``phi`` over a periodic orbit;
* :func:`lambda_power` -- power iteration on the nonnegative weight table;
* :func:`lambda_norm_limit` -- the defining sequence of normalised log norms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dynsys import FiniteDynSystem, check_vector, cycle_decomposition, validate_system

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightedShiftOperator:
    system: FiniteDynSystem
    phi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phi", check_vector(self.system, self.phi, "phi"))

    @property
    def table(self) -> np.ndarray:
        n = self.system.n
        M = np.zeros((n, n))
        M[np.arange(n), self.system.map] = np.exp(self.phi)
        return M

    def apply(self, f) -> np.ndarray:
        return apply(self, f)


@dataclass
class PowerResult:
    value: float
    lower: float
    upper: float
    iterations: int
    converged: bool


@dataclass
class SpectralReport:
    lambda_: float
    method: str
    values: dict
    norm_limit: list
    tail_bound_K: float
    power: PowerResult = field(repr=False, default=None)

    def to_record(self) -> dict:
        return {
            "lambda": self.lambda_,
            "method": self.method,
            "lambda_power": self.values["power-iteration"],
            "power_converged": self.power.converged if self.power else None,
            "norm_limit": list(self.norm_limit),
            "tail_bound_K": self.tail_bound_K,
        }


def apply(op: WeightedShiftOperator, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (op.system.n,):
        raise ValueError(f"f has shape {f.shape}, expected ({op.system.n},)")
    return np.exp(op.phi) * f[op.system.map]


def _log_norms(sys, phi, k_max):
    """ln ||A_phi^k|| on L1(X, m) for k = 1..k_max, in log space."""
    n = sys.n
    logm = np.log(sys.mass)
    S = np.zeros(n)
    pos = np.arange(n)
    out = np.empty(k_max)
    for k in range(k_max):
        S += phi[pos]
        pos = sys.map[pos]
        # ||A^k|| = max_j (1/m_j) sum_{alpha^k(i)=j} exp(S_k phi(i)) m(i)
        terms = S + logm
        peak = np.full(n, -np.inf)
        np.maximum.at(peak, pos, terms)
        hit = np.isfinite(peak)
        col = np.full(n, -np.inf)
        sums = np.bincount(pos, weights=np.exp(terms - peak[pos]), minlength=n)
        col[hit] = peak[hit] + np.log(sums[hit])
        out[k] = np.max(col - logm)
    return out


def operator_norm_L1(sys: FiniteDynSystem, phi, n_steps: int) -> float:
    """||A_phi^n_steps|| on L1(X, m), from the column-sum closed form."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    phi = check_vector(sys, phi, "phi")
    return float(np.exp(_log_norms(sys, phi, n_steps)[-1]))


def log_operator_norm(sys: FiniteDynSystem, phi, n_steps: int) -> float:
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    phi = check_vector(sys, phi, "phi")
    return float(_log_norms(sys, phi, n_steps)[-1])


def lambda_cycle_mean(sys: FiniteDynSystem, phi) -> float:
    phi = check_vector(sys, phi, "phi")
    best = -np.inf
    for cyc in cycle_decomposition(sys).cycles:
        best = max(best, float(np.sum(phi[cyc])) / len(cyc))
    return best


def _bracket(logB_diag, logw, amap, lx):
    """Collatz-Wielandt bounds on rho(B) for B = diag + weighted shift, x = exp(lx).

    The upper bound is max_i (Bx)_i / x_i.  The lower bound peels points off
    greedily: for each principal submatrix B_S, min_{i in S} (B_S x)_i / x_i
    bounds rho(B_S) <= rho(B) from below.
    """
    n = len(lx)
    own = logB_diag + lx
    nbr = logw + lx[amap]
    upper = float(np.max(np.exp(np.logaddexp(own, nbr) - lx)))

    alive = np.ones(n, dtype=bool)
    own_r = np.exp(own - lx)
    nbr_r = np.exp(nbr - lx)
    lower = 0.0
    for _ in range(n):
        r = own_r + np.where(alive[amap], nbr_r, 0.0)
        r_alive = np.where(alive, r, np.inf)
        i = int(np.argmin(r_alive))
        lower = max(lower, float(r_alive[i]))
        alive[i] = False
    return lower, upper


def lambda_power(sys: FiniteDynSystem, phi, tol: float = 1e-11, max_iter: int = 200_000) -> PowerResult:
    """log spectral radius of the weight table by power iteration.

    A warm start uses the windowed Cesaro mean of the log-growth (window n).
    Periodic tables make that estimate oscillate, so the main phase iterates
    the shifted table ``s*I + M`` (same Perron root plus s, but aperiodic) and
    stops once the Collatz-Wielandt bracket on the root is narrower than
    ``tol`` in log terms.  Non-convergence is flagged, not raised.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    validate_system(sys)
    phi = check_vector(sys, phi, "phi")
    n = sys.n
    amap = sys.map
    top = float(np.max(phi))
    logw = phi - top  # table scaled by exp(-top) so weights lie in (0, 1]

    # warm start: unshifted iteration, Cesaro mean of growth over the last n steps
    lx = np.zeros(n)
    W = n
    warm = 4 * n + 16
    growth = np.empty(warm)
    for k in range(warm):
        lx = logw + lx[amap]
        top_k = float(np.max(lx))
        growth[k] = top_k
        lx -= top_k
    est = float(np.sum(growth[-W:]) / W)

    lx = np.zeros(n)
    logs = est
    lower = upper = np.nan
    check_every = 32
    it = 0
    converged = False
    while it < max_iter:
        for _ in range(check_every):
            lx = np.logaddexp(logs + lx, logw + lx[amap])
            lx -= np.max(lx)
        it += check_every
        s = np.exp(logs)
        lo, hi = _bracket(np.full(n, logs), logw, amap, lx)
        lower = np.log(max(lo - s, np.finfo(float).tiny))
        upper = np.log(hi - s)
        if upper - lower < tol:
            converged = True
            break
        # re-centre the shift on the current estimate; keeps the iteration near-optimal
        if lo - s > 0:
            logs = 0.5 * (lower + upper)
    if not converged:
        log.warning("lambda_power: bracket %.3g wider than tol after %d iterations", upper - lower, it)
    value = 0.5 * (lower + upper) + top
    return PowerResult(value=float(value), lower=float(lower + top), upper=float(upper + top),
                       iterations=it, converged=converged)


def tail_bound_K(sys: FiniteDynSystem, phi) -> float:
    phi = check_vector(sys, phi, "phi")
    return float(2 * sys.n * np.max(np.abs(phi)) + np.log(sys.total_mass / np.min(sys.mass)))


def lambda_norm_limit(sys: FiniteDynSystem, phi, k_max: int) -> np.ndarray:
    """lambda_k = (1/k) ln ||A_phi^k|| for k = 1..k_max."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    phi = check_vector(sys, phi, "phi")
    return _log_norms(sys, phi, k_max) / np.arange(1, k_max + 1)


def spectral_report(sys: FiniteDynSystem, phi, k_max: int = 64, tol: float = 1e-11) -> SpectralReport:
    lam = lambda_cycle_mean(sys, phi)
    power = lambda_power(sys, phi, tol=tol)
    norms = lambda_norm_limit(sys, phi, k_max)
    return SpectralReport(
        lambda_=lam,
        method="cycle-mean",
        values={"cycle-mean": lam, "power-iteration": power.value, "norm-limit": float(norms[-1])},
        norm_limit=[float(v) for v in norms],
        tail_bound_K=tail_bound_K(sys, phi),
        power=power,
    )
