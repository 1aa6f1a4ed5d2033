"""Entropy statistic experiments.

The sets X_n(O) of points whose n-step empirical measure lies in a weak-*
neighbourhood O(mu) are enumerated exactly, their masses are fitted to an
exponential rate, and the bound

    int_{X_n(O)} f o alpha^n dm <= C e^{n t} int |f| dm

is checked directly.  The certificate psi = sum_g g ln(mu(g)/mu'(g)) built
from the inner optimiser is checked against its three defining identities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynsys import FiniteDynSystem, empirical_measure, empirical_measures, iterate_map_table, orbit
from .measures import WeakStarNeighborhood, check_measure, neighborhood_contains
from .partitions import PartitionOfUnity
from .tentropy import DEFAULT_TOL, TEntropyReport, cross_tau_n, tau_n_D

EPS_LADDER = (0.2, 0.1, 0.05, 0.02)


def x_n_set(sys: FiniteDynSystem, O: WeakStarNeighborhood, n_steps: int) -> list:
    """Points whose n_steps empirical measure lies in O, by direct enumeration."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    return [x for x in range(sys.n) if neighborhood_contains(O, empirical_measure(sys, x, n_steps))]


def x_n_mask(sys: FiniteDynSystem, O: WeakStarNeighborhood, n_steps: int) -> np.ndarray:
    return O.contains_rows(empirical_measures(sys, n_steps))


@dataclass
class ESSSweepRow:
    eps: float
    n: int
    measure_of_Xn: float
    rate: float
    integral: float
    bound_rhs: float
    bound_holds: bool


@dataclass
class ESSSweep:
    t: float
    rows: list
    fitted_rate: dict          # eps -> least-squares slope of ln m(X_n), -inf if < 3 nonempty rows
    nonempty: dict             # eps -> number of nonempty X_n
    min_C: dict                # eps -> smallest C valid for every f (operator-norm form)
    min_C_f: dict              # eps -> smallest C valid for the supplied f

    def to_csv_rows(self) -> list:
        out = []
        for r in self.rows:
            out.append({
                "eps": r.eps,
                "n": r.n,
                "measure": r.measure_of_Xn,
                "rate": r.rate,
                "min_C": self.min_C[r.eps],
                "bound_holds": r.bound_holds,
            })
        return out


def fit_rate(ns, measures) -> float:
    ns = np.asarray(ns, dtype=float)
    measures = np.asarray(measures, dtype=float)
    keep = measures > 0
    if keep.sum() < 3:
        return -np.inf
    return float(np.polyfit(ns[keep], np.log(measures[keep]), 1)[0])


def restricted_norm(sys: FiniteDynSystem, mask, n_steps: int) -> float:
    """sup over f with int |f| dm = 1 of int_{mask} |f| o alpha^n dm."""
    tab = iterate_map_table(sys, n_steps)
    col = np.bincount(tab[mask], weights=sys.mass[mask], minlength=sys.n)
    return float(np.max(col / sys.mass))


def ess_sweep(sys: FiniteDynSystem, mu, D: PartitionOfUnity, eps_list=EPS_LADDER, n_max: int = 20,
              f=None, t: float = 0.0) -> ESSSweep:
    mu = check_measure(sys, mu)
    f = np.ones(sys.n) if f is None else np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("f must be nonnegative")
    f_norm = float(sys.mass @ np.abs(f))
    rows = []
    rates, nonempty, min_C, min_C_f = {}, {}, {}, {}
    for eps in eps_list:
        O = WeakStarNeighborhood(center=mu, test_functions=list(D.rows), epsilon=eps)
        per_n = []
        C_unif = 0.0
        C_f = 0.0
        for n in range(1, n_max + 1):
            mask = x_n_mask(sys, O, n)
            measure = float(sys.mass[mask].sum())
            tab = iterate_map_table(sys, n)
            integral = float(np.sum(f[tab[mask]] * sys.mass[mask]))
            C_unif = max(C_unif, restricted_norm(sys, mask, n) * np.exp(-n * t))
            if f_norm > 0:
                C_f = max(C_f, integral * np.exp(-n * t) / f_norm)
            per_n.append((n, measure, integral))
        for n, measure, integral in per_n:
            rate = np.log(measure) / n if measure > 0 else -np.inf
            rhs = C_unif * np.exp(n * t) * f_norm
            rows.append(ESSSweepRow(eps=eps, n=n, measure_of_Xn=measure, rate=float(rate),
                                    integral=integral, bound_rhs=float(rhs),
                                    bound_holds=bool(integral <= rhs * (1 + 1e-12))))
        rates[eps] = fit_rate([p[0] for p in per_n], [p[1] for p in per_n])
        nonempty[eps] = sum(1 for p in per_n if p[1] > 0)
        min_C[eps] = float(C_unif)
        min_C_f[eps] = float(C_f)
    return ESSSweep(t=t, rows=rows, fitted_rate=rates, nonempty=nonempty, min_C=min_C, min_C_f=min_C_f)


@dataclass
class ESSCertificate:
    psi: np.ndarray
    n_steps: int
    partition: PartitionOfUnity
    mu: np.ndarray
    mu_prime: np.ndarray
    C_psi: float
    report: TEntropyReport = field(repr=False)


def build_certificate(sys: FiniteDynSystem, mu, D: PartitionOfUnity, n_steps: int,
                      tol: float = 1e-13) -> ESSCertificate:
    mu = check_measure(sys, mu)
    mu_rows = D.rows @ mu
    if np.any(mu_rows <= 0):
        raise ValueError("certificate needs mu > 0 on every partition row")
    rep = tau_n_D(sys, mu, D, n_steps, tol=tol)
    if not rep.converged:
        raise RuntimeError(f"inner solver did not converge (gap {rep.gap:.3g})")
    psi = D.rows.T @ np.log(mu_rows / rep.mu_prime)
    return ESSCertificate(psi=psi, n_steps=n_steps, partition=D, mu=mu, mu_prime=rep.mu_prime,
                          C_psi=float(np.max(np.abs(psi))), report=rep)


def psi_k(sys: FiniteDynSystem, cert: ESSCertificate, k: int) -> np.ndarray:
    """psi + psi o alpha^n + ... + psi o alpha^{n(k-1)}."""
    step = iterate_map_table(sys, cert.n_steps)
    total = np.zeros(sys.n)
    pos = np.arange(sys.n)
    for _ in range(k):
        total += cert.psi[pos]
        pos = step[pos]
    return total


@dataclass
class CertificateCheck:
    passed: bool
    identity_max_error: float
    contraction_excess: float
    iterated_excess: float
    offending: dict = field(default_factory=dict)


def certificate_checks(sys: FiniteDynSystem, cert: ESSCertificate, f, k: int, N: int,
                       points=None, tol_identity: float = 1e-8, tol_int: float = 1e-9) -> CertificateCheck:
    """Birkhoff identity for psi at ``points`` and horizon N, and the one- and
    k-fold contraction inequalities for the nonnegative function(s) f."""
    if k < 1 or N < 1:
        raise ValueError("k and N must be >= 1")
    points = range(sys.n) if points is None else points
    fs = np.atleast_2d(np.asarray(f, dtype=float))
    if np.any(fs < 0):
        raise ValueError("f must be nonnegative")

    err_id = 0.0
    worst_x = None
    for x in points:
        lhs = float(np.sum(cert.psi[orbit(sys, x, N)]))
        ref = -N * cross_tau_n(sys, empirical_measure(sys, x, N), cert.mu, cert.partition,
                               cert.n_steps, report=cert.report)
        e = abs(lhs - ref) / max(1.0, abs(ref))
        if e > err_id:
            err_id, worst_x = e, int(x)

    step_n = iterate_map_table(sys, cert.n_steps)
    step_nk = iterate_map_table(sys, cert.n_steps * k)
    wk = np.exp(psi_k(sys, cert, k)) * sys.mass
    w1 = np.exp(cert.psi) * sys.mass
    ex_c1 = ex_ck = -np.inf
    bad_c1 = bad_ck = None
    for idx, fv in enumerate(fs):
        base = float(sys.mass @ fv)
        e_c1 = float(w1 @ fv[step_n]) - base
        e_ck = float(wk @ fv[step_nk]) - base
        if e_c1 > ex_c1:
            ex_c1, bad_c1 = e_c1, idx
        if e_ck > ex_ck:
            ex_ck, bad_ck = e_ck, idx

    passed = err_id <= tol_identity and ex_c1 <= tol_int and ex_ck <= tol_int
    offending = {}
    if err_id > tol_identity:
        offending["identity_point"] = worst_x
    if ex_c1 > tol_int:
        offending["contraction_f"] = bad_c1
    if ex_ck > tol_int:
        offending["iterated_f"] = bad_ck
    return CertificateCheck(passed=passed, identity_max_error=err_id, contraction_excess=ex_c1,
                            iterated_excess=ex_ck, offending=offending)

