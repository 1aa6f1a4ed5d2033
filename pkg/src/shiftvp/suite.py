"""The acceptance suite: ten fixed-seed checks, one report row each.

Each criterion draws from its own child stream of ``SeedSequence(seed)`` so
the rows are independent of evaluation order.  Rows carry only values that
are deterministic functions of the seed (no timings), which is what makes
two runs byte-identical.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .dynsys import make_system
from .ess import EPS_LADDER, build_certificate, certificate_checks, ess_sweep
from .formats import dumps, random_system
from .measures import invariant_polytope
from .oracles import grid_inner_sup
from .partitions import PartitionOfUnity, singleton_partition
from .shiftop import lambda_cycle_mean, lambda_norm_limit, lambda_power, log_operator_norm, tail_bound_K
from .tentropy import tau, tau_n, tau_n_D
from .verify import invariant_permutation_suite, vp_check

log = logging.getLogger(__name__)

GENERATOR = "numpy.random.PCG64 seeded by numpy.random.SeedSequence(seed).spawn(10)"
N_CRITERIA = 10


@dataclass
class Row:
    id: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_record(self):
        return {"id": self.id, "name": self.name, "passed": self.passed, "detail": self.detail}


class UpperBoundLedger:
    """Every tau_n(mu, D) value seen in the suite, checked against ln ||A^n||."""

    def __init__(self, slack=1e-9):
        self.slack = slack
        self.count = 0
        self.max_excess = -np.inf

    def add(self, sys, trace):
        if not trace:
            return
        zero = np.zeros(sys.n)
        bounds = {}
        for n, value in trace:
            if n not in bounds:
                bounds[n] = log_operator_norm(sys, zero, n)
            self.max_excess = max(self.max_excess, value - bounds[n])
            self.count += 1


def random_partition(rng, n, general_prob=0.5):
    """Random index partition, or a general partition of unity with Dirichlet columns."""
    k = int(rng.integers(1, n + 1))
    if rng.random() < general_prob:
        return PartitionOfUnity(rng.dirichlet(np.ones(k), size=n).T)
    labels = rng.integers(0, k, size=n)
    _, labels = np.unique(labels, return_inverse=True)
    return PartitionOfUnity.from_labels(labels)


def _interior(rng, n):
    return rng.dirichlet(np.ones(n))


def criterion_spectral(rng) -> Row:
    worst_power = 0.0
    worst_ratio = 0.0
    unconverged = 0
    for _ in range(100):
        n = int(rng.integers(1, 65))
        sys = random_system(rng, n)
        phi = rng.uniform(-3, 3, size=n)
        lam = lambda_cycle_mean(sys, phi)
        pw = lambda_power(sys, phi)
        unconverged += not pw.converged
        worst_power = max(worst_power, abs(lam - pw.value))
        K = tail_bound_K(sys, phi)
        lam64 = lambda_norm_limit(sys, phi, 64)[-1]
        worst_ratio = max(worst_ratio, abs(lam64 - lam) / (K / 64))
    ok = worst_power <= 1e-9 and worst_ratio <= 1.0
    return Row(1, "spectral triple agreement", ok, {
        "systems": 100, "max_abs_cycle_minus_power": worst_power, "tol": 1e-9,
        "max_norm_limit_error_over_K_div_64": worst_ratio, "power_unconverged": unconverged,
    })


def criterion_oracle(rng, ledger) -> Row:
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 4))
        sys = random_system(rng, n)
        mu = _interior(rng, n)
        if n > 1 and rng.random() < 0.25:
            mu[int(rng.integers(0, n))] = 0.0
            mu /= mu.sum()
        D = random_partition(rng, n)
        steps = int(rng.integers(1, 4))
        rep = tau_n_D(sys, mu, D, steps)
        ledger.add(sys, [(steps, rep.value)])
        ref = grid_inner_sup(sys.map.tolist(), sys.mass.tolist(), mu.tolist(), D.rows.tolist(), steps)
        worst = max(worst, abs(rep.value - ref))
    return Row(2, "inner solver vs grid oracle", worst <= 1e-4,
               {"instances": 100, "max_abs_diff": worst, "tol": 1e-4})


def criterion_permutations(rng) -> Row:
    seed = int(rng.integers(0, 2**63 - 1))
    res = invariant_permutation_suite(seed, 50, max_points=8, n_steps_max=4, measures_per_system=3)
    return Row(3, "tau vanishes for measure-preserving permutations", res["passed"],
               {"systems": 50, "measures_per_system": 3, "max_abs": res["max_abs"], "tol": 1e-6,
                "failures": len(res["failures"])})


def criterion_concavity(rng, ledger) -> Row:
    worst = -np.inf
    for _ in range(20):
        n = int(rng.integers(1, 9))
        sys = random_system(rng, n)
        for _ in range(10):
            D = random_partition(rng, n)
            steps = int(rng.integers(1, 4))
            mu1, mu2 = _interior(rng, n), _interior(rng, n)
            p = float(rng.random())
            mix = p * mu1 + (1 - p) * mu2
            v1 = tau_n_D(sys, mu1, D, steps).value
            v2 = tau_n_D(sys, mu2, D, steps).value
            vm = tau_n_D(sys, mix / mix.sum(), D, steps).value
            ledger.add(sys, [(steps, v1), (steps, v2), (steps, vm)])
            worst = max(worst, p * v1 + (1 - p) * v2 - vm)
    return Row(4, "concavity of tau_n(., D)", worst <= 1e-8,
               {"triples": 200, "max_violation": worst, "slack": 1e-8})


def criterion_subadditivity(rng, ledger) -> Row:
    worst = -np.inf
    for _ in range(20):
        n = int(rng.integers(1, 7))
        sys = random_system(rng, n)
        poly = invariant_polytope(sys)
        mu = poly.combine(rng.dirichlet(np.ones(len(poly.extreme_points))))
        trace = []
        seq = [tau_n(sys, mu, k, mode="exact", trace=trace).value for k in range(1, 9)]
        ledger.add(sys, trace)
        for a in range(1, 8):
            for b in range(1, 9 - a):
                worst = max(worst, seq[a + b - 1] - seq[a - 1] - seq[b - 1])
    return Row(5, "subadditivity for invariant measures", worst <= 1e-6,
               {"systems": 20, "max_excess": worst, "slack": 1e-6})


def criterion_vp(rng, ledger) -> Row:
    gaps = []
    monotone_excess = -np.inf
    for _ in range(30):
        n = int(rng.integers(1, 7))
        sys = random_system(rng, n)
        phi = rng.uniform(-3, 3, size=n)
        trace = []
        rep = vp_check(sys, phi, n_max=12, mode="exact", ladder=(2, 4, 8), trace=trace)
        ledger.add(sys, trace)
        gaps.append(rep.gap)
        seq = [rep.gap_by_n_max[k] for k in (2, 4, 8, 12)]
        monotone_excess = max(monotone_excess, max(b - a for a, b in zip(seq, seq[1:])))
    anchors = {}
    for name, amap, phi, lam in (("fixed_point", [0, 0], [0.3, -5.0], 0.3), ("swap", [1, 0], [0.0, 1.0], 0.5)):
        sys = make_system(amap)
        trace = []
        rep = vp_check(sys, phi, n_max=12, mode="exact", trace=trace)
        ledger.add(sys, trace)
        anchors[name] = {"lambda": rep.lambda_, "gap": rep.gap,
                         "ok": abs(rep.lambda_ - lam) <= 1e-12 and abs(rep.gap) <= 1e-6}
    ok = (min(gaps) >= -1e-6 and max(gaps) <= 0.1 and monotone_excess <= 1e-9
          and all(a["ok"] for a in anchors.values()))
    return Row(7, "variational principle gap", ok, {
        "systems": 30, "min_gap": min(gaps), "max_gap": max(gaps), "gap_window": [-1e-6, 0.1],
        "max_gap_increase_along_n_max": monotone_excess, "anchors": anchors,
    })


def criterion_certificate(rng, ledger) -> Row:
    worst_id = 0.0
    worst_c1 = worst_ck = -np.inf
    failures = 0
    built = 0
    for _ in range(20):
        n = int(rng.integers(1, 17))
        sys = random_system(rng, n)
        mu = _interior(rng, n)
        steps = int(rng.integers(1, 4))
        labels = np.unique(rng.integers(0, max(1, n // 2), size=n), return_inverse=True)[1]
        for D in (singleton_partition(sys), PartitionOfUnity.from_labels(labels)):
            cert = build_certificate(sys, mu, D, steps)
            built += 1
            ledger.add(sys, [(steps, cert.report.value)])
            fs = rng.uniform(0, 1, size=(100, n)) * (rng.random((100, n)) < 0.7)
            k = int(rng.integers(1, 5))
            for _ in range(20):
                x = int(rng.integers(0, n))
                N = int(rng.integers(1, 51))
                chk = certificate_checks(sys, cert, fs, k, N, points=[x])
                worst_id = max(worst_id, chk.identity_max_error)
                worst_c1 = max(worst_c1, chk.contraction_excess)
                worst_ck = max(worst_ck, chk.iterated_excess)
                failures += not chk.passed
    return Row(8, "certificate identities", failures == 0, {
        "certificates": built, "max_identity_error": worst_id, "identity_tol": 1e-8,
        "max_contraction_excess": worst_c1, "max_iterated_excess": worst_ck, "integral_tol": 1e-9,
        "failed_checks": failures,
    })


def criterion_ess(rng, ledger) -> Row:
    rows = []
    ok = True
    for _ in range(20):
        n = int(rng.integers(2, 33))
        sys = random_system(rng, n)
        mu = _interior(rng, n)
        mode = "exact" if n <= 10 else "greedy"
        trace = []
        tau_hat = tau(sys, mu, 8, mode=mode, trace=trace).value
        ledger.add(sys, trace)
        t = tau_hat + 0.1
        D = singleton_partition(sys)
        sweep = ess_sweep(sys, mu, D, EPS_LADDER, 20, None, t)
        usable = [e for e in EPS_LADDER if sweep.nonempty[e] >= 3]
        if not usable:
            # no radius leaves three nonempty X_n: the rate condition has nothing to test
            rows.append({"n": n, "tau_hat": tau_hat, "t": t, "assessed": False})
            continue
        eps = min(usable)
        rate = sweep.fitted_rate[eps]
        rate_ok = rate <= t
        bound_ok = all(r.bound_holds for r in sweep.rows if r.eps == eps)
        C = sweep.min_C[eps]
        for _ in range(10):
            f = rng.uniform(0, 1, size=n)
            fs = ess_sweep(sys, mu, D, [eps], 20, f, t)
            # the f-independent constant must cover every f
            bound_ok &= fs.min_C_f[eps] <= C * (1 + 1e-12)
            bound_ok &= all(r.bound_holds for r in fs.rows)
        ok &= rate_ok and bound_ok
        rows.append({"n": n, "tau_hat": tau_hat, "t": t, "assessed": True, "eps": eps,
                     "nonempty": sweep.nonempty[eps], "rate": rate, "C": C, "rate_ok": rate_ok,
                     "bound_ok": bool(bound_ok)})
    assessed = sum(r["assessed"] for r in rows)
    return Row(9, "entropy statistic bound", bool(ok) and assessed > 0,
               {"systems": 20, "assessed": assessed, "per_system": rows})


def run_criteria(seed: int = 42) -> list:
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(N_CRITERIA)]
    ledger = UpperBoundLedger()
    rows = {
        1: criterion_spectral(streams[0]),
        2: criterion_oracle(streams[1], ledger),
        3: criterion_permutations(streams[2]),
        4: criterion_concavity(streams[3], ledger),
        5: criterion_subadditivity(streams[4], ledger),
        7: criterion_vp(streams[6], ledger),
        8: criterion_certificate(streams[7], ledger),
        9: criterion_ess(streams[8], ledger),
    }
    rows[6] = Row(6, "tau_n(mu, D) <= ln ||A^n||", ledger.max_excess <= ledger.slack,
                  {"values_checked": ledger.count, "max_excess": ledger.max_excess, "slack": ledger.slack})
    return [rows[k] for k in sorted(rows)]


def report_dict(seed: int, rows: list) -> dict:
    return {
        "package": "shiftvp",
        "version": __version__,
        "seed": seed,
        "generator": GENERATOR,
        "criteria": [r.to_record() for r in rows],
    }


def run_suite(seed: int = 42) -> dict:
    """All criteria; the determinism row replays criteria 1-9 and compares bytes."""
    first = dumps(report_dict(seed, run_criteria(seed)))
    rows = run_criteria(seed)
    second = dumps(report_dict(seed, rows))
    rows.append(Row(10, "determinism", first == second,
                    {"replays": 2, "identical_bytes": first == second, "bytes": len(first)}))
    report = report_dict(seed, rows)
    report["passed"] = all(r.passed for r in rows)
    return report
